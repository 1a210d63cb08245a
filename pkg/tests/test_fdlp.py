import numpy as np
import pytest
import scipy.signal
from hypothesis import given, settings
from hypothesis import strategies as st

from fdlpderev.dsp import Signal, dct_ii
from fdlpderev.errors import InvalidArgumentError
from fdlpderev.fdlp import (EnvelopeMatrix, FdlpConfig, GainMatrix, apply_gain, band_centers,
                            fdlp_envelopes, gain_targets, mel_band_windows, segment,
                            signal_envelopes)
from fdlpderev.synth import am_noise, bursts, click_train, tone_complex
from fdlpderev.verify import (check_fdlp_fidelity, dominant_modulation,
                              envelope_convolution_error, oracle_band_envelope)

CFG = FdlpConfig()


@pytest.fixture(scope="module")
def windows():
    return mel_band_windows(CFG)


def test_config_constants():
    assert CFG.segment_samples == 32000
    assert CFG.envelope_points == 800
    assert CFG.hop == 40
    assert CFG.gain_cap == pytest.approx(1000.0)


# segmentation ------------------------------------------------------------

def test_two_full_segments():
    segs = segment(Signal(np.ones(64000), 16000))
    assert len(segs) == 2
    assert not any(s.is_partial for s in segs)


def test_partial_last_segment():
    segs = segment(Signal(np.ones(40000), 16000))
    assert len(segs) == 2
    assert segs[1].is_partial and segs[1].valid_length == 8000
    assert segs[1].samples.shape == (32000,)
    assert not np.any(segs[1].samples[8000:])


def test_short_signal_is_padded():
    (seg,) = segment(Signal(np.ones(16000), 16000))
    assert seg.samples.shape == (32000,) and seg.valid_length == 16000


def test_segment_rate_mismatch():
    with pytest.raises(InvalidArgumentError):
        segment(Signal(np.ones(100), 8000))


@given(st.integers(1, 100000))
@settings(max_examples=25)
def test_segments_cover_signal(n):
    x = np.arange(n, dtype=float)
    segs = segment(Signal(x, 16000))
    assert len(segs) == -(-n // 32000)
    joined = np.concatenate([s.samples[:s.valid_length] for s in segs])
    np.testing.assert_array_equal(joined, x)


# windows -----------------------------------------------------------------

def test_window_layout(windows):
    assert windows.shape == (36, 32000)
    centers = band_centers(CFG)
    assert np.all(np.diff(centers) > 0)
    assert centers[0] >= 200 - 1e-9 and centers[-1] <= 6500 + 1e-9
    peak_bins = np.argmax(windows, axis=1)
    for q in range(35):
        assert windows[q, peak_bins[q + 1]] < 1


def test_windows_cover_range(windows):
    freqs = np.arange(32000) * 16000 / 64000
    inside = (freqs >= 200) & (freqs <= 6500)
    total = windows[:, inside].sum(axis=0)
    assert total.min() > 0
    # triangles reaching the neighbouring centers tile the range exactly
    np.testing.assert_allclose(total, 1.0, atol=1e-9)


# envelope shape checks ---------------------------------------------------

def test_tone_envelope_flat_and_localised(windows):
    env = fdlp_envelopes(tone_complex(freqs=(1000.0,)).samples).values
    q = int(np.argmax(windows[:, 4000]))  # DCT bin of 1 kHz
    interior = env[80:720, q]
    assert interior.max() / interior.min() < 1.5
    far = [b for b in range(36) if abs(b - q) >= 3]
    assert env[:, far].mean(axis=0).max() < 1e-3 * env[:, q].mean()


def test_tone_envelope_matches_oracle_level(windows):
    x = tone_complex(freqs=(1000.0,)).samples
    q = int(np.argmax(windows[:, 4000]))
    env = fdlp_envelopes(x).values[80:720, q]
    oracle = oracle_band_envelope(x, q)[80:720]
    assert env.mean() == pytest.approx(oracle.mean(), rel=0.02)


def test_click_train_peak_spacing():
    env = fdlp_envelopes(click_train(period=0.25, offset=0.125).samples).values
    for q in range(36):
        peaks, _ = scipy.signal.find_peaks(env[:, q], height=0.5 * env[:, q].max(), distance=20)
        assert len(peaks) == 8
        assert np.all(np.abs(np.diff(peaks) - 100) <= 2)
        # clicks at 125 ms + k 250 ms sit on envelope points 50 + 100 k
        assert np.all(np.abs(peaks - (50 + 100 * np.arange(8))) <= 2)


def test_am_noise_modulation_frequency():
    x = am_noise(mod_hz=4.0, lo=800.0, hi=2500.0, seed=3).samples
    env = fdlp_envelopes(x).values
    centers = band_centers(CFG)
    for q in np.flatnonzero((centers > 900) & (centers < 2400)):
        f = dominant_modulation(env[:, q], 400)
        assert abs(f - 4.0) <= 0.5
        assert abs(f - dominant_modulation(oracle_band_envelope(x, q), 400)) <= 0.5


def test_fidelity_check_passes():
    result = check_fdlp_fidelity()
    assert result.passed, result.line()


def test_silent_segment_is_floor():
    env = fdlp_envelopes(np.zeros(32000))
    np.testing.assert_array_equal(env.values, CFG.env_floor)


def test_partial_segment_valid_length():
    segs = signal_envelopes(Signal(np.random.default_rng(0).standard_normal(40000), 16000))
    assert [e.valid_length for e in segs] == [800, 200]


def test_wrong_segment_length():
    with pytest.raises(InvalidArgumentError):
        fdlp_envelopes(np.zeros(1000))


def test_envelopes_deterministic():
    x = bursts(seed=5).samples
    a, b = fdlp_envelopes(x).values, fdlp_envelopes(x).values
    assert a.tobytes() == b.tobytes()


def test_envelope_area_tracks_band_energy(windows):
    # one constant ratio of envelope sum to windowed-DCT energy, for every
    # band carrying energy and every signal type
    signals = [tone_complex(freqs=(500.0, 1000.0, 3000.0)).samples,
               click_train().samples,
               am_noise(seed=2).samples,
               bursts(seed=1).samples]
    ratios = []
    for x in signals:
        env = fdlp_envelopes(x).values
        energy = ((windows * dct_ii(x)) ** 2).sum(axis=1)
        live = energy > 1e-6 * energy.max()
        ratios.extend(env.sum(axis=0)[live] / energy[live])
    ratios = np.array(ratios)
    factor = np.median(ratios)
    assert np.all(np.abs(ratios / factor - 1) < 0.10)
    # points per sample times the factor 2 of the squared analytic envelope
    assert factor == pytest.approx(2 * 800 / 32000, rel=0.05)


def test_envelope_convolution_model_narrow_bands():
    """Squared-envelope convolution model of a reverberant narrow band, one RIR."""
    for bw in (200.0, 100.0):
        err, _ = envelope_convolution_error(bw, t60=0.3)
        assert err < 0.15, f"bandwidth {bw} Hz: relative error {err:.3f}"


# gains -------------------------------------------------------------------

def test_gain_of_identical_inputs_is_one(rng):
    x = rng.uniform(0.1, 2, (800, 36))
    np.testing.assert_array_equal(gain_targets(x, x).values, 1.0)


def test_gain_of_doubled_reverb_is_half(rng):
    x = rng.uniform(0.1, 2, (800, 36))
    np.testing.assert_allclose(gain_targets(x, 2 * x).values, 0.5, rtol=1e-15)


def test_gain_clamp():
    g = gain_targets(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])).values
    assert g[0, 0] == pytest.approx(1 / CFG.gain_floor)
    assert g[0, 1] == CFG.gain_floor


def test_apply_gain_examples(rng):
    env = EnvelopeMatrix(rng.uniform(0, 1, (800, 36)), valid_length=500)
    same = apply_gain(env, GainMatrix(np.ones((800, 36))))
    np.testing.assert_array_equal(same.values, env.values)
    assert same.valid_length == 500
    np.testing.assert_array_equal(apply_gain(env, GainMatrix(np.full((800, 36), 0.5))).values,
                                  0.5 * env.values)


def test_apply_gain_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        apply_gain(np.ones((800, 36)), np.ones((800, 35)))


@given(st.integers(0, 2 ** 31 - 1))
def test_gain_roundtrip(seed):
    rng = np.random.default_rng(seed)
    clean = np.exp(rng.uniform(-12, 2, (50, 36)))
    reverb = np.exp(rng.uniform(-12, 2, (50, 36)))
    back = apply_gain(reverb, gain_targets(clean, reverb)).values
    floor = 10 * CFG.gain_floor
    ok = (clean > floor) & (reverb > floor)
    ratio = clean / reverb
    ok &= (ratio > CFG.gain_floor) & (ratio < CFG.gain_cap)
    assert np.max(np.abs(back[ok] / clean[ok] - 1)) < 1e-6
