"""Self-contained model-assumption and numerical checks.

Each ``check_*`` returns a :class:`CheckResult` carrying the measured values,
so callers (the ``verify`` command, the acceptance tests) can print them.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal
from scipy.signal import fftconvolve

from .dsp import (LpModel, all_pole_envelope, analytic_envelope, autocorr, dct_ii, idct_ii,
                  levinson_durbin)
from .fdlp import FdlpConfig, band_centers, band_signal, fdlp_envelopes, mel_band_windows
from .reverb import RirSpec, split_early_late, synth_rir
from .synth import am_noise, click_train, synthetic_pairs, tone_complex


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)

    def line(self):
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {vals}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def random_autocorr(order, rng, length=None):
    """Biased autocorrelation of a random coloured sequence (positive definite)."""
    length = length or 8 * (order + 1)
    x = rng.standard_normal(length)
    x = scipy.signal.lfilter([1.0], [1.0, -rng.uniform(-0.9, 0.9)], x)
    return autocorr(x, order)


def dense_lp_solve(r):
    """Prediction coefficients by Gaussian elimination on the full Toeplitz system."""
    p = r.size - 1
    mat = scipy.linalg.toeplitz(r[:p])
    return np.concatenate([[1.0], np.linalg.solve(mat, -r[1:])])


def direct_all_pole(model, num_points):
    w = np.pi * np.arange(num_points) / num_points
    k = np.arange(model.coeffs.size)
    a = np.exp(-1j * np.outer(w, k)) @ model.coeffs
    return model.gain ** 2 / np.abs(a) ** 2


def check_numerical_core(seed=0):
    rng = np.random.default_rng(seed)
    dct_err = 0.0
    parseval = 0.0
    for n in (16, 17, 64, 255, 1000, 4096):
        x = rng.standard_normal(n)
        c = dct_ii(x)
        dct_err = max(dct_err, np.max(np.abs(idct_ii(c) - x)) / np.max(np.abs(x)))
        parseval = max(parseval, abs(np.linalg.norm(c) - np.linalg.norm(x)) / np.linalg.norm(x))
    ld_err = 0.0
    for p in range(1, 33):
        r = random_autocorr(p, rng)
        a = levinson_durbin(r).coeffs
        ref = dense_lp_solve(r)
        ld_err = max(ld_err, np.max(np.abs(a - ref)) / np.max(np.abs(ref)))
    ap_err = 0.0
    for p in (1, 2, 8, 32, 160):
        model = levinson_durbin(random_autocorr(p, rng))
        got = all_pole_envelope(model, 800)
        ref = direct_all_pole(model, 800)
        ap_err = max(ap_err, np.max(np.abs(got - ref) / ref))
    passed = dct_err < 1e-9 and parseval < 1e-10 and ld_err < 1e-8 and ap_err < 1e-10
    return CheckResult("numerical core (DCT, Levinson-Durbin, all-pole)", passed,
                       dict(dct_roundtrip=dct_err, parseval=parseval,
                            levinson_vs_dense=ld_err, all_pole_vs_direct=ap_err))


def oracle_band_envelope(samples, q, config=FdlpConfig()):
    """Squared Hilbert envelope of band ``q`` averaged onto the envelope grid."""
    env = analytic_envelope(band_signal(samples, q, config))
    return env.reshape(config.envelope_points, config.hop).mean(axis=1)


def dominant_modulation(env, rate, fmax=20.0, pad=16):
    """Frequency (Hz) of the largest non-DC peak in the envelope spectrum."""
    x = (env - env.mean()) * np.hanning(env.size)
    nfft = pad * env.size
    spec = np.abs(np.fft.rfft(x, nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / rate)
    sel = (freqs > 0.5) & (freqs < fmax)
    return float(freqs[sel][np.argmax(spec[sel])])


def check_fdlp_fidelity(config=FdlpConfig(), seed=3):
    measured = {}
    ok = True
    # 4 Hz AM noise occupying 800-2500 Hz
    x = am_noise(mod_hz=4.0, depth=0.8, lo=800.0, hi=2500.0, seed=seed).samples
    env = fdlp_envelopes(x, config).values
    centers = band_centers(config)
    bands = [q for q in range(config.num_bands) if 900 <= centers[q] <= 2400]
    worst = 0.0
    for q in bands:
        f_fdlp = dominant_modulation(env[:, q], config.envelope_rate)
        f_oracle = dominant_modulation(oracle_band_envelope(x, q, config), config.envelope_rate)
        worst = max(worst, abs(f_fdlp - f_oracle), abs(f_fdlp - 4.0))
    measured["am_max_freq_error_hz"] = worst
    ok &= worst <= 0.5
    # 1 kHz tone
    x = tone_complex(freqs=(1000.0,)).samples
    env = fdlp_envelopes(x, config).values
    windows = mel_band_windows(config)
    k = int(round(1000.0 * 2 * config.segment_samples / config.sample_rate))
    qt = int(np.argmax(windows[:, k]))
    t = config.envelope_points
    interior = env[t // 10: t - t // 10, qt]
    flatness = float(interior.max() / interior.min())
    means = env.mean(axis=0)
    far = [q for q in range(config.num_bands) if abs(q - qt) >= 3]
    leak = float(means[far].max() / means[qt])
    measured.update(tone_flatness=flatness, tone_far_band_ratio=leak)
    ok &= flatness < 1.5 and leak < 1e-3
    # click train, one click per 250 ms -> 100 envelope points apart
    x = click_train(period=0.25, offset=0.125).samples
    env = fdlp_envelopes(x, config).values
    spacing_err = 0.0
    for q in range(config.num_bands):
        peaks, _ = scipy.signal.find_peaks(env[:, q], height=0.5 * env[:, q].max(), distance=20)
        d = np.diff(peaks)
        spacing_err = max(spacing_err, float(np.max(np.abs(d - 100))) if d.size else np.inf)
    measured["click_spacing_max_error_pts"] = spacing_err
    ok &= spacing_err <= 2
    return CheckResult("FDLP fidelity (AM noise, tone, click train)", bool(ok), measured)


def _bandpass(x, fs, fc, bw):
    spec = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, 1.0 / fs)
    spec[np.abs(freqs - fc) > bw / 2] = 0.0
    return np.fft.irfft(spec, x.size)


def _scaled_rel_error(target, model):
    """Relative L2 error after the least-squares scale fit of ``model``."""
    scale = float(target @ model / (model @ model))
    return float(np.linalg.norm(target - scale * model) / np.linalg.norm(target)), scale


def envelope_convolution_error(bandwidth, t60=0.3, seeds=(0,), center=1000.0, seconds=2.0,
                               sample_rate=16000, mod_hz=4.0):
    """Relative L2 error of the squared-envelope convolution model.

    Compares env(x_q * h_q) with a scaled env(x_q) * env(h_q) on the interior
    80% of samples, where x is a 4 Hz AM tone, h a synthetic RIR and ``_q``
    an ideal band of the given width. Envelopes are summed over the RIR
    ``seeds`` before comparing (one seed: a single realisation). Returns
    ``(error, fitted_scale)``.
    """
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    x = (1.0 + 0.8 * np.sin(2 * np.pi * mod_hz * t)) * np.cos(2 * np.pi * center * t)
    xq = _bandpass(x, sample_rate, center, bandwidth)
    ex = analytic_envelope(xq)
    actual = np.zeros(n)
    model = np.zeros(n)
    for s in seeds:
        h = synth_rir(RirSpec(t60=t60, seed=s, sample_rate=sample_rate)).samples
        hq = _bandpass(np.concatenate([h, np.zeros(max(0, n - h.size))])[:n], sample_rate,
                       center, bandwidth)
        actual += analytic_envelope(fftconvolve(xq, hq)[:n])
        model += fftconvolve(ex, analytic_envelope(hq))[:n]
    sl = slice(n // 10, n - n // 10)
    return _scaled_rel_error(actual[sl], model[sl])


def check_envelope_convolution(bandwidths=(400.0, 200.0, 100.0), threshold=0.15,
                               ensemble=16):
    """Single-realisation errors gate the check; ensemble errors are reported."""
    single = [envelope_convolution_error(b)[0] for b in bandwidths]
    averaged = [envelope_convolution_error(b, seeds=range(ensemble))[0] for b in bandwidths]
    narrow = [e for b, e in zip(bandwidths, single) if b <= 200]
    monotone = all(a > b for a, b in zip(single, single[1:]))
    passed = monotone and max(narrow) < threshold
    return CheckResult("envelope convolution model, t60=0.3 s", passed,
                       dict(bandwidths_hz=list(bandwidths), single_rir_error=single,
                            monotone=monotone, threshold=threshold,
                            ensemble_error=averaged, ensemble_size=ensemble))


def early_late_additivity_error(bandwidth=200.0, t60=0.3, boundary=0.05, seeds=(0,),
                                center=1000.0, sample_rate=16000, seconds=2.0):
    """Relative L2 distance between env(x*h) and env(x*h_early) + env(x*h_late)."""
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    x = (1.0 + 0.8 * np.sin(2 * np.pi * 4.0 * t)) * np.cos(2 * np.pi * center * t)
    xq = _bandpass(x, sample_rate, center, bandwidth)
    whole = np.zeros(n)
    parts = np.zeros(n)
    for s in seeds:
        rir = synth_rir(RirSpec(t60=t60, seed=s, sample_rate=sample_rate))
        early, late = split_early_late(rir, boundary)
        whole += analytic_envelope(fftconvolve(xq, rir.samples)[:n])
        parts += (analytic_envelope(fftconvolve(xq, early.samples)[:n])
                  + analytic_envelope(fftconvolve(xq, late.samples)[:n]))
    sl = slice(n // 10, n - n // 10)
    return float(np.linalg.norm(whole[sl] - parts[sl]) / np.linalg.norm(whole[sl]))


def check_additivity(threshold=0.2, ensemble=16):
    single = early_late_additivity_error()
    averaged = early_late_additivity_error(seeds=range(ensemble))
    return CheckResult("early/late envelope additivity, t60=0.3 s, 50 ms", single < threshold,
                       dict(single_rir_error=single, threshold=threshold,
                            ensemble_error=averaged, ensemble_size=ensemble))


def gradient_check(config=None, entries_per_tensor=6, step=1e-5, seed=0, frames=800,
                   return_skipped=False):
    """Max relative error between backprop and central differences, per tensor.

    Central differences are meaningless across a ReLU kink, so an entry whose
    +step and -step evaluations disagree on any conv activation pattern is
    redrawn; the number of redraws is reported with ``return_skipped``.
    """
    from .enhancer import network
    from .enhancer.config import EnhancerConfig
    from .enhancer.loss import loss

    config = config or EnhancerConfig.preset("desk")
    rng = np.random.default_rng(seed)
    params = network.init_params(config, seed=seed)
    q = config.num_bands
    reverb = np.exp(rng.normal(-4.0, 1.5, (frames, q)))
    clean = reverb * np.exp(rng.normal(-0.7, 0.7, (frames, q)))

    def value(p):
        tape = network.Tape()
        z = network.forward_log_gain(reverb, p, config, tape)
        masks = [m for _, m in tape.conv]
        return loss(z, reverb, clean, config.reg_weight).value, masks

    tape = network.Tape()
    z = network.forward_log_gain(reverb, params, config, tape)
    grads = network.backward(tape, params, config, loss(z, reverb, clean, config.reg_weight).grad)
    errors = {}
    skipped = 0
    for name, p in params.items():
        worst = 0.0
        flat = p.reshape(-1)
        candidates = rng.permutation(flat.size)
        checked = 0
        for i in candidates:
            if checked == entries_per_tensor:
                break
            orig = flat[i]
            flat[i] = orig + step
            up, masks_up = value(params)
            flat[i] = orig - step
            down, masks_down = value(params)
            flat[i] = orig
            if any(not np.array_equal(a, b) for a, b in zip(masks_up, masks_down)):
                skipped += 1
                continue
            fd = (up - down) / (2 * step)
            an = grads[name].reshape(-1)[i]
            worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-10))
            checked += 1
        errors[name] = worst
    return (errors, skipped) if return_skipped else errors


def check_gradients(config=None, entries_per_tensor=6, tolerance=1e-4):
    errors, skipped = gradient_check(config, entries_per_tensor, return_skipped=True)
    worst = max(errors.values())
    return CheckResult("CLSTM gradients vs central differences", worst < tolerance,
                       dict(max_rel_error=worst, tensors=len(errors), tolerance=tolerance,
                            kink_redraws=skipped))


HELDOUT_SEED = 9001


def heldout_examples(n=10, fdlp_config=FdlpConfig()):
    from .enhancer.training import examples_from_pairs
    return examples_from_pairs(synthetic_pairs(n, seed=HELDOUT_SEED), fdlp_config)


def enhancement_metric(params, config, examples, fdlp_config=FdlpConfig()):
    """Mean log-envelope MSE to clean: (reverberant, enhanced, relative reduction)."""
    from .enhancer.loss import log_mse
    from .enhancer.network import forward
    base, enh = [], []
    for ex in examples:
        gain = forward(ex.reverb, params, config).values
        base.append(log_mse(ex.reverb, ex.clean, fdlp_config.env_floor, ex.valid_length))
        enh.append(log_mse(ex.reverb * gain, ex.clean, fdlp_config.env_floor, ex.valid_length))
    b, e = float(np.mean(base)), float(np.mean(enh))
    return b, e, 1.0 - e / b


def check_enhancement(params, config, threshold=0.2, examples=None):
    examples = examples if examples is not None else heldout_examples()
    b, e, rel = enhancement_metric(params, config, examples)
    return CheckResult("held-out enhancement (log-envelope MSE to clean)", rel >= threshold,
                       dict(reverberant_mse=b, enhanced_mse=e, relative_reduction=rel,
                            threshold=threshold, pairs=len(examples)))
