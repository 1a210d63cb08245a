"""Synthetic clean test material: AM noise, click trains, tone complexes and
a speech-like burst sequence."""
import numpy as np
import scipy.signal

from .dsp import Signal
from .reverb import RirSpec, make_dataset
from .errors import InvalidArgumentError

KINDS = ("am_noise", "clicks", "tones", "bursts")


def bandlimited_noise(n, sample_rate, lo, hi, rng):
    """Gaussian noise restricted to [lo, hi] Hz by zeroing FFT bins."""
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    spec[(freqs < lo) | (freqs > hi)] = 0.0
    x = np.fft.irfft(spec, n)
    return x / (np.std(x) + 1e-300)


def am_noise(seconds=2.0, sample_rate=16000, mod_hz=4.0, depth=0.8, lo=200.0, hi=6500.0,
             seed=0):
    n = int(round(seconds * sample_rate))
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sample_rate
    carrier = bandlimited_noise(n, sample_rate, lo, hi, rng)
    mod = 1.0 + depth * np.sin(2 * np.pi * mod_hz * t + rng.uniform(0, 2 * np.pi))
    return Signal(0.1 * carrier * mod, sample_rate)


def click_train(seconds=2.0, sample_rate=16000, period=0.25, offset=0.125, amplitude=0.5):
    n = int(round(seconds * sample_rate))
    x = np.zeros(n)
    idx = np.round((offset + period * np.arange(int(seconds / period) + 1)) * sample_rate)
    idx = idx[idx < n].astype(int)
    x[idx] = amplitude
    return Signal(x, sample_rate)


def tone_complex(seconds=2.0, sample_rate=16000, freqs=(1000.0,), amplitude=0.3, seed=None):
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, 2 * np.pi, len(freqs)) if seed is not None else np.zeros(len(freqs))
    x = sum(np.cos(2 * np.pi * f * t + p) for f, p in zip(freqs, phases))
    return Signal(amplitude * x / len(freqs), sample_rate)


def bursts(seconds=2.0, sample_rate=16000, seed=0):
    """Speech-like syllable sequence: harmonic-plus-noise bursts with smooth
    onsets separated by silent gaps."""
    n = int(round(seconds * sample_rate))
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    pos = int(rng.uniform(0.02, 0.15) * sample_rate)
    while pos < n:
        dur = int(rng.uniform(0.08, 0.3) * sample_rate)
        seg_n = min(dur, n - pos)
        t = np.arange(seg_n) / sample_rate
        f0 = rng.uniform(100, 250)
        harmonics = np.arange(1, int(6000 / f0))
        tilt = 1.0 / harmonics
        formant = rng.uniform(400, 3000)
        tilt = tilt * (1 + 3 * np.exp(-((harmonics * f0 - formant) / 400.0) ** 2))
        voiced = (tilt[:, None] * np.cos(2 * np.pi * f0 * harmonics[:, None] * t
                                         + rng.uniform(0, 2 * np.pi, harmonics.size)[:, None])
                  ).sum(axis=0)
        voiced /= np.std(voiced) + 1e-300
        noise = bandlimited_noise(seg_n, sample_rate, 2000, 7000, rng) if seg_n > 16 else 0.0
        mix = rng.uniform(0, 0.6)
        burst = (1 - mix) * voiced + mix * noise
        window = scipy.signal.windows.tukey(dur, 0.5)[:seg_n]
        x[pos:pos + seg_n] += rng.uniform(0.05, 0.3) * window * burst
        pos += dur + int(rng.uniform(0.05, 0.25) * sample_rate)
    return Signal(x, sample_rate)


def synth_clean(kind, seed=0, seconds=2.0, sample_rate=16000):
    """One clean signal of the named kind; parameters drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    if kind == "am_noise":
        lo = rng.uniform(200, 2000)
        return am_noise(seconds, sample_rate, mod_hz=rng.uniform(2, 8), depth=rng.uniform(0.5, 0.95),
                        lo=lo, hi=min(lo + rng.uniform(500, 4000), 7000), seed=seed)
    if kind == "clicks":
        return click_train(seconds, sample_rate, period=rng.uniform(0.15, 0.4),
                           offset=rng.uniform(0.02, 0.15), amplitude=rng.uniform(0.2, 0.8))
    if kind == "tones":
        k = int(rng.integers(2, 6))
        return tone_complex(seconds, sample_rate, freqs=tuple(rng.uniform(250, 6000, k)),
                            amplitude=rng.uniform(0.1, 0.5), seed=seed)
    if kind == "bursts":
        return bursts(seconds, sample_rate, seed=seed)
    raise InvalidArgumentError(f"unknown synthetic kind {kind!r}; choose from {KINDS}")


def synthetic_pairs(n, seed=0, t60_range=(0.3, 0.7), kinds=KINDS, seconds=2.0,
                    sample_rate=16000, tail_level=0.1):
    """``n`` clean/reverberant pairs, kinds cycled, one random RIR each."""
    rng = np.random.default_rng(seed)
    base = 1000 * int(seed)
    clean = [synth_clean(kinds[i % len(kinds)], base + i, seconds, sample_rate) for i in range(n)]
    specs = [RirSpec(t60=float(rng.uniform(*t60_range)), seed=base + i,
                     sample_rate=sample_rate, tail_level=tail_level) for i in range(n)]
    return make_dataset(clean, specs, pairing="zip")
