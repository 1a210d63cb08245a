"""FDLP sub-band envelopes.

A 2 s segment is transformed with one full-length DCT; each mel band is a
triangular window over DCT bins, and linear prediction on the windowed
coefficients gives an all-pole model whose power response, read along
the frequency axis of the DCT sequence, is the band's temporal envelope.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dsp import Signal, all_pole_envelope, autocorr, dct_ii, idct_ii, levinson_durbin
from .errors import InvalidArgumentError, NumericalDegeneracyError

# Below this autocorrelation energy a band is treated as silent.
SILENT_ENERGY = 1e-30
# All-pole responses are evaluated this many times finer than the envelope
# grid and averaged per cell, so sharp peaks keep their area.
OVERSAMPLE = 9


@dataclass(frozen=True)
class FdlpConfig:
    sample_rate: int = 16000
    segment_seconds: float = 2.0
    envelope_rate: int = 400
    num_bands: int = 36
    fmin: float = 200.0
    fmax: float = 6500.0
    lp_order_per_band: int = 160
    gain_floor: float = 1e-3
    # absolute floor for envelope values: silent bands, log transforms
    env_floor: float = 1e-10

    def __post_init__(self):
        if self.sample_rate <= 0 or self.envelope_rate <= 0:
            raise InvalidArgumentError("rates must be positive")
        if self.num_bands < 1:
            raise InvalidArgumentError("num_bands must be >= 1")
        if not 0 < self.fmin < self.fmax < self.sample_rate / 2:
            raise InvalidArgumentError(
                f"need 0 < fmin < fmax < sample_rate/2, got {self.fmin}, {self.fmax}")
        if self.lp_order_per_band < 1:
            raise InvalidArgumentError("lp_order_per_band must be >= 1")
        if not 0 < self.gain_floor < 1:
            raise InvalidArgumentError("gain_floor must be in (0, 1)")
        if self.env_floor <= 0:
            raise InvalidArgumentError("env_floor must be positive")
        for name, value in (("segment samples", self.segment_seconds * self.sample_rate),
                            ("envelope points", self.segment_seconds * self.envelope_rate)):
            if abs(value - round(value)) > 1e-9 or round(value) < 1:
                raise InvalidArgumentError(f"{name} per segment must be a positive integer")
        if self.segment_samples % self.envelope_points:
            raise InvalidArgumentError("segment samples must be a multiple of envelope points")

    @property
    def segment_samples(self):
        return int(round(self.segment_seconds * self.sample_rate))

    @property
    def envelope_points(self):
        return int(round(self.segment_seconds * self.envelope_rate))

    @property
    def gain_cap(self):
        return 1.0 / self.gain_floor

    @property
    def hop(self):
        """Signal samples per envelope point."""
        return self.segment_samples // self.envelope_points


@dataclass(frozen=True)
class Segment:
    samples: np.ndarray
    valid_length: int
    index: int = 0

    @property
    def is_partial(self):
        return self.valid_length < self.samples.shape[0]


@dataclass
class EnvelopeMatrix:
    """T x Q non-negative envelope samples; ``valid_length`` counts usable rows."""

    values: np.ndarray
    valid_length: int = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise InvalidArgumentError("envelope matrix must be 2-D (time x band)")
        if self.valid_length is None:
            self.valid_length = self.values.shape[0]
        if not 0 <= self.valid_length <= self.values.shape[0]:
            raise InvalidArgumentError("valid_length out of range")

    @property
    def shape(self):
        return self.values.shape


@dataclass
class GainMatrix:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def shape(self):
        return self.values.shape


def _values(x):
    return x.values if hasattr(x, "values") else np.asarray(x, dtype=np.float64)


def segment(signal, config=FdlpConfig()):
    """Split into non-overlapping segments; the last one is zero padded."""
    if signal.sample_rate != config.sample_rate:
        raise InvalidArgumentError(
            f"signal rate {signal.sample_rate} != configured rate {config.sample_rate}")
    n = len(signal)
    if n == 0:
        raise InvalidArgumentError("cannot segment an empty signal")
    size = config.segment_samples
    out = []
    for i, start in enumerate(range(0, n, size)):
        chunk = signal.samples[start:start + size]
        valid = chunk.shape[0]
        if valid < size:
            chunk = np.concatenate([chunk, np.zeros(size - valid)])
        out.append(Segment(chunk, valid, i))
    return out


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def band_centers(config=FdlpConfig()):
    """Center frequencies (Hz), uniform in mel from fmin to fmax inclusive."""
    mels = np.linspace(hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.num_bands)
    return mel_to_hz(mels)


def mel_band_windows(config=FdlpConfig(), num_bins=None):
    """Triangular mel windows over DCT bins, shape (num_bands, num_bins).

    Centers sit on a uniform mel grid whose end points are fmin and fmax, and
    each triangle reaches zero at its neighbours' centers, so the windows sum
    to one everywhere in [fmin, fmax].
    """
    if num_bins is None:
        num_bins = config.segment_samples
    return _mel_band_windows(config, int(num_bins)).copy()


@lru_cache(maxsize=8)
def _mel_band_windows(config, num_bins):
    lo, hi = hz_to_mel(config.fmin), hz_to_mel(config.fmax)
    q = config.num_bands
    step = (hi - lo) / (q - 1) if q > 1 else (hi - lo)
    centers = lo + step * np.arange(q)
    bin_mels = hz_to_mel(np.arange(num_bins) * config.sample_rate / (2.0 * num_bins))
    w = 1.0 - np.abs(bin_mels[None, :] - centers[:, None]) / step
    return np.clip(w, 0.0, None)


def band_support(weights):
    """Half-open index range [start, stop) of nonzero window weights."""
    nz = np.flatnonzero(weights)
    return int(nz[0]), int(nz[-1]) + 1


def fdlp_envelopes(seg, config=FdlpConfig()):
    """Envelope matrix (envelope_points x num_bands) of one segment.

    Values approximate the squared Hilbert envelope of each band signal,
    sampled at the envelope rate. Silent bands get a flat ``env_floor``.
    """
    samples = seg.samples if isinstance(seg, Segment) else np.asarray(seg, dtype=np.float64)
    valid = seg.valid_length if isinstance(seg, Segment) else samples.shape[0]
    n = config.segment_samples
    if samples.shape != (n,):
        raise InvalidArgumentError(f"segment must have {n} samples, got {samples.shape}")
    coeffs = dct_ii(samples)
    windows = _mel_band_windows(config, n)
    t = config.envelope_points
    env = np.empty((t, config.num_bands))
    for q in range(config.num_bands):
        start, stop = band_support(windows[q])
        band = windows[q, start:stop] * coeffs[start:stop]
        order = min(config.lp_order_per_band, band.size - 1)
        # normalise by the full length so one scale applies to every band
        r = autocorr(band, order) * (band.size / n)
        if r[0] <= SILENT_ENERGY:
            env[:, q] = config.env_floor
            continue
        try:
            model = levinson_durbin(r)
        except NumericalDegeneracyError as exc:
            raise NumericalDegeneracyError(
                f"band {q}: {exc}", order=exc.order, band=q) from exc
        # mean of the all-pole power over [0, pi) is r[0]; the squared
        # analytic envelope has twice the band power
        env[:, q] = 2.0 * cell_average(model, t)
    return EnvelopeMatrix(env, valid_length=valid // config.hop)


def cell_average(model, num_points, oversample=OVERSAMPLE):
    """All-pole power averaged over cells of width pi/num_points centred on
    the grid points pi*m/num_points (the response is even in frequency)."""
    half = (oversample - 1) // 2
    fine = all_pole_envelope(model, num_points * oversample)
    padded = np.concatenate([fine[half:0:-1], fine])[:num_points * oversample]
    return padded.reshape(num_points, oversample).mean(axis=1)


def signal_envelopes(signal, config=FdlpConfig()):
    """Envelope matrices for every segment of a signal."""
    return [fdlp_envelopes(s, config) for s in segment(signal, config)]


def band_signal(samples, q, config=FdlpConfig()):
    """Time-domain signal of band ``q`` (inverse DCT of the windowed DCT)."""
    samples = np.asarray(samples, dtype=np.float64)
    windows = _mel_band_windows(config, samples.shape[0])
    return idct_ii(windows[q] * dct_ii(samples))


def gain_targets(clean, reverb, config=FdlpConfig()):
    """Clamped ratio clean / reverb."""
    c, r = _values(clean), _values(reverb)
    if c.shape != r.shape:
        raise InvalidArgumentError(f"shape mismatch: {c.shape} vs {r.shape}")
    ratio = c / (r + np.finfo(np.float64).tiny)
    return GainMatrix(np.clip(ratio, config.gain_floor, config.gain_cap))


def apply_gain(reverb, gain):
    r, g = _values(reverb), _values(gain)
    if r.shape != g.shape:
        raise InvalidArgumentError(f"shape mismatch: {r.shape} vs {g.shape}")
    valid = reverb.valid_length if isinstance(reverb, EnvelopeMatrix) else None
    return EnvelopeMatrix(r * g, valid_length=valid)
