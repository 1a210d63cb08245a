"""Numerical primitives: orthonormal DCT-II, analytic-signal envelopes,
autocorrelation, Levinson-Durbin and all-pole envelope evaluation.

Everything here is float64 and side-effect free.
"""
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import InvalidArgumentError, NumericalDegeneracyError


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidArgumentError("signal must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentError("signal contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise InvalidArgumentError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class LpModel:
    """All-pole model 1/A(z) with A(z) = sum_k coeffs[k] z^-k, coeffs[0] == 1."""

    coeffs: np.ndarray
    gain: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 1 or coeffs.size < 1 or coeffs[0] != 1.0:
            raise InvalidArgumentError("LP coefficients must start with a[0] == 1")
        if not (self.gain > 0 and np.isfinite(self.gain)):
            raise InvalidArgumentError(f"LP gain must be positive, got {self.gain}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "gain", float(self.gain))

    @property
    def order(self):
        return self.coeffs.size - 1


def _as_nonempty(x, name="input"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InvalidArgumentError(f"{name} must be a nonempty 1-D sequence")
    return x


def dct_ii(x):
    """Orthonormal DCT-II (energy preserving)."""
    x = _as_nonempty(x)
    return scipy.fft.dct(x, type=2, norm="ortho")


def idct_ii(coeffs):
    """Inverse of :func:`dct_ii`."""
    coeffs = _as_nonempty(coeffs, "coefficients")
    return scipy.fft.idct(coeffs, type=2, norm="ortho")


def analytic_envelope(x):
    """Squared magnitude of the analytic signal of ``x``.

    The analytic signal is formed by zeroing negative frequencies and
    doubling positive ones (DC and, for even length, Nyquist kept once).
    """
    x = _as_nonempty(x)
    n = x.size
    spectrum = np.fft.fft(x)
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[n // 2] = 1.0
        weights[1:n // 2] = 2.0
    else:
        weights[1:(n + 1) // 2] = 2.0
    analytic = np.fft.ifft(spectrum * weights)
    return analytic.real ** 2 + analytic.imag ** 2


def autocorr(x, max_lag):
    """Biased autocorrelation r[k] = sum_n x[n] x[n+k] / N for k = 0..max_lag."""
    x = _as_nonempty(x)
    n = x.size
    if max_lag < 0 or max_lag >= n:
        raise InvalidArgumentError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    r = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        r[k] = np.dot(x[:n - k], x[k:])
    return r / n


def levinson_durbin(r):
    """Solve the Toeplitz normal equations for the LP model of autocorrelation ``r``.

    Returns an :class:`LpModel` of order ``len(r) - 1`` whose gain is the square
    root of the final prediction-error power. Raises
    :class:`NumericalDegeneracyError` when the prediction error stops being
    positive, i.e. when ``r`` is not positive definite.
    """
    r = _as_nonempty(r, "autocorrelation")
    if not np.all(np.isfinite(r)):
        raise InvalidArgumentError("autocorrelation contains non-finite values")
    if r[0] <= 0:
        raise InvalidArgumentError(f"r[0] must be positive, got {r[0]}")
    p = r.size - 1
    a = np.zeros(p + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, p + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1:0:-1])
        k = -acc / err
        a[1:i] = a[1:i] + k * a[i - 1:0:-1]
        a[i] = k
        err = err * (1.0 - k * k)
        if not err > 0:
            raise NumericalDegeneracyError(
                f"prediction error became non-positive at order {i}", order=i)
    return LpModel(a, np.sqrt(err))


def all_pole_envelope(model, num_points):
    """Evaluate g^2 / |A(e^{jw})|^2 at w_m = pi * m / num_points, m = 0..num_points-1."""
    if num_points < 1:
        raise InvalidArgumentError(f"num_points must be >= 1, got {num_points}")
    nfft = 2 * num_points
    a = model.coeffs
    if a.size > nfft:
        # exp(-j w_m k) has period nfft in k on this grid
        folded = np.zeros(nfft)
        np.add.at(folded, np.arange(a.size) % nfft, a)
        a = folded
    spectrum = np.fft.rfft(a, n=nfft)[:num_points]
    power = spectrum.real ** 2 + spectrum.imag ** 2
    return model.gain ** 2 / power
