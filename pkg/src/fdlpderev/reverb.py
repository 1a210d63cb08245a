"""Synthetic room impulse responses and clean/reverberant pairs."""
import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .dsp import Signal
from .errors import InvalidArgumentError

DEFAULT_BOUNDARY = 0.05


@dataclass(frozen=True)
class RirSpec:
    t60: float
    direct_delay: float = 0.0
    length: float = None
    seed: int = 0
    sample_rate: int = 16000
    # peak amplitude of the reverberant tail; < 1 keeps the direct path dominant
    tail_level: float = 0.1

    def __post_init__(self):
        if not self.t60 > 0:
            raise InvalidArgumentError(f"t60 must be positive, got {self.t60}")
        if self.length is None:
            object.__setattr__(self, "length", self.direct_delay + self.t60)
        if self.direct_delay < 0 or self.direct_delay >= self.length:
            raise InvalidArgumentError("direct_delay must lie in [0, length)")
        if not 0 <= self.tail_level < 1:
            raise InvalidArgumentError("tail_level must lie in [0, 1)")
        if self.sample_rate <= 0:
            raise InvalidArgumentError("sample_rate must be positive")

    @property
    def num_samples(self):
        return max(1, int(round(self.length * self.sample_rate)))

    @property
    def direct_index(self):
        return int(round(self.direct_delay * self.sample_rate))


@dataclass(frozen=True)
class Rir:
    samples: np.ndarray
    spec: RirSpec

    @property
    def direct_index(self):
        return self.spec.direct_index


@dataclass(frozen=True)
class ReverbPair:
    clean: Signal
    reverberant: Signal
    rir: Rir
    clean_index: int = 0
    rir_index: int = 0


def synth_rir(spec):
    """Unit direct impulse followed by uniform noise whose amplitude decays
    as exp(-6.9 t / t60), i.e. the energy falls by 60 dB at t60."""
    n = spec.num_samples
    d = spec.direct_index
    h = np.zeros(n)
    h[d] = 1.0
    rng = np.random.default_rng(spec.seed)
    tail_n = n - d - 1
    if tail_n > 0:
        t = np.arange(1, tail_n + 1) / spec.sample_rate
        noise = rng.uniform(-1.0, 1.0, tail_n)
        h[d + 1:] = spec.tail_level * noise * np.exp(-6.9 * t / spec.t60)
    return Rir(h, spec)


def convolve_truncate(clean, rir):
    """Linear convolution of ``clean`` with ``rir``, cut to the clean length."""
    if clean.sample_rate != rir.spec.sample_rate:
        raise InvalidArgumentError(
            f"sample rate mismatch: {clean.sample_rate} vs {rir.spec.sample_rate}")
    x = clean.samples
    h = np.trim_zeros(np.asarray(rir.samples, dtype=np.float64), "b")
    n = x.shape[0]
    out = np.zeros(n)
    nz = np.flatnonzero(h)
    if nz.size == 0:
        return Signal(out, clean.sample_rate)
    if nz.size == 1:
        # pure delay and scale, exact
        k = int(nz[0])
        if k < n:
            out[k:] = h[k] * x[:n - k]
        return Signal(out, clean.sample_rate)
    h = h[:n]
    full = scipy.signal.fftconvolve(x, h) if h.size > 64 else np.convolve(x, h)
    return Signal(full[:n], clean.sample_rate)


def split_early_late(rir, boundary=DEFAULT_BOUNDARY):
    """Partition the RIR at ``boundary`` seconds after the direct path."""
    total = rir.samples.shape[0] / rir.spec.sample_rate
    if not 0 < boundary < total:
        raise InvalidArgumentError(f"boundary must lie in (0, {total}), got {boundary}")
    cut = min(rir.direct_index + int(round(boundary * rir.spec.sample_rate)),
              rir.samples.shape[0])
    early = np.zeros_like(rir.samples)
    late = np.zeros_like(rir.samples)
    early[:cut] = rir.samples[:cut]
    late[cut:] = rir.samples[cut:]
    return Rir(early, rir.spec), Rir(late, rir.spec)


def make_dataset(clean_signals, rir_specs, pairing_seed=0, pairing="exhaustive",
                 rirs_per_clean=1):
    """Convolve clean signals with RIRs.

    ``exhaustive`` pairs every clean signal with every RIR (clean-major order);
    ``zip`` pairs them one to one; ``random`` draws ``rirs_per_clean`` distinct RIRs per clean signal from a
    generator seeded by ``pairing_seed``.
    """
    clean_signals = list(clean_signals)
    rir_specs = list(rir_specs)
    if not clean_signals or not rir_specs:
        raise InvalidArgumentError("make_dataset needs at least one clean signal and one RIR")
    rirs = [synth_rir(s) for s in rir_specs]
    if pairing == "exhaustive":
        combos = list(itertools.product(range(len(clean_signals)), range(len(rirs))))
    elif pairing == "zip":
        if len(clean_signals) != len(rirs):
            raise InvalidArgumentError("zip pairing needs equally many clean signals and RIRs")
        combos = [(i, i) for i in range(len(rirs))]
    elif pairing == "random":
        if not 1 <= rirs_per_clean <= len(rirs):
            raise InvalidArgumentError("rirs_per_clean out of range")
        rng = np.random.default_rng(pairing_seed)
        combos = [(i, int(j)) for i in range(len(clean_signals))
                  for j in np.sort(rng.choice(len(rirs), rirs_per_clean, replace=False))]
    else:
        raise InvalidArgumentError(f"unknown pairing {pairing!r}")
    return [ReverbPair(clean_signals[i], convolve_truncate(clean_signals[i], rirs[j]),
                       rirs[j], i, j)
            for i, j in combos]
