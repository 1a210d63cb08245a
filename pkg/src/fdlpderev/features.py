"""Frame-level log features from envelope matrices."""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .fdlp import EnvelopeMatrix, FdlpConfig

WINDOW_SECONDS = 0.025
SHIFT_SECONDS = 0.010


@dataclass
class FeatureMatrix:
    frames: np.ndarray
    window_seconds: float = WINDOW_SECONDS
    shift_seconds: float = SHIFT_SECONDS

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 2:
            raise InvalidArgumentError("feature matrix must be 2-D (frame x band)")

    @property
    def shape(self):
        return self.frames.shape


def frame_points(envelope_rate=400):
    """(window, shift) in envelope samples: (10, 4) at 400 Hz."""
    window = int(round(WINDOW_SECONDS * envelope_rate))
    shift = int(round(SHIFT_SECONDS * envelope_rate))
    return window, shift


def num_frames(valid_length, window=10, shift=4):
    if valid_length < window:
        return 0
    return (valid_length - window) // shift + 1


def integrate(env, config=FdlpConfig()):
    """Mean envelope over 25 ms windows every 10 ms, then a floored natural log.

    Rows past ``env.valid_length`` (zero-padded tail) never enter a frame.
    """
    if not isinstance(env, EnvelopeMatrix):
        env = EnvelopeMatrix(env)
    window, shift = frame_points(config.envelope_rate)
    valid = env.values[:env.valid_length]
    f = num_frames(valid.shape[0], window, shift)
    if f == 0:
        return FeatureMatrix(np.zeros((0, env.values.shape[1])))
    # explicit elementwise sum: each column is computed independently of its
    # neighbours and memory layout, so band permutations commute exactly
    total = np.zeros((f, valid.shape[1]))
    for k in range(window):
        total += valid[k:k + shift * (f - 1) + 1:shift]
    means = total / window
    return FeatureMatrix(np.log(np.maximum(means, config.env_floor)))


def integrate_segments(envs, config=FdlpConfig()):
    """Features of consecutive segments concatenated in time order."""
    mats = [integrate(e, config).frames for e in envs]
    if not mats:
        raise InvalidArgumentError("no envelope segments to integrate")
    return FeatureMatrix(np.concatenate(mats, axis=0))
