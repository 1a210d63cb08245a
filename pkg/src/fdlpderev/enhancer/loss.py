"""Log-domain MSE on envelope gains plus a channel-decorrelation penalty."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError
from ..fdlp import FdlpConfig, _values, gain_targets

DEGENERATE_VARIANCE = 1e-12


@dataclass
class LossResult:
    value: float
    grad: np.ndarray  # d value / d log predicted gain
    mse: float
    decorrelation: float
    excluded_channels: list = field(default_factory=list)


def decorrelation_penalty(y):
    """Mean squared off-diagonal channel correlation of y (T, Q).

    Channels are mean-removed and variance-normalised over time; channels with
    variance below ``DEGENERATE_VARIANCE`` are left out. Returns
    ``(penalty, grad_wrt_y, excluded)``.
    """
    t, q = y.shape
    yc = y - y.mean(axis=0)
    var = (yc ** 2).mean(axis=0)
    keep = var >= DEGENERATE_VARIANCE
    excluded = [int(i) for i in np.flatnonzero(~keep)]
    grad = np.zeros_like(y)
    k = int(keep.sum())
    if k < 2:
        return 0.0, grad, excluded
    s = np.sqrt(var[keep])
    z = yc[:, keep] / s
    corr = z.T @ z / t
    off = corr - np.diag(np.diag(corr))
    denom = k * (k - 1)
    penalty = float((off ** 2).sum() / denom)
    dcorr = 2.0 * off / denom
    dz = 2.0 * (z @ dcorr) / t
    dyc = (dz - z * (dz * z).mean(axis=0)) / s
    grad[:, keep] = dyc - dyc.mean(axis=0)
    return penalty, grad, excluded


def loss(log_gain, reverb_env, clean_env, reg_weight=0.05, config=FdlpConfig(),
         valid_length=None):
    """Loss of a predicted log-gain matrix against clamped gain targets.

    MSE between predicted and target log gains (equal to the MSE between
    log(gain * reverb) and log(clean) wherever the clamp is inactive), plus
    ``reg_weight`` times the decorrelation penalty of the enhanced
    log-envelopes log(gain * reverb). Only the first ``valid_length`` rows
    contribute.
    """
    z = np.asarray(log_gain, dtype=np.float64)
    r, c = _values(reverb_env), _values(clean_env)
    if not (z.shape == r.shape == c.shape):
        raise InvalidArgumentError(f"shape mismatch: {z.shape}, {r.shape}, {c.shape}")
    if reg_weight < 0:
        raise InvalidArgumentError("reg_weight must be >= 0")
    v = z.shape[0] if valid_length is None else int(valid_length)
    target = np.log(gain_targets(c[:v], r[:v], config).values)
    diff = z[:v] - target
    mse = float(np.mean(diff ** 2)) if v else 0.0
    grad = np.zeros_like(z)
    if v:
        grad[:v] = 2.0 * diff / diff.size
    dec, excluded = 0.0, []
    if reg_weight > 0 and v > 1:
        enhanced = z[:v] + np.log(np.maximum(r[:v], config.env_floor))
        dec, dgrad, excluded = decorrelation_penalty(enhanced)
        grad[:v] += reg_weight * dgrad
    return LossResult(mse + reg_weight * dec, grad, mse, dec, excluded)


def log_mse(a, b, floor=FdlpConfig.env_floor, valid_length=None):
    """Mean squared difference of floored log envelopes."""
    a, b = _values(a), _values(b)
    v = a.shape[0] if valid_length is None else valid_length
    return float(np.mean((np.log(np.maximum(a[:v], floor)) - np.log(np.maximum(b[:v], floor))) ** 2))
