from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError, NumericOverflowError


@dataclass(frozen=True)
class AdamHyper:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def from_config(cls, config):
        return cls(config.learning_rate, config.beta1, config.beta2, config.adam_eps)


@dataclass(frozen=True)
class AdamState:
    step: int
    m: dict
    v: dict

    @classmethod
    def zeros(cls, params):
        return cls(0, {k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params, grads, state, hyper=AdamHyper()):
    """One bias-corrected Adam update. Inputs are not modified."""
    if set(grads) != set(params):
        raise InvalidArgumentError("gradient keys do not match parameter keys")
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise InvalidArgumentError(f"{name}: gradient shape {g.shape} != {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NumericOverflowError(f"non-finite gradient for {name}; step aborted", layer=name)
    step = state.step + 1
    b1, b2 = hyper.beta1, hyper.beta2
    c1 = 1.0 - b1 ** step
    c2 = 1.0 - b2 ** step
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        new_params[name] = p - hyper.learning_rate * (m / c1) / (np.sqrt(v / c2) + hyper.eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(step, new_m, new_v)
