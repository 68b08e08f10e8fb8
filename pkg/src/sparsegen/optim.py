"""Adam optimizer over flat parameter lists.

The update is the standard bias-corrected recurrence

    m <- b1 m + (1 - b1) g        v <- b2 v + (1 - b2) g^2
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)

driven by descent gradients: callers maximizing an objective negate their
gradients first. State is immutable; ``adam_step`` returns fresh parameter
and state objects so snapshots for checkpointing are just references.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError


@dataclass(frozen=True)
class AdamState:
    """First/second moment estimates per tensor plus the step counter."""

    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ParameterError(f"betas must be in [0,1), got {self.beta1}, {self.beta2}")
        if self.eps <= 0.0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if self.t < 0:
            raise ParameterError(f"step counter must be >= 0, got {self.t}")
        if len(self.m) != len(self.v):
            raise DimensionError(f"{len(self.m)} first moments vs {len(self.v)} second moments")


def init_adam(params: list[np.ndarray], **kwargs) -> AdamState:
    """Zero-moment state shaped like the parameter list."""
    return AdamState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        **kwargs,
    )


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState, lr: float):
    """One descent step; returns (new_params, new_state).

    ``grads`` point uphill for the quantity being minimized. A zero gradient
    leaves the parameters untouched but still advances the step counter.
    """
    if lr <= 0.0:
        raise ParameterError(f"learning rate must be positive, got {lr}")
    if len(grads) != len(params) or len(state.m) != len(params):
        raise DimensionError(
            f"parameter/gradient/state lengths differ: {len(params)}/{len(grads)}/{len(state.m)}"
        )
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise DimensionError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(
        m=new_m, v=new_v, t=t, beta1=state.beta1, beta2=state.beta2, eps=state.eps
    )
