"""Per-sample latent inference by penalized gradient descent or Langevin steps.

Given an image x and fixed generator parameters, the latent code is found
by iterating

    z <- z - (s^2 / 2) * d/dz [ ||x - G(z)||^2 / (2 sigma^2) - log p(z) ]
           + (noise on ? s * N(0, I) : 0)

from a cold start. With noise off (the default) this is plain penalized
gradient descent toward a posterior mode; with noise on it is short-run
Langevin dynamics. The chain is never persisted: every call starts fresh
from the configured initialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InferenceDivergenceError, ParameterError
from .generator import GeneratorConfig, complete_loglik
from .nn import gaussian_draw, mlp_backward, mlp_forward_cached
from .prior import PriorParams, grad_log_density, sample_prior

INIT_MODES = ("zero", "gaussian", "spike_slab")

# Any coordinate beyond this has left the region where the model is
# meaningful; abort loudly instead of clamping and training on garbage.
_DIVERGENCE_BOUND = 1e6


@dataclass(frozen=True)
class InferenceConfig:
    """Step count, step size, noise switch, and cold-start distribution."""

    steps: int = 30
    step_size: float = 0.1
    noise_enabled: bool = False
    init_mode: str = "zero"

    def __post_init__(self):
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps}")
        if self.step_size <= 0:
            raise ParameterError(f"step_size must be positive, got {self.step_size}")
        if self.init_mode not in INIT_MODES:
            raise ParameterError(f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}")


@dataclass(frozen=True)
class LatentBatch:
    """Inferred codes plus the per-sample objective they achieved."""

    values: np.ndarray
    objective: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.objective.shape != (len(self.values),):
            raise ParameterError(
                f"values {self.values.shape} and objective {self.objective.shape} do not align"
            )

    def __len__(self):
        return len(self.values)


def _pixels_of(x) -> np.ndarray:
    return np.asarray(getattr(x, "pixels", x), float)


def _first_bad_row(mask_rows: np.ndarray) -> int:
    return int(np.argmax(mask_rows))


def inference_step(
    z: np.ndarray,
    x,
    params: list[np.ndarray],
    prior: PriorParams,
    gen_config: GeneratorConfig,
    inf_config: InferenceConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """One update of every sample's latent; returns the new B x K array."""
    pixels = _pixels_of(x)
    y, cache = mlp_forward_cached(gen_config.layers, params, z)
    upstream = (y - pixels) / gen_config.obs_noise_sigma**2
    _, recon_grad = mlp_backward(gen_config.layers, params, cache, upstream, need_param_grads=False)
    grad = recon_grad - grad_log_density(z, prior)

    bad = ~np.isfinite(grad).all(axis=1)
    if bad.any():
        idx = _first_bad_row(bad)
        raise InferenceDivergenceError(
            f"non-finite latent gradient for sample {idx}", sample_index=idx
        )

    s = inf_config.step_size
    z_new = z - 0.5 * s * s * grad
    if inf_config.noise_enabled:
        z_new = z_new + s * gaussian_draw(rng, z.size).reshape(z.shape)

    runaway = (np.abs(z_new) > _DIVERGENCE_BOUND).any(axis=1)
    if runaway.any():
        idx = _first_bad_row(runaway)
        raise InferenceDivergenceError(
            f"latent magnitude exceeded {_DIVERGENCE_BOUND:g} for sample {idx}", sample_index=idx
        )
    return z_new


def _init_latents(n, prior, inf_config, gen_config, rng):
    k = gen_config.latent_dim
    if inf_config.init_mode == "zero":
        return np.zeros((n, k))
    if inf_config.init_mode == "gaussian":
        return gaussian_draw(rng, n * k).reshape(n, k)
    return sample_prior(prior, rng, n * k).reshape(n, k)


def infer_map(
    x,
    params: list[np.ndarray],
    prior: PriorParams,
    gen_config: GeneratorConfig,
    inf_config: InferenceConfig,
    rng: np.random.Generator,
) -> LatentBatch:
    """Cold-start latents for a batch and run the configured number of steps."""
    pixels = _pixels_of(x)
    z = _init_latents(len(pixels), prior, inf_config, gen_config, rng)
    for _ in range(inf_config.steps):
        z = inference_step(z, pixels, params, prior, gen_config, inf_config, rng)
    objective = complete_loglik(pixels, z, params, prior, gen_config)
    return LatentBatch(values=z, objective=objective)
