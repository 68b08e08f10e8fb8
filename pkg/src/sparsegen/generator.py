"""The latent-variable observation model and its learning gradient.

An image x is modeled as x = G(z) + noise, where G is a small top-down MLP
ending in a sigmoid (so means live in (0,1)) and the noise is isotropic
Gaussian with a fixed, pre-specified standard deviation. Combined with the
scale-mixture prior over z this gives the complete-data log likelihood

    L(x, z) = -||x - G(z)||^2 / (2 sigma^2) + sum_k log p(z_k) - D log(sqrt(2 pi) sigma)

which is the single scalar both halves of training care about: latent
inference ascends it in z, the model update ascends its batch mean in the
network parameters (where only the reconstruction term has any gradient).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError
from .nn import LayerSpec, init_mlp_params, mlp_forward, mlp_forward_cached, mlp_backward
from .prior import PriorParams, log_density


@dataclass(frozen=True)
class GeneratorConfig:
    """Network geometry and observation noise level.

    Defaults give the 200 -> 400 relu -> 784 sigmoid stack used for 28x28
    grayscale images; extra hidden widths stack left to right.
    """

    latent_dim: int = 200
    hidden_dims: tuple = (400,)
    output_dim: int = 784
    obs_noise_sigma: float = 0.3
    # "identity" turns the model into a linear/relu stack; used by analytic
    # test problems, never by the image configs.
    output_activation: str = "sigmoid"

    def __post_init__(self):
        if self.obs_noise_sigma <= 0:
            raise ParameterError(f"obs_noise_sigma must be positive, got {self.obs_noise_sigma}")
        if self.latent_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ParameterError("all layer widths must be >= 1")

    @property
    def layers(self) -> list[LayerSpec]:
        dims = (self.latent_dim, *self.hidden_dims, self.output_dim)
        specs = [LayerSpec(a, b, "relu") for a, b in zip(dims[:-2], dims[1:-1])]
        specs.append(LayerSpec(dims[-2], dims[-1], self.output_activation))
        return specs


def init_generator_params(config: GeneratorConfig, rng: np.random.Generator) -> list[np.ndarray]:
    return init_mlp_params(config.layers, rng)


def decode(z: np.ndarray, params: list[np.ndarray], config: GeneratorConfig) -> np.ndarray:
    """Deterministic mean image G(z) for a B x K latent batch; noise is never added."""
    return mlp_forward(config.layers, params, z)


def _check_pair(x, z, config):
    x, z = np.asarray(x, float), np.asarray(z, float)
    if z.ndim != 2 or z.shape[1] != config.latent_dim:
        raise DimensionError(f"latents {z.shape} do not match latent_dim {config.latent_dim}")
    if x.shape != (z.shape[0], config.output_dim):
        raise DimensionError(
            f"images {x.shape} do not match {z.shape[0]} x {config.output_dim}"
        )
    return x, z


def complete_loglik(
    x: np.ndarray,
    z: np.ndarray,
    params: list[np.ndarray],
    prior: PriorParams,
    config: GeneratorConfig,
) -> np.ndarray:
    """Per-sample complete-data log likelihood, length B.

    The -D log(sqrt(2 pi) sigma) normalizer is included, so reported values
    are honest log densities; it never affects any gradient.
    """
    x, z = _check_pair(x, z, config)
    recon = decode(z, params, config)
    sq_err = np.sum((x - recon) ** 2, axis=1)
    prior_term = np.sum(log_density(z, prior), axis=1)
    const = config.output_dim * np.log(np.sqrt(2.0 * np.pi) * config.obs_noise_sigma)
    return -sq_err / (2.0 * config.obs_noise_sigma**2) + prior_term - const


def param_grad(
    x: np.ndarray,
    z_map: np.ndarray,
    params: list[np.ndarray],
    config: GeneratorConfig,
) -> list[np.ndarray]:
    """Ascent gradient of the batch-mean complete log likelihood in the parameters.

    Only the reconstruction term depends on the parameters; the upstream
    gradient on the network output is (x - G(z)) / sigma^2, averaged over
    the batch.
    """
    x, z_map = _check_pair(x, z_map, config)
    y, cache = mlp_forward_cached(config.layers, params, z_map)
    upstream = (x - y) / (config.obs_noise_sigma**2 * len(x))
    grads, _ = mlp_backward(config.layers, params, cache, upstream, need_param_grads=True)
    return grads
