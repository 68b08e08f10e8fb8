"""Self-contained numeric verification of the core math.

Each check pits an implementation against an independent route: the two
closed forms of the prior gradient against each other, analytic gradients
against central finite differences, the density against quadrature mass,
and the component posterior against its defining identity. The CLI's
``verify-math`` subcommand runs them all and reports the observed worst
deviations next to their tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generator import GeneratorConfig, complete_loglik, init_generator_params, param_grad
from .inference import InferenceConfig, inference_step
from .nn import make_rng
from .prior import (
    PriorParams,
    component_posterior,
    density,
    grad_log_density,
    grad_log_density_via_posterior,
    log_density,
)

GRID_ALPHAS = (0.01, 0.2, 0.5, 1.0)
QUAD_ALPHAS = (0.01, 0.5, 1.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.deviation <= self.tolerance


def check_gradient_equivalence() -> CheckResult:
    """Direct factored gradient vs responsibility-weighted gradient on a grid."""
    z = np.linspace(-5.0, 5.0, 1000)
    worst = 0.0
    for alpha in GRID_ALPHAS:
        prior = PriorParams(alpha1=alpha, var1=1.0, var2=0.1)
        diff = np.abs(grad_log_density(z, prior) - grad_log_density_via_posterior(z, prior))
        worst = max(worst, float(diff.max()))
    return CheckResult("gradient-form equivalence (max |direct - posterior-form|)", worst, 1e-9)


def _rel_dev(analytic: np.ndarray, fd: np.ndarray) -> float:
    scale = np.maximum(1.0, np.abs(fd))
    return float((np.abs(analytic - fd) / scale).max())


def check_finite_differences(instances: int = 100) -> CheckResult:
    """Prior gradient, parameter gradient, and latent gradient vs central FD."""
    config = GeneratorConfig(latent_dim=3, hidden_dims=(5,), output_dim=4, obs_noise_sigma=0.3)
    inf = InferenceConfig(steps=1, step_size=0.1)
    h = 1e-6
    worst = 0.0
    for i in range(instances):
        rng = make_rng(7000, i)
        prior = PriorParams(alpha1=float(rng.uniform(0.01, 1.0)), var1=1.0, var2=0.1)
        params = init_generator_params(config, rng)
        z = rng.normal(size=(1, 3)) * 2.0
        x = rng.random((1, 4))

        # Prior gradient on the latent coordinates.
        fd = (log_density(z + h, prior) - log_density(z - h, prior)) / (2 * h)
        worst = max(worst, _rel_dev(grad_log_density(z, prior), fd))

        # Parameter gradient of the batch objective.
        grads = param_grad(x, z, params, config)
        for t in range(len(params)):
            flat = params[t].reshape(-1)
            fd_flat = np.empty(flat.size)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                up = complete_loglik(x, z, params, prior, config).mean()
                flat[j] = orig - h
                down = complete_loglik(x, z, params, prior, config).mean()
                flat[j] = orig
                fd_flat[j] = (up - down) / (2 * h)
            worst = max(worst, _rel_dev(grads[t].reshape(-1), fd_flat))

        # Latent gradient as exercised by one noise-free inference step.
        step = inference_step(z, x, params, prior, config, inf, make_rng(0))
        analytic = (z - step) / (0.5 * inf.step_size**2)
        fd_z = np.empty(3)
        for j in range(3):
            zp, zm = z.copy(), z.copy()
            zp[0, j] += h
            zm[0, j] -= h
            up = -complete_loglik(x, zp, params, prior, config)[0]
            down = -complete_loglik(x, zm, params, prior, config)[0]
            fd_z[j] = (up - down) / (2 * h)
        worst = max(worst, _rel_dev(analytic[0], fd_z))
    return CheckResult("finite-difference agreement (max relative)", worst, 1e-5)


def check_prior_mass() -> CheckResult:
    """Trapezoid quadrature of the density over [-12, 12]."""
    z = np.linspace(-12.0, 12.0, 1_000_001)
    worst = 0.0
    for alpha in QUAD_ALPHAS:
        prior = PriorParams(alpha1=alpha, var1=1.0, var2=0.1)
        mass = float(np.trapezoid(density(z, prior), z))
        worst = max(worst, abs(mass - 1.0))
    return CheckResult("prior quadrature mass (max |mass - 1|)", worst, 1e-6)


def check_posterior_identity() -> CheckResult:
    """Responsibilities sum to one across the grid and all mixing weights."""
    z = np.linspace(-5.0, 5.0, 1000)
    worst = 0.0
    for alpha in GRID_ALPHAS:
        prior = PriorParams(alpha1=alpha, var1=1.0, var2=0.1)
        p1, p2 = component_posterior(z, prior)
        worst = max(worst, float(np.abs(p1 + p2 - 1.0).max()))
    return CheckResult("posterior sum identity (max |p1 + p2 - 1|)", worst, 1e-12)


def check_posterior_tail() -> CheckResult:
    """Far from the origin the wide component owns the sample even at tiny weight."""
    p1, _ = component_posterior(10.0, PriorParams(alpha1=0.01, var1=1.0, var2=0.1))
    return CheckResult("wide-component posterior at z=10, alpha=0.01 (1 - p1)", float(1.0 - p1), 1e-6)


def run_all() -> list[CheckResult]:
    return [
        check_gradient_equivalence(),
        check_finite_differences(),
        check_prior_mass(),
        check_posterior_identity(),
        check_posterior_tail(),
    ]
