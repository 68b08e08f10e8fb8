"""The alternating training loop: sparsify, infer latents, update the model.

Each epoch starts by stepping the prior's mixing weight down the sparsity
schedule (unless held constant for an ablation), then walks the shuffled
dataset in fixed-size batches. Every batch is processed cold: latents are
re-initialized from scratch, pushed through the configured number of
inference steps, and the resulting MAP codes drive one Adam update of the
generator. Nothing persists between epochs except the generator parameters,
the optimizer moments, and the live mixing weight.

Randomness is keyed so that resuming from a checkpoint is bit-exact: the
initializer stream is (seed, 0), and epoch e derives (seed, 1, e, 0) for
the shuffle and (seed, 1, e, 1) for any Langevin noise. No stream state
needs saving; the epoch counter regenerates it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .checkpoint import Checkpoint
from .data import IdxDataset, batch_iter
from .errors import InferenceDivergenceError, ParameterError
from .generator import GeneratorConfig, decode, init_generator_params, param_grad
from .inference import InferenceConfig, infer_map
from .metrics import DEFAULT_ACTIVATION_THRESHOLD, active_fraction
from .nn import make_rng
from .optim import AdamState, adam_step, init_adam
from .prior import PriorParams, sparsity_decay

METRICS_HEADER = ["epoch", "alpha_c", "loglik", "mse", "active_fraction"]


@dataclass(frozen=True)
class TrainConfig:
    """Epoch budget, optimizer settings, and the sparsification schedule."""

    epochs: int
    batch_size: int = 100
    lr: float = 1e-4
    sparsity_initial: float = 1.0
    sparsity_decay: float = 0.033
    sparsity_threshold: float = 0.01
    seed: int = 0
    constant_sparsity: bool = False
    langevin_noise: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ParameterError(f"lr must be positive, got {self.lr}")
        if not (0.0 < self.sparsity_threshold <= self.sparsity_initial <= 1.0):
            raise ParameterError(
                f"need 0 < threshold {self.sparsity_threshold} <= initial "
                f"{self.sparsity_initial} <= 1"
            )
        if self.sparsity_decay < 0:
            raise ParameterError(f"sparsity_decay must be >= 0, got {self.sparsity_decay}")


@dataclass(frozen=True)
class EpochMetrics:
    """Means over the epoch's batches, one CSV row per epoch."""

    epoch: int
    alpha_c: float
    loglik: float
    mse: float
    active_fraction: float

    def row(self):
        return [self.epoch, self.alpha_c, self.loglik, self.mse, self.active_fraction]


def decay_sparsity(alpha_c: float, gamma: float, alpha_t: float) -> float:
    """Schedule step: no-op at or below the floor, else decay with clamping."""
    if alpha_c <= alpha_t:
        return alpha_c
    return sparsity_decay(alpha_c, gamma, alpha_t)


def train_epoch(
    dataset: IdxDataset,
    params: list,
    adam: AdamState,
    prior: PriorParams,
    train_cfg: TrainConfig,
    gen_cfg: GeneratorConfig,
    inf_cfg: InferenceConfig,
    epoch: int,
):
    """One pass over the data; returns (params, adam, EpochMetrics)."""
    noise_rng = make_rng(train_cfg.seed, 1, epoch, 1)
    logliks, mses, actives = [], [], []
    batches = batch_iter(
        dataset, train_cfg.batch_size, seed=(train_cfg.seed, 1, epoch, 0), shuffle=True
    )
    for batch_index, batch in enumerate(batches):
        try:
            latents = infer_map(batch, params, prior, gen_cfg, inf_cfg, noise_rng)
        except InferenceDivergenceError as err:
            raise InferenceDivergenceError(
                f"epoch {epoch} batch {batch_index}: {err}", sample_index=err.sample_index
            ) from err
        grads = param_grad(batch.pixels, latents.values, params, gen_cfg)
        params, adam = adam_step(params, [-g for g in grads], adam, lr=train_cfg.lr)

        recon = decode(latents.values, params, gen_cfg)
        logliks.append(float(latents.objective.mean()))
        mses.append(float(np.mean((batch.pixels - recon) ** 2)))
        actives.append(active_fraction(latents.values, DEFAULT_ACTIVATION_THRESHOLD))
    metrics = EpochMetrics(
        epoch=epoch,
        alpha_c=prior.alpha1,
        loglik=float(np.mean(logliks)),
        mse=float(np.mean(mses)),
        active_fraction=float(np.mean(actives)),
    )
    return params, adam, metrics


def train(
    dataset: IdxDataset,
    train_cfg: TrainConfig,
    gen_cfg: GeneratorConfig,
    inf_cfg: InferenceConfig,
    prior_template: PriorParams | None = None,
    resume: Checkpoint | None = None,
    metrics_path=None,
    epoch_callback=None,
):
    """Run the schedule to the epoch budget; returns (Checkpoint, [EpochMetrics]).

    ``prior_template`` supplies the component variances; its mixing weight is
    overridden by the schedule. With ``resume`` the loop continues from the
    stored epoch, reproducing exactly what an uninterrupted run would have
    done, because all per-epoch randomness is derived from (seed, epoch).
    """
    if prior_template is None:
        prior_template = PriorParams(alpha1=1.0)
    inf_cfg = InferenceConfig(
        steps=inf_cfg.steps,
        step_size=inf_cfg.step_size,
        noise_enabled=train_cfg.langevin_noise,
        init_mode=inf_cfg.init_mode,
    )
    if resume is None:
        params = init_generator_params(gen_cfg, make_rng(train_cfg.seed, 0))
        adam = init_adam(params)
        alpha = train_cfg.sparsity_initial
        start_epoch = 1
    else:
        params = resume.params
        adam = resume.adam
        alpha = resume.prior.alpha1
        start_epoch = resume.epoch + 1

    writer = None
    if metrics_path is not None:
        fresh = resume is None
        handle = open(metrics_path, "w" if fresh else "a", newline="")
        writer = csv.writer(handle)
        if fresh:
            writer.writerow(METRICS_HEADER)

    history = []
    try:
        for epoch in range(start_epoch, train_cfg.epochs + 1):
            if not train_cfg.constant_sparsity:
                alpha = decay_sparsity(
                    alpha, train_cfg.sparsity_decay, train_cfg.sparsity_threshold
                )
            prior = prior_template.with_alpha(alpha)
            params, adam, metrics = train_epoch(
                dataset, params, adam, prior, train_cfg, gen_cfg, inf_cfg, epoch
            )
            history.append(metrics)
            if writer is not None:
                writer.writerow(metrics.row())
                handle.flush()
            if epoch_callback is not None:
                epoch_callback(metrics)
    finally:
        if writer is not None:
            handle.close()

    final_prior = prior_template.with_alpha(alpha)
    ckpt = Checkpoint(
        gen_config=gen_cfg,
        prior=final_prior,
        params=params,
        adam=adam,
        epoch=train_cfg.epochs,
        seed=train_cfg.seed,
    )
    return ckpt, history
