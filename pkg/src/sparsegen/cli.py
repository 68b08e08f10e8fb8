"""Command-line entry point.

One executable with training, evaluation, and verification subcommands, all
driven by the same key=value configuration (file via --config, overridden by
--key value flags). Every run writes into a fixed output layout under
``out_dir``:

    checkpoints/   model snapshots
    grids/         PGM image panels
    tables/        CSV results
    logs/          metrics log and the effective merged config

Exit codes: 0 success, 2 configuration error, 3 data error, 4 checkpoint
error, 5 numeric divergence.
"""

from __future__ import annotations

import argparse
import pathlib
import sys

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import SCHEMA, RunConfig, build_run_config, parse_config_file
from .data import ImageBatch, corrupt_gaussian, load_idx
from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    InferenceDivergenceError,
    ParameterError,
    TrainingDataError,
)
from .generator import decode
from .inference import infer_map
from .metrics import (
    class_activation_map,
    eval_classifier,
    export_image_grid,
    export_latents_csv,
    psnr,
    ssim,
    train_latent_classifier,
)
from .nn import make_rng
from .training import train
from .verify import run_all

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CHECKPOINT = 4
EXIT_DIVERGENCE = 5


def _require(cfg: RunConfig, *keys: str) -> None:
    for key in keys:
        if not cfg.values[key]:
            raise ConfigError(f"{key} must be set for this command")


def _load_dataset(images_path, labels_path):
    try:
        return load_idx(images_path, labels_path or None)
    except OSError as err:
        raise DataError(f"cannot read dataset: {err}") from None


def _load_ckpt(cfg: RunConfig):
    _require(cfg, "checkpoint")
    try:
        ckpt = load_checkpoint(cfg.checkpoint)
    except OSError as err:
        raise CheckpointError(f"cannot read checkpoint: {err}") from None
    _check_consistency(cfg, ckpt)
    return ckpt


def _check_consistency(cfg: RunConfig, ckpt: Checkpoint) -> None:
    """Explicitly provided model keys must agree with the checkpoint."""
    stored = {
        "latent_dim": ckpt.gen_config.latent_dim,
        "hidden_dims": ckpt.gen_config.hidden_dims,
        "obs_noise_sigma": ckpt.gen_config.obs_noise_sigma,
        "var1": ckpt.prior.var1,
        "var2": ckpt.prior.var2,
    }
    for key, ckpt_value in stored.items():
        if key in cfg.provided and cfg.values[key] != ckpt_value:
            raise ConfigError(
                f"{key}={cfg.values[key]} conflicts with checkpoint value {ckpt_value}"
            )


def _check_geometry(ckpt: Checkpoint, dataset) -> None:
    pixels = dataset.rows * dataset.cols
    if ckpt.gen_config.output_dim != pixels:
        raise ConfigError(
            f"checkpoint generates {ckpt.gen_config.output_dim} pixels but dataset "
            f"images have {pixels}"
        )


def _out_dirs(cfg: RunConfig) -> pathlib.Path:
    out = pathlib.Path(cfg.out_dir)
    for sub in ("checkpoints", "grids", "tables", "logs"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    (out / "logs" / "effective-config.txt").write_text(cfg.effective_text(), encoding="utf-8")
    return out


def _infer_all(images: np.ndarray, ckpt: Checkpoint, cfg: RunConfig) -> np.ndarray:
    """Noise-free MAP latents for every row, in deterministic chunks."""
    inf_cfg = cfg.inference_config()
    rng = make_rng(0)  # untouched: noise is disabled for evaluation
    chunks = []
    for start in range(0, len(images), cfg.batch_size):
        chunk = images[start : start + cfg.batch_size]
        chunks.append(
            infer_map(chunk, ckpt.params, ckpt.prior, ckpt.gen_config, inf_cfg, rng).values
        )
    return np.vstack(chunks)


def _write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _save_grid(images, cfg, path) -> None:
    count = len(images)
    cols = min(cfg.grid_cols, count)
    rows = -(-count // cols)
    export_image_grid(images, rows, cols, path)


def _print_epoch(m) -> None:
    print(
        f"epoch {m.epoch:4d}  alpha {m.alpha_c:7.4f}  loglik {m.loglik:12.2f}  "
        f"mse {m.mse:.5f}  active {m.active_fraction:.4f}",
        flush=True,
    )


def cmd_train(cfg: RunConfig) -> int:
    _require(cfg, "train_images")
    dataset = _load_dataset(cfg.train_images, cfg.train_labels)
    out = _out_dirs(cfg)
    gen_cfg = cfg.generator_config(dataset.rows * dataset.cols)
    ckpt, history = train(
        dataset,
        cfg.train_config(),
        gen_cfg,
        cfg.inference_config(),
        prior_template=cfg.prior_template(),
        metrics_path=out / "logs" / "metrics.csv",
        epoch_callback=_print_epoch,
    )
    ckpt_path = out / "checkpoints" / "model.ssgn"
    save_checkpoint(ckpt_path, ckpt)
    print(f"checkpoint: {ckpt_path}")
    if history:
        print(f"final mse {history[-1].mse:.5f}, active fraction {history[-1].active_fraction:.4f}")
    return EXIT_OK


def cmd_reconstruct(cfg: RunConfig) -> int:
    ckpt = _load_ckpt(cfg)
    _require(cfg, "test_images")
    test = _load_dataset(cfg.test_images, cfg.test_labels)
    _check_geometry(ckpt, test)
    out = _out_dirs(cfg)

    latents = _infer_all(test.images, ckpt, cfg)
    recon = decode(latents, ckpt.params, ckpt.gen_config)
    side = test.rows
    scores = [psnr(x.reshape(side, -1), y.reshape(side, -1)) for x, y in zip(test.images, recon)]

    labels = test.labels if test.labels is not None else np.full(len(test), -1)
    _write_csv(
        out / "tables" / "reconstruction.csv",
        ["image_index", "label", "psnr_db"],
        [(i, labels[i], f"{scores[i]:.6f}") for i in range(len(scores))],
    )
    shown = min(cfg.grid_images, len(test))
    _save_grid(test.images[:shown], cfg, out / "grids" / "originals.pgm")
    _save_grid(recon[:shown], cfg, out / "grids" / "reconstructions.pgm")
    print(f"test images: {len(scores)}  mean psnr: {np.mean(scores):.3f} dB")
    return EXIT_OK


def cmd_denoise(cfg: RunConfig) -> int:
    ckpt = _load_ckpt(cfg)
    _require(cfg, "test_images")
    test = _load_dataset(cfg.test_images, cfg.test_labels)
    _check_geometry(ckpt, test)
    out = _out_dirs(cfg)
    side = test.rows

    rows = []
    clean_batch = ImageBatch(pixels=test.images, indices=np.arange(len(test)))
    for i, sigma in enumerate(cfg.noise_sigmas):
        noisy = corrupt_gaussian(clean_batch, sigma, make_rng(cfg.seed, 2, i))
        latents = _infer_all(noisy.pixels, ckpt, cfg)
        recon = decode(latents, ckpt.params, ckpt.gen_config)

        ssim_noisy, ssim_clean, psnr_clean = [], [], []
        for n_img, c_img, r_img in zip(noisy.pixels, test.images, recon):
            n2, c2, r2 = (a.reshape(side, -1) for a in (n_img, c_img, r_img))
            ssim_noisy.append(ssim(n2, r2))
            ssim_clean.append(ssim(c2, r2))
            psnr_clean.append(psnr(c2, r2))
        rows.append(
            (
                f"{sigma:g}",
                f"{np.mean(ssim_noisy):.6f}",
                f"{np.mean(ssim_clean):.6f}",
                f"{np.mean(psnr_clean):.6f}",
            )
        )
        shown = min(cfg.grid_images, len(test))
        _save_grid(noisy.pixels[:shown], cfg, out / "grids" / f"denoise-{sigma:g}-noisy.pgm")
        _save_grid(recon[:shown], cfg, out / "grids" / f"denoise-{sigma:g}-recon.pgm")
        print(f"sigma {sigma:g}: ssim vs noisy {rows[-1][1]}, vs clean {rows[-1][2]}")

    _write_csv(
        out / "tables" / "denoise.csv",
        ["sigma", "ssim_noisy_recon", "ssim_clean_recon", "psnr_clean_recon_db"],
        rows,
    )
    return EXIT_OK


def cmd_traverse(cfg: RunConfig) -> int:
    ckpt = _load_ckpt(cfg)
    _require(cfg, "test_images")
    test = _load_dataset(cfg.test_images, cfg.test_labels)
    _check_geometry(ckpt, test)
    out = _out_dirs(cfg)

    count = min(cfg.traverse_samples, len(test))
    images = test.images[:count]
    latents = _infer_all(images, ckpt, cfg)

    sweep = np.linspace(-cfg.traverse_range, cfg.traverse_range, cfg.traverse_steps)
    panel, table_rows = [], []
    for i in range(count):
        z_row = latents[i]
        idx = cfg.traverse_latent if cfg.traverse_latent >= 0 else int(np.argmax(np.abs(z_row)))
        if idx >= ckpt.gen_config.latent_dim:
            raise ConfigError(
                f"traverse_latent {idx} out of range for latent_dim {ckpt.gen_config.latent_dim}"
            )
        variants = np.repeat(z_row[None, :], len(sweep), axis=0)
        variants[:, idx] = sweep
        panel.append(decode(variants, ckpt.params, ckpt.gen_config))
        table_rows.append((i, idx, f"{z_row[idx]:.6f}"))

    export_image_grid(np.vstack(panel), count, cfg.traverse_steps, out / "grids" / "traverse.pgm")
    _write_csv(
        out / "tables" / "traverse.csv",
        ["sample_index", "latent_index", "original_value"],
        table_rows,
    )
    print(f"traversal grid: {count} samples x {cfg.traverse_steps} steps")
    return EXIT_OK


def cmd_heatmap(cfg: RunConfig) -> int:
    ckpt = _load_ckpt(cfg)
    _require(cfg, "test_images", "test_labels")
    test = _load_dataset(cfg.test_images, cfg.test_labels)
    _check_geometry(ckpt, test)
    out = _out_dirs(cfg)

    latents = _infer_all(test.images, ckpt, cfg)
    amap = class_activation_map(latents, test.labels, cfg.activation_threshold)
    header = ["class"] + [f"z{k}" for k in range(latents.shape[1])]
    rows = [
        [cls] + [f"{v:.6f}" for v in amap.row_for(cls)]
        for cls in amap.classes
    ]
    _write_csv(out / "tables" / "heatmap.csv", header, rows)
    print(f"activation map: {len(amap.classes)} classes, threshold {cfg.activation_threshold}")
    return EXIT_OK


def cmd_classify_latent(cfg: RunConfig) -> int:
    ckpt = _load_ckpt(cfg)
    _require(cfg, "train_images", "train_labels", "test_images", "test_labels")
    train_ds = _load_dataset(cfg.train_images, cfg.train_labels)
    test_ds = _load_dataset(cfg.test_images, cfg.test_labels)
    _check_geometry(ckpt, train_ds)
    _check_geometry(ckpt, test_ds)
    out = _out_dirs(cfg)

    picked = make_rng(cfg.seed, 3).permutation(len(train_ds))[: cfg.classify_samples]
    train_latents = _infer_all(train_ds.images[picked], ckpt, cfg)
    clf = train_latent_classifier(
        train_latents, train_ds.labels[picked], cfg.classifier_config(), make_rng(cfg.seed, 3, 1)
    )
    test_latents = _infer_all(test_ds.images, ckpt, cfg)
    accuracy = eval_classifier(clf, test_latents, test_ds.labels)

    _write_csv(
        out / "tables" / "classify_latent.csv",
        ["train_samples", "latent_dim", "accuracy"],
        [(len(picked), ckpt.gen_config.latent_dim, f"{accuracy:.6f}")],
    )
    print(f"latent classifier accuracy: {accuracy:.4f} ({len(picked)} training samples)")
    return EXIT_OK


def cmd_classify_noisy(cfg: RunConfig) -> int:
    ckpt = _load_ckpt(cfg)
    _require(cfg, "train_images", "train_labels", "test_images", "test_labels")
    train_ds = _load_dataset(cfg.train_images, cfg.train_labels)
    test_ds = _load_dataset(cfg.test_images, cfg.test_labels)
    _check_geometry(ckpt, train_ds)
    _check_geometry(ckpt, test_ds)
    out = _out_dirs(cfg)

    clf = train_latent_classifier(
        train_ds.images, train_ds.labels, cfg.classifier_config(), make_rng(cfg.seed, 4)
    )
    clean_batch = ImageBatch(pixels=test_ds.images, indices=np.arange(len(test_ds)))
    rows = []
    for i, sigma in enumerate(cfg.noise_sigmas):
        noisy = corrupt_gaussian(clean_batch, sigma, make_rng(cfg.seed, 2, i))
        latents = _infer_all(noisy.pixels, ckpt, cfg)
        recon = decode(latents, ckpt.params, ckpt.gen_config)
        accuracy = eval_classifier(clf, recon, test_ds.labels)
        rows.append((f"{sigma:g}", f"{accuracy:.6f}"))
        print(f"sigma {sigma:g}: reconstruction classification accuracy {accuracy:.4f}")
    _write_csv(out / "tables" / "classify_noisy.csv", ["sigma", "accuracy"], rows)
    return EXIT_OK


def cmd_export_latents(cfg: RunConfig) -> int:
    ckpt = _load_ckpt(cfg)
    _require(cfg, "test_images")
    test = _load_dataset(cfg.test_images, cfg.test_labels)
    _check_geometry(ckpt, test)
    out = _out_dirs(cfg)

    latents = _infer_all(test.images, ckpt, cfg)
    labels = test.labels if test.labels is not None else np.full(len(test), -1)
    path = out / "tables" / "latents.csv"
    export_latents_csv(path, latents, labels)
    print(f"exported {len(latents)} latent rows to {path}")
    return EXIT_OK


def cmd_verify_math(cfg: RunConfig) -> int:
    results = run_all()
    all_ok = True
    for r in results:
        status = "ok" if r.ok else "FAIL"
        print(f"{status:4s} {r.name}: {r.deviation:.3e} (tolerance {r.tolerance:.0e})")
        all_ok &= r.ok
    return EXIT_OK if all_ok else EXIT_DIVERGENCE


SUBCOMMANDS = {
    "train": (cmd_train, "fit the generator with the sparsity schedule"),
    "reconstruct": (cmd_reconstruct, "test-set PSNR table and image grids"),
    "denoise": (cmd_denoise, "corrupt, reconstruct, and score SSIM per noise level"),
    "traverse": (cmd_traverse, "sweep one activated latent across its range"),
    "heatmap": (cmd_heatmap, "per-class latent activation map CSV"),
    "classify-latent": (cmd_classify_latent, "train/evaluate a classifier on latent codes"),
    "classify-noisy": (cmd_classify_noisy, "classify reconstructions of noisy images"),
    "export-latents": (cmd_export_latents, "dump latent codes with labels as CSV"),
    "verify-math": (cmd_verify_math, "run numeric self-checks and report deviations"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsegen",
        description="Sparse-code generator training and evaluation.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in SUBCOMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", default=None, help="key=value config file")
        for key in SCHEMA:
            sub.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE")
    return parser


def dispatch(argv) -> int:
    args = _build_parser().parse_args(argv)
    try:
        file_values = parse_config_file(args.config) if args.config else None
        overrides = {key: getattr(args, key) for key in SCHEMA if getattr(args, key) is not None}
        cfg = build_run_config(file_values, overrides)
        handler, _ = SUBCOMMANDS[args.command]
        return handler(cfg)
    except (ConfigError, ParameterError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, TrainingDataError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except CheckpointError as err:
        print(f"checkpoint error: {err}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except InferenceDivergenceError as err:
        print(f"numeric divergence: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
