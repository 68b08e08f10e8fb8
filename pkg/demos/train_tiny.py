"""Train a scaled-down model on a slice of the MNIST subset, then look at it.

Run with: python3 demos/train_tiny.py

Uses 2000 training images, 32 latent dimensions, and 6 epochs so the whole
thing finishes in well under a minute. Writes reconstruction grids and a
checkpoint under demos/_out/. For a full-size run use the CLI instead:

    sparsegen train --train_images data/mnist-train-images.idx.gz \
        --train_labels data/mnist-train-labels.idx.gz --out_dir run-output
"""

import pathlib

import numpy as np

from sparsegen.checkpoint import save_checkpoint
from sparsegen.data import IdxDataset, load_idx
from sparsegen.generator import GeneratorConfig, decode
from sparsegen.inference import InferenceConfig, infer_map
from sparsegen.metrics import active_fraction, export_image_grid, psnr
from sparsegen.nn import make_rng
from sparsegen.training import TrainConfig, train

HERE = pathlib.Path(__file__).resolve().parent
DATA = HERE.parent / "data"
OUT = HERE / "_out"


def main():
    OUT.mkdir(exist_ok=True)
    full = load_idx(DATA / "mnist-train-images.idx.gz", DATA / "mnist-train-labels.idx.gz")
    subset = IdxDataset(images=full.images[:2000], rows=full.rows, cols=full.cols,
                        labels=full.labels[:2000])
    test = load_idx(DATA / "mnist-test-images.idx.gz", DATA / "mnist-test-labels.idx.gz")

    gen_cfg = GeneratorConfig(latent_dim=32, hidden_dims=(128,), output_dim=784)
    # a faster decay so even 6 epochs show the sparsity schedule moving
    train_cfg = TrainConfig(epochs=6, sparsity_decay=0.15, lr=3e-4, seed=11)
    inf_cfg = InferenceConfig()

    print(f"training on {len(subset)} images, latent_dim={gen_cfg.latent_dim}")
    ckpt, history = train(subset, train_cfg, gen_cfg, inf_cfg,
                          epoch_callback=lambda m: print(
                              f"  epoch {m.epoch} alpha={m.alpha_c:.2f} "
                              f"mse={m.mse:.4f} active={m.active_fraction:.3f}"))
    save_checkpoint(OUT / "tiny.ssgn", ckpt)

    sample = test.images[:16]
    latents = infer_map(sample, ckpt.params, ckpt.prior, gen_cfg, inf_cfg, make_rng(0))
    recon = decode(latents.values, ckpt.params, gen_cfg)

    scores = [psnr(x.reshape(28, 28), y.reshape(28, 28)) for x, y in zip(sample, recon)]
    print(f"test PSNR over 16 images: mean {np.mean(scores):.2f} dB "
          f"(min {min(scores):.2f}, max {max(scores):.2f})")
    print(f"test active fraction: {active_fraction(latents.values):.3f}")

    export_image_grid(sample, 4, 4, OUT / "tiny-originals.pgm")
    export_image_grid(recon, 4, 4, OUT / "tiny-reconstructions.pgm")
    print(f"grids written to {OUT}")


if __name__ == "__main__":
    main()
