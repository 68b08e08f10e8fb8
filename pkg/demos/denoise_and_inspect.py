"""Denoise test digits with a trained checkpoint and inspect the latent codes.

Run with: python3 demos/denoise_and_inspect.py [checkpoint]

If no checkpoint path is given, the script looks for the acceptance-suite
artifact (tests/_artifacts/mnist-sparse-k200/checkpoints/model.ssgn) and
falls back to training a quick small model via demos/train_tiny.py logic.
"""

import pathlib
import sys

import numpy as np

from sparsegen.checkpoint import load_checkpoint
from sparsegen.data import ImageBatch, corrupt_gaussian, load_idx
from sparsegen.generator import decode
from sparsegen.inference import InferenceConfig, infer_map
from sparsegen.metrics import active_fraction, export_image_grid, psnr, ssim
from sparsegen.nn import make_rng

HERE = pathlib.Path(__file__).resolve().parent
DATA = HERE.parent / "data"
OUT = HERE / "_out"
DEFAULT = HERE.parent / "tests" / "_artifacts" / "mnist-sparse-k200" / "checkpoints" / "model.ssgn"


def pick_checkpoint():
    if len(sys.argv) > 1:
        return pathlib.Path(sys.argv[1])
    if DEFAULT.exists():
        return DEFAULT
    print("no trained checkpoint found; run demos/train_tiny.py first or pass a path")
    raise SystemExit(1)


def main():
    OUT.mkdir(exist_ok=True)
    ckpt = load_checkpoint(pick_checkpoint())
    print(f"checkpoint: {ckpt.gen_config.latent_dim} latents, "
          f"alpha={ckpt.prior.alpha1:.3f}, trained {ckpt.epoch} epochs")

    test = load_idx(DATA / "mnist-test-images.idx.gz", DATA / "mnist-test-labels.idx.gz")
    sample = ImageBatch(pixels=test.images[:24], indices=np.arange(24))
    inf_cfg = InferenceConfig()

    for sigma in (0.3, 0.5):
        noisy = corrupt_gaussian(sample, sigma, make_rng(99, int(sigma * 10)))
        latents = infer_map(noisy.pixels, ckpt.params, ckpt.prior, ckpt.gen_config,
                            inf_cfg, make_rng(0))
        recon = decode(latents.values, ckpt.params, ckpt.gen_config)

        s_noisy = np.mean([ssim(n.reshape(28, 28), r.reshape(28, 28))
                           for n, r in zip(noisy.pixels, recon)])
        p_clean = np.mean([psnr(c.reshape(28, 28), r.reshape(28, 28))
                           for c, r in zip(sample.pixels, recon)])
        print(f"sigma={sigma}: ssim(noisy, recon)={s_noisy:.3f}  "
              f"psnr(clean, recon)={p_clean:.2f} dB  "
              f"active={active_fraction(latents.values):.3f}")

        export_image_grid(noisy.pixels, 4, 6, OUT / f"noisy-{sigma}.pgm")
        export_image_grid(recon, 4, 6, OUT / f"denoised-{sigma}.pgm")

    # which latent coordinates does the first digit actually use?
    latents = infer_map(sample.pixels[:1], ckpt.params, ckpt.prior, ckpt.gen_config,
                        inf_cfg, make_rng(0))
    z = latents.values[0]
    top = np.argsort(-np.abs(z))[:8]
    print(f"first test digit (label {test.labels[0]}): strongest coordinates")
    for k in top:
        print(f"  z[{k}] = {z[k]:+.3f}")
    print(f"grids written to {OUT}")


if __name__ == "__main__":
    main()
