"""Sparse latent codes for a top-down generator via a gradually sparsified
spike-and-slab prior.

The package is organised bottom-up:

- ``nn``: dense MLP forward/backward arithmetic and seeded randomness
- ``prior``: two-component Gaussian scale-mixture prior (density, gradient,
  component posterior)
- ``generator``: the latent-variable model (generator network + noise) and
  its complete-data log likelihood
- ``inference``: gradient-based MAP / Langevin latent inference
- ``optim``: Adam
- ``training``: the alternating inference / learning loop with per-epoch
  sparsification of the prior
- ``data``: IDX image files and batching
- ``metrics``: PSNR, SSIM, activation statistics, probe classifiers, grids
- ``checkpoint``: binary model snapshots with bit-exact resume
- ``config`` / ``cli``: key=value run configuration and the command line
"""

__version__ = "0.1.0"
