#!/usr/bin/env python3
"""Build the committed IDX datasets under data/ from their npm sources.

The images come from two small npm data packages:

- ``mnist@1.1.0``: 10,000 hand-written digits (784 floats per image,
  byte / 255 rounded to 3 decimals, recoverable to the original byte
  exactly via round(v * 255)), stored as src/digits/<class>.json.
- ``fashion-mnist@1.1.0``: 70,002 clothing images stored as raw byte
  rows in src/clothes/<class>.json; we keep the first 500 per class.

Both are shuffled with a fixed seed and split, then written as gzipped
big-endian IDX through the package's own saver, so the committed files
exercise the exact writer the test suite checks. This script only needs
to run when regenerating data/ from scratch; network access (npm) is
required only if the extracted JSON is not already present.

Usage: python3 scripts/build_datasets.py [--work /tmp/dataset-src] [--out data]
"""

import argparse
import json
import pathlib
import subprocess
import sys
import tarfile

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from sparsegen.data import IdxDataset, save_idx  # noqa: E402
from sparsegen.nn import make_rng  # noqa: E402

SHUFFLE_SEED = 2026


def fetch_npm_package(name, version, work: pathlib.Path) -> pathlib.Path:
    """npm-pack the package into work/ and extract it; return the package dir."""
    target = work / f"{name}-{version}"
    if target.is_dir():
        return target
    work.mkdir(parents=True, exist_ok=True)
    subprocess.run(
        ["npm", "pack", f"{name}@{version}", "--pack-destination", str(work)],
        check=True,
        capture_output=True,
    )
    tarball = work / f"{name}-{version}.tgz"
    with tarfile.open(tarball) as tf:
        tf.extractall(target)
    return target


def load_mnist_json(pkg_dir: pathlib.Path):
    """Digits as (images uint8 N x 784, labels uint8 N); floats -> bytes exactly."""
    images, labels = [], []
    for digit in range(10):
        flat = json.loads((pkg_dir / "package" / "src" / "digits" / f"{digit}.json").read_text())
        arr = np.asarray(flat["data"], dtype=float).reshape(-1, 784)
        images.append(np.floor(arr * 255.0 + 0.5).astype(np.uint8))
        labels.append(np.full(len(arr), digit, dtype=np.uint8))
    return np.concatenate(images), np.concatenate(labels)


def load_fashion_json(pkg_dir: pathlib.Path, per_class: int):
    images, labels = [], []
    for cls in range(10):
        rows = json.loads((pkg_dir / "package" / "src" / "clothes" / f"{cls}.json").read_text())
        arr = np.asarray(rows["data"][:per_class], dtype=np.uint8)
        images.append(arr)
        labels.append(np.full(len(arr), cls, dtype=np.uint8))
    return np.concatenate(images), np.concatenate(labels)


def split_and_save(images, labels, n_train, out: pathlib.Path, stem: str, seed_tag: int):
    perm = make_rng(SHUFFLE_SEED, seed_tag).permutation(len(images))
    images, labels = images[perm], labels[perm]
    scaled = images.astype(float) / 255.0
    for part, sl in (("train", slice(0, n_train)), ("test", slice(n_train, None))):
        ds = IdxDataset(images=scaled[sl], rows=28, cols=28, labels=labels[sl])
        save_idx(ds, out / f"{stem}-{part}-images.idx.gz", out / f"{stem}-{part}-labels.idx.gz")
        counts = np.bincount(labels[sl], minlength=10)
        print(f"{stem}-{part}: {len(ds)} images, per-class {counts.tolist()}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", type=pathlib.Path, default=pathlib.Path("/tmp/dataset-src"))
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parents[1] / "data")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    mnist_dir = fetch_npm_package("mnist", "1.1.0", args.work)
    images, labels = load_mnist_json(mnist_dir)
    assert len(images) == 10_000, len(images)
    split_and_save(images, labels, 8_000, args.out, "mnist", seed_tag=0)

    fashion_dir = fetch_npm_package("fashion-mnist", "1.1.0", args.work)
    images, labels = load_fashion_json(fashion_dir, per_class=500)
    assert len(images) == 5_000, len(images)
    split_and_save(images, labels, 4_000, args.out, "fashion", seed_tag=1)


if __name__ == "__main__":
    main()
