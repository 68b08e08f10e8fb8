"""IDX-format grayscale datasets, deterministic batching, and noise corruption.

IDX is the classic big-endian container for image/label arrays: a 4-byte
magic (two zero bytes, a type code, a dimension count), one u32 per
dimension, then the raw payload. Images use magic 0x00000803 (u8 pixels,
dims N x rows x cols) and labels 0x00000801 (u8, dims N). Pixels are scaled
to floats by exactly v / 255 on load and quantized back by round-half-up on
save, so a load/save/load cycle is byte-identical.

Paths ending in ``.gz`` are read and written through gzip transparently;
the framing underneath is unchanged.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    DatasetConsistencyError,
    DimensionError,
    IdxFormatError,
    IdxFramingError,
    ParameterError,
)
from .nn import gaussian_draw, make_rng

_IMAGES_MAGIC = 0x00000803
_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class IdxDataset:
    """Loaded image set: N x D float pixels in [0,1] plus geometry and labels."""

    images: np.ndarray
    rows: int
    cols: int
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.images.ndim != 2 or self.images.shape[1] != self.rows * self.cols:
            raise DimensionError(
                f"images shape {self.images.shape} does not match {self.rows}x{self.cols} geometry"
            )
        if self.labels is not None and len(self.labels) != len(self.images):
            raise DatasetConsistencyError(
                f"{len(self.images)} images but {len(self.labels)} labels"
            )

    def __len__(self):
        return len(self.images)


@dataclass(frozen=True)
class ImageBatch:
    """One training/evaluation batch with provenance indices into the dataset."""

    pixels: np.ndarray
    indices: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.pixels):
            raise DatasetConsistencyError(
                f"{len(self.pixels)} pixels rows but {len(self.labels)} labels"
            )

    def __len__(self):
        return len(self.pixels)


def _open_maybe_gzip(path, mode):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def _read_exact(f, n, path):
    buf = f.read(n)
    if len(buf) != n:
        raise IdxFramingError(f"{path}: expected {n} more bytes, file ended after {len(buf)}")
    return buf


def _read_idx_array(path, expected_magic, expected_dims, what):
    with _open_maybe_gzip(path, "rb") as f:
        (magic,) = struct.unpack(">I", _read_exact(f, 4, path))
        if magic != expected_magic:
            raise IdxFormatError(
                f"{path}: magic 0x{magic:08X} is not the {what} magic 0x{expected_magic:08X}"
            )
        dims = struct.unpack(f">{expected_dims}I", _read_exact(f, 4 * expected_dims, path))
        count = int(np.prod(np.asarray(dims, dtype=np.int64)))
        payload = np.frombuffer(_read_exact(f, count, path), dtype=np.uint8)
        if f.read(1):
            raise IdxFramingError(f"{path}: trailing bytes after declared {what} payload")
    return dims, payload


def load_idx(images_path, labels_path=None) -> IdxDataset:
    """Parse IDX image (and optionally label) files into a dataset.

    Pixel bytes map to floats by v / 255, so 0 -> 0.0 and 255 -> 1.0 exactly.
    """
    (n, rows, cols), pixels = _read_idx_array(images_path, _IMAGES_MAGIC, 3, "images")
    images = pixels.astype(float).reshape(n, rows * cols) / 255.0
    labels = None
    if labels_path is not None:
        (n_labels,), raw = _read_idx_array(labels_path, _LABELS_MAGIC, 1, "labels")
        if n_labels != n:
            raise DatasetConsistencyError(
                f"{images_path} has {n} images but {labels_path} has {n_labels} labels"
            )
        labels = raw.astype(np.int64)
    return IdxDataset(images=images, rows=rows, cols=cols, labels=labels)


def save_idx(dataset: IdxDataset, images_path, labels_path=None) -> None:
    """Write a dataset back out as IDX, quantizing pixels by round-half-up."""
    n = len(dataset)
    quantized = np.floor(np.clip(dataset.images, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    with _open_maybe_gzip(images_path, "wb") as f:
        f.write(struct.pack(">IIII", _IMAGES_MAGIC, n, dataset.rows, dataset.cols))
        f.write(quantized.tobytes())
    if labels_path is not None:
        if dataset.labels is None:
            raise DatasetConsistencyError("dataset has no labels to save")
        with _open_maybe_gzip(labels_path, "wb") as f:
            f.write(struct.pack(">II", _LABELS_MAGIC, n))
            f.write(np.asarray(dataset.labels, dtype=np.uint8).tobytes())


def batch_iter(dataset: IdxDataset, batch_size: int, seed: int = 0, shuffle: bool = False):
    """Yield consecutive ImageBatch objects covering the dataset once.

    With shuffle on, the order is a permutation drawn deterministically from
    the seed (an int, or a tuple of ints naming a derived stream). A final
    partial batch is dropped, so every yielded batch has exactly
    ``batch_size`` rows.
    """
    n = len(dataset)
    if not (1 <= batch_size <= n):
        raise ParameterError(f"batch_size {batch_size} not in [1, {n}]")
    if shuffle:
        key = seed if isinstance(seed, tuple) else (seed,)
        order = make_rng(*key).permutation(n)
    else:
        order = np.arange(n)
    for start in range(0, n - batch_size + 1, batch_size):
        idx = order[start : start + batch_size]
        yield ImageBatch(
            pixels=dataset.images[idx],
            indices=idx,
            labels=None if dataset.labels is None else dataset.labels[idx],
        )


def corrupt_gaussian(batch: ImageBatch, sigma_noise: float, rng: np.random.Generator) -> ImageBatch:
    """Add zero-mean Gaussian pixel noise at the given std, then clamp to [0,1].

    Clamping keeps corrupted images displayable and comparable with the
    generator's sigmoid output range.
    """
    if sigma_noise < 0:
        raise ParameterError(f"sigma_noise must be >= 0, got {sigma_noise}")
    if sigma_noise == 0:
        return batch
    noise = gaussian_draw(rng, batch.pixels.size, std=sigma_noise).reshape(batch.pixels.shape)
    return ImageBatch(
        pixels=np.clip(batch.pixels + noise, 0.0, 1.0),
        indices=batch.indices,
        labels=batch.labels,
    )
