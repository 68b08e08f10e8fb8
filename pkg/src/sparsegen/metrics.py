"""Evaluation metrics and probes: PSNR, SSIM, sparsity statistics, per-class
activation maps, small softmax classifiers, and image-grid export.

Images are float arrays in [0,1] with peak value 1.0 throughout. The SSIM
here is the standard single-scale formulation: an 11x11 Gaussian window
(sigma 1.5) slides over both images, local means/variances/covariance feed
the usual two-term ratio with C1 = (0.01)^2 and C2 = (0.03)^2, and the
score is the mean over all fully valid window positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, TrainingDataError
from .nn import LayerSpec, init_mlp_params, mlp_backward, mlp_forward, mlp_forward_cached
from .optim import adam_step, init_adam

DEFAULT_ACTIVATION_THRESHOLD = 0.2

# Value reported when two images are bit-identical and the log is undefined.
PSNR_CAP_DB = 99.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2


def psnr_from_mse(mse: float) -> float:
    """Peak signal-to-noise ratio in dB for peak 1.0; capped at exact zero error."""
    if mse < 0:
        raise ParameterError(f"mse must be >= 0, got {mse}")
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(1.0 / mse))


def psnr(x: np.ndarray, y: np.ndarray) -> float:
    """PSNR between two same-shape images in [0,1]."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != y.shape:
        raise DimensionError(f"image shapes differ: {x.shape} vs {y.shape}")
    return psnr_from_mse(float(np.mean((x - y) ** 2)))


def _ssim_window() -> np.ndarray:
    half = _SSIM_WINDOW // 2
    coords = np.arange(_SSIM_WINDOW) - half
    g = np.exp(-(coords**2) / (2.0 * _SSIM_SIGMA**2))
    window = np.outer(g, g)
    return window / window.sum()


def ssim(x: np.ndarray, y: np.ndarray) -> float:
    """Mean structural similarity over all valid 11x11 window positions."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != y.shape:
        raise DimensionError(f"image shapes differ: {x.shape} vs {y.shape}")
    if x.ndim != 2:
        raise DimensionError(f"ssim expects 2-D grayscale images, got {x.ndim}-D")
    if min(x.shape) < _SSIM_WINDOW:
        raise ParameterError(f"image {x.shape} smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} window")

    w = _ssim_window()
    win = (_SSIM_WINDOW, _SSIM_WINDOW)
    xs = np.lib.stride_tricks.sliding_window_view(x, win)
    ys = np.lib.stride_tricks.sliding_window_view(y, win)

    mu_x = np.tensordot(xs, w, axes=2)
    mu_y = np.tensordot(ys, w, axes=2)
    var_x = np.tensordot(xs * xs, w, axes=2) - mu_x**2
    var_y = np.tensordot(ys * ys, w, axes=2) - mu_y**2
    cov = np.tensordot(xs * ys, w, axes=2) - mu_x * mu_y

    num = (2.0 * mu_x * mu_y + _SSIM_C1) * (2.0 * cov + _SSIM_C2)
    den = (mu_x**2 + mu_y**2 + _SSIM_C1) * (var_x + var_y + _SSIM_C2)
    return float(np.mean(num / den))


def active_fraction(latents, threshold: float = DEFAULT_ACTIVATION_THRESHOLD) -> float:
    """Mean fraction of coordinates strictly exceeding the threshold in magnitude.

    A coordinate sitting exactly on the threshold does not count as active.
    """
    if threshold < 0:
        raise ParameterError(f"threshold must be >= 0, got {threshold}")
    values = np.asarray(getattr(latents, "values", latents), float)
    return float(np.mean(np.abs(values) > threshold))


@dataclass(frozen=True)
class ActivationMap:
    """Per-class mean binarized activation pattern; one row per class present."""

    classes: np.ndarray
    rows: np.ndarray
    threshold: float

    def row_for(self, cls) -> np.ndarray:
        hits = np.nonzero(self.classes == cls)[0]
        if len(hits) == 0:
            raise KeyError(f"class {cls} absent from this map")
        return self.rows[hits[0]]


def class_activation_map(latents, labels, threshold: float = DEFAULT_ACTIVATION_THRESHOLD) -> ActivationMap:
    """Binarize activations by |z| > threshold, then average per class."""
    values = np.asarray(getattr(latents, "values", latents), float)
    labels = np.asarray(labels)
    if len(labels) != len(values):
        raise DimensionError(f"{len(values)} latent rows but {len(labels)} labels")
    binary = (np.abs(values) > threshold).astype(float)
    classes = np.unique(labels)
    rows = np.stack([binary[labels == c].mean(axis=0) for c in classes])
    return ActivationMap(classes=classes, rows=rows, threshold=threshold)


@dataclass(frozen=True)
class ClassifierConfig:
    """One-hidden-layer softmax probe settings."""

    hidden: int = 256
    classes: int = 10
    lr: float = 1e-3
    epochs: int = 50
    batch_size: int = 100

    def __post_init__(self):
        if self.hidden < 1 or self.classes < 2 or self.batch_size < 1:
            raise ParameterError("hidden >= 1, classes >= 2, batch_size >= 1 required")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr <= 0:
            raise ParameterError(f"lr must be positive, got {self.lr}")


@dataclass(frozen=True)
class ClassifierParams:
    """Trained probe: layer stack plus its weights."""

    layers: list
    params: list


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def train_latent_classifier(
    inputs: np.ndarray,
    labels,
    cfg: ClassifierConfig,
    rng: np.random.Generator,
) -> ClassifierParams:
    """Cross-entropy training of inputs -> hidden relu -> class logits with Adam.

    Works for any feature vectors; "latent" names its main use. Training is
    deterministic given the generator: initialization and every epoch's
    shuffle consume from ``rng`` in a fixed order.
    """
    inputs = np.asarray(inputs, float)
    labels = np.asarray(labels, dtype=int)
    if inputs.ndim != 2 or len(inputs) != len(labels):
        raise DimensionError(f"inputs {inputs.shape} and labels {labels.shape} do not align")
    if len(np.unique(labels)) < 2:
        raise TrainingDataError("need at least two classes to train a classifier")
    if labels.min() < 0 or labels.max() >= cfg.classes:
        raise TrainingDataError(
            f"labels outside [0, {cfg.classes}): {labels.min()}..{labels.max()}"
        )

    layers = [
        LayerSpec(inputs.shape[1], cfg.hidden, "relu"),
        LayerSpec(cfg.hidden, cfg.classes, "identity"),
    ]
    params = init_mlp_params(layers, rng)
    adam = init_adam(params)
    n = len(inputs)
    onehot = np.eye(cfg.classes)[labels]

    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = inputs[idx], onehot[idx]
            logits, cache = mlp_forward_cached(layers, params, xb)
            upstream = (_softmax(logits) - yb) / len(idx)
            grads, _ = mlp_backward(layers, params, cache, upstream)
            params, adam = adam_step(params, grads, adam, lr=cfg.lr)
    return ClassifierParams(layers=layers, params=params)


def eval_classifier(classifier: ClassifierParams, inputs: np.ndarray, labels) -> float:
    """Accuracy under argmax prediction; ties resolve to the lowest class index."""
    inputs = np.asarray(inputs, float)
    labels = np.asarray(labels, dtype=int)
    if len(inputs) != len(labels):
        raise DimensionError(f"{len(inputs)} inputs but {len(labels)} labels")
    logits = mlp_forward(classifier.layers, classifier.params, inputs)
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def export_image_grid(images: np.ndarray, rows: int, cols: int, path) -> None:
    """Tile square images into one PGM (P5) file with 1-px black separators.

    Pixel floats quantize by floor(v * 255 + 0.5); missing cells stay black.
    """
    images = np.atleast_2d(np.asarray(images, float))
    count, d = images.shape
    if rows * cols < count:
        raise ParameterError(f"grid {rows}x{cols} cannot hold {count} images")
    side = int(round(np.sqrt(d)))
    if side * side != d:
        raise DimensionError(f"images with {d} pixels are not square")

    height = rows * side + (rows - 1)
    width = cols * side + (cols - 1)
    canvas = np.zeros((height, width), dtype=np.uint8)
    quantized = np.floor(np.clip(images, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    for i in range(count):
        r, c = divmod(i, cols)
        top, left = r * (side + 1), c * (side + 1)
        canvas[top : top + side, left : left + side] = quantized[i].reshape(side, side)

    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(canvas.tobytes())


def load_pgm(path) -> np.ndarray:
    """Read back a P5 grid as floats in [0,1] (testing and demo helper)."""
    with open(path, "rb") as f:
        if f.readline().strip() != b"P5":
            raise ParameterError(f"{path}: not a P5 PGM file")
        width, height = map(int, f.readline().split())
        maxval = int(f.readline())
        data = np.frombuffer(f.read(width * height), dtype=np.uint8)
    return data.reshape(height, width).astype(float) / maxval


def export_latents_csv(path, latents, labels) -> None:
    """One row per sample: label first, then the latent coordinates."""
    values = np.asarray(getattr(latents, "values", latents), float)
    labels = np.asarray(labels).reshape(-1, 1)
    if len(labels) != len(values):
        raise DimensionError(f"{len(values)} latent rows but {len(labels)} labels")
    header = "label," + ",".join(f"z{k}" for k in range(values.shape[1]))
    np.savetxt(path, np.hstack([labels.astype(float), values]), delimiter=",",
               header=header, comments="", fmt="%.17g")
