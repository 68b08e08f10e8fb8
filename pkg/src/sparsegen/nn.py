"""Dense MLP arithmetic with exact reverse-mode gradients.

Tensors are plain ``numpy.ndarray`` objects in float64, row-major. The
networks here are small top-down stacks (a few affine layers with relu /
sigmoid / identity activations), and gradients are needed with respect to
both the parameters and the network input, so the backward pass is written
out explicitly instead of pulling in an autodiff framework.

Randomness goes through ``numpy.random.Generator`` seeded with PCG64 via
``make_rng``; identical keys give identical draw sequences. Normal variates
are produced by the Box-Muller transform on top of uniform draws so that
every draw consumes a fixed number of uniforms (two), which keeps replay
and stream-splitting semantics trivial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

ACTIVATIONS = ("relu", "sigmoid", "identity")


@dataclass(frozen=True)
class LayerSpec:
    """One affine layer followed by an elementwise activation."""

    in_dim: int
    out_dim: int
    activation: str = "identity"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ParameterError(f"layer dims must be >= 1, got {self.in_dim}x{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.activation!r}")


def make_rng(*key: int) -> np.random.Generator:
    """Deterministic PCG64 generator keyed by one or more integers.

    Streams for distinct keys are statistically independent; the same key
    always reproduces the same sequence.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def gaussian_draw(rng: np.random.Generator, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """n i.i.d. normal draws via Box-Muller (cosine branch only).

    Each draw consumes exactly two uniforms; the sine companion draw is
    discarded to keep the stream position a pure function of the draw count.
    """
    if std < 0:
        raise ParameterError(f"std must be >= 0, got {std}")
    u1 = 1.0 - rng.random(n)  # (0, 1]; log(u1) finite
    u2 = rng.random(n)
    r = np.sqrt(-2.0 * np.log(u1))
    return mean + std * (r * np.cos(2.0 * np.pi * u2))


def affine_apply(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-batched affine map: out[i] = x[i] @ w + b."""
    x, w, b = np.asarray(x, float), np.asarray(w, float), np.asarray(b, float)
    if x.ndim != 2 or w.ndim != 2 or b.ndim != 1:
        raise DimensionError(
            f"affine_apply expects 2-D input, 2-D weights, 1-D bias; got {x.ndim}/{w.ndim}/{b.ndim}-D"
        )
    if x.shape[1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise DimensionError(
            f"affine shapes do not conform: input {x.shape}, weights {w.shape}, bias {b.shape}"
        )
    return x @ w + b


def _sigmoid(v: np.ndarray) -> np.ndarray:
    # Branch on sign so the exponent is always <= 0: no overflow for any v.
    v = np.asarray(v, float)
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def activation_apply(x: np.ndarray, kind: str) -> np.ndarray:
    """Elementwise activation: relu, numerically stable sigmoid, or identity."""
    x = np.asarray(x, float)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "sigmoid":
        return _sigmoid(x)
    if kind == "identity":
        return x.copy()
    raise ParameterError(f"unknown activation {kind!r}")


def _activation_grad(pre: np.ndarray, kind: str) -> np.ndarray:
    """d activation / d pre-activation, evaluated elementwise."""
    if kind == "relu":
        return (pre > 0).astype(float)
    if kind == "sigmoid":
        s = _sigmoid(pre)
        return s * (1.0 - s)
    if kind == "identity":
        return np.ones_like(pre)
    raise ParameterError(f"unknown activation {kind!r}")


def init_mlp_params(layers: list[LayerSpec], rng: np.random.Generator) -> list[np.ndarray]:
    """Fresh parameters as a flat list [W0, b0, W1, b1, ...].

    Weights and biases are uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    """
    params = []
    for spec in layers:
        bound = 1.0 / np.sqrt(spec.in_dim)
        params.append(rng.uniform(-bound, bound, size=(spec.in_dim, spec.out_dim)))
        params.append(rng.uniform(-bound, bound, size=spec.out_dim))
    return params


def _check_params(layers: list[LayerSpec], params: list[np.ndarray]) -> None:
    if len(params) != 2 * len(layers):
        raise DimensionError(f"expected {2 * len(layers)} parameter tensors, got {len(params)}")
    for i, spec in enumerate(layers):
        w, b = params[2 * i], params[2 * i + 1]
        if w.shape != (spec.in_dim, spec.out_dim) or b.shape != (spec.out_dim,):
            raise DimensionError(
                f"layer {i} parameter shapes {w.shape}/{b.shape} do not match spec "
                f"{spec.in_dim}x{spec.out_dim}"
            )


def mlp_forward(layers: list[LayerSpec], params: list[np.ndarray], x: np.ndarray) -> np.ndarray:
    """Run the stack on a B x in_dim batch, returning the B x out_dim output."""
    y, _ = mlp_forward_cached(layers, params, x)
    return y


def mlp_forward_cached(layers, params, x):
    """Forward pass that also returns the per-layer cache ``mlp_backward`` needs.

    Callers whose upstream gradient depends on the output (any reconstruction
    loss) use this plus ``mlp_backward`` to avoid a second forward pass.
    """
    x = np.asarray(x, float)
    if x.ndim != 2 or x.shape[1] != layers[0].in_dim:
        raise DimensionError(f"input shape {x.shape} does not match first layer in_dim {layers[0].in_dim}")
    _check_params(layers, params)
    cache = []  # (layer input, pre-activation) per layer
    h = x
    for i, spec in enumerate(layers):
        pre = affine_apply(h, params[2 * i], params[2 * i + 1])
        cache.append((h, pre))
        h = activation_apply(pre, spec.activation)
    return h, cache


def mlp_backward(
    layers: list[LayerSpec],
    params: list[np.ndarray],
    cache,
    upstream_grad: np.ndarray,
    need_param_grads: bool = True,
):
    """Reverse pass over a cache produced by ``mlp_forward_cached``.

    ``upstream_grad`` is d(scalar objective)/d(network output). Returns
    ``(param_grads, input_grad)`` where ``param_grads`` is a flat list aligned
    with the parameter list ([dW0, db0, ...]) or None when
    ``need_param_grads`` is False (latent inference only needs the input
    gradient, and skipping the parameter products roughly halves the cost).
    """
    upstream_grad = np.asarray(upstream_grad, float)
    out_shape = (cache[-1][1].shape[0], layers[-1].out_dim)
    if upstream_grad.shape != out_shape:
        raise DimensionError(f"upstream grad shape {upstream_grad.shape} != output shape {out_shape}")

    param_grads = [None] * len(params) if need_param_grads else None
    delta = upstream_grad
    for i in range(len(layers) - 1, -1, -1):
        h_in, pre = cache[i]
        delta = delta * _activation_grad(pre, layers[i].activation)
        if need_param_grads:
            param_grads[2 * i] = h_in.T @ delta
            param_grads[2 * i + 1] = delta.sum(axis=0)
        delta = delta @ params[2 * i].T
    return param_grads, delta


def mlp_backprop(
    layers: list[LayerSpec],
    params: list[np.ndarray],
    x: np.ndarray,
    upstream_grad: np.ndarray,
    need_param_grads: bool = True,
):
    """One-shot forward + backward for callers that already know the upstream gradient."""
    _, cache = mlp_forward_cached(layers, params, x)
    return mlp_backward(layers, params, cache, upstream_grad, need_param_grads)
