"""Binary model snapshots with bit-exact round-tripping.

Layout, all multi-byte integers little-endian:

    magic   b"SSGN"
    u32     format version (currently 1)
    u32     config block byte length
    bytes   config block: UTF-8 "key=value" lines covering the generator
            geometry, prior state, optimizer scalars, epoch, and seed
    tensors generator parameters [W0, b0, W1, b1, ...], then the Adam first
            moments in the same order, then the second moments; each tensor
            is a u64 element count followed by that many f64 values

Tensor shapes are not stored: they are reconstructed from the config block,
and the element counts double as framing checks. Floats in the config block
are written with repr(), which round-trips float64 exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CheckpointFormatError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from .generator import GeneratorConfig
from .optim import AdamState
from .prior import PriorParams

MAGIC = b"SSGN"
VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    """Everything needed to resume training or run evaluation."""

    gen_config: GeneratorConfig
    prior: PriorParams
    params: list
    adam: AdamState
    epoch: int
    seed: int


def _config_lines(ckpt: Checkpoint) -> str:
    gc, pr, ad = ckpt.gen_config, ckpt.prior, ckpt.adam
    pairs = [
        ("latent_dim", gc.latent_dim),
        ("hidden_dims", ",".join(str(h) for h in gc.hidden_dims)),
        ("output_dim", gc.output_dim),
        ("obs_noise_sigma", repr(gc.obs_noise_sigma)),
        ("output_activation", gc.output_activation),
        ("alpha1", repr(pr.alpha1)),
        ("var1", repr(pr.var1)),
        ("var2", repr(pr.var2)),
        ("adam_t", ad.t),
        ("adam_beta1", repr(ad.beta1)),
        ("adam_beta2", repr(ad.beta2)),
        ("adam_eps", repr(ad.eps)),
        ("epoch", ckpt.epoch),
        ("seed", ckpt.seed),
    ]
    return "".join(f"{k}={v}\n" for k, v in pairs)


def _parse_config_block(text: str) -> dict:
    values = {}
    for line in text.splitlines():
        if "=" not in line:
            raise CheckpointFormatError(f"config line without '=': {line!r}")
        key, _, raw = line.partition("=")
        values[key] = raw
    expected = {
        "latent_dim", "hidden_dims", "output_dim", "obs_noise_sigma", "output_activation",
        "alpha1", "var1", "var2", "adam_t", "adam_beta1", "adam_beta2", "adam_eps",
        "epoch", "seed",
    }
    if set(values) != expected:
        missing = expected - set(values)
        extra = set(values) - expected
        raise CheckpointFormatError(f"config keys wrong: missing {sorted(missing)}, extra {sorted(extra)}")
    return values


def _expected_shapes(gen_config: GeneratorConfig):
    shapes = []
    for layer in gen_config.layers:
        shapes.append((layer.in_dim, layer.out_dim))
        shapes.append((layer.out_dim,))
    return shapes


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    config = _config_lines(ckpt).encode("utf-8")
    shapes = _expected_shapes(ckpt.gen_config)
    tensor_groups = [ckpt.params, ckpt.adam.m, ckpt.adam.v]
    for group in tensor_groups:
        if [np.asarray(t).shape for t in group] != shapes:
            raise CheckpointFormatError("tensor shapes do not match the generator geometry")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(config)))
        f.write(config)
        for group in tensor_groups:
            for tensor in group:
                flat = np.asarray(tensor, dtype="<f8").reshape(-1)
                f.write(struct.pack("<Q", flat.size))
                f.write(flat.tobytes())


def _read_exact(f, n, what):
    buf = f.read(n)
    if len(buf) != n:
        raise CheckpointTruncatedError(f"file ended inside {what} ({len(buf)}/{n} bytes)")
    return buf


def _int(values, key):
    try:
        return int(values[key])
    except ValueError:
        raise CheckpointFormatError(f"config {key}={values[key]!r} is not an integer") from None


def _float(values, key):
    try:
        return float(values[key])
    except ValueError:
        raise CheckpointFormatError(f"config {key}={values[key]!r} is not a float") from None


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != MAGIC:
            raise CheckpointFormatError(f"{path}: not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != VERSION:
            raise CheckpointVersionError(f"{path}: format version {version}, this build reads {VERSION}")
        (config_len,) = struct.unpack("<I", _read_exact(f, 4, "config length"))
        try:
            text = _read_exact(f, config_len, "config block").decode("utf-8")
        except UnicodeDecodeError as err:
            raise CheckpointFormatError(f"{path}: config block is not UTF-8: {err}") from None
        values = _parse_config_block(text)

        hidden = tuple(int(h) for h in values["hidden_dims"].split(",") if h)
        gen_config = GeneratorConfig(
            latent_dim=_int(values, "latent_dim"),
            hidden_dims=hidden,
            output_dim=_int(values, "output_dim"),
            obs_noise_sigma=_float(values, "obs_noise_sigma"),
            output_activation=values["output_activation"],
        )
        prior = PriorParams(
            alpha1=_float(values, "alpha1"),
            var1=_float(values, "var1"),
            var2=_float(values, "var2"),
        )
        shapes = _expected_shapes(gen_config)

        groups = []
        for group_name in ("params", "adam.m", "adam.v"):
            tensors = []
            for shape in shapes:
                (count,) = struct.unpack("<Q", _read_exact(f, 8, f"{group_name} tensor header"))
                expected = int(np.prod(shape))
                if count != expected:
                    raise CheckpointFormatError(
                        f"{path}: {group_name} tensor declares {count} values, geometry needs {expected}"
                    )
                raw = _read_exact(f, 8 * count, f"{group_name} tensor payload")
                tensors.append(np.frombuffer(raw, dtype="<f8").astype(float).reshape(shape))
            groups.append(tensors)
        if f.read(1):
            raise CheckpointFormatError(f"{path}: trailing bytes after declared payload")

    adam = AdamState(
        m=groups[1],
        v=groups[2],
        t=_int(values, "adam_t"),
        beta1=_float(values, "adam_beta1"),
        beta2=_float(values, "adam_beta2"),
        eps=_float(values, "adam_eps"),
    )
    return Checkpoint(
        gen_config=gen_config,
        prior=prior,
        params=groups[0],
        adam=adam,
        epoch=_int(values, "epoch"),
        seed=_int(values, "seed"),
    )
