"""Run configuration: a flat key=value namespace shared by file and flags.

Config files are UTF-8 text, one ``key=value`` per line, ``#`` starting a
comment, blank lines ignored. Command-line overrides use ``--key value``
with exactly the same key names and win over file values. Every key is
validated against the schema below; unknown keys are rejected rather than
silently ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .generator import GeneratorConfig
from .inference import InferenceConfig
from .metrics import ClassifierConfig
from .prior import PriorParams
from .training import TrainConfig


def _parse_int(raw: str) -> int:
    return int(raw, 10)


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_str(raw: str) -> str:
    return raw.strip()


def _parse_ints(raw: str) -> tuple:
    return tuple(int(part, 10) for part in raw.split(",") if part.strip())


def _parse_floats(raw: str) -> tuple:
    return tuple(float(part) for part in raw.split(",") if part.strip())


# key -> (parser, default). Defaults mirror the module-level dataclass
# defaults so a bare `train` run with just data paths is the standard recipe.
SCHEMA = {
    # data and artifact paths
    "train_images": (_parse_str, ""),
    "train_labels": (_parse_str, ""),
    "test_images": (_parse_str, ""),
    "test_labels": (_parse_str, ""),
    "out_dir": (_parse_str, "run-output"),
    "checkpoint": (_parse_str, ""),
    # generator
    "latent_dim": (_parse_int, 200),
    "hidden_dims": (_parse_ints, (400,)),
    "obs_noise_sigma": (_parse_float, 0.3),
    # prior component variances
    "var1": (_parse_float, 1.0),
    "var2": (_parse_float, 0.1),
    # latent inference
    "inference_steps": (_parse_int, 30),
    "step_size": (_parse_float, 0.1),
    "init_mode": (_parse_str, "zero"),
    # training
    "epochs": (_parse_int, 60),
    "batch_size": (_parse_int, 100),
    "lr": (_parse_float, 1e-4),
    "sparsity_initial": (_parse_float, 1.0),
    "sparsity_decay": (_parse_float, 0.033),
    "sparsity_threshold": (_parse_float, 0.01),
    "constant_sparsity": (_parse_bool, False),
    "langevin_noise": (_parse_bool, False),
    "seed": (_parse_int, 0),
    # evaluation
    "noise_sigmas": (_parse_floats, (0.3, 0.5, 0.7)),
    "activation_threshold": (_parse_float, 0.2),
    "classifier_hidden": (_parse_int, 256),
    "classifier_lr": (_parse_float, 1e-3),
    "classifier_epochs": (_parse_int, 50),
    "classify_samples": (_parse_int, 3000),
    "grid_images": (_parse_int, 64),
    "grid_cols": (_parse_int, 8),
    "traverse_samples": (_parse_int, 8),
    "traverse_latent": (_parse_int, -1),
    "traverse_range": (_parse_float, 3.0),
    "traverse_steps": (_parse_int, 8),
}


@dataclass(frozen=True)
class RunConfig:
    """Typed view of the merged settings plus which keys were set explicitly."""

    values: dict
    provided: frozenset

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def generator_config(self, output_dim: int) -> GeneratorConfig:
        return GeneratorConfig(
            latent_dim=self.latent_dim,
            hidden_dims=self.hidden_dims,
            output_dim=output_dim,
            obs_noise_sigma=self.obs_noise_sigma,
        )

    def prior_template(self) -> PriorParams:
        return PriorParams(alpha1=1.0, var1=self.var1, var2=self.var2)

    def inference_config(self) -> InferenceConfig:
        return InferenceConfig(
            steps=self.inference_steps,
            step_size=self.step_size,
            noise_enabled=False,
            init_mode=self.init_mode,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            sparsity_initial=self.sparsity_initial,
            sparsity_decay=self.sparsity_decay,
            sparsity_threshold=self.sparsity_threshold,
            seed=self.seed,
            constant_sparsity=self.constant_sparsity,
            langevin_noise=self.langevin_noise,
        )

    def classifier_config(self) -> ClassifierConfig:
        return ClassifierConfig(
            hidden=self.classifier_hidden,
            classes=10,
            lr=self.classifier_lr,
            epochs=self.classifier_epochs,
        )

    def effective_text(self) -> str:
        """The merged settings as a reloadable config file."""
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def parse_config_file(path) -> dict:
    """Raw key -> string values from a config file; schema checked by the caller."""
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = raw.strip()
    return values


def build_run_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults < file < overrides, parsing and validating every key."""
    merged = {key: default for key, (_, default) in SCHEMA.items()}
    provided = set()
    for source_name, source in (("config file", file_values), ("flag", overrides)):
        if not source:
            continue
        for key, raw in source.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown {source_name} key {key!r}")
            parser, _ = SCHEMA[key]
            try:
                merged[key] = parser(raw) if isinstance(raw, str) else raw
            except ValueError as err:
                raise ConfigError(f"bad value for {key}: {err}") from None
            provided.add(key)
    return RunConfig(values=merged, provided=frozenset(provided))
