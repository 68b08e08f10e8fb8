"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes, so every error a subcommand can
hit has a distinct class here rather than a bare ValueError.
"""


class DimensionError(ValueError):
    """Tensor shapes do not conform for the requested operation."""


class ParameterError(ValueError):
    """A numeric parameter violates its documented domain."""


class ConfigError(ValueError):
    """Bad configuration: unknown key, unparsable value, or inconsistency."""


class InferenceDivergenceError(RuntimeError):
    """Latent inference produced a non-finite gradient or runaway values."""

    def __init__(self, message, sample_index=None):
        super().__init__(message)
        self.sample_index = sample_index


class DataError(ValueError):
    """Base class for dataset ingestion failures."""


class IdxFormatError(DataError):
    """IDX file has the wrong magic number for the requested content."""


class IdxFramingError(DataError):
    """IDX payload is truncated or disagrees with its declared dimensions."""


class DatasetConsistencyError(DataError):
    """Image and label files disagree (e.g. different record counts)."""


class TrainingDataError(ValueError):
    """Training data is degenerate for the requested task."""


class CheckpointError(RuntimeError):
    """Base class for checkpoint load failures."""


class CheckpointFormatError(CheckpointError):
    """Checkpoint magic or framing is wrong; not one of our files."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version is not supported by this build."""


class CheckpointTruncatedError(CheckpointError):
    """Checkpoint file ends before all declared payload was read."""
