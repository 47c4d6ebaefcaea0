"""Exception taxonomy shared by all modules; the CLI maps these to exit codes."""


class McganError(Exception):
    """Base class for all package errors."""


class ConfigurationError(McganError):
    """A parameter or config value is outside its documented range."""


class ShapeError(McganError):
    """Tensor or grid dimensions violate an interface contract."""


class DegenerateAugmentationError(McganError):
    """An augmentation would destroy too much of the frame content."""


class CheckpointError(McganError):
    """A checkpoint archive is corrupt, truncated or version-mismatched."""


class TrainingDiverged(McganError):
    """A training step produced a non-finite loss."""

    def __init__(self, message, step=None, batch_ids=None):
        super().__init__(message)
        self.step = step
        self.batch_ids = list(batch_ids) if batch_ids is not None else []


class InputError(McganError):
    """CLI-level input validation failure (missing/mismatched files)."""
