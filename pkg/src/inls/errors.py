"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A parameter lies outside its admissible range."""


class NumericFailure(RuntimeError):
    """A numerical routine failed (non-convergence, non-finite values).

    ``partial`` optionally carries whatever was computed before the failure.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TruncationError(ValueError):
    """Initial data does not decay enough to fit the truncated radial domain."""


class UnsupportedWeight(ValueError):
    """The requested virial weight cannot supply the needed derivatives."""


class ConfigError(ValueError):
    """Invalid run configuration; ``block`` names the offending section."""

    def __init__(self, message, block=None):
        super().__init__(f"[{block}] {message}" if block else message)
        self.block = block


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage, exc):
        super().__init__(f"stage '{stage}' failed: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.original = exc
