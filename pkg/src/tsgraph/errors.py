"""Exception types shared across the pipeline."""


class FormatError(ValueError):
    """A binary or JSON container does not match its documented layout."""


class DataError(ValueError):
    """Loaded data violates a value-level invariant (NaN/Inf, bad label, ...)."""


class InsufficientDataError(ValueError):
    """A window/sample length exceeds the available series length."""


class InfeasibleBandError(ValueError):
    """A band constraint excludes the terminal cell of the alignment grid."""


class ShapeError(ValueError):
    """Tensor/graph dimensions are inconsistent."""


class ConfigError(ValueError):
    """A run configuration is invalid or inconsistent."""


class StateError(RuntimeError):
    """An operation was called in the wrong order (e.g. backward before forward)."""
