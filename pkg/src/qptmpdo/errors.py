"""Exception hierarchy shared by every subsystem."""


class QptMpdoError(Exception):
    """Base class for all package errors."""


class ParameterError(QptMpdoError, ValueError):
    """An argument is outside its admissible range."""


class UnphysicalParametersError(ParameterError):
    """Physical constants violate a hard bound (e.g. T2 > 2 T1)."""


class ShapeError(QptMpdoError, ValueError):
    """Tensor extents do not line up."""


class NumericInputError(QptMpdoError, ValueError):
    """Input contains NaN or infinite entries."""


class RepresentationError(QptMpdoError, ValueError):
    """A matrix violates a structural property (Hermiticity, unitarity...)."""


class NonCPError(RepresentationError):
    """A Choi matrix has eigenvalues below the admissible floor."""


class ConfigurationError(QptMpdoError):
    """Noise policy or CLI configuration is incomplete or inconsistent."""


class ValidationError(QptMpdoError):
    """A data file parsed but its contents failed validation."""


class SchemaError(ValidationError):
    """A data file does not match the expected schema."""


class ResourceError(QptMpdoError):
    """Requested dense object is too large for the configured guard."""


class RoutingError(QptMpdoError):
    """A two-qubit operation was requested on non-adjacent sites."""


class OptimizationDivergedError(QptMpdoError, FloatingPointError):
    """The variational loss became NaN."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"loss is NaN at epoch {epoch}")
