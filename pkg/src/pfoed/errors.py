"""Exception and warning types shared across the library."""


class PfoedError(Exception):
    """Base class for all library errors."""


class DegenerateDimension(PfoedError):
    """A data dimension has zero sample spread, so no bandwidth exists."""

    def __init__(self, dim: int, message: str | None = None):
        self.dim = dim
        super().__init__(message or f"dimension {dim} has zero sample standard deviation")


class DimensionMismatch(PfoedError):
    """Input vector length does not match the expected dimension."""


class DimensionCapExceeded(PfoedError):
    """Data-space dimension exceeds the supported KDE cap (4)."""


class IndexOutOfRange(PfoedError):
    """A QoI column index is missing, duplicated, or out of bounds."""


class ModelEvaluationFailed(PfoedError):
    """The forward model produced a non-finite value at a sample."""

    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"model evaluation failed at sample row {row}")


class OutOfDomain(PfoedError):
    """A parameter or sensor location lies outside its admissible domain."""


class SolverDidNotConverge(PfoedError):
    """The linear solve did not reach the required residual tolerance."""


class InfeasibleObservation(PfoedError):
    """The observed density has essentially no mass over the attainable data range."""

    def __init__(self, norm_constant: float, message: str | None = None):
        self.norm_constant = norm_constant
        super().__init__(
            message
            or f"observed density mass over the data range is {norm_constant:.3e}; "
            "normalization is numerically meaningless"
        )


class AllCentersInfeasible(PfoedError):
    """Every observation center of an expected-information-gain run was infeasible."""


class TooFewAccepted(PfoedError):
    """Not enough accepted posterior samples for the requested diagnostic."""


class EmptyDesignSpace(PfoedError):
    """The design space holds no candidates, or none could be evaluated."""


class UnsupportedModel(PfoedError):
    """The quadrature oracle does not support this model configuration."""


class ParseError(PfoedError):
    """A configuration file is not valid JSON."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ValidationError(PfoedError):
    """A configuration value is missing, unknown, or out of range."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class WideSigmaWarning(UserWarning):
    """Observation noise is large relative to the data range.

    In that regime the observed densities are nearly uniform over the data
    range and the reported gains mostly reflect low-probability regions of
    the push-forward rather than informative measurements.
    """
