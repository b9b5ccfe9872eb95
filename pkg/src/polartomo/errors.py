"""Exception types raised across the package."""


class TomographyError(ValueError):
    """Base class for all domain errors."""


class NotHermitian(TomographyError):
    pass


class DimensionMismatch(TomographyError):
    pass


class WrongDimension(TomographyError):
    pass


class UnknownLabel(TomographyError):
    pass


class OutOfRange(TomographyError):
    pass


class InvalidState(TomographyError):
    pass


class InvalidSpec(TomographyError):
    pass


class InvalidParams(TomographyError):
    pass


class InvalidChi(TomographyError):
    pass


class NotCP(TomographyError):
    pass


class InvalidPlan(TomographyError):
    pass


class IncompletePlan(TomographyError):
    pass


class InvalidModel(TomographyError):
    pass


class SingularSystem(TomographyError):
    pass


class InsufficientData(TomographyError):
    pass


class NonConvergence(TomographyError):
    pass


class NotTracePreserving(UserWarning):
    """Issued (not raised) when a process matrix fails the trace-preservation check."""
