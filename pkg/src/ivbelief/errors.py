"""Exception hierarchy shared by all modules."""


class IVBeliefError(Exception):
    """Base class for every error raised by this package."""


class DataError(IVBeliefError):
    """Input data cannot support the reduced-form fit."""


class SingularDesignError(DataError):
    """The control matrix does not have full column rank."""

    def __init__(self, msg="singular design"):
        super().__init__(msg)


class IrrelevantInstrumentError(DataError):
    """The reduced-form covariance between treatment and instrument vanishes."""

    def __init__(self, msg="irrelevant instrument"):
        super().__init__(msg)


class DegenerateCovarianceError(DataError):
    """The residual covariance matrix is not positive definite."""

    def __init__(self, msg="degenerate residual covariance"):
        super().__init__(msg)


class InconsistentRestrictionError(IVBeliefError, ValueError):
    """An elicited restriction contradicts the data or itself."""


class OutsideIdentifiedSetError(IVBeliefError, ValueError):
    """A structural point lies outside the identified set."""

    def __init__(self, msg="outside identified set"):
        super().__init__(msg)


class InvalidCorrelationError(IVBeliefError, ValueError):
    """Correlation triple does not form a positive definite matrix."""

    def __init__(self, msg="invalid correlation triple"):
        super().__init__(msg)


class InfeasibleBinaryError(IVBeliefError, ValueError):
    """Mis-classification rates or prevalence are mutually infeasible."""


class NumericalError(IVBeliefError, RuntimeError):
    """A sampler or solver could not complete within its budget."""


class InsufficientSampleError(NumericalError):
    """Too few usable posterior draws remain to summarise."""

    def __init__(self, msg="insufficient posterior sample"):
        super().__init__(msg)


class EmptyIdentifiedSet(IVBeliefError):
    """The restricted identified set is empty.

    This is a signal rather than a fault: callers that aggregate over
    posterior draws catch it and record the draw as empty.
    """

    def __init__(self, msg="empty identified set"):
        super().__init__(msg)


class DegenerateConfigurationError(IVBeliefError, ValueError):
    """A structural configuration implies a singular covariance."""

    def __init__(self, msg="degenerate structural configuration"):
        super().__init__(msg)
