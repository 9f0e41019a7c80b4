"""Exception types raised across the package."""


class MetaSmoothError(Exception):
    """Base class for all package errors."""


class NonConvergence(MetaSmoothError):
    def __init__(self, dimension, detail=""):
        self.dimension = dimension
        msg = f"eigensolver failed on a {dimension}x{dimension} matrix"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NotPositiveSpectrum(MetaSmoothError, ValueError):
    """A matrix expected to have real positive eigenvalues does not."""


class NoInvertibleRoot(MetaSmoothError, ValueError):
    """Some eigenvalue of the quadratic coefficient admits no root inside the unit disk."""


class NotPositiveDefinite(MetaSmoothError, ValueError):
    pass


class SingularMatrix(MetaSmoothError, ValueError):
    pass


class DomainError(MetaSmoothError, ValueError):
    pass


class DegenerateSeries(MetaSmoothError, ValueError):
    pass


class NotRepresentable(MetaSmoothError, ValueError):
    """Autocovariances outside the invertible MA(1) region (|gamma1|/gamma0 >= 1/2)."""


class MissingWeight(MetaSmoothError, ValueError):
    pass


class DimensionMismatch(MetaSmoothError, ValueError):
    pass


class KindMismatch(MetaSmoothError, ValueError):
    pass


class UnknownModel(MetaSmoothError, ValueError):
    pass


class ZeroTruth(MetaSmoothError, ValueError):
    pass


class EstimationFailed(MetaSmoothError):
    """An estimator could not produce parameters.

    ``stage`` names the pipeline step that failed (e.g. ``"scalar_fit"``,
    ``"recover"``) and ``cause`` holds the underlying exception.
    """

    def __init__(self, stage, cause=None, estimator="meta"):
        self.stage = stage
        self.cause = cause
        self.estimator = estimator
        msg = f"{estimator} estimation failed at stage '{stage}'"
        if cause is not None:
            msg += f": {type(cause).__name__}: {cause}"
        super().__init__(msg)
