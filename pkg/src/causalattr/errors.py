"""Exception and warning types shared across the package."""


class CausalAttrError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(CausalAttrError):
    """An array has the wrong shape, or two arrays disagree on a dimension."""


class DomainError(CausalAttrError):
    """A value lies outside its admissible range (bad index, empty interval,
    degenerate domain, horizon before the intervention step, ...)."""


class EmptyDataError(CausalAttrError):
    """A dataset with zero rows / zero sequences was supplied."""


class NumericsError(CausalAttrError):
    """A numerical computation produced non-finite values or cannot proceed."""


class NotSymmetricError(NumericsError):
    """A matrix that must be symmetric is not, beyond tolerance."""


class NotPSDError(NumericsError):
    """A covariance matrix has a genuinely negative eigenvalue."""


class HessianSizeError(NumericsError):
    """An exact Hessian was requested above the dimension cap."""


class IllConditionedFitError(NumericsError):
    """A regression design matrix is too ill-conditioned to trust."""


class TrainingDivergedError(NumericsError):
    """Training hit a non-finite loss or parameter."""


class SerializationError(CausalAttrError):
    """A file could not be parsed into the requested object."""


class NonSmoothWarning(UserWarning):
    """Second-order quantities were requested for a network with kinks."""


class CancellationWarning(UserWarning):
    """A difference quotient is dominated by floating-point cancellation."""


class ExtrapolationWarning(UserWarning):
    """A query point lies outside the range the object was built on."""


class HighVarianceWarning(UserWarning):
    """Predictive uncertainty is large relative to the fitted effect."""
