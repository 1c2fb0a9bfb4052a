"""Exception hierarchy shared by all wavecontrol modules."""


class WaveControlError(Exception):
    """Base class for all wavecontrol errors."""


class GeometryError(WaveControlError):
    pass


class X0InsideDomain(GeometryError):
    """The observation point x0 lies in the closure of the domain."""


class TimeTooShort(GeometryError):
    """T - 2*delta does not exceed the minimal control time 2*max|x - x0|."""


class BadDelta(GeometryError):
    """The cut-off margin delta is nonpositive or 2*delta >= T."""


class PsiNonPositive(WaveControlError):
    """The weight exponent psi is nonpositive on some grid node."""


class GridTooCoarse(WaveControlError):
    """Fewer than 4 nodes/steps requested along some axis."""


class UnknownNorm(WaveControlError):
    pass


class NonSquareSliceMismatch(WaveControlError):
    """Field shape incompatible with the requested norm."""


class OverflowRisk(WaveControlError):
    """Weight rho^-2 would exceed 1e300; lower s or lambda, or normalize."""


class SolverStagnation(WaveControlError):
    """Iterative linear solve hit its iteration cap; residual attached."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularKKT(WaveControlError):
    """Dense KKT factorization failed (singular saddle system)."""


class RatioUndefined(WaveControlError):
    """A ratio with zero denominator but nonzero numerator was requested."""


class CFLViolation(WaveControlError):
    pass


class NonFiniteState(WaveControlError):
    """Forward solve blew up; carries the first offending time level."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class GrowthViolated(WaveControlError):
    """Declared growth certificate fails at some sampled argument."""

    def __init__(self, message, r=None):
        super().__init__(message)
        self.r = r


class ConfigError(WaveControlError):
    pass


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class InvalidValue(ConfigError):
    pass
