"""Exception hierarchy shared by every module."""


class BeamsimError(Exception):
    """Base class for all library errors."""


class ParameterError(BeamsimError, ValueError):
    """A parameter lies outside its valid domain."""


class ShapeError(BeamsimError, ValueError):
    """Vector or matrix dimensions do not match."""


class DegenerateChannelError(BeamsimError):
    """The channel vector has zero norm."""


class DegenerateCoefficientError(BeamsimError):
    """A combination coefficient is too small for the linear system to be solved."""


class DegenerateAngleError(BeamsimError):
    """An angle was requested for the origin."""


class NonInvertibleError(BeamsimError):
    """A harvested power lies outside the monotone range of the efficiency model."""


class ConvergenceError(BeamsimError):
    """A bracketed root search did not converge within its iteration cap."""


class ProbeTimeoutError(BeamsimError):
    """A probe produced no feedback and time-limit handling is disabled."""


class ChannelUnreachableError(BeamsimError):
    """Every basis probe timed out, so no reference vector exists."""


class ProtocolError(BeamsimError):
    """The hardware controller received an input its current phase does not accept."""


class BasisError(BeamsimError, ValueError):
    """A probing basis failed the orthonormality check."""
