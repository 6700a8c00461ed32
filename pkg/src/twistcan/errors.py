"""Exception types shared across the package."""


class TwistcanError(Exception):
    """Base class for all package errors."""


class InvalidInput(TwistcanError):
    """Unstable (g, n), malformed multidegree, or infeasible request."""


class AmbientMismatch(TwistcanError):
    """Operands live on different moduli spaces."""


class DegreeMismatch(TwistcanError):
    """Operation requires a specific homogeneous degree."""


class MalformedTwist(TwistcanError):
    """Twist data defined on an illegal domain (self-edge side, unbalanced)."""


class InterpolationFailure(TwistcanError):
    """Polynomial interpolation in r did not stabilize within the sample cap."""
