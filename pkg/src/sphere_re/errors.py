"""Exception hierarchy shared by all modules."""


class SphereREError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SphereREError, ValueError):
    """Potential evaluated outside (-1, 1) or too close to a collision."""


class DegenerateShape(SphereREError, ValueError):
    """Two bodies coincide or are antipodal."""


class InconsistentShape(SphereREError, ValueError):
    """Arc angles and polar angles cannot be realised by one configuration."""


class ZeroNorm(SphereREError, ValueError):
    """All bodies lie in the plane orthogonal to the requested axis."""


class InvalidEigenpair(SphereREError, ValueError):
    """An eigenpair of J does not correspond to real polar angles."""


class DegenerateD(SphereREError, ValueError):
    """Meridian discriminant vanishes; the two principal axes coincide."""


class ExcludedShape(SphereREError, ValueError):
    """Shape sits on a collision or antipodal point of the meridian family."""


class OutOfBranch(SphereREError, ValueError):
    """Closed-form scalene curve has no real point for this angle."""


class NotAnRE(SphereREError):
    """The masses and shape do not form a relative equilibrium.

    ``residual`` carries the offending magnitude when one is available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RepulsiveNoLRE(NotAnRE):
    """Lagrange relative equilibria do not exist for repulsive forces."""


class NoSolution(NotAnRE):
    """Degenerate-shape root finding produced no admissible solution."""


class BlowUp(SphereREError, RuntimeError):
    """Integration approached a collision or antipodal configuration."""
