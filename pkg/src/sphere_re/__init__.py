"""Relative equilibria of three point masses on the unit sphere."""

from .errors import (
    BlowUp, DegenerateD, DegenerateShape, DomainError, ExcludedShape, InconsistentShape,
    InvalidEigenpair, NoSolution, NotAnRE, OutOfBranch, RepulsiveNoLRE, SphereREError, ZeroNorm,
)
from .geometry import MassTriple, ShapeAngles, SphericalConfig, shape_of, to_cartesian
from .potential import PotentialModel, cotangent, negate
from .inertia import eigen_sym3, inertia_tensor, j_matrix
from .euler import EulerSolution, MeridianShape, contour_scan, solve_omega
from .lagrange import LRESolution, isosceles_solve, solve_lre
from .dynamics import PhaseState, integrate, re_initial_state

__version__ = "0.1.0"
