"""Configurations of three bodies on the unit sphere.

Positions are stored as ``(3, 3)`` arrays whose rows are the unit vectors
``q_k``.  Shapes are the three arc-angle cosines ``q_i . q_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import acos, cos, pi, sqrt

import numpy as np

from .errors import DegenerateShape, InconsistentShape

DEGENERACY_TOL = 1e-12
PAIRS = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True)
class MassTriple:
    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        for name in ("m1", "m2", "m3"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")

    @property
    def M(self) -> float:
        return self.m1 + self.m2 + self.m3

    def as_array(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.m3], dtype=float)

    @classmethod
    def equal(cls, m: float = 1.0) -> "MassTriple":
        return cls(m, m, m)

    def permuted(self, perm) -> "MassTriple":
        arr = self.as_array()[list(perm)]
        return MassTriple(*arr)


@dataclass(frozen=True)
class ShapeAngles:
    """Cosines of the mutual arc angles (sigma_12, sigma_23, sigma_31)."""

    cos_s12: float
    cos_s23: float
    cos_s31: float

    @classmethod
    def from_angles(cls, s12: float, s23: float, s31: float) -> "ShapeAngles":
        return cls(cos(s12), cos(s23), cos(s31))

    @classmethod
    def equilateral(cls, sigma: float) -> "ShapeAngles":
        return cls.from_angles(sigma, sigma, sigma)

    @classmethod
    def isosceles(cls, sigma12: float, sigma: float) -> "ShapeAngles":
        """Shape with sigma_23 = sigma_31 = sigma."""
        return cls.from_angles(sigma12, sigma, sigma)

    def cosines(self) -> np.ndarray:
        return np.array([self.cos_s12, self.cos_s23, self.cos_s31])

    def angles(self) -> np.ndarray:
        return np.arccos(np.clip(self.cosines(), -1.0, 1.0))

    def pair_cos(self, i: int, j: int) -> float:
        """cos(sigma_ij) for zero-based body indices."""
        key = frozenset((i, j))
        if key == frozenset((0, 1)):
            return self.cos_s12
        if key == frozenset((1, 2)):
            return self.cos_s23
        if key == frozenset((0, 2)):
            return self.cos_s31
        raise ValueError(f"invalid pair ({i}, {j})")


@dataclass(frozen=True)
class SphericalConfig:
    """Polar and azimuthal angles of the three bodies.

    With ``meridian=True`` the polar angles live in [-pi, pi] and every
    azimuth is zero; a negative theta means the body sits on the opposite
    half of the meridian.
    """

    theta: tuple
    phi: tuple = (0.0, 0.0, 0.0)
    meridian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        object.__setattr__(self, "phi", tuple(float(p) for p in self.phi))
        if self.meridian:
            if any(p != 0.0 for p in self.phi):
                raise ValueError("meridian configurations must have phi = 0")
        elif any(np.sin(t) < -1e-15 for t in self.theta):
            raise ValueError("standard convention requires theta in [0, pi]")


def to_cartesian(c: SphericalConfig) -> np.ndarray:
    theta = np.asarray(c.theta)
    phi = np.asarray(c.phi)
    st = np.sin(theta)
    return np.column_stack((st * np.cos(phi), st * np.sin(phi), np.cos(theta)))


def shape_of(q: np.ndarray) -> ShapeAngles:
    q = np.asarray(q, dtype=float)
    dots = [float(q[i] @ q[j]) for i, j in PAIRS]
    for (i, j), d in zip(PAIRS, dots):
        if abs(d) >= 1.0 - DEGENERACY_TOL:
            kind = "coincident" if d > 0 else "antipodal"
            raise DegenerateShape(f"bodies {i + 1} and {j + 1} are {kind}")
    return ShapeAngles(*dots)


def shape_of_spherical(c: SphericalConfig) -> ShapeAngles:
    """Arc-angle cosines straight from the spherical law of cosines."""
    th, ph = c.theta, c.phi
    vals = [
        cos(th[i]) * cos(th[j]) + np.sin(th[i]) * np.sin(th[j]) * cos(ph[i] - ph[j])
        for i, j in PAIRS
    ]
    return ShapeAngles(*map(float, vals))


def phi_differences(shape: ShapeAngles, cos_theta, *, cos_tol: float = 1e-10,
                    closure_tol: float = 1e-8) -> np.ndarray:
    """Azimuth differences (phi_1-phi_2, phi_2-phi_3, phi_3-phi_1).

    The orientation with every sine negative is returned; the three
    differences then sum to -2*pi.
    """
    ct = np.asarray(cos_theta, dtype=float)
    st = np.sqrt(np.clip(1.0 - ct * ct, 0.0, None))
    if np.any(st <= 0.0):
        raise InconsistentShape("a body sits on the rotation axis")
    cs = shape.cosines()
    out = np.empty(3)
    for n, (i, j) in enumerate(PAIRS):
        c = (cs[n] - ct[i] * ct[j]) / (st[i] * st[j])
        if abs(c) > 1.0 + cos_tol:
            raise InconsistentShape(
                f"cos(phi_{i + 1} - phi_{j + 1}) = {c:.6g} lies outside [-1, 1]"
            )
        out[n] = -acos(min(1.0, max(-1.0, c)))
    closure = abs(out.sum() + 2.0 * pi)
    if closure > closure_tol:
        raise InconsistentShape(f"azimuth differences do not close (error {closure:.3g})")
    return out


def validate_shape(shape: ShapeAngles, slack: float = 1e-12) -> list[str]:
    """List the triangle inequalities the shape violates; empty means valid."""
    problems = []
    cs = shape.cosines()
    names = ("sigma_12", "sigma_23", "sigma_31")
    for name, c in zip(names, cs):
        if not -1.0 < c < 1.0:
            problems.append(f"cos({name}) = {c:.6g} must lie strictly inside (-1, 1)")
    if problems:
        return problems
    s = shape.angles()
    for n in range(3):
        others = s[(n + 1) % 3] + s[(n + 2) % 3]
        if s[n] > others + slack:
            problems.append(
                f"side inequality: {names[n]} = {s[n]:.6g} exceeds the sum of the "
                f"other two sides {others:.6g}"
            )
    if s.sum() > 2.0 * pi + slack:
        problems.append(f"perimeter bound: sum of sides {s.sum():.6g} exceeds 2*pi")
    return problems


def is_collinear(shape: ShapeAngles, tol: float = 1e-9) -> bool:
    """True when the three bodies can lie on one great circle."""
    s = shape.angles()
    if abs(s.sum() - 2.0 * pi) <= tol:
        return True
    return any(abs(s[n] - s[(n + 1) % 3] - s[(n + 2) % 3]) <= tol for n in range(3))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation matrix (QR of a Gaussian matrix)."""
    a = rng.standard_normal((3, 3))
    qm, r = np.linalg.qr(a)
    qm = qm * np.sign(np.diag(r))
    if np.linalg.det(qm) < 0:
        qm[:, 0] = -qm[:, 0]
    return qm


def random_unit_vectors(rng: np.random.Generator, n: int = 3) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def norm3(v) -> float:
    return sqrt(float(np.dot(v, v)))
