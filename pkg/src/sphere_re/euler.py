"""Collinear (Euler) relative equilibria on a rotating meridian.

Bodies sit on the x-z meridian with extended polar angles theta_k in
[-pi, pi] (negative theta means azimuth pi).  A shape is given by the
offsets ``a = theta_2 - theta_1`` and ``x = theta_3 - theta_1``.  The
rotation axis is z; ``s = +-1`` selects which principal axis of the 2x2
meridian inertia block it is.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import acos, atan2, cos, pi, sin, sqrt

import numpy as np

from .contour import trace_zero_set
from .errors import DegenerateD, DomainError, ExcludedShape, NoSolution, NotAnRE, OutOfBranch
from .geometry import MassTriple, PAIRS, ShapeAngles
from .potential import SIN_GUARD, PotentialModel
from .roots import dedupe, grid_roots

D_TOL = 1e-12
DET_TOL = 1e-8
ENTRY_TOL = 1e-10
RESIDUAL_TOL = 1e-8

ROTATING = "rotating"
FIXED_POINT = "fixed_point"
UNDETERMINED = "undetermined"


def wrap(theta):
    """Map angles into (-pi, pi]."""
    t = np.mod(np.asarray(theta, dtype=float) + pi, 2.0 * pi) - pi
    t = np.where(t <= -pi, t + 2.0 * pi, t)
    return float(t) if t.ndim == 0 else t


@dataclass(frozen=True)
class MeridianShape:
    a: float
    x: float

    def __post_init__(self):
        if not 0.0 < self.a < pi:
            raise ValueError(f"a must lie in (0, pi), got {self.a}")
        if not -pi < self.x < pi:
            raise ValueError(f"x must lie in (-pi, pi), got {self.x}")
        for name, d in (("a", self.a), ("x", self.x), ("x - a", self.x - self.a)):
            if abs(sin(d)) < SIN_GUARD and abs(cos(d) - 1.0) < 1e-12:
                raise ExcludedShape(f"collision: {name} = {d}")

    @property
    def offsets(self) -> np.ndarray:
        return np.array([0.0, self.a, self.x])

    @property
    def y(self) -> float:
        return self.x - 0.5 * self.a

    @classmethod
    def from_ay(cls, a: float, y: float) -> "MeridianShape":
        return cls(a, wrap(y + 0.5 * a))

    @classmethod
    def from_sigmas(cls, s12: float, s23: float, s31: float, tol: float = 1e-9) -> "MeridianShape":
        """Meridian offsets of a collinear shape given by its arc angles."""
        if abs(s12 - s31 - s23) <= tol:      # body 3 between 1 and 2
            return cls(s12, s31)
        if abs(s31 - s12 - s23) <= tol:      # body 2 between 1 and 3
            return cls(s12, s31)
        # body 1 between 2 and 3, or the three spread over the great circle
        if abs(s23 - s12 - s31) <= tol or abs(s12 + s23 + s31 - 2.0 * pi) <= tol:
            return cls(s12, -s31)
        raise ValueError("arc angles are not collinear")

    def shape_angles(self) -> ShapeAngles:
        return ShapeAngles(cos(self.a), cos(self.x - self.a), cos(self.x))


@dataclass(frozen=True)
class EulerSolution:
    theta: np.ndarray
    s: int
    omega_sq: float | None
    status: str
    D: float
    det: float = float("nan")
    residual: float = float("nan")
    masses: MassTriple | None = field(default=None, repr=False, compare=False)

    @property
    def fixed_point(self) -> bool:
        return self.status == FIXED_POINT

    def cartesian(self) -> np.ndarray:
        th = np.asarray(self.theta)
        return np.column_stack((np.sin(th), np.zeros(3), np.cos(th)))


# -- basic quantities --------------------------------------------------------


def discriminant(m: MassTriple, sh: MeridianShape) -> float:
    return discriminant_theta(m, sh.offsets)


def discriminant_theta(m: MassTriple, th) -> float:
    w = m.as_array()
    total = float(w @ w)
    for i, j in PAIRS:
        total += 2.0 * w[i] * w[j] * cos(2.0 * (th[i] - th[j]))
    return total


def theta_from_shape(m: MassTriple, sh: MeridianShape, s: int) -> np.ndarray:
    """Polar angles with sum m_k sin(2 theta_k) = 0 on branch ``s``.

    theta_1 is taken in (-pi/2, pi/2]; the two branches differ by pi/2.
    """
    d = discriminant(m, sh)
    if d <= D_TOL:
        raise DegenerateD(f"D = {d:.3g}; principal axes are not distinct")
    amp = sqrt(d)
    w = m.as_array()
    off = sh.offsets
    c = s * (w[0] + w[1] * cos(-2.0 * off[1]) + w[2] * cos(-2.0 * off[2])) / amp
    sn = s * (w[1] * sin(-2.0 * off[1]) + w[2] * sin(-2.0 * off[2])) / amp
    t1 = 0.5 * atan2(sn, c)
    if t1 <= -pi / 2:
        t1 += pi
    return wrap(t1 + off)


def fg(mi: float, mj: float, theta_i: float, theta_j: float, p: PotentialModel):
    """(F_ij, G_ij) for one ordered pair on the meridian."""
    d = theta_i - theta_j
    if abs(sin(d)) < SIN_GUARD:
        raise DomainError(f"bodies collide or are antipodal (theta_ij = {d})")
    return mi * mj * sin(d) * p.kernel(d), mi * mj * sin(2.0 * d)


def _matrix(m: MassTriple, th, p: PotentialModel) -> np.ndarray:
    w = m.as_array()
    F, G = {}, {}
    for i, j in PAIRS:
        F[i, j], G[i, j] = fg(w[i], w[j], th[i], th[j], p)
    return np.array([
        [G[0, 1] - G[1, 2], G[2, 0] - G[0, 1]],
        [F[0, 1] - F[1, 2], F[2, 0] - F[0, 1]],
    ])


def _excluded(sh: MeridianShape):
    th = sh.offsets
    for i, j in PAIRS:
        if abs(sin(th[i] - th[j])) < SIN_GUARD:
            kind = "coincident" if cos(th[i] - th[j]) > 0 else "antipodal"
            raise ExcludedShape(f"bodies {i + 1} and {j + 1} are {kind}")


def det_condition(m: MassTriple, sh: MeridianShape, p: PotentialModel) -> float:
    """Determinant whose zeros are exactly the meridian shapes that rotate."""
    _excluded(sh)
    d = discriminant(m, sh)
    if d <= D_TOL:
        raise DegenerateD(f"D = {d:.3g}")
    return float(np.linalg.det(_matrix(m, sh.offsets, p)))


def eom_residuals(m: MassTriple, theta, omega_sq: float, p: PotentialModel) -> np.ndarray:
    """Per-body residual of the meridian balance between rotation and force."""
    w = m.as_array()
    th = np.asarray(theta, dtype=float)
    out = np.empty(3)
    for k in range(3):
        force = sum(w[j] * sin(th[k] - th[j]) * p.kernel(th[k] - th[j])
                    for j in range(3) if j != k)
        out[k] = 0.5 * omega_sq * w[k] * sin(2.0 * th[k]) - w[k] * force
    return out


# -- solvers -------------------------------------------------------------------


def solve_omega(m: MassTriple, sh: MeridianShape, p: PotentialModel,
                tol: float = DET_TOL) -> EulerSolution:
    """Rotation rate and branch for a shape with vanishing determinant.

    Shapes with D = 0 are passed to :func:`solve_degenerate` and its first
    solution is returned.
    """
    _excluded(sh)
    d = discriminant(m, sh)
    if d <= D_TOL:
        return solve_degenerate(m, sh, p)[0]
    mat = _matrix(m, sh.offsets, p)
    det = float(np.linalg.det(mat))
    if abs(det) > tol:
        raise NotAnRE(f"det = {det:.3g} exceeds tolerance {tol:.1g}", residual=abs(det))
    amp = sqrt(d)
    if np.all(np.abs(mat) <= ENTRY_TOL):
        th = theta_from_shape(m, sh, +1)
        return EulerSolution(th, +1, None, UNDETERMINED, d, det, 0.0, m)
    col = int(np.argmax(np.abs(mat[0])))
    if abs(mat[0, col]) <= ENTRY_TOL:
        raise NotAnRE("inertia differences vanish while force differences do not",
                      residual=float(np.max(np.abs(mat[1]))))
    ratio = mat[1, col] / mat[0, col]   # s * omega^2 / (2A)
    scale = max(1.0, float(np.max(np.abs(mat[1]))))
    if abs(ratio) <= 1e-14 * scale:
        th = theta_from_shape(m, sh, +1)
        res = float(np.max(np.abs(eom_residuals(m, th, 0.0, p))))
        return EulerSolution(th, +1, 0.0, FIXED_POINT, d, det, res, m)
    s = 1 if ratio > 0 else -1
    omega_sq = 2.0 * amp * abs(ratio)
    th = theta_from_shape(m, sh, s)
    res = float(np.max(np.abs(eom_residuals(m, th, omega_sq, p))))
    if res > max(RESIDUAL_TOL, 10.0 * tol):
        raise NotAnRE(f"equation-of-motion residual {res:.3g} too large", residual=res)
    return EulerSolution(th, s, omega_sq, ROTATING, d, det, res, m)


def solve_degenerate(m: MassTriple, sh: MeridianShape, p: PotentialModel) -> list[EulerSolution]:
    """Solve the meridian equations directly when D = 0.

    With D = 0 the inertia condition holds for every overall angle, so
    theta_1 and omega^2 come from the force balance alone: the vector of
    sin(2 theta_k) must be parallel to the force vector.  This is a
    one-dimensional root problem in theta_1.
    """
    _excluded(sh)
    d = discriminant(m, sh)
    w = m.as_array()
    off = sh.offsets
    force = -eom_residuals(m, off, 0.0, p)   # m_k * sum_j m_j sin(theta_kj) U'
    fscale = float(np.max(np.abs(force)))
    if fscale <= ENTRY_TOL:
        return [EulerSolution(wrap(off), +1, 0.0, FIXED_POINT, d, 0.0, fscale, m)]

    def lhs(t1):
        return w * np.sin(2.0 * (t1 + off))

    def h(t1):
        return float(np.sum(np.cross(lhs(t1), force)))

    roots = dedupe(grid_roots(h, 0.0, pi, n=257, include_ends=True), 1e-9)
    roots = [r for r in roots if r < pi - 1e-12]
    sols = []
    for t1 in roots:
        v = lhs(t1)
        omega_sq = 2.0 * float(v @ force) / float(v @ v)
        if omega_sq < 0.0:
            continue
        t1c = t1 - pi if t1 > pi / 2 else t1
        th = wrap(t1c + off)
        res = float(np.max(np.abs(eom_residuals(m, th, omega_sq, p))))
        if res <= RESIDUAL_TOL:
            sols.append(EulerSolution(th, 0, omega_sq, ROTATING, d, float("nan"), res, m))
    if not sols:
        raise NoSolution("no admissible overall angle for this degenerate shape")
    return sols


def degenerate_shapes(m: MassTriple) -> list[MeridianShape]:
    """Meridian shapes with D = 0 for the given masses.

    D vanishes exactly when the weighted unit vectors m_k e^{2 i theta_k}
    close into a triangle with sides m_1, m_2, m_3.
    """
    w = m.as_array()
    if not (w[2] < w[0] + w[1] and w[0] < w[1] + w[2] and w[1] < w[2] + w[0]):
        return []
    b12 = acos((w[2] ** 2 - w[0] ** 2 - w[1] ** 2) / (2 * w[0] * w[1]))
    b13 = acos((w[1] ** 2 - w[0] ** 2 - w[2] ** 2) / (2 * w[0] * w[2]))
    out = []
    # sin(2a) and sin(2x) have opposite signs
    for sgn in (1, -1):
        a = float(np.mod(sgn * b12 / 2, pi))
        x0 = float(np.mod(-sgn * b13 / 2, pi))
        for x in (x0, x0 - pi):
            try:
                sh = MeridianShape(a, x)
                _excluded(sh)
            except (ValueError, ExcludedShape):
                continue
            if discriminant(m, sh) <= 1e-10:
                out.append(sh)
    return out


# -- equal masses, cotangent potential ---------------------------------------


def equal_mass_scalene_cos2y(a: float) -> float:
    """cos(2y) on the scalene curve in -a/2 < y < a/2 for angle a."""
    ca = cos(a)
    if abs(ca) < 1e-15:
        raise OutOfBranch("a = pi/2 is a removable singularity of the formula")
    c2a = cos(2.0 * a)
    rad = c2a * c2a - 4.0 * c2a - 4.0
    if rad < 0.0:
        raise OutOfBranch(f"negative radicand {rad:.3g} at a = {a}")
    val = ca + sin(a) ** 2 / ca * (c2a + sqrt(rad))
    if abs(val) > 1.0 + 1e-12:
        raise OutOfBranch(f"cos(2y) = {val:.6g} outside [-1, 1] at a = {a}")
    return max(-1.0, min(1.0, val))


def critical_angle_ac() -> float:
    """Largest angle reached by the equal-mass scalene curve (at y = 0)."""
    r = sqrt(78.0) / 9.0
    c = -1.0 + 0.5 * (np.cbrt(1.0 + r) + np.cbrt(1.0 - r))
    return acos(c)


def isosceles_f(theta: float) -> float:
    s2 = sin(2.0 * theta)
    return 2.0 * (1.0 / abs(s2) ** 3 + 1.0 / (sin(theta) ** 2 * s2))


def equal_mass_isosceles(theta: float, p: PotentialModel | None = None,
                         mass: float = 1.0) -> EulerSolution:
    """Isosceles meridian RE with body 3 midway between bodies 1 and 2.

    ``theta`` is the common arc from the middle body to each end body.
    """
    from .potential import cotangent

    p = cotangent() if p is None else p
    if not 0.0 < theta < pi:
        raise ValueError("theta must lie in (0, pi)")
    if abs(theta - pi / 2) < 1e-12:
        raise ExcludedShape("theta = pi/2 puts the end bodies at antipodes")
    m = MassTriple.equal(mass)
    if abs(theta - 2.0 * pi / 3.0) < 1e-12:
        th = wrap(np.array([-theta, theta, 0.0]))
        res = float(np.max(np.abs(eom_residuals(m, th, 0.0, p))))
        return EulerSolution(th, 0, 0.0, FIXED_POINT, discriminant_theta(m, th), 0.0, res, m)
    if theta < 2.0 * pi / 3.0:
        middle, omega_sq = 0.0, mass * isosceles_f(theta)
    else:
        middle, omega_sq = pi / 2, -mass * isosceles_f(theta)
    th = wrap(np.array([middle - theta, middle + theta, middle]))
    d = discriminant_theta(m, th)
    res = float(np.max(np.abs(eom_residuals(m, th, omega_sq, p))))
    if res > RESIDUAL_TOL:
        raise NotAnRE(f"isosceles residual {res:.3g}", residual=res)
    # branch sign is the sign of s omega^2 / (2A) = force difference / inertia difference
    s = 0
    if d > D_TOL:
        mat = _matrix(m, th, p)
        col = int(np.argmax(np.abs(mat[0])))
        s = 1 if mat[1, col] / mat[0, col] > 0 else -1
    return EulerSolution(th, s, omega_sq, ROTATING, d, 0.0, res, m)


def general_g(m: MassTriple, theta) -> float:
    """Numerator of the cotangent determinant for arbitrary masses.

    ``det * prod_ij sin(theta_ij)|sin(theta_ij)| = m1 m2 m3 * g``.
    """
    w = m.as_array()
    th = np.asarray(theta, dtype=float)

    def sab(t):
        return sin(t) * abs(sin(t))

    total = 0.0
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        tij, tki, tjk = th[i] - th[j], th[k] - th[i], th[j] - th[k]
        total += w[k] * sab(tij) * (sab(tki) * sin(2 * tki) - sab(tjk) * sin(2 * tjk))
    return total


def det_via_g(m: MassTriple, sh: MeridianShape) -> float:
    th = sh.offsets
    prod = 1.0
    for i, j in PAIRS:
        t = th[i] - th[j]
        prod *= sin(t) * abs(sin(t))
    return m.m1 * m.m2 * m.m3 * general_g(m, th) / prod


# -- det = 0 contour --------------------------------------------------------


def det_field(m: MassTriple, p: PotentialModel):
    """Vectorised det over ``(n, 2)`` arrays of (y, a); NaN where undefined."""
    w = m.as_array()

    def f(pts):
        pts = np.atleast_2d(pts)
        y, a = pts[:, 0], pts[:, 1]
        x = y + 0.5 * a
        th = (np.zeros_like(a), a, x)
        F, G = {}, {}
        ok = np.ones(len(a), dtype=bool)
        for i, j in PAIRS:
            d = th[i] - th[j]
            sd = np.sin(d)
            # cos(d) loses sin(d) to rounding long before the guard; stay well clear
            good = np.abs(sd) >= 1e-6
            ok &= good
            kern = np.full_like(d, np.nan)
            if np.any(good):
                kern[good] = p.u_prime(np.cos(d[good]))
            F[i, j] = w[i] * w[j] * sd * kern
            G[i, j] = w[i] * w[j] * np.sin(2.0 * d)
        det = ((G[0, 1] - G[1, 2]) * (F[2, 0] - F[0, 1])
               - (G[2, 0] - G[0, 1]) * (F[0, 1] - F[1, 2]))
        return np.where(ok, det, np.nan)

    return f


@dataclass(frozen=True)
class ContourPoint:
    polyline: int
    a: float
    y: float
    x: float
    det: float
    omega_sq: float
    s: int
    kind: str      # "scalene" or "isosceles"


def _classify(sh: MeridianShape, tol: float = 1e-7) -> str:
    s = sh.shape_angles().angles()
    if min(abs(s[0] - s[1]), abs(s[1] - s[2]), abs(s[0] - s[2])) <= tol:
        return "isosceles"
    return "scalene"


def _point_record(m, p, pid, y, a, det):
    sh = MeridianShape.from_ay(a, y)
    omega_sq, s = float("nan"), 0
    try:
        sol = solve_omega(m, sh, p, tol=max(DET_TOL, 10 * abs(det)))
        if sol.omega_sq is not None:
            omega_sq, s = sol.omega_sq, sol.s
    except (NotAnRE, DomainError, ExcludedShape):
        pass
    return ContourPoint(pid, a, y, sh.x, det, omega_sq, s, _classify(sh))


def contour_scan(m: MassTriple, p: PotentialModel, n: int = 256, *, n_y: int | None = None,
                 a_margin: float = 1e-6, jobs: int = 1) -> list[ContourPoint]:
    """Trace det = 0 over y in [-pi, pi], a in (0, pi).

    Returns one record per refined crossing, grouped by polyline id.
    """
    if n < 64:
        raise ValueError("resolution must be at least 64")
    n_y = n if n_y is None else n_y
    # det vanishes identically on the lines y = 0 and y = +-pi, so the y nodes
    # sit half a cell off them; det is 2 pi periodic in y, so one extra node
    # past each end covers the seam and duplicates beyond pi are dropped below
    h = 2 * pi / n_y
    ys = -pi - 0.5 * h + h * np.arange(n_y + 2)
    a_s = np.linspace(a_margin, pi - a_margin, n + 1)
    f = det_field(m, p)
    lines = trace_zero_set(f, ys, a_s, accept_tol=DET_TOL, jobs=jobs)
    out = []
    for pid, line in enumerate(lines):
        for y, a in line:
            if not -pi + 1e-9 < y <= pi + 1e-9:
                continue
            det = float(f(np.array([[y, a]]))[0])
            try:
                out.append(_point_record(m, p, pid, float(y), float(a), det))
            except (ValueError, ExcludedShape):
                continue
    return out


def polyline_kind(points: list[ContourPoint]) -> str:
    scalene = sum(pt.kind == "scalene" for pt in points)
    return "scalene-curve" if scalene * 2 > len(points) else "isosceles-line"
