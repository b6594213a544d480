"""Non-collinear (Lagrange) relative equilibria.

A shape with masses forms a Lagrange RE exactly when J has the eigenvector
``Psi_L`` whose k-th component is ``sqrt(m_k) / U'(cos sigma_ij)`` for the
pair (i, j) opposite body k.  Polar angles, azimuth differences and the
rotation rate then follow in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import cos, pi, sin, sqrt

import numpy as np

from .errors import InconsistentShape, NotAnRE, RepulsiveNoLRE
from .geometry import PAIRS, MassTriple, ShapeAngles, phi_differences
from .inertia import PsiVector, j_matrix
from .potential import PotentialModel, cotangent
from .roots import dedupe, grid_roots

LRE_TOL = 1e-9
EOM_TOL = 1e-8


@dataclass(frozen=True)
class LRESolution:
    cos_theta: np.ndarray
    phi_diff: np.ndarray     # (phi_1-phi_2, phi_2-phi_3, phi_3-phi_1)
    omega_sq: float
    lam: float
    residual: float
    masses: MassTriple = field(repr=False)
    shape: ShapeAngles = field(repr=False)
    potential: PotentialModel = field(repr=False, compare=False)
    eom_residual: float = float("nan")

    @property
    def theta(self) -> np.ndarray:
        return np.arccos(np.clip(self.cos_theta, -1.0, 1.0))

    @property
    def phi(self) -> np.ndarray:
        d12, d23, _ = self.phi_diff
        return np.array([0.0, -d12, -d12 - d23])

    def cartesian(self) -> np.ndarray:
        th, ph = self.theta, self.phi
        st = np.sin(th)
        return np.column_stack((st * np.cos(ph), st * np.sin(ph), np.cos(th)))


def _opposite_kernels(sh: ShapeAngles, p: PotentialModel) -> np.ndarray:
    """U' for the pair opposite each body: (U'_23, U'_31, U'_12)."""
    return np.array([p.u_prime(sh.cos_s23), p.u_prime(sh.cos_s31), p.u_prime(sh.cos_s12)])


def psi_L(m: MassTriple, sh: ShapeAngles, p: PotentialModel) -> PsiVector:
    """Candidate J-eigenvector; the eigenvalue slot holds its Rayleigh quotient."""
    kern = _opposite_kernels(sh, p)
    v = np.sqrt(m.as_array()) / kern
    v = v / np.linalg.norm(v)
    lam = float(v @ j_matrix(m, sh) @ v)
    return PsiVector(v, lam)


def lre_residual(m: MassTriple, sh: ShapeAngles, p: PotentialModel) -> float:
    psi = psi_L(m, sh, p)
    jm = j_matrix(m, sh)
    return float(np.linalg.norm(jm @ psi.components - psi.eigenvalue * psi.components))


def omega_sq_formula(m: MassTriple, sh: ShapeAngles, p: PotentialModel) -> float:
    kern = _opposite_kernels(sh, p)
    return float(np.prod(kern) * np.sum(m.as_array() / kern**2))


def spherical_eom_residuals(m: MassTriple, theta, phi, omega_sq: float,
                            p: PotentialModel) -> np.ndarray:
    """Residuals of the polar balance (3 values) and the azimuthal chain (2)."""
    w = m.as_array()
    th = np.asarray(theta, dtype=float)
    ph = np.asarray(phi, dtype=float)
    st, ct = np.sin(th), np.cos(th)

    def kern(i, j):
        c = ct[i] * ct[j] + st[i] * st[j] * cos(ph[i] - ph[j])
        return p.u_prime(c)

    polar = np.empty(3)
    for i in range(3):
        rhs = sum(w[i] * w[j] * kern(i, j) * (st[i] * ct[j] - ct[i] * st[j] * cos(ph[i] - ph[j]))
                  for j in range(3) if j != i)
        polar[i] = omega_sq * w[i] * st[i] * ct[i] - rhs
    chain = [w[i] * w[j] * kern(i, j) * st[i] * st[j] * sin(ph[i] - ph[j]) for i, j in PAIRS]
    return np.concatenate((polar, [chain[0] - chain[1], chain[1] - chain[2]]))


def solve_lre(m: MassTriple, sh: ShapeAngles, p: PotentialModel,
              tol: float = LRE_TOL) -> LRESolution:
    """Canonical Lagrange RE (cos theta_k > 0, sin(phi_i - phi_j) < 0)."""
    if not p.attractive:
        raise RepulsiveNoLRE("no Lagrange relative equilibria exist for a repulsive force")
    psi = psi_L(m, sh, p)
    jm = j_matrix(m, sh)
    res = float(np.linalg.norm(jm @ psi.components - psi.eigenvalue * psi.components))
    if res > tol:
        raise NotAnRE(f"J Psi_L - lambda Psi_L has norm {res:.3g} > {tol:.1g}", residual=res)
    lam = psi.eigenvalue
    gap = m.M - lam
    if gap <= 1e-12 * m.M:
        raise NotAnRE(f"M - lambda = {gap:.3g} leaves no real polar angles", residual=-gap)
    ct = sqrt(gap) * psi.components / np.sqrt(m.as_array())
    if np.any(ct >= 1.0):
        raise NotAnRE(f"cos(theta) = {ct} reaches the pole", residual=float(np.max(ct) - 1.0))
    omega_sq = omega_sq_formula(m, sh, p)
    if not omega_sq > 0.0:
        raise NotAnRE(f"omega^2 = {omega_sq:.3g} is not positive", residual=abs(omega_sq))
    try:
        dphi = phi_differences(sh, ct, cos_tol=max(1e-10, 10 * tol),
                               closure_tol=max(1e-8, 100 * tol))
    except InconsistentShape as exc:
        raise NotAnRE(f"azimuths cannot be realised: {exc}", residual=res) from exc
    sol = LRESolution(ct, dphi, omega_sq, lam, res, m, sh, p)
    eom = float(np.max(np.abs(spherical_eom_residuals(m, sol.theta, sol.phi, omega_sq, p))))
    return replace(sol, eom_residual=eom)


def variants(sol: LRESolution) -> list[LRESolution]:
    """The four sign variants: hemisphere reflection x orientation flip."""
    out = []
    for reflect in (False, True):
        for flip in (False, True):
            ct = -sol.cos_theta if reflect else sol.cos_theta
            dphi = -sol.phi_diff if flip else sol.phi_diff
            v = replace(sol, cos_theta=ct, phi_diff=dphi)
            eom = spherical_eom_residuals(v.masses, v.theta, v.phi, v.omega_sq, v.potential)
            out.append(replace(v, eom_residual=float(np.max(np.abs(eom)))))
    return out


# -- equal masses, cotangent -------------------------------------------------


def equal_mass_rhs(sh: ShapeAngles) -> np.ndarray:
    """The three cyclic values that must all equal 2 - lambda/m."""
    s = sh.angles()
    arc = {(0, 1): s[0], (1, 2): s[1], (2, 0): s[2]}
    out = []
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        sij, sjk, ski = arc[i, j], arc[j, k], arc[k, i]
        out.append((cos(sjk) * sin(ski) ** 3 + sin(sjk) ** 3 * cos(ski)) / sin(sij) ** 3)
    return np.array(out)


def equal_mass_lre_condition(sh: ShapeAngles) -> np.ndarray:
    """Pairwise differences of the cyclic values; all vanish on solutions."""
    rhs = equal_mass_rhs(sh)
    return np.array([rhs[0] - rhs[1], rhs[1] - rhs[2], rhs[2] - rhs[0]])


def isosceles_q(sigma: float, sigma12: float) -> float:
    """Isosceles reduction of the equal-mass condition (sigma_23 = sigma_31 = sigma)."""
    return (cos(sigma) * (2.0 * sin(sigma) ** 6 - sin(sigma12) ** 6)
            - sin(sigma) ** 3 * cos(sigma12) * sin(sigma12) ** 3)


def isosceles_solve(sigma12: float, n: int = 2048, xtol: float = 1e-12) -> list[float]:
    """All roots sigma of q(., sigma12) with sigma12 < 2 sigma < 2 pi - sigma12."""
    if not 0.0 < sigma12 < pi:
        raise ValueError("sigma12 must lie in (0, pi)")
    lo, hi = 0.5 * sigma12, pi - 0.5 * sigma12
    roots = grid_roots(lambda s: isosceles_q(s, sigma12), lo, hi, n=n, xtol=xtol)
    # the equilateral root is exact; it may also be a double root without a sign change
    if lo + 1e-12 < sigma12 < hi - 1e-12:
        roots = [r for r in roots if abs(r - sigma12) > 1e-9] + [sigma12]
    return dedupe(roots, 1e-9)


def isosceles_lre(sigma12: float, sigma: float, mass: float = 1.0,
                  tol: float = LRE_TOL) -> LRESolution:
    m = MassTriple.equal(mass)
    return solve_lre(m, ShapeAngles.isosceles(sigma12, sigma), cotangent(), tol=tol)


def right_angle_points(n: int = 4096, xtol: float = 1e-13) -> list[tuple[float, float]]:
    """Isosceles Lagrange shapes whose angle at body 3 is a right angle.

    On the sphere the angle at body 3 is pi/2 iff cos sigma_12 equals
    cos sigma_23 cos sigma_31 = cos^2 sigma, so sigma_12 = arccos(cos^2 sigma)
    and only sigma remains unknown.
    """
    def s12_of(s):
        return float(np.arccos(cos(s) ** 2))

    def h(s):
        return isosceles_q(s, s12_of(s))

    out = []
    for s in grid_roots(h, 0.0, pi, n=n, xtol=xtol):
        s12 = s12_of(s)
        if 0.0 < s12 < pi and s12 < 2 * s < 2 * pi - s12:
            out.append((s12, s))
    return out


@dataclass(frozen=True)
class ScaleneScan:
    infimum: float
    at: tuple          # (sigma12, sigma23, sigma31) of the smallest residual
    samples: int
    on_margin: bool    # the minimiser touches the isosceles/degenerate cut-off


def _equal_mass_residuals(s: np.ndarray) -> np.ndarray:
    """lre_residual for unit masses and the cotangent potential, rows of (s12, s23, s31)."""
    c = np.cos(s)
    # Psi_L component k is sin^3 of the arc opposite body k: (s23, s31, s12)
    psi = np.sin(s[:, [1, 2, 0]]) ** 3
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    c12, c23, c31 = c[:, 0], c[:, 1], c[:, 2]
    jp = np.column_stack((
        2 * psi[:, 0] - c12 * psi[:, 1] - c31 * psi[:, 2],
        -c12 * psi[:, 0] + 2 * psi[:, 1] - c23 * psi[:, 2],
        -c31 * psi[:, 0] - c23 * psi[:, 1] + 2 * psi[:, 2],
    ))
    lam = np.sum(psi * jp, axis=1, keepdims=True)
    return np.linalg.norm(jp - lam * psi, axis=1)


def scalene_scan(n: int = 64, margin: float = 0.02) -> ScaleneScan:
    """Smallest equal-mass Lagrange residual over scalene triangles.

    Triangles with two sides closer than ``margin``, or within ``margin`` of
    degenerating, are skipped.  The result is evidence only: a positive
    infimum reached on the cut-off says nothing about exact non-existence.
    """
    g = (np.arange(n) + 0.5) * pi / n
    s = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    slack = np.minimum.reduce([b + c - a, a + c - b, a + b - c, 2 * pi - (a + b + c)])
    gap = np.minimum.reduce([abs(a - b), abs(b - c), abs(c - a)])
    s = s[(slack > margin) & (gap > margin)]
    res = _equal_mass_residuals(s)
    k = int(np.argmin(res))
    a, b, c = s[k]
    near = min(b + c - a, a + c - b, a + b - c, 2 * pi - (a + b + c),
               abs(a - b), abs(b - c), abs(c - a)) < margin + 2 * pi / n
    return ScaleneScan(float(res[k]), (float(a), float(b), float(c)), len(s), bool(near))
