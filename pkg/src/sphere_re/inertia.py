"""Inertia tensor I, its shape-space twin J, and the axis <-> Psi map.

J has entries ``M delta_ij - sqrt(m_i m_j) cos(sigma_ij)`` and shares its
spectrum with I.  An eigenvector of I used as rotation axis corresponds to
the J-eigenvector ``Psi`` built from ``sqrt(m_k) cos(theta_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import acos, cos, pi, sqrt

import numpy as np

from .errors import InvalidEigenpair, ZeroNorm
from .geometry import MassTriple, ShapeAngles

DEGENERACY_REL = 1e-9
_EYE = np.eye(3)
SPREAD_LIMIT = 1e12


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with eigenvectors as the columns of ``vectors``."""

    values: np.ndarray
    vectors: np.ndarray
    degenerate: tuple  # flags for the pairs (0,1), (1,2), (0,2)

    def vector(self, k: int) -> np.ndarray:
        return self.vectors[:, k]


@dataclass(frozen=True)
class PsiVector:
    components: np.ndarray
    eigenvalue: float


def inertia_tensor(q: np.ndarray, m: MassTriple) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    w = m.as_array()
    return m.M * np.eye(3) - (q.T * w) @ q


def j_matrix(m: MassTriple, shape: ShapeAngles) -> np.ndarray:
    r = np.sqrt(m.as_array())
    c12, c23, c31 = shape.cos_s12, shape.cos_s23, shape.cos_s31
    return np.array([
        [m.m2 + m.m3, -r[0] * r[1] * c12, -r[0] * r[2] * c31],
        [-r[0] * r[1] * c12, m.m3 + m.m1, -r[1] * r[2] * c23],
        [-r[0] * r[2] * c31, -r[1] * r[2] * c23, m.m1 + m.m2],
    ])


# -- symmetric 3x3 eigensolver -------------------------------------------


# np.cross and np.linalg.det carry heavy per-call overhead for 3-vectors
def _cross(u, v):
    return np.array([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]])


def _det3(a):
    return (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))


def _cubic_eigenvalues(a: np.ndarray) -> np.ndarray:
    """Trigonometric solution of the characteristic cubic, ascending."""
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    q = np.trace(a) / 3.0
    if p1 == 0.0:
        return np.sort(np.diag(a).astype(float))
    p2 = (a[0, 0] - q) ** 2 + (a[1, 1] - q) ** 2 + (a[2, 2] - q) ** 2 + 2.0 * p1
    p = sqrt(p2 / 6.0)
    b = (a - q * _EYE) / p
    r = _det3(b) / 2.0
    phi = pi / 3.0 if r <= -1.0 else 0.0 if r >= 1.0 else acos(r) / 3.0
    hi = q + 2.0 * p * cos(phi)
    lo = q + 2.0 * p * cos(phi + 2.0 * pi / 3.0)
    mid = 3.0 * q - hi - lo
    return np.array([lo, mid, hi])


def _newton_polish(a: np.ndarray, lam: float) -> float:
    # one Newton step on det(A - lam I)
    c2 = -np.trace(a)
    c1 = (a[0, 0] * a[1, 1] + a[1, 1] * a[2, 2] + a[0, 0] * a[2, 2]
          - a[0, 1] ** 2 - a[1, 2] ** 2 - a[0, 2] ** 2)
    c0 = -_det3(a)
    f = ((lam + c2) * lam + c1) * lam + c0
    df = (3.0 * lam + 2.0 * c2) * lam + c1
    if df == 0.0:
        return lam
    step = f / df
    # reject steps that would jump past a neighbouring root
    if abs(step) > 1e-6 * (1.0 + abs(lam)):
        return lam
    return lam - step


def _null_vector(a: np.ndarray, lam: float) -> np.ndarray | None:
    b = a - lam * _EYE
    cands = (_cross(b[0], b[1]), _cross(b[0], b[2]), _cross(b[1], b[2]))
    n2 = [float(v @ v) for v in cands]
    k = int(np.argmax(n2))
    return None if n2[k] == 0.0 else cands[k] / sqrt(n2[k])


def _jacobi(a: np.ndarray, sweeps: int = 50):
    a = np.array(a, dtype=float)
    v = np.eye(3)
    for _ in range(sweeps):
        off = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
        if off <= 1e-40 * max(1.0, float(np.sum(a * a))):
            break
        for p, r in ((0, 1), (0, 2), (1, 2)):
            if a[p, r] == 0.0:
                continue
            theta = (a[r, r] - a[p, p]) / (2.0 * a[p, r])
            t = np.sign(theta) / (abs(theta) + sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
            c = 1.0 / sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(3)
            rot[p, p] = rot[r, r] = c
            rot[p, r] = s
            rot[r, p] = -s
            a = rot.T @ a @ rot
            v = v @ rot
    vals = np.diag(a).copy()
    order = np.argsort(vals)
    return vals[order], v[:, order]


def _sign_fix(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _finish(a, vals, vecs, tol_deg):
    e1 = _sign_fix(vecs[:, 0])
    e2 = vecs[:, 1] - (vecs[:, 1] @ e1) * e1
    e2 = _sign_fix(e2 / sqrt(e2 @ e2))
    e3 = _cross(e1, e2)
    vecs = np.column_stack((e1, e2, e3))
    # Rayleigh quotients are at least as accurate as the root values
    vals = np.einsum("ik,ij,jk->k", vecs, a, vecs)
    flags = (abs(vals[1] - vals[0]) <= tol_deg,
             abs(vals[2] - vals[1]) <= tol_deg,
             abs(vals[2] - vals[0]) <= tol_deg)
    return Spectrum(vals, vecs, flags)


def _check(a, vals, vecs) -> bool:
    scale = max(sqrt(float(np.sum(a * a))), 1e-300)
    if np.max(np.abs(vecs.T @ vecs - _EYE)) > 1e-12:
        return False
    r = a @ vecs - vecs * vals
    return bool(np.all(np.sum(r * r, axis=0) <= (1e-12 * scale) ** 2))


def eigen_sym3(a) -> Spectrum:
    """Eigen-decomposition of a real symmetric 3x3 matrix.

    Closed-form eigenvalues are polished by a Newton step and paired with
    cross-product eigenvectors.  Clustered or badly scaled spectra, and any
    result that fails its own residual check, go through cyclic Jacobi.
    """
    a = np.asarray(a, dtype=float)
    a = 0.5 * (a + a.T)
    scale = max(abs(a[0, 0] + a[1, 1] + a[2, 2]), sqrt(float(np.sum(a * a))), 1e-300)
    tol_deg = DEGENERACY_REL * scale
    vals = _cubic_eigenvalues(a)
    vals = np.array([_newton_polish(a, lam) for lam in vals])
    gaps = np.diff(vals)
    spread = np.max(np.abs(vals)) / max(np.min(np.abs(vals)), 1e-300)
    if spread < SPREAD_LIMIT and np.all(gaps > 1e-6 * scale):
        v0 = _null_vector(a, vals[0])
        v2 = _null_vector(a, vals[2])
        if v0 is not None and v2 is not None:
            v1 = _cross(v2, v0)
            v1 /= sqrt(v1 @ v1)
            vecs = np.column_stack((v0, v1, v2))
            if _check(a, vals, vecs):
                return _finish(a, vals, vecs, tol_deg)
    vals, vecs = _jacobi(a)
    return _finish(a, vals, vecs, tol_deg)


# -- Psi <-> axis ----------------------------------------------------------


def psi_from_axis(q: np.ndarray, m: MassTriple, axis) -> PsiVector:
    """Psi built from the direction cosines of the bodies w.r.t. ``axis``.

    The eigenvalue reported is ``sum m_k sin^2(theta_k)``, the I-eigenvalue
    when ``axis`` is a principal axis.
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ct = np.asarray(q, dtype=float) @ axis
    w = m.as_array()
    norm2 = float(w @ (ct * ct))
    if norm2 <= 1e-14:
        raise ZeroNorm("all bodies lie in the plane orthogonal to the axis")
    psi = np.sqrt(w) * ct / sqrt(norm2)
    lam = float(w @ (1.0 - ct * ct))
    return PsiVector(psi, lam)


def cos_theta_from_psi(psi: PsiVector, m: MassTriple) -> np.ndarray:
    gap = m.M - psi.eigenvalue
    if gap < -1e-12:
        raise InvalidEigenpair(f"eigenvalue {psi.eigenvalue:.12g} exceeds total mass {m.M:.12g}")
    ct = sqrt(max(gap, 0.0)) * np.asarray(psi.components) / np.sqrt(m.as_array())
    if np.any(np.abs(ct) > 1.0 + 1e-8):
        raise InvalidEigenpair(f"|cos(theta)| > 1: {ct}")
    return ct


def complete_frame(axis, hint=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal (e_x, e_y, e_z) with e_z along ``axis``."""
    ez = np.asarray(axis, dtype=float)
    ez = ez / np.linalg.norm(ez)
    if hint is None:
        hint = np.eye(3)[int(np.argmin(np.abs(ez)))]
    ex = hint - (hint @ ez) * ez
    ex /= np.linalg.norm(ex)
    ey = np.cross(ez, ex)
    return ex, ey, ez


def off_axis_products(q: np.ndarray, m: MassTriple, axis, hint=None) -> tuple[float, float]:
    """(I_xz, I_yz) in a frame whose z-axis is ``axis``."""
    ex, ey, ez = complete_frame(axis, hint)
    inertia = inertia_tensor(q, m)
    return float(ex @ inertia @ ez), float(ey @ inertia @ ez)


def identity_check(q: np.ndarray, m: MassTriple, axis, hint=None) -> float:
    """|v^T J v - (sum m cos^2)(sum m sin^2) + I_xz^2 + I_yz^2| for any axis."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ct = np.asarray(q, dtype=float) @ axis
    w = m.as_array()
    v = np.sqrt(w) * ct
    q = np.asarray(q, dtype=float)
    jm = m.M * np.eye(3) - np.outer(np.sqrt(w), np.sqrt(w)) * (q @ q.T)
    ixz, iyz = off_axis_products(q, m, axis, hint)
    lhs = float(v @ jm @ v)
    rhs = float(w @ (ct * ct)) * float(w @ (1.0 - ct * ct)) - (ixz * ixz + iyz * iyz)
    return abs(lhs - rhs)
