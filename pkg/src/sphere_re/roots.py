"""Bracketing root finders: scalar bisection, vectorised bisection, grid scans."""

from __future__ import annotations

import numpy as np


def bisect(f, a: float, b: float, fa: float | None = None, xtol: float = 1e-12,
           maxiter: int = 200) -> float:
    """Root of ``f`` in [a, b]; ``f(a)`` and ``f(b)`` must differ in sign."""
    fa = f(a) if fa is None else fa
    if fa == 0.0:
        return a
    fb = f(b)
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError("bisect needs a sign change on [a, b]")
    for _ in range(maxiter):
        mid = 0.5 * (a + b)
        if abs(b - a) <= xtol or mid in (a, b):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def bisect_many(f, a: np.ndarray, b: np.ndarray, fa: np.ndarray,
                iterations: int = 60) -> np.ndarray:
    """Bisect many brackets at once; ``f`` maps an array of points to values.

    ``a`` and ``b`` may be arrays of shape ``(n, d)`` (points in d
    dimensions); bisection runs along each segment a -> b.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    fa = np.array(fa, dtype=float)
    for _ in range(iterations):
        mid = 0.5 * (a + b)
        fm = f(mid)
        left = np.sign(fm) == np.sign(fa)
        sel = left if a.ndim == 1 else left[:, None]
        a = np.where(sel, mid, a)
        fa = np.where(left, fm, fa)
        b = np.where(sel, b, mid)
        exact = fm == 0.0
        if np.any(exact):
            sel_e = exact if a.ndim == 1 else exact[:, None]
            a = np.where(sel_e, mid, a)
            b = np.where(sel_e, mid, b)
    return 0.5 * (a + b)


def grid_roots(f, lo: float, hi: float, n: int = 2048, xtol: float = 1e-12,
               include_ends: bool = False) -> list[float]:
    """All sign-change roots of a scalar function on an n-point grid."""
    xs = np.linspace(lo, hi, n)
    if not include_ends:
        xs = xs[1:-1]
    vals = np.array([f(x) for x in xs])
    roots = []
    for k in range(len(xs) - 1):
        v0, v1 = vals[k], vals[k + 1]
        if not (np.isfinite(v0) and np.isfinite(v1)):
            continue
        if v0 == 0.0:
            roots.append(float(xs[k]))
        elif v0 * v1 < 0.0:
            roots.append(bisect(f, xs[k], xs[k + 1], v0, xtol=xtol))
    if len(xs) and vals[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots


def dedupe(values, spacing: float = 1e-9) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > spacing:
            out.append(float(v))
    return out
