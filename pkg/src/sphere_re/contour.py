"""Marching squares with bisection-refined edge crossings.

Zero sets of a smooth function sampled on a rectangular grid are returned
as polylines.  Every crossing is refined along its grid edge by bisection
on the true function, not by linear interpolation, and crossings whose
refined value is not small (sign changes through a pole) are dropped.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .roots import bisect_many


def _edge_crossings(f, xs, ys, vals, iterations):
    """Refined crossings on horizontal (along x) and vertical (along y) edges.

    Returns dicts keyed by ``("h", i, j)`` / ``("v", i, j)`` where (i, j)
    indexes the edge's first node as ``vals[j, i]`` (row j <-> y).
    """
    points = {}
    finite = np.isfinite(vals)

    def refine(kind, jj, ii, p0, p1, f0):
        if len(jj) == 0:
            return
        pts = bisect_many(f, p0, p1, f0, iterations)
        for j, i, pt in zip(jj, ii, pts):
            points[(kind, int(i), int(j))] = pt

    v0, v1 = vals[:, :-1], vals[:, 1:]
    mask = finite[:, :-1] & finite[:, 1:] & (np.sign(v0) != np.sign(v1))
    jj, ii = np.nonzero(mask)
    p0 = np.column_stack((xs[ii], ys[jj]))
    p1 = np.column_stack((xs[ii + 1], ys[jj]))
    refine("h", jj, ii, p0, p1, vals[jj, ii])

    v0, v1 = vals[:-1, :], vals[1:, :]
    mask = finite[:-1, :] & finite[1:, :] & (np.sign(v0) != np.sign(v1))
    jj, ii = np.nonzero(mask)
    p0 = np.column_stack((xs[ii], ys[jj]))
    p1 = np.column_stack((xs[ii], ys[jj + 1]))
    refine("v", jj, ii, p0, p1, vals[jj, ii])
    return points


def _cell_segments(vals, points, f, xs, ys):
    """Connect crossing keys inside each cell; saddles use the centre sign."""
    ny, nx = vals.shape
    segs = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            keys = [k for k in (("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j))
                    if k in points]
            if len(keys) == 2:
                segs.append((keys[0], keys[1]))
            elif len(keys) == 4:
                centre = f(np.array([[0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])]]))[0]
                if not np.isfinite(centre):
                    continue
                # keys are ordered bottom, right, top, left
                if np.sign(centre) == np.sign(vals[j, i]):
                    segs += [(keys[0], keys[1]), (keys[2], keys[3])]
                else:
                    segs += [(keys[3], keys[0]), (keys[1], keys[2])]
    return segs


def _chain(segs):
    adj: dict = {}
    for a, b in segs:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    chains = []
    # open chains first (start at degree-1 nodes), then closed loops
    starts = [k for k in sorted(adj) if len(adj[k]) == 1] + sorted(adj)
    for start in starts:
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [n for n in adj[cur] if n != prev and n not in seen]
            if not nxt:
                if prev is not None and start in adj[cur] and len(chain) > 2:
                    chain.append(start)
                break
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen.add(cur)
        chains.append(chain)
    return chains


def trace_zero_set(f, xs, ys, *, accept_tol: float = 1e-8, iterations: int = 60,
                   jobs: int = 1) -> list[np.ndarray]:
    """Polylines of ``f = 0`` on the grid ``xs`` x ``ys``.

    ``f`` takes an ``(n, 2)`` array of (x, y) points and returns ``n`` values;
    non-finite values mark points where ``f`` is undefined.  Points whose
    refined ``|f|`` exceeds ``accept_tol`` split the polyline.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    gx, gy = np.meshgrid(xs, ys)
    flat = np.column_stack((gx.ravel(), gy.ravel()))
    if jobs > 1:
        chunks = np.array_split(flat, jobs)
        with ThreadPoolExecutor(jobs) as pool:
            vals = np.concatenate(list(pool.map(f, chunks)))
    else:
        vals = f(flat)
    vals = vals.reshape(gx.shape)
    points = _edge_crossings(f, xs, ys, vals, iterations)
    if not points:
        return []
    keys = list(points)
    residual = np.abs(f(np.array([points[k] for k in keys])))
    good = {k for k, r in zip(keys, residual) if np.isfinite(r) and r <= accept_tol}
    segs = _cell_segments(vals, points, f, xs, ys)
    lines = []
    for chain in _chain(segs):
        run = []
        for k in chain:
            if k in good:
                # a curve through a grid node is found on both edges meeting there
                if not run or np.max(np.abs(run[-1] - points[k])) > 1e-12:
                    run.append(points[k])
            else:
                if len(run) >= 2:
                    lines.append(np.array(run))
                run = []
        if len(run) >= 2:
            lines.append(np.array(run))
    return lines
