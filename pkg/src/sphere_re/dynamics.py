"""Independent check of relative equilibria by direct integration.

The equations of motion are integrated in Cartesian coordinates on the
unit sphere: tangential pair forces plus the centripetal constraint term,
classical RK4, and re-projection onto the sphere after every step.  With
the Lagrangian K + V the conserved energy is K - V.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import ceil, pi, sqrt

import numpy as np

from .errors import BlowUp, DomainError
from .geometry import MassTriple
from .potential import PotentialModel

BLOWUP_TOL = 1e-10
_I = np.array([0, 1, 2])
_J = np.array([1, 2, 0])
_PREV = np.array([2, 0, 1])


@dataclass(frozen=True)
class PhaseState:
    q: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.array(self.q, dtype=float))
        object.__setattr__(self, "v", np.array(self.v, dtype=float))


@dataclass(frozen=True)
class ConservedReport:
    energy_drift: float
    momentum_drift: float
    shape_drift: float
    rate_error: float
    theta_drift: float
    position_drift: float
    samples: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    q: np.ndarray     # (n, 3, 3)
    v: np.ndarray     # (n, 3, 3)
    blowup: str | None = None


def _pair_cos(q):
    return np.einsum("ij,ij->i", q[_I], q[_J])


def force(q: np.ndarray, m: MassTriple, p: PotentialModel) -> np.ndarray:
    """Tangential force on each body, F_k = sum_j m_k m_j U' (q_j - c_kj q_k)."""
    q = np.asarray(q, dtype=float)
    w = m.as_array()
    c = _pair_cos(q)
    k = w[_I] * w[_J] * p.u_prime(c)
    # pair (i, j): contribution to i along q_j - c q_i, to j along q_i - c q_j
    fi = k[:, None] * (q[_J] - c[:, None] * q[_I])
    fj = k[:, None] * (q[_I] - c[:, None] * q[_J])
    out = np.zeros((3, 3))
    np.add.at(out, _I, fi)
    np.add.at(out, _J, fj)
    return out


def accel(s: PhaseState, m: MassTriple, p: PotentialModel) -> np.ndarray:
    w = m.as_array()
    v2 = np.einsum("ij,ij->i", s.v, s.v)
    return force(s.q, m, p) / w[:, None] - v2[:, None] * s.q


def potential_energy(q: np.ndarray, m: MassTriple, p: PotentialModel) -> float:
    w = m.as_array()
    return float(np.sum(w[_I] * w[_J] * p.u(_pair_cos(np.asarray(q)))))


def energy(s: PhaseState, m: MassTriple, p: PotentialModel) -> float:
    w = m.as_array()
    kin = 0.5 * float(np.sum(w * np.einsum("ij,ij->i", s.v, s.v)))
    return kin - potential_energy(s.q, m, p)


def angular_momentum(s: PhaseState, m: MassTriple) -> np.ndarray:
    return np.sum(m.as_array()[:, None] * np.cross(s.q, s.v), axis=0)


def re_initial_state(sol, axis=(0.0, 0.0, 1.0)) -> PhaseState:
    """Rigid-rotation initial condition v_k = omega axis x q_k."""
    q = sol.cartesian()
    omega_sq = sol.omega_sq or 0.0
    omega = sqrt(max(omega_sq, 0.0))
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    return PhaseState(q, omega * np.cross(ax, q), 0.0)


def _project(q, v):
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    v = v - np.einsum("ij,ij->i", q, v)[:, None] * q
    return q, v


def _batch_rhs(w: np.ndarray, p: PotentialModel):
    """Right-hand side for a stack of states: q, v of shape (B, 3, 3), w (B, 3)."""
    wij = w[:, _I] * w[:, _J]
    winv = (1.0 / w)[..., None]
    up = p.u_prime

    def rhs(q, v):
        qj = q[:, _J]
        c = np.einsum("bij,bij->bi", q, qj)
        k = wij * up(c)
        kc = (k * c)[..., None]
        k = k[..., None]
        # pair n = (n, n+1): body n is pulled toward qj, body n+1 toward q
        fi = k * qj - kc * q
        fj = k * q - kc * qj
        f = fi + fj[:, _PREV]
        v2 = np.einsum("bij,bij->bi", v, v)[..., None]
        return v, f * winv - v2 * q

    return rhs


def _batch_project(q, v):
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    v = v - np.einsum("bij,bij->bi", q, v)[..., None] * q
    return q, v


def _rk4_step(rhs, q, v, h):
    half = 0.5 * h
    k1q, k1v = rhs(q, v)
    k2q, k2v = rhs(q + half * k1q, v + half * k1v)
    k3q, k3v = rhs(q + half * k2q, v + half * k2v)
    k4q, k4v = rhs(q + h * k3q, v + h * k3v)
    q = q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return _batch_project(q, v)


def _near_collision(q):
    c = np.einsum("bij,bij->bi", q[:, _I], q[:, _J])
    return np.any(np.abs(c) >= 1.0 - BLOWUP_TOL, axis=1)


def integrate_many(states, masses, p: PotentialModel, T, dt: float, *, samples: int = 200):
    """Integrate several systems side by side; returns one Trajectory per system.

    All systems take the same number of steps; system b uses the step
    ``T[b] / n`` which never exceeds ``dt``.  A system that approaches a
    collision stops there and its trajectory carries a ``blowup`` message;
    the others carry on.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    B = len(states)
    T = np.broadcast_to(np.asarray(T, dtype=float), (B,)).copy()
    n = max(1, int(ceil(float(np.max(T)) / dt - 1e-9)))
    if n > 1e8:
        raise ValueError("too many steps (T/dt > 1e8)")
    every = max(1, n // samples)
    w = np.array([m.as_array() for m in masses])
    q, v = _batch_project(np.array([s.q for s in states], dtype=float),
                          np.array([s.v for s in states], dtype=float))
    rec = [([0], [q[b]], [v[b]]) for b in range(B)]
    blown: dict[int, str] = {}
    active = np.arange(B)
    for b in np.nonzero(_near_collision(q))[0]:
        blown[int(b)] = "initial state is at a collision or antipodal configuration"
    active = np.array([b for b in active if b not in blown], dtype=int)
    q, v = q[active], v[active]
    rhs = _batch_rhs(w[active], p)
    h = (T[active] / n)[:, None, None]
    for step in range(1, n + 1):
        if len(active) == 0:
            break
        try:
            q_new, v_new = _rk4_step(rhs, q, v, h)
            bad = _near_collision(q_new)
        except DomainError:
            # find the culprits one at a time
            bad = np.zeros(len(active), dtype=bool)
            q_new, v_new = np.empty_like(q), np.empty_like(v)
            for r in range(len(active)):
                try:
                    one = _batch_rhs(w[active[r:r + 1]], p)
                    qr, vr = _rk4_step(one, q[r:r + 1], v[r:r + 1], h[r:r + 1])
                    q_new[r], v_new[r] = qr[0], vr[0]
                    bad[r] = _near_collision(qr)[0]
                except DomainError:
                    bad[r] = True
        q, v = q_new, v_new
        if np.any(bad):
            for r in np.nonzero(bad)[0]:
                b = int(active[r])
                blown[b] = f"collision or antipodal approach at t = {step * T[b] / n:.6g}"
            keep = ~bad
            active, q, v = active[keep], q[keep], v[keep]
            rhs = _batch_rhs(w[active], p)
            h = (T[active] / n)[:, None, None]
        if step % every == 0 or step == n:
            for r, b in enumerate(active):
                rec[b][0].append(step)
                rec[b][1].append(q[r])
                rec[b][2].append(v[r])
    out = []
    for b, s in enumerate(states):
        steps, qs, vs = rec[b]
        out.append(Trajectory(s.t + np.array(steps, dtype=float) * (T[b] / n),
                              np.array(qs), np.array(vs), blown.get(b)))
    return out


def integrate(s0: PhaseState, m: MassTriple, p: PotentialModel, T: float, dt: float,
              *, omega: float | None = None, samples: int = 200):
    """RK4 with projection; returns ``(Trajectory, ConservedReport)``.

    ``omega`` enables the azimuthal-rate and polar-angle checks, which only
    make sense for a claimed relative equilibrium about the z-axis.
    """
    (traj,) = integrate_many([s0], [m], p, T, dt, samples=samples)
    if traj.blowup:
        raise BlowUp(traj.blowup)
    return traj, conserved_report(traj, m, p, omega)


def conserved_report(traj: Trajectory, m: MassTriple, p: PotentialModel,
                     omega: float | None = None) -> ConservedReport:
    states = [PhaseState(q, v) for q, v in zip(traj.q, traj.v)]
    e = np.array([energy(s, m, p) for s in states])
    c = np.array([angular_momentum(s, m) for s in states])
    cs = np.array([_pair_cos(s.q) for s in states])
    pos = float(np.max(np.abs(traj.q - traj.q[0])))
    rate_err = theta_err = float("nan")
    if omega is not None:
        z = traj.q[:, :, 2]
        theta = np.arccos(np.clip(z, -1.0, 1.0))
        theta_err = float(np.max(np.abs(theta - theta[0])))
        rho = np.hypot(traj.q[:, :, 0], traj.q[:, :, 1])
        movable = rho[0] > 1e-6
        if np.any(movable):
            phi = np.arctan2(traj.q[:, :, 1], traj.q[:, :, 0])
            t = (traj.t - traj.t[0])[:, None]
            d = phi - phi[0] - omega * t
            d = np.mod(d + pi, 2 * pi) - pi
            rate_err = float(np.max(np.abs(d[:, movable])))
        else:
            rate_err = 0.0
    return ConservedReport(
        energy_drift=float(np.max(np.abs(e - e[0]))),
        momentum_drift=float(np.max(np.linalg.norm(c - c[0], axis=1))),
        shape_drift=float(np.max(np.abs(cs - cs[0]))),
        rate_error=rate_err,
        theta_drift=theta_err,
        position_drift=pos,
        samples=len(states),
    )


def default_dt(omega_sq: float | None) -> float:
    if omega_sq and omega_sq > 0:
        return min(1e-3, 2 * pi / sqrt(omega_sq) / 1e4)
    return 1e-3


def verify(sol, p: PotentialModel, periods: float = 10.0, dt: float | None = None,
           T: float | None = None):
    """Integrate a solved RE for ``periods`` rotations (or time ``T``)."""
    omega_sq = sol.omega_sq or 0.0
    omega = sqrt(max(omega_sq, 0.0))
    if T is None:
        T = periods * 2 * pi / omega if omega > 0 else periods
    dt = default_dt(omega_sq) if dt is None else dt
    s0 = re_initial_state(sol)
    return integrate(s0, sol.masses, p, T, dt, omega=omega)


def write_trajectory_csv(path, traj: Trajectory, m: MassTriple, p: PotentialModel) -> None:
    header = ["t"] + [f"q{k}{ax}" for k in (1, 2, 3) for ax in "xyz"]
    header += ["cos_s12", "cos_s23", "cos_s31", "E", "cx", "cy", "cz"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for t, q, v in zip(traj.t, traj.q, traj.v):
            s = PhaseState(q, v)
            row = [t, *q.ravel(), *_pair_cos(q), energy(s, m, p), *angular_momentum(s, m)]
            wr.writerow([f"{x:.12g}" for x in row])


def verify_many(sols, p: PotentialModel, periods: float = 10.0, dt: float = 1e-3):
    """Batch version of :func:`verify` sharing one step count; same potential for all."""
    omegas = [sqrt(max(s.omega_sq or 0.0, 0.0)) for s in sols]
    T = [periods * 2 * pi / w if w > 0 else periods for w in omegas]
    trajs = integrate_many([re_initial_state(s) for s in sols], [s.masses for s in sols],
                           p, T, dt)
    return [(tr, conserved_report(tr, s.masses, p, w)) for tr, s, w in zip(trajs, sols, omegas)]
