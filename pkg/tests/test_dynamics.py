import csv
from dataclasses import replace
from math import pi, sqrt

import numpy as np
import pytest

from sphere_re.dynamics import (
    PhaseState, accel, angular_momentum, default_dt, energy, force, integrate, integrate_many,
    potential_energy, re_initial_state, verify, verify_many, write_trajectory_csv,
)
from sphere_re.errors import BlowUp, DomainError
from sphere_re.euler import equal_mass_isosceles
from sphere_re.geometry import MassTriple, ShapeAngles, SphericalConfig, to_cartesian
from sphere_re.lagrange import isosceles_solve, solve_lre
from sphere_re.potential import cotangent

P = cotangent()
EQ = MassTriple.equal()


def _lre_right():
    return solve_lre(EQ, ShapeAngles.from_angles(pi / 2, pi / 2, pi / 2), P)


def _random_state(rng, speed=0.5):
    while True:
        q = rng.normal(size=(3, 3))
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        c = [q[0] @ q[1], q[1] @ q[2], q[2] @ q[0]]
        if max(abs(x) for x in c) < 0.8:
            break
    v = speed * rng.normal(size=(3, 3))
    v -= np.einsum("ij,ij->i", q, v)[:, None] * q
    return PhaseState(q, v)


# -- force / accel ------------------------------------------------------------


def test_force_right_angle_pair():
    q = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    f = force(q, EQ, P)
    # each body feels unit pulls toward the other two
    assert np.allclose(f[0], [0, 1, 1])
    assert np.allclose(f[1], [1, 0, 1])


def test_force_tangent(rng):
    for _ in range(50):
        s = _random_state(rng)
        f = force(s.q, MassTriple(*rng.uniform(0.2, 3, 3)), P)
        assert np.max(np.abs(np.einsum("ij,ij->i", f, s.q))) <= 1e-12


def test_force_equilateral_circle():
    q = to_cartesian(SphericalConfig(np.full(3, 1.0), np.array([0, 2 * pi / 3, 4 * pi / 3])))
    f = force(q, EQ, P)
    for k in range(3):
        meridian_normal = np.cross([0, 0, 1.0], q[k])
        assert abs(f[k] @ meridian_normal) <= 1e-12
        # pulls toward the rotation axis side, i.e. toward the pole
        assert f[k][2] > 0


def test_force_is_potential_gradient(rng):
    m = MassTriple(1.0, 2.0, 0.5)
    h = 1e-5
    for _ in range(10):
        q = _random_state(rng).q
        f = force(q, m, P)
        for k in range(3):
            grad = np.zeros(3)
            for a in range(3):
                qp, qm = q.copy(), q.copy()
                qp[k, a] += h
                qm[k, a] -= h
                grad[a] = (potential_energy(qp, m, P) - potential_energy(qm, m, P)) / (2 * h)
            tangent = grad - (grad @ q[k]) * q[k]
            assert np.allclose(f[k], tangent, atol=1e-6)


def test_force_collision_raises():
    q = np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 0, 1.0]])
    with pytest.raises(DomainError):
        force(q, EQ, P)


def test_accel_static():
    s = _random_state(np.random.default_rng(1), speed=0.0)
    assert np.allclose(accel(s, EQ, P), force(s.q, EQ, P))


def test_accel_constraint_term():
    s = _random_state(np.random.default_rng(2))
    a = accel(s, EQ, P)
    v2 = np.einsum("ij,ij->i", s.v, s.v)
    assert np.allclose(np.einsum("ij,ij->i", a, s.q), -v2, atol=1e-12)


def test_accel_rigid_rotation():
    sol = _lre_right()
    s = re_initial_state(sol)
    omega = np.array([0, 0, sqrt(sol.omega_sq)])
    expected = np.cross(omega, np.cross(omega, s.q))
    assert np.allclose(accel(s, EQ, P), expected, atol=1e-8)


# -- initial states ------------------------------------------------------------


def test_initial_state_speeds():
    s = re_initial_state(_lre_right())
    assert np.allclose(np.linalg.norm(s.v, axis=1), sqrt(2))
    assert np.max(np.abs(np.einsum("ij,ij->i", s.q, s.v))) <= 1e-12


def test_initial_state_fixed_point():
    assert np.all(re_initial_state(equal_mass_isosceles(2 * pi / 3)).v == 0)


def test_initial_state_equator():
    class One:
        omega_sq = 1.0

        def cartesian(self):
            return np.eye(3)

    s = re_initial_state(One())
    assert np.linalg.norm(s.v[0]) == pytest.approx(1.0)


def test_energy_sign_convention():
    s = re_initial_state(_lre_right())
    kin = 0.5 * np.sum(np.einsum("ij,ij->i", s.v, s.v))
    assert energy(s, EQ, P) == pytest.approx(kin - potential_energy(s.q, EQ, P))


# -- integration ---------------------------------------------------------------


def test_lre_verification():
    traj, rep = verify(_lre_right(), P, dt=1e-3, periods=2)
    assert rep.shape_drift <= 1e-6
    assert rep.momentum_drift <= 1e-8
    assert rep.energy_drift <= 1e-8
    assert rep.rate_error <= 1e-6 and rep.theta_drift <= 1e-6
    assert rep.samples >= 200


def test_euler_omega_discriminates_factor_two():
    good = equal_mass_isosceles(pi / 3)
    bad = replace(good, omega_sq=16 / (3 * sqrt(3)))
    (_, r_good), (_, r_bad) = verify_many([good, bad], P, periods=10, dt=1e-3)
    assert r_good.shape_drift <= 1e-6
    assert r_bad.shape_drift > 1e-2


def test_fixed_point_static():
    _, rep = verify(equal_mass_isosceles(2 * pi / 3), P, T=10.0, dt=1e-3)
    assert rep.position_drift <= 1e-8


def _perturbed_state(rng):
    """A non-equilibrium state near the right-angle LRE, far from collisions."""
    s = re_initial_state(_lre_right())
    v = s.v + 0.1 * rng.normal(size=(3, 3))
    v -= np.einsum("ij,ij->i", s.q, v)[:, None] * s.q
    return PhaseState(s.q, v)


def test_momentum_conserved_non_re(rng):
    s = _perturbed_state(rng)
    _, rep = integrate(s, EQ, P, 10.0, 1e-3)
    assert rep.momentum_drift <= 1e-8
    assert rep.energy_drift <= 1e-8


def test_fourth_order_convergence(rng):
    s = _perturbed_state(rng)
    m = MassTriple(1.0, 2.0, 1.5)

    def end(dt):
        (tr,) = integrate_many([s], [m], P, 1.0, dt, samples=1)
        assert tr.blowup is None
        return tr.q[-1]

    ref = end(0.5e-3)
    errs = [np.max(np.abs(end(dt) - ref)) for dt in (0.04, 0.02, 0.01)]
    for a, b in zip(errs, errs[1:]):
        assert 10 < a / b < 24


def test_blowup():
    q = to_cartesian(SphericalConfig(np.array([pi / 2] * 3), np.array([0.0, 0.05, pi / 2])))
    s = PhaseState(q, np.zeros((3, 3)))
    with pytest.raises(BlowUp):
        integrate(s, EQ, P, 5.0, 1e-4)


def test_batch_isolates_blowup(rng):
    q = to_cartesian(SphericalConfig(np.array([pi / 2] * 3), np.array([0.0, 0.05, pi / 2])))
    doomed = PhaseState(q, np.zeros((3, 3)))
    fine = re_initial_state(_lre_right())
    a, b = integrate_many([doomed, fine], [EQ, EQ], P, 1.0, 1e-3)
    assert a.blowup and b.blowup is None
    (solo,) = integrate_many([fine], [EQ], P, 1.0, 1e-3)
    assert np.array_equal(solo.q, b.q)


def test_trajectory_csv(tmp_path):
    traj, _ = verify(_lre_right(), P, T=0.5, dt=1e-3)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, traj, EQ, P)
    rows = list(csv.reader(open(path)))
    assert rows[0][:4] == ["t", "q1x", "q1y", "q1z"]
    assert rows[0][-7:] == ["cos_s12", "cos_s23", "cos_s31", "E", "cx", "cy", "cz"]
    assert len(rows) == len(traj.t) + 1
    assert float(rows[1][10]) == pytest.approx(0.0, abs=1e-12)


def test_default_dt():
    assert default_dt(3.0) == pytest.approx(2 * pi / sqrt(3) / 1e4)
    assert default_dt(1e-4) == 1e-3
    assert default_dt(4e8) == pytest.approx(2 * pi / 2e4 / 1e4)
    assert default_dt(None) == 1e-3


def test_angular_momentum_along_axis():
    c = angular_momentum(re_initial_state(_lre_right()), EQ)
    assert abs(c[0]) < 1e-12 and abs(c[1]) < 1e-12 and c[2] > 0


def test_rejects_bad_dt():
    with pytest.raises(ValueError):
        integrate(re_initial_state(_lre_right()), EQ, P, 1.0, 0.0)


def _growth_rate(sol, tau=1.0, h=1e-6):
    """Largest exponential rate of the time-tau map in the co-rotating frame."""
    w = sqrt(sol.omega_sq)
    c, s = np.cos(w * tau), np.sin(w * tau)
    back = np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]])

    s0 = re_initial_state(sol)
    x0 = np.concatenate((s0.q.ravel(), s0.v.ravel()))
    xs = [x0 + sign * h * e for e in np.eye(18) for sign in (1, -1)]
    trajs = integrate_many([PhaseState(x[:9].reshape(3, 3), x[9:].reshape(3, 3)) for x in xs],
                           [sol.masses] * len(xs), P, tau, 1e-3, samples=1)
    ends = [np.concatenate(((tr.q[-1] @ back.T).ravel(), (tr.v[-1] @ back.T).ravel()))
            for tr in trajs]
    jac = np.column_stack([(ends[2 * k] - ends[2 * k + 1]) / (2 * h) for k in range(18)])
    return float(np.log(np.max(np.abs(np.linalg.eigvals(jac)))) / tau)


def test_unstable_re_explains_drift():
    """Rounding grows like exp(rate t): the right-angle LRE is linearly unstable."""
    sol = _lre_right()
    rate = _growth_rate(sol)
    assert rate == pytest.approx(0.767, abs=0.02)
    T = 10 * 2 * pi / sqrt(sol.omega_sq)
    _, rep = verify(sol, P, dt=1e-3)
    predicted = 1e-16 * np.exp(rate * T)
    assert predicted / 100 < rep.shape_drift < predicted * 1e3


def test_stable_re_has_no_growth():
    s = [r for r in isosceles_solve(pi / 3) if abs(r - 1.3324) < 1e-3][0]
    sol = solve_lre(EQ, ShapeAngles.from_angles(pi / 3, s, s), P)
    assert abs(_growth_rate(sol)) < 1e-3
