import csv
import io
import json
from math import pi, sqrt

import numpy as np
import pytest

from sphere_re import cli, dynamics, euler, lagrange
from sphere_re.geometry import MassTriple
from sphere_re.potential import cotangent

P = cotangent()
EQ = MassTriple.equal()


def run(capsys, *args):
    try:
        code = cli.main(list(args))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *args):
    code, out, err = run(capsys, *args)
    return code, (json.loads(out) if out else None), err


@pytest.fixture(scope="module")
def lagrange_rows():
    return cli.lagrange_scan_rows(240)


@pytest.fixture(scope="module")
def euler_rows():
    return cli.euler_scan_rows(EQ, "cotangent", 256)


# -- check -------------------------------------------------------------------


def test_check_published_isosceles(capsys):
    code, rep, _ = run_json(capsys, "check", "--masses", "1,1,1", "--sigma", "1.0472,1.33240,1.33240")
    assert code == 0
    assert rep["classification"] == "lagrange"
    assert rep["solution"]["omega_sq"] == pytest.approx(3.85072, abs=1e-3)


def test_check_unequal_equilateral(capsys):
    code, rep, _ = run_json(capsys, "check", "--masses", "1,2,3", "--sigma", "2.0943,2.0943,2.0943")
    assert code == 2
    assert rep["classification"] == "not-an-RE"
    assert rep["residual"] > 1e-2


def test_check_right_angle_equilateral(capsys):
    code, rep, _ = run_json(capsys, "check", "--masses", "1,1,1", "--sigma", "1.5708,1.5708,1.5708")
    assert code == 0 and rep["classification"] == "lagrange"
    assert np.allclose(rep["solution"]["cos_theta"], 1 / sqrt(3), atol=1e-4)
    assert rep["solution"]["omega_sq"] == pytest.approx(3.0, abs=1e-3)
    assert rep["solution"]["variants"] == 4


def test_check_euler_route(capsys):
    code, rep, _ = run_json(capsys, "check", "--masses", "1,1,1", "--sigma", "1.2,0.6,0.6")
    assert code == 0 and rep["classification"] == "euler-meridian"
    assert rep["solution"]["omega_sq"] == pytest.approx(
        euler.equal_mass_isosceles(0.6).omega_sq, rel=1e-9)


def test_check_fixed_point(capsys):
    s = repr(2 * pi / 3)
    code, rep, _ = run_json(capsys, "check", "--masses", "1,1,1", "--sigma", f"{s},{s},{s}")
    assert code == 0 and rep["classification"] == "fixed-point"


def test_check_collinear_not_re(capsys):
    code, rep, _ = run_json(capsys, "check", "--masses", "1,1,1", "--sigma", "1.0,1.3,2.3")
    assert code == 2
    assert rep["route"] == "euler-meridian"


@pytest.mark.parametrize("args,needle", [
    (("--masses", "1,1,1", "--sigma", "60,60,60"), "degree"),
    (("--masses", "1,1,1", "--sigma", "1.0deg,1,1"), "radian"),
    (("--masses", "1,-1,1", "--sigma", "1,1,1"), "mass"),
    (("--masses", "1,1", "--sigma", "1,1,1"), "3 comma"),
    (("--masses", "1,1,1", "--sigma", "0.5,0.5,2.0"), "exceeds"),
    (("--masses", "1,1,1", "--sigma", "2.5,2.5,2.5"), "2"),
])
def test_check_input_errors(capsys, args, needle):
    code, out, err = run(capsys, "check", *args)
    assert code == 1
    assert out == ""
    assert needle in err.lower()


def test_check_csv(capsys):
    code, out, _ = run(capsys, "check", "--masses", "1,1,1", "--sigma", "1.5708,1.5708,1.5708",
                       "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1
    assert rows[0]["classification"] == "lagrange"


def test_check_deterministic(capsys):
    args = ("check", "--masses", "1,1,1", "--sigma", "1.0472,1.33240,1.33240")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_check_writes_file(tmp_path, capsys):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "check", "--masses", "1,1,1", "--sigma", "1.5708,1.5708,1.5708",
                       "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["classification"] == "lagrange"


def test_default_tol():
    assert cli.default_tol(5) == pytest.approx(1e-4)
    assert cli.default_tol(1) == 1e-3
    assert cli.default_tol(17) == 1e-9


# -- lagrange-scan -----------------------------------------------------------


def test_lagrange_scan_pi3(lagrange_rows):
    at = [r for r in lagrange_rows if abs(r["sigma12"] - pi / 3) < 1e-12]
    assert any(abs(r["sigma"] - 1.33240) <= 1e-4 for r in at)
    assert any(r["kind"] == "equilateral" for r in at)


def test_lagrange_scan_symmetry(lagrange_rows):
    rows = [r for r in lagrange_rows if r["kind"] in ("equilateral", "isosceles")]
    for r in rows:
        m12, m = pi - r["sigma12"], pi - r["sigma"]
        if not m12 + 1e-6 < 2 * m < 2 * pi - m12 - 1e-6:
            continue  # the mirror image is not a spherical triangle
        mates = [o for o in rows if abs(o["sigma12"] - (pi - r["sigma12"])) < 1e-9
                 and abs(o["sigma"] - (pi - r["sigma"])) < 1e-7]
        assert mates, (r["sigma12"], r["sigma"])
        assert mates[0]["omega_sq"] == pytest.approx(r["omega_sq"], rel=1e-8)


def test_lagrange_scan_right_angles(lagrange_rows):
    marks = [r for r in lagrange_rows if r["kind"] == "right-angle"]
    assert len(marks) == 3
    for r in marks:
        assert np.cos(r["sigma12"]) == pytest.approx(np.cos(r["sigma"]) ** 2, abs=1e-10)
        assert r["residual"] <= 1e-9


def test_lagrange_scan_cli(capsys, lagrange_rows):
    code, out, _ = run(capsys, "lagrange-scan", "--grid", "240")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == cli.LAGRANGE_HEADER
    assert len(rows) == len(lagrange_rows) + 1
    # 12 significant digits
    assert all(len(c.split("e")[0].replace("-", "").replace(".", "")) <= 12
               for c in rows[1][:2])


def test_lagrange_scan_jobs_deterministic(capsys):
    a = run(capsys, "lagrange-scan", "--grid", "60", "--jobs", "1")[1]
    b = run(capsys, "lagrange-scan", "--grid", "60", "--jobs", "4")[1]
    assert a == b


def test_lagrange_scan_rejects_unequal(capsys):
    assert run(capsys, "lagrange-scan", "--masses", "1,2,3")[0] == 1


# -- euler-scan --------------------------------------------------------------


def _arc(rows):
    return np.array([(r["a"], r["y"]) for r in rows if r["kind"] == "scalene"])


def _hausdorff(p, q):
    d = np.linalg.norm(p[:, None, :] - q[None, :, :], axis=-1)
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_euler_scan_arc_range(euler_rows):
    largest = [max(r["sigma12"], r["sigma23"], r["sigma31"])
               for r in euler_rows if r["kind"] == "scalene" and -r["a"] / 2 < r["y"] < r["a"] / 2]
    assert min(largest) > pi / 2
    assert max(largest) < euler.critical_angle_ac() + 1e-3
    assert max(largest) == pytest.approx(1.8124, abs=5e-3)


def test_euler_scan_refinement(euler_rows):
    coarse = _arc(cli.euler_scan_rows(EQ, "cotangent", 64))
    fine = _arc(cli.euler_scan_rows(EQ, "cotangent", 512))
    assert _hausdorff(coarse, fine) <= 2 * pi / 64


def test_euler_scan_repulsive(euler_rows):
    rep = cli.euler_scan_rows(EQ, "cotangent-repulsive", 256)
    assert [(r["a"], r["y"]) for r in rep] == [(r["a"], r["y"]) for r in euler_rows]
    for a, b in zip(euler_rows, rep):
        if a["s"] and b["s"]:
            assert a["s"] == -b["s"]


def test_euler_scan_cli_deterministic(capsys, monkeypatch):
    a = run(capsys, "euler-scan", "--grid", "64")[1]
    monkeypatch.setenv("SPHERE_RE_JOBS", "3")
    b = run(capsys, "euler-scan", "--grid", "64")[1]
    assert a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert rows[0] == cli.EULER_HEADER


def test_euler_scan_bad_grid(capsys):
    assert run(capsys, "euler-scan", "--grid", "16")[0] == 1


def test_jobs_env(monkeypatch):
    monkeypatch.setenv("SPHERE_RE_JOBS", "5")
    assert cli._jobs(None) == 5
    assert cli._jobs(2) == 2
    monkeypatch.setenv("SPHERE_RE_JOBS", "many")
    with pytest.raises(cli.InputError):
        cli._jobs(None)


# -- verify ------------------------------------------------------------------


@pytest.fixture()
def lre_report(tmp_path, capsys):
    roots = lagrange.isosceles_solve(pi / 3)
    s = [r for r in roots if abs(r - pi / 3) > 1e-6][0]
    path = tmp_path / "lre.json"
    code = cli.main(["check", "--masses", "1,1,1", "--sigma", f"{pi / 3!r},{s!r},{s!r}",
                     "--out", str(path)])
    capsys.readouterr()
    assert code == 0
    return path


def test_verify_from_report(capsys, lre_report, tmp_path):
    traj = tmp_path / "t.csv"
    code, rep, _ = run_json(capsys, "verify", "--from", str(lre_report), "--periods", "2",
                            "--dt", "1e-3", "--trajectory", str(traj))
    assert code == 0 and rep["verified"]
    assert rep["shape_drift"] <= 1e-6
    assert traj.read_text().startswith("t,q1x")


def test_verify_perturbed_omega(capsys, lre_report):
    omega_sq = json.loads(lre_report.read_text())["solution"]["omega_sq"]
    code, rep, _ = run_json(capsys, "verify", "--from", str(lre_report), "--periods", "2",
                            "--dt", "1e-3", "--omega-sq", repr(1.05 * omega_sq))
    assert code == 4
    assert rep["shape_drift"] > 1e-3


def test_verify_fixed_point(capsys):
    code, rep, _ = run_json(capsys, "verify", f"--theta={-2 * pi / 3!r},0,{2 * pi / 3!r}",
                            "--omega-sq", "0", "--periods", "2", "--dt", "1e-3")
    assert code == 0 and rep["max_speed"] == 0.0
    assert rep["position_drift"] <= 1e-8


def test_verify_blowup(capsys):
    code, rep, _ = run_json(capsys, "verify", "--theta", "1.5707963,1.5707963,0.3",
                            "--phi", "0,0.05,0", "--omega-sq", "0", "--periods", "5",
                            "--dt", "1e-4")
    assert code == 3
    assert "blowup" in rep


def test_usage_error_exit_code(capsys):
    assert run(capsys, "check", "--masses", "1,1,1")[0] == 1
    assert run(capsys, "nonsense")[0] == 1


def test_verify_needs_payload(capsys):
    assert run(capsys, "verify")[0] == 1


def test_verify_not_re_passthrough(capsys):
    code, rep, _ = run_json(capsys, "verify", "--masses", "1,2,3", "--sigma", "1.5708,1.5708,1.5708")
    assert code == 2 and rep["classification"] == "not-an-RE"


# -- every 16th scan row survives a short verification ------------------------


def _horizon(omega_sq):
    # one rotation, capped: unstable branches amplify rounding as e^(2.5 t)
    return min(2 * pi / sqrt(omega_sq), 5.0)


def _short_verify(sols):
    T = [_horizon(s.omega_sq) for s in sols]
    trajs = dynamics.integrate_many([dynamics.re_initial_state(s) for s in sols],
                                    [s.masses for s in sols], P, T, 1e-3)
    return [dynamics.conserved_report(tr, s.masses, P) if tr.blowup is None else None
            for tr, s in zip(trajs, sols)]


def test_lagrange_rows_verify(lagrange_rows):
    rows = [r for r in lagrange_rows if np.isfinite(r["omega_sq"])][::16]
    sols = [lagrange.isosceles_lre(r["sigma12"], r["sigma"]) for r in rows]
    for r, rep in zip(rows, _short_verify(sols)):
        assert rep is not None and rep.shape_drift <= 1e-6, r


def test_euler_rows_verify(euler_rows):
    rows = [r for r in euler_rows if np.isfinite(r["omega_sq"]) and r["omega_sq"] > 0][::16]
    sols = [euler.solve_omega(EQ, euler.MeridianShape(r["a"], r["x"]), P, tol=1e-7) for r in rows]
    for r, rep in zip(rows, _short_verify(sols)):
        assert rep is not None and rep.shape_drift <= 1e-6, r
