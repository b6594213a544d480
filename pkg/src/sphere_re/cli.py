"""Command-line interface: ``sphere-re check|euler-scan|lagrange-scan|verify``.

Exit codes:
  0  relative equilibrium found / scan written / verification passed
  1  bad input
  2  not a relative equilibrium
  3  integration blew up (collision or antipodal approach)
  4  verification drift exceeded the bound
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

from . import dynamics, euler, lagrange
from .errors import BlowUp, ExcludedShape, NotAnRE, SphereREError
from .geometry import MassTriple, ShapeAngles, is_collinear, validate_shape
from .potential import POTENTIALS, by_name

EXIT_OK, EXIT_INPUT, EXIT_NOT_RE, EXIT_BLOWUP, EXIT_DRIFT = 0, 1, 2, 3, 4
SIG = 12


class InputError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{SIG}g}"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return float(f"{x:.{SIG}g}") if np.isfinite(x) else None
    return x


# -- parsing -----------------------------------------------------------------


def _floats(text: str, name: str, count: int) -> list[float]:
    parts = [t.strip() for t in text.split(",")]
    if len(parts) != count:
        raise InputError(f"--{name} needs {count} comma-separated values, got {len(parts)}")
    out = []
    for t in parts:
        low = t.lower()
        if low.endswith(("deg", "°", "d")):
            raise InputError(f"--{name}: angles are radians only; convert {t!r} with "
                             "radians = degrees * pi / 180")
        try:
            out.append(float(t))
        except ValueError:
            raise InputError(f"--{name}: {t!r} is not a number") from None
    return out


def parse_masses(text: str) -> MassTriple:
    vals = _floats(text, "masses", 3)
    try:
        return MassTriple(*vals)
    except ValueError as exc:
        raise InputError(f"--masses: {exc}") from None


def parse_sigma(text: str) -> tuple[ShapeAngles, int]:
    """Shape plus the fewest decimal places used in the input."""
    vals = _floats(text, "sigma", 3)
    for v in vals:
        if not 0.0 < v < pi:
            hint = ""
            if pi < v <= 180.0:
                hint = f" (looks like degrees; in radians that is {v * pi / 180.0:.6g})"
            raise InputError(f"--sigma: each arc angle must satisfy 0 < sigma < pi, got {v}{hint}")
    sh = ShapeAngles.from_angles(*vals)
    problems = validate_shape(sh)
    if problems:
        raise InputError("--sigma: " + "; ".join(problems))
    decimals = min(_decimals(t) for t in text.split(","))
    return sh, decimals


def _decimals(token: str) -> int:
    t = token.strip().lower()
    if "e" in t:
        return 16
    return len(t.split(".", 1)[1]) if "." in t else 0


def default_tol(decimals: int) -> float:
    """Rounded input carries a residual of roughly its rounding error; capped at 1e-3."""
    return max(1e-9, min(1e-3, 10.0 ** (1 - decimals)))


def _jobs(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("SPHERE_RE_JOBS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise InputError(f"SPHERE_RE_JOBS must be an integer, got {env!r}") from None


# -- reports -----------------------------------------------------------------


def euler_payload(sol: euler.EulerSolution) -> dict:
    return {
        "theta": sol.theta, "s": sol.s, "omega_sq": sol.omega_sq, "status": sol.status,
        "D": sol.D, "det": sol.det, "residual": sol.residual,
    }


def lagrange_payload(sol: lagrange.LRESolution) -> dict:
    return {
        "cos_theta": sol.cos_theta, "theta": sol.theta, "phi": sol.phi,
        "phi_diff": sol.phi_diff, "omega_sq": sol.omega_sq, "lambda": sol.lam,
        "residual": sol.residual, "eom_residual": sol.eom_residual,
        "variants": len(lagrange.variants(sol)),
    }


@dataclass
class Outcome:
    report: dict
    code: int
    solution: object = None


def check(m: MassTriple, sh: ShapeAngles, potential: str, tol: float) -> Outcome:
    p = by_name(potential)
    base = {"masses": [m.m1, m.m2, m.m3], "sigma": sh.angles(), "potential": p.name, "tol": tol}
    if is_collinear(sh, 1e-9):
        s12, s23, s31 = sh.angles()
        try:
            msh = euler.MeridianShape.from_sigmas(s12, s23, s31)
            sol = euler.solve_omega(m, msh, p, tol=max(euler.DET_TOL, tol))
        except ExcludedShape as exc:
            return Outcome({**base, "classification": "excluded", "message": str(exc)},
                           EXIT_NOT_RE)
        except NotAnRE as exc:
            return Outcome({**base, "classification": "not-an-RE", "route": "euler-meridian",
                            "message": str(exc), "residual": exc.residual}, EXIT_NOT_RE)
        kind = "fixed-point" if sol.fixed_point else "euler-meridian"
        return Outcome({**base, "classification": kind, "solution": euler_payload(sol)},
                       EXIT_OK, sol)
    try:
        sol = lagrange.solve_lre(m, sh, p, tol=tol)
    except NotAnRE as exc:
        return Outcome({**base, "classification": "not-an-RE", "route": "lagrange",
                        "message": str(exc), "residual": exc.residual}, EXIT_NOT_RE)
    return Outcome({**base, "classification": "lagrange", "solution": lagrange_payload(sol)},
                   EXIT_OK, sol)


def _flatten(report: dict) -> dict:
    flat = {}
    for k, v in report.items():
        if isinstance(v, dict):
            for k2, v2 in v.items():
                flat.update(_flatten({f"{k}.{k2}": v2}))
        elif isinstance(v, (list, tuple, np.ndarray)):
            for i, x in enumerate(v, 1):
                flat[f"{k}{i}"] = x
        else:
            flat[k] = v
    return flat


def write_rows(rows: list[dict], header: list[str], out, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps(_jsonable(rows), indent=1) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_fmt(r.get(h)) for h in header])
        text = buf.getvalue()
    _emit(text, out)


def write_report(report: dict, out, fmt: str) -> None:
    if fmt == "csv":
        flat = _flatten(report)
        write_rows([flat], list(flat), out, "csv")
    else:
        _emit(json.dumps(_jsonable(report), indent=1) + "\n", out)


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


# -- scans -------------------------------------------------------------------


EULER_HEADER = ["polyline", "a", "y", "x", "sigma12", "sigma23", "sigma31",
                "det", "omega_sq", "s", "kind"]
LAGRANGE_HEADER = ["sigma12", "sigma", "omega_sq", "residual", "kind"]


def euler_scan_rows(m: MassTriple, potential: str, grid: int, jobs: int = 1) -> list[dict]:
    p = by_name(potential)
    rows = []
    for pt in euler.contour_scan(m, p, grid, jobs=jobs):
        sig = euler.MeridianShape(pt.a, pt.x).shape_angles().angles()
        rows.append({"polyline": pt.polyline, "a": pt.a, "y": pt.y, "x": pt.x,
                     "sigma12": sig[0], "sigma23": sig[1], "sigma31": sig[2],
                     "det": pt.det, "omega_sq": pt.omega_sq, "s": pt.s, "kind": pt.kind})
    return rows


def _lagrange_column(s12: float, tol: float, mass: float) -> list[dict]:
    rows = []
    for s in lagrange.isosceles_solve(s12):
        sh = ShapeAngles.isosceles(s12, s)
        res = lagrange.lre_residual(MassTriple.equal(mass), sh, lagrange.cotangent())
        try:
            omega_sq = lagrange.isosceles_lre(s12, s, mass=mass, tol=tol).omega_sq
            kind = "equilateral" if abs(s - s12) <= 1e-9 else "isosceles"
        except NotAnRE:
            omega_sq, kind = float("nan"), "rejected"
        rows.append({"sigma12": s12, "sigma": s, "omega_sq": omega_sq,
                     "residual": res, "kind": kind})
    return rows


def lagrange_scan_rows(grid: int, jobs: int = 1, tol: float = 1e-8,
                       mass: float = 1.0) -> list[dict]:
    """Equal-mass isosceles LRE curve on sigma12 = k pi / grid, k = 1 .. grid-1."""
    s12s = [k * pi / grid for k in range(1, grid)]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            cols = list(pool.map(lambda s: _lagrange_column(s, tol, mass), s12s))
    else:
        cols = [_lagrange_column(s, tol, mass) for s in s12s]
    rows = [r for col in cols for r in col]
    for s12, s in lagrange.right_angle_points():
        sh = ShapeAngles.isosceles(s12, s)
        res = lagrange.lre_residual(MassTriple.equal(mass), sh, lagrange.cotangent())
        omega_sq = lagrange.isosceles_lre(s12, s, mass=mass, tol=tol).omega_sq
        rows.append({"sigma12": s12, "sigma": s, "omega_sq": omega_sq,
                     "residual": res, "kind": "right-angle"})
    rows.sort(key=lambda r: (r["sigma12"], r["sigma"], r["kind"]))
    return rows


# -- verify ------------------------------------------------------------------


@dataclass(frozen=True)
class InlineRE:
    """Minimal RE payload: Cartesian positions, rotation rate and masses."""

    q: np.ndarray
    omega_sq: float
    masses: MassTriple

    def cartesian(self) -> np.ndarray:
        return self.q


def _inline_from_angles(m: MassTriple, theta, phi, omega_sq: float) -> InlineRE:
    th, ph = np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)
    q = np.column_stack((np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)))
    return InlineRE(q, omega_sq, m)


def _solution_from_report(path: str):
    try:
        with open(path) as fh:
            rep = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"--from: cannot read report: {exc}") from None
    if rep.get("classification") not in ("lagrange", "euler-meridian", "fixed-point"):
        raise InputError(f"--from: report classification {rep.get('classification')!r} "
                         "carries no solution")
    m = MassTriple(*rep["masses"])
    sol = rep["solution"]
    phi = sol.get("phi", [0.0, 0.0, 0.0])
    return _inline_from_angles(m, sol["theta"], phi, sol.get("omega_sq") or 0.0), rep["potential"]


def run_verify(sol, potential: str, periods: float, dt: float | None, max_drift: float,
               out_csv: str | None = None) -> Outcome:
    p = by_name(potential)
    omega_sq = sol.omega_sq or 0.0
    omega = sqrt(max(omega_sq, 0.0))
    T = periods * 2 * pi / omega if omega > 0 else periods
    dt = dynamics.default_dt(omega_sq) if dt is None else dt
    s0 = dynamics.re_initial_state(sol)
    try:
        traj, rep = dynamics.integrate(s0, sol.masses, p, T, dt, omega=omega)
    except BlowUp as exc:
        return Outcome({"verified": False, "blowup": str(exc)}, EXIT_BLOWUP)
    if out_csv:
        dynamics.write_trajectory_csv(out_csv, traj, sol.masses, p)
    ok = rep.shape_drift <= max_drift
    report = {"verified": ok, "omega_sq": omega_sq, "T": T, "dt": dt, "periods": periods,
              "max_drift": max_drift, "max_speed": float(np.max(np.linalg.norm(s0.v, axis=1))),
              **rep.as_dict()}
    return Outcome(report, EXIT_OK if ok else EXIT_DRIFT)


# -- argparse ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with other input errors; 2 means not-an-RE
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="sphere-re",
        description="Relative equilibria of three bodies on the unit sphere.",
        epilog="exit codes: 0 found/ok, 1 bad input, 2 not a relative equilibrium, "
               "3 integration blow-up, 4 drift exceeded. Angles are radians.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="command", required=True)
    pots = sorted(POTENTIALS)

    def common(sp, masses_required):
        sp.add_argument("--masses", required=masses_required, default="1,1,1",
                        help="three positive masses, e.g. 1,2,3")
        sp.add_argument("--potential", default="cotangent", choices=pots)
        sp.add_argument("--out", default=None, help="output path (default stdout)")

    c = sub.add_parser("check", help="test one (masses, shape) pair")
    common(c, True)
    c.add_argument("--sigma", required=True, help="arc angles s12,s23,s31 in radians")
    c.add_argument("--tol", type=float, default=None,
                   help="acceptance tolerance (default from the precision of --sigma)")
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.add_argument("--verify", action="store_true", help="also integrate the solution")
    c.add_argument("--periods", type=float, default=10.0)
    c.add_argument("--dt", type=float, default=None)
    c.add_argument("--max-drift", type=float, default=1e-6)

    e = sub.add_parser("euler-scan", help="trace det = 0 over meridian shapes")
    common(e, False)
    e.add_argument("--grid", type=int, default=256)
    e.add_argument("--jobs", type=int, default=None)
    e.add_argument("--format", choices=("csv", "json"), default="csv")

    lg = sub.add_parser("lagrange-scan", help="equal-mass isosceles Lagrange curve")
    common(lg, False)
    lg.add_argument("--grid", type=int, default=240, help="sigma12 = k*pi/grid samples")
    lg.add_argument("--jobs", type=int, default=None)
    lg.add_argument("--tol", type=float, default=1e-8)
    lg.add_argument("--format", choices=("csv", "json"), default="csv")

    v = sub.add_parser("verify", help="integrate a relative equilibrium")
    common(v, False)
    v.add_argument("--from", dest="from_report", default=None,
                   help="JSON report written by 'check'")
    v.add_argument("--sigma", default=None, help="solve this shape first, as in 'check'")
    v.add_argument("--theta", default=None, help="polar angles t1,t2,t3 (inline payload)")
    v.add_argument("--phi", default="0,0,0", help="azimuths p1,p2,p3 (inline payload)")
    v.add_argument("--omega-sq", type=float, default=None,
                   help="rotation rate squared; overrides the solved value")
    v.add_argument("--tol", type=float, default=None)
    v.add_argument("--periods", type=float, default=10.0)
    v.add_argument("--dt", type=float, default=None)
    v.add_argument("--max-drift", type=float, default=1e-6)
    v.add_argument("--trajectory", default=None, help="write the trajectory CSV here")
    v.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


def _cmd_check(a) -> int:
    m = parse_masses(a.masses)
    sh, dec = parse_sigma(a.sigma)
    tol = a.tol if a.tol is not None else default_tol(dec)
    oc = check(m, sh, a.potential, tol)
    code = oc.code
    if a.verify and oc.solution is not None:
        vr = run_verify(oc.solution, a.potential, a.periods, a.dt, a.max_drift)
        oc.report["verification"] = vr.report
        code = vr.code
    write_report(oc.report, a.out, a.format)
    return code


def _cmd_verify(a) -> int:
    potential = a.potential
    if a.from_report:
        sol, potential = _solution_from_report(a.from_report)
    elif a.theta is not None:
        if a.omega_sq is None:
            raise InputError("--theta needs --omega-sq")
        m = parse_masses(a.masses)
        sol = _inline_from_angles(m, _floats(a.theta, "theta", 3), _floats(a.phi, "phi", 3),
                                  a.omega_sq)
    elif a.sigma is not None:
        m = parse_masses(a.masses)
        sh, dec = parse_sigma(a.sigma)
        tol = a.tol if a.tol is not None else default_tol(dec)
        oc = check(m, sh, potential, tol)
        if oc.solution is None:
            write_report(oc.report, a.out, a.format)
            return oc.code
        sol = oc.solution
    else:
        raise InputError("verify needs one of --from, --sigma or --theta")
    if a.omega_sq is not None:
        if a.omega_sq < 0:
            raise InputError("--omega-sq must be non-negative")
        sol = InlineRE(sol.cartesian(), a.omega_sq, sol.masses)
    oc = run_verify(sol, potential, a.periods, a.dt, a.max_drift, a.trajectory)
    write_report(oc.report, a.out, a.format)
    return oc.code


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        if a.command == "check":
            return _cmd_check(a)
        if a.command == "verify":
            return _cmd_verify(a)
        if a.command == "euler-scan":
            if a.grid < 64:
                raise InputError("--grid must be at least 64")
            rows = euler_scan_rows(parse_masses(a.masses), a.potential, a.grid, _jobs(a.jobs))
            write_rows(rows, EULER_HEADER, a.out, a.format)
            return EXIT_OK
        if a.command == "lagrange-scan":
            m = parse_masses(a.masses)
            if not m.m1 == m.m2 == m.m3:
                raise InputError("lagrange-scan covers equal masses only")
            if a.potential != "cotangent":
                raise InputError("lagrange-scan needs the attractive cotangent potential")
            if a.grid < 4:
                raise InputError("--grid must be at least 4")
            rows = lagrange_scan_rows(a.grid, _jobs(a.jobs), a.tol, m.m1)
            write_rows(rows, LAGRANGE_HEADER, a.out, a.format)
            return EXIT_OK
    except InputError as exc:
        print(f"sphere-re: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SphereREError, ValueError) as exc:
        print(f"sphere-re: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
