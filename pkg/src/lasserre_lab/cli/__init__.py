"""Command-line front end: ``lasserre-lab <subcommand> ...``.

Exit codes: 0 for a definitive answer, 2 for an inconclusive one, 1 on errors.
Each run emits one report; ``--report PATH`` appends it as a JSON line and
``--json`` prints it instead of the text summary.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .. import certchecks, gadgets, relaxation, sdp_core
from ..polyalg import Polynomial, PolySystem
from .problem import (ProblemFile, ProblemSyntaxError, format_problem, parse_expression,
                      parse_problem, parse_system, read_problem)
from .report import DEFINITIVE, ERROR, INCONCLUSIVE, RunReport, digest, fmt_float, write_csv

__all__ = ["main", "build_parser", "run", "parse_system", "parse_problem", "format_problem",
           "ProblemSyntaxError", "RunReport", "DEMOS"]


class CliError(RuntimeError):
    pass


def _load(args) -> tuple[ProblemFile, str]:
    path = Path(args.file)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_problem(raw.decode("utf-8")), digest(raw)


def _opt(args, problem: ProblemFile | None, name: str, default):
    """Flag value, else the problem file's option, else the default."""
    v = getattr(args, name, None)
    if v is None and problem is not None and name in problem.options:
        v = problem.options[name]
        if isinstance(default, int) and not isinstance(default, bool):
            if Fraction(v).denominator != 1:
                raise CliError(f"option {name} must be an integer")
            v = int(v)
    return default if v is None else v


def _csv_vector(text: str, n: int | None = None) -> tuple[Fraction, ...]:
    try:
        parts = tuple(Fraction(p.strip()) for p in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise CliError(f"not a comma-separated list of numbers: {text!r}") from None
    if n is not None and len(parts) != n:
        raise CliError(f"expected {n} coordinates, got {len(parts)}")
    return parts


def _region(expr: str | None, system: PolySystem):
    if expr is None:
        return None, None
    p = parse_expression(expr, system.names)
    return (lambda x: p.eval(x) >= 0), p.to_string(system.names)


def _membership_status(status: str) -> str:
    return INCONCLUSIVE if status == "ambiguous" else DEFINITIVE


# ---------------------------------------------------------------------------
# subcommands

def cmd_relax(args) -> RunReport:
    problem, dig = _load(args)
    sysm = problem.system
    d = _opt(args, problem, "degree", 2)
    spec, lmi = relaxation.build_relaxation(sysm, d)
    prog = relaxation.lmi_program(lmi)
    artifacts = {}
    if args.out:
        sdp_core.write_sdpa(prog, args.out)
        artifacts["sdpa"] = str(args.out)
    sizes = lmi.block_sizes
    rep = RunReport("relax", DEFINITIVE, dig, {"degree": d},
                    {"block_sizes": list(sizes), "n_vars": spec.n_vars, "omitted": list(spec.omitted)},
                    artifacts)
    rep.summary = [f"degree {d}: blocks {tuple(sizes)}, {spec.n_vars} variables ({sysm.n} x, "
                   f"{len(spec.y_index)} y)"]
    rep.summary += [f"omitted block {i}: {why}" for i, why in spec.omitted]
    return rep


def cmd_member(args) -> RunReport:
    problem, dig = _load(args)
    sysm = problem.system
    f = parse_expression(args.target, sysm.names)
    cfg = {"target": f.to_string(sysm.names)}
    if args.search:
        d_cap = _opt(args, problem, "d_cap", 12)
        d0 = max(int(f.degree) if f.degree >= 0 else 0, 0)
        d0 += d0 % 2
        res, log = relaxation.search_degree(lambda d: relaxation.module_membership(sysm, f, d), d0, d_cap)
        cfg.update(search=True, d_cap=d_cap)
        status = DEFINITIVE if res.feasible else INCONCLUSIVE
        rep = RunReport("member", status, dig, cfg, {"found": res.feasible, "d": res.d if res.feasible else None,
                                                     "log": log})
        if args.csv:
            write_csv(args.csv, ["d", "status"], log)
            rep.artifacts["csv"] = str(args.csv)
    else:
        d = _opt(args, problem, "degree", 2)
        res = relaxation.module_membership(sysm, f, d)
        cfg["degree"] = d
        rep = RunReport("member", _membership_status(res.status), dig, cfg,
                        {"membership": res.status, "d": d, "margin": res.margin})
    if res.certificate is not None:
        rep.metrics["residual"] = res.certificate.residual
        rep.metrics["min_eigs"] = res.certificate.min_eigs
        rep.summary.append(relaxation.certificate_report(res.certificate))
    rep.message = res.status if not args.search else ("certificate found" if res.feasible else "not found")
    return rep


def cmd_point(args) -> RunReport:
    problem, dig = _load(args)
    sysm = problem.system
    x = _csv_vector(args.point, sysm.n)
    d = _opt(args, problem, "degree", 2)
    _, lmi = relaxation.build_relaxation(sysm, d)
    pm = relaxation.point_membership(lmi, x)
    in_set = all(g.eval_exact(x) >= 0 for g in sysm.constraints)
    rep = RunReport("point", _membership_status(pm.status), dig,
                    {"point": [str(v) for v in x], "degree": d},
                    {"membership": pm.status, "in_S": in_set, "margin": pm.margin,
                     "min_eigs": pm.min_eigs})
    rep.message = pm.status
    rep.summary = [f"x = ({', '.join(map(str, x))}) in S(g): {in_set}; in S_{d}(g): {pm.status}"]
    if pm.margin is not None:
        rep.summary.append(f"max-margin value {fmt_float(pm.margin)}")
    return rep


def cmd_qc(args) -> RunReport:
    problem, dig = _load(args)
    sysm = problem.system
    i = args.index
    if not 1 <= i <= sysm.m:
        raise CliError(f"index {i} out of range 1..{sysm.m}")
    region, rtext = _region(args.region, sysm)
    qc = certchecks.strict_qc_check(sysm, i, region=region)
    rep = RunReport("qc", DEFINITIVE, dig, {"index": i, "region": rtext},
                    {"verdict": qc.verdict, "margin": qc.margin, "points": len(qc.points)})
    rep.message = "strictly quasiconcave on the samples" if qc.verdict else "not strictly quasiconcave"
    rep.summary = [f"g_{i}: {len(qc.points)} zero-set samples, worst tangential eigenvalue "
                   f"{fmt_float(-qc.margin)}"]
    if args.csv:
        write_csv(args.csv, [f"x{k + 1}" for k in range(sysm.n)] + ["max_eig"],
                  [list(map(float, p)) + [float(e)] for p, e in zip(qc.points, qc.max_eigs)])
        rep.artifacts["csv"] = str(args.csv)
    return rep


def cmd_arch(args) -> RunReport:
    problem, dig = _load(args)
    N_cap = _opt(args, problem, "N_cap", 128)
    d_cap = _opt(args, problem, "d_cap", 8)
    res = certchecks.archimedean_probe(problem.system, N_cap, d_cap)
    rep = RunReport("arch", DEFINITIVE if res.found else INCONCLUSIVE, dig, {"N_cap": N_cap, "d_cap": d_cap},
                    {"found": res.found, "N": res.N, "d": res.d, "log": res.log})
    rep.message = f"N - |x|^2 in M_{res.d}(g) with N = {res.N}" if res.found else "no certificate within the caps"
    if args.csv:
        write_csv(args.csv, ["N", "d", "status"], res.log)
        rep.artifacts["csv"] = str(args.csv)
    return rep


def cmd_soscv(args) -> RunReport:
    problem, dig = _load(args)
    sysm = problem.system
    f = parse_expression(args.target, sysm.names)
    d_cap = _opt(args, problem, "d_cap", 12)
    res = certchecks.sos_concavity_check(sysm, f, d_cap)
    plain_sos = all(g.is_zero() for g in sysm.constraints)
    decided = res.found or (plain_sos and res.log and res.log[-1][1] == "infeasible")
    rep = RunReport("soscv", DEFINITIVE if decided else INCONCLUSIVE, dig,
                    {"target": f.to_string(sysm.names), "d_cap": d_cap},
                    {"found": res.found, "d": res.d, "log": res.log})
    rep.message = f"-Hess f has a certificate at d = {res.d}" if res.found else "no certificate found"
    if res.certificate is not None:
        rep.summary.append(relaxation.certificate_report(res.certificate))
    return rep


def cmd_gadget(args) -> RunReport:
    vals = {k: Fraction(getattr(args, k)) for k in ("H", "delta", "eps", "R")}
    params, h = gadgets.select_guess_params(vals["H"], vals["delta"], vals["eps"], vals["R"],
                                            d_cap=args.d_cap)
    metrics = {"c": params.c, "d": params.d, "gamma": params.gamma, "checks": params.checks}
    if params.sos is not None:
        metrics["sos_residual"] = params.sos.residual(h - 1)
    rep = RunReport("gadget", DEFINITIVE, None, {k: str(v) for k, v in vals.items()} | {"d_cap": args.d_cap},
                    metrics)
    rep.message = f"h = {params.gamma} * f_(c={params.c}, d={params.d})"
    rep.summary = [f"conditions (a) {params.checks['a']}, (b) {params.checks['b']}, (c) {params.checks['c']}"]
    if "sos_residual" in metrics:
        rep.summary.append(f"h - 1 = s*(p^2 + q^2), reconstruction residual {fmt_float(metrics['sos_residual'])}")
    return rep


def cmd_pain(args) -> RunReport:
    problem, dig = _load(args)
    sysm = problem.system
    region, rtext = _region(args.region, sysm)
    pairs = _opt(args, problem, "pairs", 100)
    seed = _opt(args, problem, "seed", 0)
    idx = [args.index] if args.index else None
    res = certchecks.pain_pipeline(sysm, region=region, qc_indices=idx, pairs=pairs, seed=seed)
    consts = res.constants.as_dict()
    rep = RunReport("pain", DEFINITIVE if res.verdict else INCONCLUSIVE, dig,
                    {"region": rtext, "pairs": pairs, "seed": seed, "index": args.index},
                    {"constants": consts, "checked": len(res.checks), "skipped": res.skipped,
                     "worst_max_eig": res.worst,
                     "hessian_formula_equal": [m.hessian_formula_equal for m in res.modified],
                     "guess": [None if m.params is None else {"c": m.params.c, "d": m.params.d,
                                                              "gamma": m.params.gamma}
                               for m in res.modified]})
    rep.message = res.message
    rep.summary = [f"{k} = {fmt_float(v)}" for k, v in consts.items() if isinstance(v, float)]
    if args.csv:
        n = sysm.n
        write_csv(args.csv, [f"u{k + 1}" for k in range(n)] + [f"x{k + 1}" for k in range(n)] + ["max_eig"],
                  [list(c.u) + list(c.x) + [c.max_eig] for c in res.checks])
        rep.artifacts["csv"] = str(args.csv)
    return rep


def cmd_gn(args) -> RunReport:
    problem, dig = _load(args)
    sysm = problem.system
    u = _csv_vector(args.u, sysm.n)
    v = np.array([float(c) for c in _csv_vector(args.dir, sysm.n)])
    if not np.linalg.norm(v) > 0:
        raise CliError("--dir must be a nonzero vector")
    v = v / np.linalg.norm(v)
    r = certchecks.gn_obstruction(sysm, [float(c) for c in u], v)
    status = INCONCLUSIVE if r.verdict == "inconclusive" else DEFINITIVE
    rep = RunReport("gn", status, dig, {"u": [str(c) for c in u], "dir": list(v)},
                    {"verdict": r.verdict, "active": list(r.active), "dots": r.dots,
                     "orthogonal": r.orthogonal, "interior_interval": r.interior_interval,
                     "hull": r.hull, "boundary_distance": r.boundary_distance})
    rep.message = f"{r.verdict}: {r.message}"
    return rep


def cmd_probe(args) -> RunReport:
    problem, dig = _load(args)
    sysm = problem.system
    d = _opt(args, problem, "degree", 2)
    K = _opt(args, problem, "directions", 16)
    wit = [_csv_vector(w, sysm.n) for w in (args.witness or [])]
    r = certchecks.exactness_probe(sysm, d, K, witnesses=wit)
    rep = _probe_report(r, dig, {"degree": d, "directions": K, "witnesses": [list(map(str, w)) for w in wit]})
    if args.csv:
        write_csv(args.csv, [f"w{k + 1}" for k in range(sysm.n)] +
                  ["set_min", "relax_min", "gap", "moment_status", "membership"],
                  [list(rec.w) + [rec.set_min, rec.relax_min, rec.gap, rec.moment_status, rec.membership]
                   for rec in r.directions])
        rep.artifacts["csv"] = str(args.csv)
    return rep


def _probe_report(r, dig, cfg, name="probe") -> RunReport:
    gaps = [rec.gap for rec in r.directions if rec.gap is not None]
    status = DEFINITIVE if r.verdict in ("exact-evidence", "non-exact") else INCONCLUSIVE
    rep = RunReport(name, status, dig, cfg,
                    {"verdict": r.verdict, "max_gap": max(gaps) if gaps else None,
                     "memberships": [rec.membership for rec in r.directions],
                     "witnesses": [dataclasses.asdict(w) for w in r.witnesses]})
    rep.message = f"{r.verdict}: {r.message}"
    return rep


# ---------------------------------------------------------------------------
# demos

TWODISKS = """\
# two closed disks cut by the line y = 1, tangent to the smaller disk
vars: x y
g1: -(1 - x^2 - y^2)*(4 - (x-4)^2 - y^2)
g2: 1 - y
"""

UNITDISK = """\
vars: x y
g: 1 - x^2 - y^2
"""


def demo_twodisks() -> RunReport:
    sysm = parse_system(TWODISKS)
    qc = certchecks.strict_qc_check(sysm, 1)
    gn = certchecks.gn_obstruction(sysm, (0.0, 1.0), (1.0, 0.0))
    x = (Fraction(-1, 20), Fraction(1))
    points = {}
    for d in (4, 6):
        _, lmi = relaxation.build_relaxation(sysm, d)
        pm = relaxation.point_membership(lmi, x)
        points[d] = {"status": pm.status, "margin": pm.margin}
    probe = certchecks.exactness_probe(sysm, 4, K=8, witnesses=[x])
    metrics = {"qc_verdict": qc.verdict, "qc_margin": qc.margin, "qc_points": len(qc.points),
               "gn_verdict": gn.verdict, "gn_dots": gn.dots,
               "g1_at_point": sysm.constraints[0].eval_exact(x), "point_membership": points,
               "probe_verdict": probe.verdict, "probe_message": probe.message}
    rep = RunReport("demo", DEFINITIVE, digest(TWODISKS), {"demo": "twodisks"}, metrics)
    rep.message = "two disks cut by a tangent line"
    rep.summary = [
        f"g1 strictly quasiconcave on {len(qc.points)} zero-set samples: {qc.verdict} (margin {fmt_float(qc.margin)})",
        f"obstruction at u = (0,1), dir = (1,0): {gn.verdict}",
        f"g1(-1/20, 1) = {metrics['g1_at_point']} < 0",
    ]
    rep.summary += [f"(-1/20, 1) in S_{d}(g): {v['status']} (margin {fmt_float(v['margin'] or 0.0)})"
                    for d, v in points.items()]
    rep.summary.append(f"exactness probe at d = 4: {probe.verdict}")
    return rep


def demo_unitdisk() -> RunReport:
    sysm = parse_system(UNITDISK)
    r = certchecks.exactness_probe(sysm, 2, K=16)
    rep = _probe_report(r, digest(UNITDISK), {"demo": "unitdisk", "degree": 2, "directions": 16}, "demo")
    gaps = [rec.gap for rec in r.directions]
    rep.summary = [f"16 directions, max gap {fmt_float(max(gaps))}, memberships feasible: "
                   f"{sum(rec.membership == 'feasible' for rec in r.directions)}/16"]
    return rep


DEMOS = {"twodisks": demo_twodisks, "unitdisk": demo_unitdisk}


def cmd_demo(args) -> RunReport:
    if args.name not in DEMOS:
        raise CliError(f"unknown demo {args.name!r}; available: {', '.join(sorted(DEMOS))}")
    return DEMOS[args.name]()


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    # usage errors are errors (exit 1); argparse's own 2 would read as "inconclusive"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lasserre-lab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", help="append the run report as one JSON line")
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, file=True, csv=False):
        p = sub.add_parser(name, parents=[common], help=help_)
        if file:
            p.add_argument("file", help="problem file")
        if csv:
            p.add_argument("--csv", help="write per-record CSV here")
        p.set_defaults(fn=fn)
        return p

    p = add("relax", cmd_relax, "build the degree-d relaxation, optionally as SDPA")
    p.add_argument("--degree", "-d", type=int)
    p.add_argument("--out", help="SDPA sparse output (.dat-s)")

    p = add("member", cmd_member, "membership of a polynomial in the truncated quadratic module", csv=True)
    p.add_argument("--target", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--degree", "-d", type=int)
    g.add_argument("--search", action="store_true")
    p.add_argument("--d-cap", dest="d_cap", type=int)

    p = add("point", cmd_point, "is a point in the relaxation S_d(g)?")
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--degree", "-d", type=int)

    p = add("qc", cmd_qc, "strict quasiconcavity of g_i on its sampled zero set", csv=True)
    p.add_argument("--index", "-i", type=int, required=True)
    p.add_argument("--region", help="extra restriction expr >= 0")

    p = add("arch", cmd_arch, "search an Archimedean certificate N - |x|^2", csv=True)
    p.add_argument("--N-cap", dest="N_cap", type=int)
    p.add_argument("--d-cap", dest="d_cap", type=int)

    p = add("soscv", cmd_soscv, "g-sos-concavity of a polynomial")
    p.add_argument("--target", required=True)
    p.add_argument("--d-cap", dest="d_cap", type=int)

    p = add("gadget", cmd_gadget, "select the univariate guess polynomial h", file=False)
    for k in ("H", "delta", "eps", "R"):
        p.add_argument(f"--{k}", required=True)
    p.add_argument("--d-cap", dest="d_cap", type=int, default=256)

    p = add("pain", cmd_pain, "modified constraints and integrated-Hessian checks", csv=True)
    p.add_argument("--region", help="restrict C by expr >= 0")
    p.add_argument("--index", "-i", type=int)
    p.add_argument("--pairs", type=int)
    p.add_argument("--seed", type=int)

    p = add("gn", cmd_gn, "Gouveia-Netzer obstruction along a line")
    p.add_argument("--u", required=True)
    p.add_argument("--dir", required=True)

    p = add("probe", cmd_probe, "exactness probe over unit directions", csv=True)
    p.add_argument("--degree", "-d", type=int)
    p.add_argument("--directions", "-K", type=int)
    p.add_argument("--witness", action="append", help="point to test (repeatable)")

    p = add("demo", cmd_demo, "run a built-in scenario", file=False)
    p.add_argument("name", help=f"one of: {', '.join(sorted(DEMOS))}")
    return ap


def _execute(args) -> RunReport:
    try:
        rep = args.fn(args)
    except (CliError, ProblemSyntaxError, OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        rep = RunReport(args.command, ERROR, message=str(exc))
    if args.report:
        rep.append_to(args.report)
    return rep


def run(argv: list[str] | None = None) -> tuple[RunReport, int]:
    """Parse ``argv`` and run the subcommand without printing."""
    rep = _execute(build_parser().parse_args(argv))
    return rep, rep.exit_code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    rep = _execute(args)
    if rep.status == ERROR:
        print(f"error: {rep.message}", file=sys.stderr)
    if args.json:
        print(rep.to_json())
    elif rep.status != ERROR:
        print(rep.text())
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
