"""Command-line front end: ``derive``, ``classify``, ``integrate``, ``report``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .classifier import Verdict, classify, load_curve
from .engine import AlgorithmOptions, ConstraintTree, NonlinearVelocityError, run_algorithm
from .hamiltonian import build_hamiltonian
from .integrator import (
    ConstraintViolation,
    InitialData,
    IntegrationError,
    ResidualBlowUp,
    integrate,
    verify_endpoints,
)
from .model import ControlProblem, ProblemError, load_problem, momentum_vars, parse_pin

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


def _positive_int(s: str) -> int:
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _param(s: str):
    if "=" not in s:
        raise argparse.ArgumentTypeError("expected name=value")
    name, value = s.split("=", 1)
    try:
        return name.strip(), Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad numeric value {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="presympmp", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, p0_default="both", p0_choices=("0", "-1", "both")):
        p.add_argument("problem", help="problem file (JSON)")
        p.add_argument("--p0", choices=p0_choices, default=p0_default)
        p.add_argument("--pin", action="append", default=[], metavar="EXPR != 0",
                       help="restrict to the branch where EXPR is nonzero (repeatable)")
        p.add_argument("--max-steps", type=_positive_int, default=16)
        p.add_argument("--max-branches", type=_positive_int, default=64)
        p.add_argument("--param", action="append", type=_param, default=[], metavar="NAME=VALUE")
        p.add_argument("--format", choices=("text", "structured"), default="text")
        p.add_argument("--out", help="write the main output here instead of standard output")

    common(sub.add_parser("derive", help="run the constraint algorithm"))
    c = sub.add_parser("classify", help="classify extremals")
    common(c)
    c.add_argument("--curve", help="closed-form curve file for a curve-level verdict")
    i = sub.add_parser("integrate", help="integrate a final branch numerically")
    common(i, p0_default="0", p0_choices=("0", "-1"))
    i.add_argument("--leaf", help="final leaf id (default: the only final leaf)")
    i.add_argument("--init", required=True, help="initial data file (JSON)")
    i.add_argument("--h", type=_positive_float, default=1e-3)
    i.add_argument("--tol-drift", type=_positive_float, default=1e-6)
    i.add_argument("--tol-accept", type=_positive_float, default=1e-8)
    i.add_argument("--skip-endpoints", action="store_true", help="do not check the problem's endpoints")
    i.add_argument("--report", help="write the endpoint report here (default: standard error)")
    r = sub.add_parser("report", help="derive and classify in one report")
    common(r)
    r.add_argument("--curve")
    return ap


# --- helpers ---------------------------------------------------------------


def symbol_table(problem: ControlProblem):
    table = dict(problem.table())
    table.update({v.name: v for v in momentum_vars(problem)})
    return table


def _options(args, problem: ControlProblem) -> AlgorithmOptions:
    table = symbol_table(problem)
    try:
        pins = tuple(parse_pin(s, table) for s in args.pin)
    except ValueError as exc:
        raise InputError(f"bad --pin: {exc}") from None
    return AlgorithmOptions(max_steps=args.max_steps, max_branches=args.max_branches, pins=pins)


def _p0s(choice: str) -> List[int]:
    return {"0": [0], "-1": [-1], "both": [0, -1]}[choice]


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _structured(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def render_tree(tree: ConstraintTree) -> str:
    lines = [f"p0 = {tree.p0}: {tree.status}" + (" (free time)" if tree.free_time else "")]
    for d in tree.diagnostics:
        lines.append(f"  diagnostic: {d}")
    for bid in sorted(tree.nodes, key=lambda s: tuple(int(x) for x in s.split("."))):
        b = tree.nodes[bid]
        lines.append(f"  branch {b.id} [{b.status}] steps={b.steps}")
        if b.reason:
            lines.append(f"    reason: {b.reason}")
        for c in b.equations:
            lines.append(f"    {c.expr} = 0    ({c.provenance()})")
        for q in b.inequations:
            lines.append(f"    {q} != 0")
        for v, e in sorted(b.subst.items(), key=lambda ve: ve[0].key):
            lines.append(f"    {v.name} := {e}")
        for m in b.markers:
            lines.append(f"    marker: {m}")
    return "\n".join(lines) + "\n"


def render_verdict(v: Verdict) -> str:
    lines = []
    if v.abnormal_exists == "no":
        lines.append("no abnormal extremals")
    else:
        lines.append(f"abnormal extremals: {v.abnormal_exists}")
    if v.normal_exists == "no":
        lines.append("no normal extremals")
    else:
        lines.append(f"normal extremals: {v.normal_exists}")
    lines.append(f"strictness: {v.strictness}")
    lines.append("case flags: " + ", ".join(f"{k}={_tri(v.flags.get(k))}" for k in ("i", "ii", "iii", "iv", "v")))
    lines.append(f"method: {v.method}")
    lines.append(f"projection target: {v.target}")
    if v.free_time_notes is not None:
        ft = v.free_time_notes
        items = [k for k in ("only_zero_covectors", "abnormal_strict_no_normal") if ft.get(k)]
        lines.append("free-time findings: " + (", ".join(i.replace("_", " ") for i in items) if items else "none"))
        for t in ft.get("text", []):
            lines.append(f"  {t}")
    for kind in ("abnormal", "normal"):
        for p in v.projections[kind]:
            eqs = ", ".join(f"{e} = 0" for e in p.equations) or "no equations"
            nz = "".join(f", {q} != 0" for q in p.inequations)
            lines.append(f"{kind} projection of leaf {p.branch_id} on {p.target}: {eqs}{nz}"
                         + ("" if p.exact else " (not exact)"))
    if v.curve is not None:
        lift = v.curve["normal_lift"]
        lines.append(f"curve: {v.curve['finding']}")
        lines.append(f"  normal lift: {lift['status']}" + (f" ({lift['reason']})" if lift["reason"] else ""))
        if lift["contradiction"]:
            lines.append(f"  contradiction: {lift['contradiction']}")
    for n in v.notes:
        lines.append(f"note: {n}")
    for d in v.diagnostics:
        lines.append(f"diagnostic: {d}")
    return "\n".join(lines) + "\n"


def _tri(x) -> str:
    return "undetermined" if x is None else ("yes" if x else "no")


def _load(args) -> ControlProblem:
    try:
        return load_problem(args.problem)
    except ProblemError as exc:
        raise InputError(str(exc)) from None


def _curve(args, problem):
    if not getattr(args, "curve", None):
        return None
    try:
        curve = load_curve(args.curve, problem)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"bad curve file: {exc}") from None
    params = {n: v for n, v in args.param}
    return curve.bind(params) if params else curve


# --- commands ---------------------------------------------------------------


def cmd_derive(args) -> int:
    problem = _load(args)
    opts = _options(args, problem)
    trees = {}
    for p0 in _p0s(args.p0):
        trees[p0] = run_algorithm(build_hamiltonian(problem, p0), opts)
    if args.format == "structured":
        _emit(_structured({f"p0={p0}": t.to_dict() for p0, t in trees.items()}), args.out)
    else:
        _emit("".join(render_tree(t) for t in trees.values()), args.out)
    return EXIT_BUDGET if any(t.status != "complete" for t in trees.values()) else EXIT_OK


def _classify(args):
    problem = _load(args)
    opts = _options(args, problem)
    curve = _curve(args, problem)
    verdict = classify(problem, opts, curve=curve)
    return problem, verdict


def cmd_classify(args) -> int:
    _, verdict = _classify(args)
    if args.format == "structured":
        d = verdict.to_dict()
        d.pop("trees")
        _emit(_structured(d), args.out)
    else:
        _emit(render_verdict(verdict), args.out)
    budget = "budget" in " ".join(verdict.diagnostics)
    return EXIT_BUDGET if budget else EXIT_OK


def cmd_report(args) -> int:
    problem, verdict = _classify(args)
    notes = list(problem.notes)
    if args.format == "structured":
        d = verdict.to_dict()
        d["problem"] = problem.name
        d["report_notes"] = notes
        _emit(_structured(d), args.out)
    else:
        text = [f"problem: {problem.name or args.problem}", ""]
        text.append(render_tree(verdict.abnormal_tree))
        text.append(render_tree(verdict.normal_tree))
        text.append(render_verdict(verdict))
        text += [f"note: {n}\n" for n in notes]
        _emit("\n".join(text), args.out)
    budget = any(t.status != "complete" for t in (verdict.abnormal_tree, verdict.normal_tree))
    return EXIT_BUDGET if budget else EXIT_OK


def cmd_integrate(args) -> int:
    problem = _load(args)
    opts = _options(args, problem)
    p0 = int(args.p0)
    hs = build_hamiltonian(problem, p0)
    tree = run_algorithm(hs, opts)
    if tree.status != "complete":
        print("constraint algorithm did not finish: " + "; ".join(tree.diagnostics), file=sys.stderr)
        return EXIT_BUDGET
    final = tree.final()
    if args.leaf is not None:
        leaf = tree.nodes.get(args.leaf)
        if leaf is None or leaf not in final:
            raise InputError(f"invalid leaf id {args.leaf!r}; final leaves: {', '.join(b.id for b in final) or 'none'}")
    elif len(final) == 1:
        leaf = final[0]
    else:
        raise InputError(f"choose a leaf with --leaf; final leaves: {', '.join(b.id for b in final) or 'none'}")
    params: Dict[str, Fraction] = {n: v for n, v in args.param}
    try:
        init = InitialData.load(args.init, params)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"bad initial data file: {exc}") from None
    span = problem.interval if problem.interval else (Fraction(0), Fraction(1))
    try:
        tr = integrate(hs, leaf, init, (float(span[0]), float(span[1])), args.h, args.tol_drift)
    except ConstraintViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ResidualBlowUp as exc:
        _emit(exc.trajectory.dump(), args.out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(tr.dump(), args.out)
    status = EXIT_OK
    report = {"leaf": leaf.id, "max_residual": f"{tr.max_residual:.17g}",
              "max_H_drift": f"{tr.max_h_drift:.17g}", "notes": list(tr.notes)}
    if not args.skip_endpoints and problem.endpoints is not None:
        ep = verify_endpoints(tr, problem, args.tol_accept, {n: float(v) for n, v in params.items()})
        report["endpoints"] = ep.to_dict()
        if not ep.passed:
            status = EXIT_NUMERIC
    text = json.dumps(report, indent=2) + "\n" if args.format == "structured" else _render_report(report)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stderr.write(text)
    return status


def _render_report(report: dict) -> str:
    lines = [f"leaf {report['leaf']}: max residual {report['max_residual']}, max |H - H(t0)| {report['max_H_drift']}"]
    lines += report["notes"]
    ep = report.get("endpoints")
    if ep:
        for row in ep["components"]:
            mark = "ok" if row["pass"] else "FAIL"
            lines.append(f"endpoint {row['end']} {row['component']}: expected {row['expected']} "
                         f"got {row['actual']} deviation {row['deviation']} {mark}")
        lines.append("endpoints " + ("pass" if ep["passed"] else "fail") + f" at tolerance {ep['tol']:g}")
    return "\n".join(lines) + "\n"


COMMANDS = {"derive": cmd_derive, "classify": cmd_classify, "integrate": cmd_integrate, "report": cmd_report}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, ProblemError, IntegrationError, NonlinearVelocityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
