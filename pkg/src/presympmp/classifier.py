"""Abnormal / normal / strictly abnormal classification of extremals.

Tree-level verdicts compare the projections of the final constraint
submanifolds for ``p0 = 0`` and ``p0 = -1``; curve-level verdicts test a
single closed-form extremal for a normal lift.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .engine import AlgorithmOptions, Branch, ConstraintTree, run_algorithm
from .hamiltonian import HamiltonianSystem, build_hamiltonian
from .model import ControlProblem, affine_decomposition, parse_pin
from .symexpr import Expr, Poly, Var, constraint_form, differentiate, factor, parse, substitute
from .symexpr.ideal import (
    decide_zero,
    extend_bindings,
    linear_solution,
    nonzero_factors,
    sample_points,
    strip_nonzero,
    triangularize,
)

YES, NO, UNDETERMINED = "yes", "no", "undetermined"

STRICTNESS = {
    "i": "all-abnormal-strict",
    "ii": "all-normal-strict",
    "iii": "no-strict-abnormal",
    "iv": "locally-abnormal",
    "v": "coincide",
}

LOCALLY_ABNORMAL_GLOSS = (
    "strict abnormal extremals exist, but only locally: an extremal may have pieces "
    "in P where it is locally normal"
)


@dataclass
class ProjectionDescription:
    branch_id: str
    target: str
    eliminated: List[str]
    equations: List[Expr]
    inequations: List[Expr]
    exact: bool
    method: str = "exact-elimination"
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "branch": self.branch_id,
            "target": self.target,
            "eliminated": self.eliminated,
            "equations": [str(e) for e in self.equations],
            "inequations": [str(q) for q in self.inequations],
            "exact": self.exact,
            "method": self.method,
            "notes": list(self.notes),
        }


def _num(e: Expr) -> Expr:
    return Expr(e.num, _reduced=True)


def _minors(rows: List[List[Expr]], size: int) -> List[Expr]:
    out = []
    for ri in itertools.combinations(range(len(rows)), size):
        for ci in itertools.combinations(range(len(rows[0])), size):
            out.append(_det([[rows[r][c] for c in ci] for r in ri]))
    return out


def _det(m: List[List[Expr]]) -> Expr:
    if len(m) == 1:
        return m[0][0]
    total = Expr.const(0)
    for j, a in enumerate(m[0]):
        if a.is_zero():
            continue
        sub = [row[:j] + row[j + 1:] for row in m[1:]]
        term = a * _det(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


def _linear_coeffs(e: Expr, vars_: Sequence[Var]):
    """``(coeffs, constant)`` if ``e`` is affine in ``vars_`` jointly, else None."""
    p = e.num
    vs = set(vars_)
    coeffs = {v: {} for v in vars_}
    const = {}
    for m, c in p.terms.items():
        hit = [(v, k) for v, k in m if v in vs]
        if not hit:
            const[m] = c
            continue
        if len(hit) > 1 or hit[0][1] != 1:
            return None
        v = hit[0][0]
        rest = tuple((w, k) for w, k in m if w != v)
        coeffs[v][rest] = coeffs[v].get(rest, 0) + c
    return ({v: Expr(Poly(t), _reduced=True) for v, t in coeffs.items()}, Expr(Poly(const), _reduced=True))


def project_leaf(leaf: Branch, hs: HamiltonianSystem, target: str = "M") -> ProjectionDescription:
    """Eliminate momenta (and controls for ``target="M"``) from a final leaf."""
    if target not in ("M", "MxU"):
        raise ValueError("target must be 'M' or 'MxU'")
    momenta = list(hs.momenta)
    elim = set(momenta) | (set(hs.controls) if target == "M" else set())
    elim_sorted = sorted(elim, key=lambda v: v.key)
    desc = ProjectionDescription(leaf.id, target, [v.name for v in elim_sorted], [], [], True)
    if leaf.status == "empty":
        desc.notes.append("empty leaf")
        return desc
    eqs = [_num(Expr.of(v) - rhs) for v, rhs in leaf.point_subst().items()]
    eqs += [g for _, g in leaf.residual]
    ineqs = leaf.nonzero()
    solved: Dict[Var, Expr] = {}
    progress = True
    while progress:
        progress = False
        for i, g in enumerate(eqs):
            for v in sorted(g.variables() & elim, key=lambda v: v.key):
                sol = linear_solution(g, v, ineqs, allow_nonconstant=True)
                if sol is None:
                    continue
                solved = extend_bindings(solved, v, sol)
                rest = eqs[:i] + eqs[i + 1:]
                eqs = [r for r in (_num(substitute(x, {v: sol})) for x in rest) if not r.is_zero()]
                new_ineqs = []
                for q in ineqs:
                    r = _num(substitute(q, {v: sol}))
                    if r.is_zero():
                        desc.notes.append(f"inequation {q} vanishes after eliminating {v}")
                        desc.exact = False
                        continue
                    for f, _ in factor(r):
                        if f not in new_ineqs:
                            new_ineqs.append(f)
                ineqs = new_ineqs
                progress = True
                break
            if progress:
                break
    kept_eqs = [constraint_form(g) for g in eqs if not (g.variables() & elim)]
    hard = [g for g in eqs if g.variables() & elim]
    kept_ineqs = [q for q in ineqs if not (q.variables() & elim)]
    touched = set().union(*(g.variables() for g in hard)) & elim if hard else set()
    free_moms = [p for p in momenta if p not in solved and p not in touched]
    need_nonzero_covector = hs.p0 == 0
    if hard:
        moms_in = sorted(touched & set(momenta), key=lambda v: v.key)
        homog = all(touched <= set(momenta) and _homogeneous(g, moms_in) for g in hard)
        if homog:
            desc.method = "rank-criterion"
            if need_nonzero_covector and not free_moms and len(hard) >= len(moms_in):
                rows = [[_linear_coeffs(g, moms_in)[0][p] for p in moms_in] for g in hard]
                for mnr in _minors(rows, len(moms_in)):
                    mnr = _num(mnr)
                    if not mnr.is_zero():
                        kept_eqs.append(constraint_form(mnr))
        elif len(hard) == 1 and _linear_coeffs(hard[0], sorted(touched, key=lambda v: v.key)):
            coeffs, const = _linear_coeffs(hard[0], sorted(touched, key=lambda v: v.key))
            gens = [c for c in coeffs.values() if not c.is_zero()] + kept_eqs
            tri = triangularize(gens, kept_ineqs)
            if not tri.contradiction and not decide_zero(const, gens, kept_ineqs).result:
                desc.exact = False
                desc.notes.append(f"solvability of {hard[0]} in the eliminated variables is not decided")
            if need_nonzero_covector and not free_moms:
                desc.exact = False
                desc.notes.append("nonzero covector condition not decided")
        else:
            desc.exact = False
            desc.notes.append("leftover equations are not linear in the eliminated variables")
    elif need_nonzero_covector and not free_moms:
        rhs = [solved[p] for p in momenta if p in solved]
        if not any(r.is_constant() and not r.is_zero() for r in rhs):
            desc.exact = False
            desc.notes.append("nonzero covector condition not decided")
    for q in ineqs:
        if q.variables() & elim and q.variables() & touched:
            desc.exact = False
            desc.notes.append(f"inequation {q} constrains the eliminated variables")
    if not desc.exact:
        desc.method = "sampling"
    desc.equations = _dedupe(kept_eqs)
    desc.inequations = _dedupe(kept_ineqs)
    return desc


def _homogeneous(g: Expr, moms: Sequence[Var]) -> bool:
    lc = _linear_coeffs(g, moms)
    return lc is not None and lc[1].is_zero()


def _dedupe(xs: List[Expr]) -> List[Expr]:
    out = []
    for x in xs:
        if not x.is_constant() and x not in out:
            out.append(x)
    return out


# --- projection comparisons ------------------------------------------------


def _intersection_empty(a: ProjectionDescription, b: ProjectionDescription):
    """``(empty?, method)`` for two exact projections; empty? may be None."""
    tri = triangularize(a.equations + b.equations, a.inequations + b.inequations)
    if tri.contradiction:
        return True, "exact-elimination"
    if not tri.residual:
        return False, "exact-elimination"
    pts = sample_points(tri, [], count=1)
    if pts:
        return False, "sampling"
    return None, "sampling"


def _contained(a: ProjectionDescription, b: ProjectionDescription):
    """Is ``a`` contained in ``b``?  Returns ``(answer, method)``; answer may be None."""
    methods = set()
    for g in b.equations:
        t = decide_zero(g, a.equations, a.inequations)
        methods.add(t.method)
        if not t.result:
            return (False if t.method != "undecided" else None), _method(methods)
    tri = triangularize(a.equations, a.inequations)
    nz = tri.nonzero
    for q in b.inequations:
        r = tri.reduce(q)
        fs, _ = strip_nonzero(r, nz)
        if r.is_zero():
            return False, _method(methods | {"triangular"})
        if fs:
            return None, _method(methods | {"triangular"})
    return True, _method(methods | {"triangular"})


def _method(ms) -> str:
    if "sampling" in ms or "undecided" in ms:
        return "sampling"
    if "momentum-linear" in ms:
        return "rank-criterion"
    return "exact-elimination"


def _union_contained(As: List[ProjectionDescription], Bs: List[ProjectionDescription]):
    """Is the union of ``As`` inside the union of ``Bs``?"""
    methods = []
    for a in As:
        found = False
        unknown = False
        for b in Bs:
            ans, m = _contained(a, b)
            methods.append(m)
            if ans:
                found = True
                break
            if ans is None:
                unknown = True
        if not found:
            if unknown or len(Bs) > 1:
                return None, _method(methods)
            return False, _method(methods)
    return True, _method(methods)


# --- verdict ---------------------------------------------------------------


@dataclass
class Verdict:
    abnormal_tree: ConstraintTree
    normal_tree: ConstraintTree
    abnormal_exists: str
    normal_exists: str
    strictness: str
    flags: Dict[str, Optional[bool]]
    method: str
    target: str
    projections: Dict[str, List[ProjectionDescription]]
    free_time_notes: Optional[Dict[str, object]] = None
    notes: List[str] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)
    curve: Optional[Dict[str, object]] = None

    def to_dict(self) -> dict:
        return {
            "abnormal_exists": self.abnormal_exists,
            "normal_exists": self.normal_exists,
            "strictness": self.strictness,
            "case_flags": {k: self.flags.get(k) for k in ("i", "ii", "iii", "iv", "v")},
            "method": self.method,
            "target": self.target,
            "free_time": self.free_time_notes,
            "projections": {k: [p.to_dict() for p in v] for k, v in self.projections.items()},
            "curve": self.curve,
            "notes": list(self.notes),
            "diagnostics": list(self.diagnostics),
            "trees": {"abnormal": self.abnormal_tree.to_dict(), "normal": self.normal_tree.to_dict()},
        }


def inputs_independent(problem: ControlProblem) -> bool:
    """Control-affine with input fields independent at every point."""
    dec = affine_decomposition(problem)
    if dec is None:
        return False
    _, inputs = dec
    k = len(inputs)
    if k == 0:
        return False
    rows = [list(y) for y in inputs]
    minors = [m for m in _minors(rows, k) if not m.is_zero()]
    if not minors:
        return False
    if any(m.is_constant() for m in minors):
        return True
    if not all(m.is_polynomial() for m in minors):
        return False
    return triangularize([_num(m) for m in minors]).contradiction is not None


def classify(problem: ControlProblem, opts: Optional[AlgorithmOptions] = None,
             curve: Optional["ClosedFormCurve"] = None) -> Verdict:
    opts = opts or AlgorithmOptions()
    pins = tuple(opts.pins) + tuple(problem.pins)
    o0 = AlgorithmOptions(max_steps=opts.max_steps, max_branches=opts.max_branches, pins=pins,
                          free_time=opts.free_time)
    o1 = AlgorithmOptions(max_steps=opts.max_steps, max_branches=opts.max_branches,
                          free_time=opts.free_time)
    hs0 = build_hamiltonian(problem, 0)
    hs1 = build_hamiltonian(problem, -1)
    t0 = run_algorithm(hs0, o0)
    t1 = run_algorithm(hs1, o1)
    free = t0.free_time
    notes: List[str] = []
    diagnostics = [f"abnormal: {d}" for d in t0.diagnostics] + [f"normal: {d}" for d in t1.diagnostics]
    if pins:
        notes.append("abnormal run restricted to the pinned branch " + ", ".join(f"{p} != 0" for p in pins))
    leaves0, leaves1 = t0.final(), t1.final()
    ab = YES if leaves0 else (UNDETERMINED if t0.status != "complete" else NO)
    no = YES if leaves1 else (UNDETERMINED if t1.status != "complete" else NO)
    target = "MxU" if inputs_independent(problem) else "M"
    proj0 = [project_leaf(b, hs0, target) for b in leaves0]
    proj1 = [project_leaf(b, hs1, target) for b in leaves1]
    flags: Dict[str, Optional[bool]] = {k: False for k in STRICTNESS}
    methods = ["exact-elimination"]
    strictness = "undetermined"
    if UNDETERMINED in (ab, no):
        flags = {k: None for k in STRICTNESS}
        diagnostics.append("budget exhausted: projections not compared")
    elif not all(p.exact for p in proj0 + proj1):
        flags = {k: None for k in STRICTNESS}
        methods.append("sampling")
        diagnostics.append("some projections are not exact; equality of projections not certified")
        if ab == YES and no == NO:
            flags.update(i=True, ii=False, iii=False, iv=False, v=False)
            strictness = STRICTNESS["i"]
        elif ab == NO and no == YES:
            flags.update(i=False, ii=True, iii=False, iv=False, v=False)
            strictness = STRICTNESS["ii"]
    else:
        empty0, empty1 = ab == NO, no == NO
        P_empty: Optional[bool] = True
        if not (empty0 or empty1):
            P_empty = True
            for a in proj0:
                for b in proj1:
                    e, m = _intersection_empty(a, b)
                    methods.append(m)
                    if e is False:
                        P_empty = False
                    elif e is None and P_empty:
                        P_empty = None
        if P_empty is None:
            flags = {k: None for k in STRICTNESS}
        elif P_empty:
            flags["i"] = not empty0
            flags["ii"] = not empty1
            if not empty0:
                strictness = STRICTNESS["i"]
            elif not empty1:
                strictness = STRICTNESS["ii"]
            else:
                strictness = "none"
                notes.append("no extremals: both final constraint submanifolds are empty")
        else:
            sub01, m1 = _union_contained(proj0, proj1)
            sub10, m2 = _union_contained(proj1, proj0)
            methods += [m1, m2]
            if sub01 is None:
                flags = {k: None for k in STRICTNESS}
            else:
                flags["iii"] = sub01
                flags["iv"] = not sub01
                flags["v"] = bool(sub01 and sub10) if sub10 is not None else None
                if flags["v"]:
                    strictness = STRICTNESS["v"]
                elif sub01:
                    strictness = STRICTNESS["iii"]
                else:
                    strictness = STRICTNESS["iv"]
                    notes.append(LOCALLY_ABNORMAL_GLOSS)
    if not free:
        notes.append("fixed time: constancy of H is not imposed on the final constraint submanifolds, "
                     "which are therefore supersets of the biextremal set")
    ft = None
    if free:
        ft = _free_time_findings(t0, leaves0, problem)
    verdict = Verdict(t0, t1, ab, no, strictness, flags, _method(set(_canon(methods))), target,
                      {"abnormal": proj0, "normal": proj1}, ft, notes, diagnostics)
    if curve is not None:
        verdict.curve = curve_verdict(curve, problem, proj0, leaves1, hs1)
    return verdict


def _canon(ms):
    for m in ms:
        yield {"exact-elimination": "triangular", "rank-criterion": "momentum-linear"}.get(m, m)


def _free_time_findings(t0: ConstraintTree, leaves0: List[Branch], problem: ControlProblem) -> dict:
    pre = [b for b in t0.nodes.values() if b.h_implied is not None]
    out = {"only_zero_covectors": False, "abnormal_strict_no_normal": False, "text": []}
    if t0.status != "complete":
        out["text"].append("undetermined: abnormal tree incomplete")
        return out
    if not leaves0:
        out["only_zero_covectors"] = True
        out["text"].append("N_f^[0] has only zero covectors: there are no abnormal extremals")
    elif pre and all(b.h_implied for b in pre):
        out["abnormal_strict_no_normal"] = True
        cond = "" if (problem.cost.is_constant() and not problem.cost.is_zero()) else " as long as F does not vanish"
        out["text"].append("every abnormal extremal is strict and there are no normal extremals" + cond)
    return out


# --- curve-level check ------------------------------------------------------


@dataclass
class ClosedFormCurve:
    time: Var
    states: Dict[str, Expr]
    controls: Dict[str, Expr]
    assumptions: Tuple[Expr, ...] = ()
    interval: Tuple[Fraction, Fraction] = (Fraction(0), Fraction(1))

    def bind(self, values: Dict[str, object]) -> "ClosedFormCurve":
        """Substitute numeric or symbolic values for parameters."""
        sub = {}
        for e in list(self.states.values()) + list(self.controls.values()):
            for v in e.variables():
                if v.name in values:
                    sub[v] = Expr.of(values[v.name]) if not isinstance(values[v.name], str) else parse(values[v.name])
        s = lambda e: substitute(e, sub)
        assumptions = tuple(q for q in (s(a) for a in self.assumptions) if not q.is_constant())
        return ClosedFormCurve(self.time, {k: s(e) for k, e in self.states.items()},
                               {k: s(e) for k, e in self.controls.items()}, assumptions, self.interval)


def load_curve(source: Union[str, Path, dict], problem: ControlProblem) -> ClosedFormCurve:
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if isinstance(source, Path) or not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        data = json.loads(text)
    tname = data.get("time", "t")
    if tname in problem.table():
        raise ValueError(f"time variable {tname!r} clashes with a problem variable")
    t = Var(tname, "parameter")
    table = {v.name: v for v in problem.parameters}
    table[tname] = t
    states = {n: parse(str(data["states"][n]), table, strict=True) for n in (v.name for v in problem.state_vars)}
    controls = {n: parse(str(data["controls"][n]), table, strict=True) for n in (v.name for v in problem.control_vars)}
    assumptions = tuple(parse_pin(s, table) for s in data.get("assume", []))
    interval = tuple(Fraction(str(x)) for x in data.get("interval", [0, 1]))
    return ClosedFormCurve(t, states, controls, assumptions, interval)


@dataclass
class LiftResult:
    status: str  # exists | impossible | undetermined
    reason: str = ""
    contradiction: Optional[Expr] = None
    witness: Optional[Dict[str, Expr]] = None
    conditions: List[Expr] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason,
            "contradiction": None if self.contradiction is None else str(self.contradiction),
            "witness": None if self.witness is None else {k: str(v) for k, v in self.witness.items()},
            "conditions": [str(c) for c in self.conditions],
        }


def verify_integral_curve(curve: ClosedFormCurve, problem: ControlProblem) -> None:
    sub = _curve_subst(curve, problem)
    for x, comp in zip(problem.state_vars, problem.vector_field):
        lhs = differentiate(curve.states[x.name], curve.time)
        rhs = substitute(comp, sub)
        if not (lhs - rhs).is_zero():
            raise ValueError(f"not an integral curve: d{x.name}/dt - X = {lhs - rhs}")


def _curve_subst(curve: ClosedFormCurve, problem: ControlProblem) -> Dict[Var, Expr]:
    sub = {x: curve.states[x.name] for x in problem.state_vars}
    sub.update({u: curve.controls[u.name] for u in problem.control_vars})
    return sub


def _nonzero_along(e: Expr, t: Var, assumed: Sequence[Expr]) -> bool:
    """Is ``e`` (free of momenta) nonzero as a function of ``t``?"""
    if e.is_zero():
        return False
    p = e.num
    parts = p.coefficients_in(t)
    for c in parts.values():
        ce = Expr(c, _reduced=True)
        if ce.is_constant():
            return True
        if all(f in assumed for f, _ in factor(ce)):
            return True
    return False


def check_normal_lift_along(curve: ClosedFormCurve, problem: ControlProblem,
                            opts: Optional[AlgorithmOptions] = None, max_rounds: int = 32) -> LiftResult:
    """Search for a covector with ``p0 = -1`` along a closed-form curve."""
    verify_integral_curve(curve, problem)
    hs = build_hamiltonian(problem, -1)
    tree = run_algorithm(hs, opts or AlgorithmOptions())
    leaves = tree.final()
    if not leaves:
        if tree.status != "complete":
            return LiftResult("undetermined", "normal constraint tree incomplete")
        return LiftResult("impossible", "the normal final constraint submanifold is empty")
    results = [_lift_on_leaf(curve, problem, hs, leaf, max_rounds) for leaf in leaves]
    for r in results:
        if r.status == "exists":
            return r
    if all(r.status == "impossible" for r in results):
        return results[0]
    return next(r for r in results if r.status == "undetermined")


def _lift_on_leaf(curve, problem, hs, leaf: Branch, max_rounds: int) -> LiftResult:
    t = curve.time
    sub = _curve_subst(curve, problem)
    momenta = list(hs.momenta)
    assumed: List[Expr] = []
    for a in curve.assumptions:
        for f, _ in factor(_num(a)):
            assumed.append(f)
    B = [substitute(b, sub) for b in hs.momentum_rhs]

    def D(e: Expr) -> Expr:
        total = differentiate(e, t)
        for p, bj in zip(momenta, B):
            if p in e.variables():
                total = total + differentiate(e, p) * bj
        return total

    relations = [c.expr for c in leaf.equations]
    relations += [Expr.of(v) - rhs for v, rhs in leaf.point_subst().items()]
    pending = [_num(substitute(r, sub)) for r in relations]
    bindings: Dict[Var, Expr] = {}
    residual: List[Expr] = []
    seen = set()
    rounds = 0
    while pending:
        rounds += 1
        if rounds > max_rounds * (len(momenta) + 4):
            return LiftResult("undetermined", "derivation budget exhausted")
        r = _num(substitute(pending.pop(0), bindings)) if bindings else pending.pop(0)
        if r.is_zero() or r in seen:
            continue
        seen.add(r)
        if not (r.variables() & set(momenta)):
            if _nonzero_along(r, t, assumed):
                return LiftResult("impossible",
                                  f"along the curve the relation {r} = 0 is forced but its left side is nonzero",
                                  contradiction=r)
            conds = [Expr(c, _reduced=True) for c in r.num.coefficients_in(t).values()]
            return LiftResult("undetermined", f"lift exists only if {r} = 0 identically in {t.name}",
                              contradiction=r, conditions=conds)
        pick = None
        for p in sorted(r.variables() & set(momenta), key=lambda v: v.key):
            coeffs = r.num.coefficients_in(p)
            if r.num.degree_in(p) != 1:
                continue
            c = Expr(coeffs[1], _reduced=True)
            if c.free_of(momenta) and _nonzero_along(c, t, assumed):
                pick = (p, -Expr(coeffs.get(0, type(r.num)()), _reduced=True) / c)
                break
        if pick is None:
            residual.append(r)
        else:
            bindings = extend_bindings(bindings, *pick)
            again, residual = residual, []
            pending = again + pending
        pending.append(_num(D(r)))
    if residual:
        return LiftResult("undetermined", "unsolved relations remain: " + ", ".join(map(str, residual)))
    witness = {p.name: bindings.get(p, Expr.of(p)) for p in momenta}
    free = [p for p in momenta if p not in bindings]
    zero_choice = {p.name: substitute(bindings.get(p, Expr.of(p)), {q: 0 for q in free}) for p in momenta}
    return LiftResult("exists", "relations closed under differentiation along the curve",
                      witness=witness, conditions=[],
                      contradiction=None) if not free else LiftResult(
        "exists", "relations closed under differentiation along the curve; free momenta "
        + ", ".join(p.name for p in free) + " set to zero in the witness",
        witness=zero_choice)


def curve_verdict(curve: ClosedFormCurve, problem: ControlProblem, proj0: List[ProjectionDescription],
                  leaves1, hs1) -> dict:
    sub = _curve_subst(curve, problem)
    inside = []
    for p in proj0:
        if p.target == "MxU" or p.target == "M":
            ok = all(substitute(e, sub).is_zero() for e in p.equations)
            ok = ok and all(not substitute(q, sub).is_zero() for q in p.inequations)
            inside.append(ok)
    lift = check_normal_lift_along(curve, problem)
    in_abnormal = any(inside)
    if lift.status == "impossible" and in_abnormal:
        finding = "strict abnormal"
    elif lift.status == "exists" and in_abnormal:
        finding = "abnormal and normal"
    elif lift.status == "exists":
        finding = "normal"
    else:
        finding = "undetermined"
    return {"in_abnormal_projection": in_abnormal, "normal_lift": lift.to_dict(), "finding": finding}
