"""Optimal control problem data and the JSON problem-file format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .symexpr import Expr, Var, differentiate, parse, substitute

Interval = Tuple[Fraction, Fraction]


class ProblemError(ValueError):
    """Problem file or problem data failed validation."""


@dataclass(frozen=True)
class ControlProblem:
    state_vars: Tuple[Var, ...]
    control_vars: Tuple[Var, ...]
    parameters: Tuple[Var, ...]
    vector_field: Tuple[Expr, ...]
    cost: Expr
    time_mode: str = "fixed"
    interval: Optional[Interval] = (Fraction(0), Fraction(1))
    endpoints: Optional[Tuple[Tuple[Expr, ...], Tuple[Expr, ...]]] = None
    momentum_names: Optional[Tuple[str, ...]] = None
    control_bounds: Optional[Dict[str, Tuple[Fraction, Fraction]]] = None
    pins: Tuple[Expr, ...] = ()
    name: str = ""
    notes: Tuple[str, ...] = ()

    def __post_init__(self):
        m, k = len(self.state_vars), len(self.control_vars)
        if k > m:
            raise ProblemError(f"dimension mismatch: {k} controls exceed {m} states (need k <= m)")
        if len(self.vector_field) != m:
            raise ProblemError(f"vector_field has {len(self.vector_field)} components, expected {m}")
        allowed = set(self.state_vars) | set(self.control_vars) | set(self.parameters)
        for i, comp in enumerate(self.vector_field):
            bad = comp.variables() - allowed
            if bad:
                raise ProblemError(f"vector_field[{i}] depends on {_names(bad)}; only states, controls and parameters are allowed")
        bad = self.cost.variables() - allowed
        if bad:
            raise ProblemError(f"cost depends on {_names(bad)}; only states, controls and parameters are allowed")
        if self.time_mode not in ("fixed", "free"):
            raise ProblemError(f"unknown time mode {self.time_mode!r}")
        if self.time_mode == "fixed" and self.interval and not self.interval[0] < self.interval[1]:
            raise ProblemError("fixed time interval needs a < b")
        names = [v.name for v in self.all_vars()]
        if len(set(names)) != len(names):
            raise ProblemError("variable names must be unique")

    @property
    def m(self) -> int:
        return len(self.state_vars)

    @property
    def k(self) -> int:
        return len(self.control_vars)

    def all_vars(self) -> List[Var]:
        return list(self.state_vars) + list(self.control_vars) + list(self.parameters)

    def table(self) -> Dict[str, Var]:
        return {v.name: v for v in self.all_vars()}


def _names(vs) -> str:
    return ", ".join(sorted(v.name for v in vs))


@dataclass(frozen=True)
class CotangentChart:
    """Momenta ``p_j`` paired with the states, plus the constant ``p0``."""

    state_vars: Tuple[Var, ...]
    momentum_vars: Tuple[Var, ...]
    p0: int

    def __post_init__(self):
        if len(self.momentum_vars) != len(self.state_vars):
            raise ProblemError("one momentum per state is required")
        if self.p0 not in (0, -1):
            raise ProblemError("p0 must be 0 or -1")

    def pairs(self):
        return list(zip(self.state_vars, self.momentum_vars))


def momentum_vars(problem: ControlProblem) -> Tuple[Var, ...]:
    names = problem.momentum_names or tuple(f"lam_{v.name}" for v in problem.state_vars)
    if len(names) != problem.m:
        raise ProblemError(f"momentum_names has {len(names)} entries, expected {problem.m}")
    taken = set(problem.table())
    moms = []
    for n in names:
        if n in taken:
            raise ProblemError(f"momentum name {n!r} clashes with a problem variable")
        moms.append(Var(n, "momentum"))
    if len({v.name for v in moms}) != len(moms):
        raise ProblemError("momentum names must be unique")
    return tuple(moms)


def make_chart(problem: ControlProblem, p0: int) -> CotangentChart:
    return CotangentChart(problem.state_vars, momentum_vars(problem), p0)


_KNOWN_FIELDS = {"name", "states", "controls", "parameters", "vector_field", "cost", "time",
                 "endpoints", "momentum_names", "control_bounds", "pins", "notes"}


def parse_pin(text: str, table) -> Expr:
    """``"expr != 0"`` or bare ``"expr"`` to the expression asserted nonzero."""
    body = text.split("!=")
    if len(body) == 2:
        if body[1].strip() != "0":
            raise ProblemError(f"pins must have the form '<expr> != 0', got {text!r}")
        text = body[0]
    elif len(body) > 2:
        raise ProblemError(f"malformed pin {text!r}")
    return parse(text, table, strict=True)


def problem_from_dict(data: dict) -> ControlProblem:
    if not isinstance(data, dict):
        raise ProblemError("problem file must hold a JSON object")
    unknown = set(data) - _KNOWN_FIELDS
    if unknown:
        raise ProblemError(f"unknown problem fields: {', '.join(sorted(unknown))}")
    for req in ("states", "controls", "vector_field", "cost"):
        if req not in data:
            raise ProblemError(f"missing required field {req!r}")
    try:
        states = tuple(Var(n, "state") for n in data["states"])
        controls = tuple(Var(n, "control") for n in data["controls"])
        params = tuple(Var(n, "parameter") for n in data.get("parameters", []))
    except (TypeError, ValueError) as exc:
        raise ProblemError(str(exc)) from None
    table = {v.name: v for v in states + controls + params}
    mom_names = data.get("momentum_names")
    if mom_names is not None:
        mom_names = tuple(mom_names)
        for n in mom_names:
            table.setdefault(n, Var(n, "momentum"))

    def ex(s):
        try:
            return parse(str(s), table, strict=True)
        except ValueError as exc:
            raise ProblemError(str(exc)) from None

    vf = data["vector_field"]
    if not isinstance(vf, list):
        raise ProblemError("vector_field must be an array of expression strings")
    time = data.get("time", {"fixed": [0, 1]})
    if time == "free":
        mode, interval = "free", None
    elif isinstance(time, dict) and set(time) == {"fixed"}:
        a, b = (Fraction(str(x)) for x in time["fixed"])
        mode, interval = "fixed", (a, b)
    else:
        raise ProblemError("time must be \"free\" or {\"fixed\": [a, b]}")
    endpoints = None
    if "endpoints" in data:
        ep = data["endpoints"]
        if not isinstance(ep, dict) or set(ep) != {"from", "to"}:
            raise ProblemError("endpoints must be {\"from\": [...], \"to\": [...]}")
        if len(ep["from"]) != len(states) or len(ep["to"]) != len(states):
            raise ProblemError("dimension mismatch in endpoints")
        endpoints = (tuple(ex(s) for s in ep["from"]), tuple(ex(s) for s in ep["to"]))
    bounds = None
    if "control_bounds" in data:
        bounds = {n: (Fraction(str(lo)), Fraction(str(hi))) for n, (lo, hi) in data["control_bounds"].items()}
    for n in mom_names or (f"lam_{v.name}" for v in states):
        table.setdefault(n, Var(n, "momentum"))
    pins = tuple(parse_pin(s, table) for s in data.get("pins", []))
    problem = ControlProblem(
        state_vars=states,
        control_vars=controls,
        parameters=params,
        vector_field=tuple(ex(s) for s in vf),
        cost=ex(data["cost"]),
        time_mode=mode,
        interval=interval,
        endpoints=endpoints,
        momentum_names=mom_names,
        control_bounds=bounds,
        pins=pins,
        name=str(data.get("name", "")),
        notes=tuple(str(n) for n in data.get("notes", [])),
    )
    momentum_vars(problem)
    return problem


def load_problem(source: Union[str, Path, dict]) -> ControlProblem:
    """Load from a dict, a JSON string, or a path to a JSON file."""
    if isinstance(source, dict):
        return problem_from_dict(source)
    text = str(source)
    if isinstance(source, Path) or not text.lstrip().startswith("{"):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ProblemError(f"cannot read problem file: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON: {exc}") from None
    return problem_from_dict(data)


def _num(x: Fraction):
    return int(x) if x.denominator == 1 else str(x)


def problem_to_dict(p: ControlProblem) -> dict:
    out: dict = {}
    if p.name:
        out["name"] = p.name
    out["states"] = [v.name for v in p.state_vars]
    out["controls"] = [v.name for v in p.control_vars]
    out["parameters"] = [v.name for v in p.parameters]
    out["vector_field"] = [str(e) for e in p.vector_field]
    out["cost"] = str(p.cost)
    out["time"] = "free" if p.time_mode == "free" else {"fixed": [_num(x) for x in p.interval]}
    if p.endpoints:
        out["endpoints"] = {"from": [str(e) for e in p.endpoints[0]], "to": [str(e) for e in p.endpoints[1]]}
    if p.momentum_names:
        out["momentum_names"] = list(p.momentum_names)
    if p.control_bounds:
        out["control_bounds"] = {n: [_num(lo), _num(hi)] for n, (lo, hi) in p.control_bounds.items()}
    if p.pins:
        out["pins"] = [f"{e} != 0" for e in p.pins]
    if p.notes:
        out["notes"] = list(p.notes)
    return out


def print_problem(p: ControlProblem) -> str:
    return json.dumps(problem_to_dict(p), indent=2)


def affine_decomposition(p: ControlProblem):
    """``(drift, inputs)`` with ``X = drift + sum_l u_l * inputs[l]``, or None."""
    controls = p.control_vars
    drift, inputs = [], [[] for _ in controls]
    zero = {u: 0 for u in controls}
    for comp in p.vector_field:
        if not comp.is_polynomial() and comp.den.variables() & set(controls):
            return None
        for u in controls:
            for w in controls:
                if not differentiate(differentiate(comp, u), w).is_zero():
                    return None
        drift.append(substitute(comp, zero))
        for i, u in enumerate(controls):
            inputs[i].append(differentiate(comp, u))
    return tuple(drift), tuple(tuple(y) for y in inputs)
