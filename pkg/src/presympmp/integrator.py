"""Fixed-step RK4 integration of Hamilton's equations on a stabilised branch.

No projection onto the branch is performed: the logged constraint residuals
audit the engine's claim that the reduced field is tangent to the branch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .engine import Branch
from .hamiltonian import HamiltonianSystem
from .model import ControlProblem
from .symexpr import Expr, Var, eval_at, parse, substitute


class IntegrationError(ValueError):
    """Base class for integration failures."""


class InitialDataError(IntegrationError):
    pass


class ConstraintViolation(InitialDataError):
    """Initial data off the branch (a numeric failure rather than an input error)."""


class FreeControlError(IntegrationError):
    pass


class ResidualBlowUp(IntegrationError):
    def __init__(self, msg: str, trajectory: "Trajectory"):
        super().__init__(msg)
        self.trajectory = trajectory


class StepRejected(IntegrationError):
    pass


INIT_TOL = 1e-12


def compile_expr(e: Expr, names: Sequence[str]) -> Callable[[Sequence[float]], float]:
    """Float evaluator taking values in the order of ``names``."""
    index = {n: i for i, n in enumerate(names)}

    def poly_src(p) -> str:
        terms = []
        for mono, c in p.terms.items():
            factors = [repr(float(c))]
            for v, k in mono:
                if v.name not in index:
                    raise KeyError(f"unbound variable {v.name}")
                ref = f"y[{index[v.name]}]"
                factors.append(ref if k == 1 else f"{ref}**{k}")
            terms.append("*".join(factors))
        return " + ".join(terms) if terms else "0.0"

    src = f"({poly_src(e.num)})"
    if not e.is_polynomial():
        src += f"/({poly_src(e.den)})"
    return eval(f"lambda y: {src}", {})  # noqa: S307 - source built from our own terms


@dataclass
class InitialData:
    values: Dict[str, float]

    @classmethod
    def load(cls, source: Union[str, Path, dict], params: Optional[Mapping[str, object]] = None) -> "InitialData":
        """Values may be numbers or expressions in the names bound by ``params``."""
        if isinstance(source, dict):
            data = source
        else:
            text = str(source)
            if isinstance(source, Path) or not text.lstrip().startswith("{"):
                text = Path(source).read_text()
            data = json.loads(text)
        if not isinstance(data, dict):
            raise InitialDataError("initial data must be a JSON object")
        env = {Var(n, "parameter"): Fraction(str(v)) for n, v in (params or {}).items()}
        table = {v.name: v for v in env}
        values = {}
        for k, v in data.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                values[str(k)] = float(v)
                continue
            try:
                e = parse(str(v), table, strict=True)
                values[str(k)] = float(eval_at(e, env))
            except (ValueError, KeyError) as exc:
                raise InitialDataError(f"initial value for {k}: {exc}") from None
        for n, v in env.items():
            values.setdefault(n.name, float(v))
        return cls(values)


@dataclass
class Trajectory:
    columns: List[str]
    times: List[float]
    samples: List[List[float]]
    residuals: List[float]
    h_drift: List[float]
    h_values: List[float]
    branch_id: str = ""
    notes: List[str] = field(default_factory=list)

    def column(self, name: str) -> List[float]:
        i = self.columns.index(name)
        return [row[i] for row in self.samples]

    def at(self, k: int) -> Dict[str, float]:
        return dict(zip(self.columns, self.samples[k]))

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def max_h_drift(self) -> float:
        return max(self.h_drift) if self.h_drift else 0.0

    def dump(self, sep: str = "\t") -> str:
        header = ["t"] + self.columns + ["residual", "H_drift"]
        lines = [sep.join(header)]
        for t, row, r, d in zip(self.times, self.samples, self.residuals, self.h_drift):
            lines.append(sep.join(_fmt(x) for x in [t] + row + [r, d]))
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _ordered(vs) -> List[Var]:
    return sorted(vs, key=lambda v: v.key)


def integrate(hs: HamiltonianSystem, branch: Branch, init: Union[InitialData, Mapping[str, float]],
              span: Tuple[float, float] = (0.0, 1.0), h: float = 1e-3, tol_drift: float = 1e-6) -> Trajectory:
    """Integrate the reduced Hamiltonian field on ``branch`` from ``init``.

    Controls fixed by the branch are evaluated from its bindings, controls
    with a solved velocity are integrated, and a control that is neither must
    be given a constant value in ``init``.
    """
    if branch.status != "stabilized":
        raise IntegrationError(f"branch {branch.id} is not a stabilized leaf")
    values = {k: float(v) for k, v in (init.values if isinstance(init, InitialData) else init).items()}
    t0, t1 = float(span[0]), float(span[1])
    if not h > 0:
        raise StepRejected("step size must be positive")
    if h > t1 - t0:
        raise StepRejected(f"step {h} exceeds the interval length {t1 - t0}")
    n = round((t1 - t0) / h)
    if abs(n * h - (t1 - t0)) > 1e-9 * max(1.0, t1 - t0):
        raise StepRejected(f"step {h} does not divide the interval [{t0}, {t1}]")

    problem = hs.problem
    subst = branch.point_subst()
    coords = list(hs.states) + list(hs.momenta)
    controls = list(hs.controls)
    vel = {u: branch.subst.get(hs.velocity_of(u)) for u in controls}
    bound_controls = [u for u in controls if u in subst]
    integrated = [u for u in controls if u not in subst and vel[u] is not None]
    held = [u for u in controls if u not in subst and vel[u] is None]
    for u in held:
        if u.name not in values:
            raise FreeControlError(
                f"control {u.name} is neither fixed by branch {branch.id} nor has a solved velocity; "
                f"give it a constant value in the initial data")
    params = list(problem.parameters)
    for v in params:
        if v.name not in values:
            raise InitialDataError(f"missing value for parameter {v.name}")
    free = [v for v in coords + integrated if v not in subst]
    for v in free:
        if v.name not in values:
            raise InitialDataError(f"missing initial value for {v.name}")

    # Point at t0: free variables from the data, bound ones from the branch
    # unless the data overrides them (then the residual check reports it).
    exact = {v: Fraction(values[v.name]) for v in free + held + params}
    point = {v.name: values[v.name] for v in free + held + params}
    for v, rhs in subst.items():
        if v.name in values:
            point[v.name] = values[v.name]
        else:
            point[v.name] = float(_eval_exact(rhs, exact, v))

    layout = coords + integrated  # the ODE state vector
    names = [v.name for v in layout] + [v.name for v in held] + [v.name for v in params]
    ctrl_fns = {u: compile_expr(subst[u], names) for u in bound_controls}
    # Right-hand sides with bound controls substituted.
    csub = {u: subst[u] for u in bound_controls}
    rhs_exprs = [substitute(e, csub) for e in hs.state_rhs] + [substitute(e, csub) for e in hs.momentum_rhs]
    rhs_exprs += [substitute(vel[u], csub) for u in integrated]
    rhs_fns = [compile_expr(e, names) for e in rhs_exprs]
    extras = [point[v.name] for v in held] + [point[v.name] for v in params]

    full_names = [v.name for v in coords] + [u.name for u in controls] + [v.name for v in params]
    checks = [(f"{c.expr} = 0", compile_expr(c.expr, full_names)) for c in branch.equations]
    checks += [(f"{v} = {rhs}", compile_expr(Expr.of(v) - rhs, full_names)) for v, rhs in subst.items()]
    ineq_fns = [(str(q), compile_expr(q, full_names)) for q in branch.inequations]
    H_fn = compile_expr(hs.H, full_names)

    columns = [v.name for v in _ordered(coords + controls)]
    col_index = [full_names.index(c) for c in columns]

    def full(y: List[float]) -> List[float]:
        arg = y + extras
        uvals = []
        for u in controls:
            if u in ctrl_fns:
                uvals.append(ctrl_fns[u](arg))
            elif u in integrated:
                uvals.append(y[layout.index(u)])
            else:
                uvals.append(point[u.name])
        return y[:len(coords)] + uvals + [point[v.name] for v in params]

    def field_(y: List[float]) -> List[float]:
        arg = y + extras
        return [f(arg) for f in rhs_fns]

    y = [point[v.name] for v in layout]
    f0 = full(y)
    for label, fn in checks:
        r = abs(fn(f0))
        if r > INIT_TOL:
            raise ConstraintViolation(f"initial data violates the branch constraint {label} (residual {r:.3g})")
    for label, fn in ineq_fns:
        if fn(f0) == 0:
            raise ConstraintViolation(f"initial data violates the branch inequation {label} != 0")

    H0 = H_fn(f0)
    tr = Trajectory(columns, [], [], [], [], [], branch.id)

    def log(t: float, fy: List[float]) -> float:
        res = max((abs(fn(fy)) for _, fn in checks), default=0.0)
        Hv = H_fn(fy)
        tr.times.append(t)
        tr.samples.append([fy[i] for i in col_index])
        tr.residuals.append(res)
        tr.h_values.append(Hv)
        tr.h_drift.append(abs(Hv - H0))
        return res

    log(t0, f0)
    for k in range(1, n + 1):
        k1 = field_(y)
        k2 = field_([a + 0.5 * h * b for a, b in zip(y, k1)])
        k3 = field_([a + 0.5 * h * b for a, b in zip(y, k2)])
        k4 = field_([a + h * b for a, b in zip(y, k3)])
        y = [a + h / 6.0 * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4)]
        if not all(math.isfinite(a) for a in y):
            raise ResidualBlowUp(f"non-finite value at step {k}", tr)
        res = log(t0 + k * h, full(y))
        if res > tol_drift:
            worst = max(checks, key=lambda c: abs(c[1](full(y))))[0]
            raise ResidualBlowUp(
                f"constraint residual {res:.3g} exceeds drift tolerance {tol_drift:g} at t = {t0 + k * h:.6g} "
                f"({worst})", tr)
    if problem.time_mode == "free":
        worst = max(abs(v) for v in tr.h_values)
        tr.notes.append(f"max |H| = {worst:.3g}")
    return tr


def _eval_exact(rhs: Expr, exact: Dict[Var, Fraction], target: Var) -> Fraction:
    try:
        return eval_at(rhs, exact)
    except KeyError as exc:
        raise InitialDataError(f"cannot evaluate bound variable {target.name}: {exc}") from None
    except ZeroDivisionError:
        raise InitialDataError(f"bound variable {target.name} is singular at the initial data") from None


@dataclass
class EndpointReport:
    rows: List[Tuple[str, str, float, float, float]]  # (end, component, expected, actual, deviation)
    tol: float

    @property
    def passed(self) -> bool:
        return all(r[4] <= self.tol for r in self.rows)

    def failures(self) -> List[Tuple[str, str, float, float, float]]:
        return [r for r in self.rows if r[4] > self.tol]

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "passed": self.passed,
            "components": [
                {"end": e, "component": c, "expected": _fmt(x), "actual": _fmt(a), "deviation": _fmt(d),
                 "pass": d <= self.tol}
                for e, c, x, a, d in self.rows
            ],
        }


def verify_endpoints(tr: Trajectory, problem: ControlProblem, tol: float,
                     params: Optional[Mapping[str, float]] = None) -> EndpointReport:
    if problem.endpoints is None:
        raise IntegrationError("problem has no endpoints")
    env = {v: Fraction(params[v.name]) for v in problem.parameters if params and v.name in params}
    rows = []
    for end, k, pts in (("a", 0, problem.endpoints[0]), ("b", -1, problem.endpoints[1])):
        sample = tr.at(0 if k == 0 else len(tr.samples) - 1)
        for x, e in zip(problem.state_vars, pts):
            expected = float(eval_at(e, env))
            actual = sample[x.name]
            rows.append((end, x.name, expected, actual, abs(actual - expected)))
    return EndpointReport(rows, tol)
