"""Pontryagin Hamiltonians, Hamilton's equations and bracket calculus."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

from .model import ControlProblem, CotangentChart, ProblemError, make_chart
from .symexpr import Expr, Var, differentiate


@dataclass(frozen=True)
class HamiltonianSystem:
    problem: ControlProblem
    chart: CotangentChart
    H: Expr
    state_rhs: Tuple[Expr, ...]
    momentum_rhs: Tuple[Expr, ...]
    control_velocity_vars: Tuple[Var, ...]

    @property
    def p0(self) -> int:
        return self.chart.p0

    @property
    def states(self) -> Tuple[Var, ...]:
        return self.problem.state_vars

    @property
    def momenta(self) -> Tuple[Var, ...]:
        return self.chart.momentum_vars

    @property
    def controls(self) -> Tuple[Var, ...]:
        return self.problem.control_vars

    def velocity_of(self, u: Var) -> Var:
        return self.control_velocity_vars[self.controls.index(u)]


def control_velocity_vars(problem: ControlProblem, chart: CotangentChart) -> Tuple[Var, ...]:
    taken = {v.name for v in problem.all_vars()} | {v.name for v in chart.momentum_vars}
    out = []
    for u in problem.control_vars:
        name = f"C_{u.name}"
        if name in taken:
            raise ProblemError(f"control-velocity name {name!r} clashes with a problem variable")
        out.append(Var(name, "control-velocity"))
    return tuple(out)


def hamiltonian_lift(V: Sequence, momenta: Sequence[Var]) -> Expr:
    """``H_V = sum_j p_j V^j``."""
    total = Expr.const(0)
    for p, comp in zip(momenta, V):
        total = total + Expr.of(p) * comp
    return total


def build_hamiltonian(problem: ControlProblem, p0: int) -> HamiltonianSystem:
    chart = make_chart(problem, p0)
    H = hamiltonian_lift(problem.vector_field, chart.momentum_vars) + p0 * problem.cost
    state_rhs = tuple(differentiate(H, p) for p in chart.momentum_vars)
    momentum_rhs = tuple(-differentiate(H, x) for x in problem.state_vars)
    return HamiltonianSystem(problem, chart, H, state_rhs, momentum_rhs,
                             control_velocity_vars(problem, chart))


def hamilton_equations(hs: HamiltonianSystem):
    return hs.state_rhs, hs.momentum_rhs


def apply_XH(hs: HamiltonianSystem, f) -> Expr:
    """Derivative of ``f`` along ``X_H`` with the control velocities left symbolic."""
    f = Expr.of(f)
    if any(v.kind == "control-velocity" for v in f.variables()):
        raise ValueError("apply_XH: argument must not contain control-velocity variables")
    present = f.variables()
    total = Expr.const(0)
    for x, a in zip(hs.states, hs.state_rhs):
        if x in present:
            total = total + a * differentiate(f, x)
    for p, b in zip(hs.momenta, hs.momentum_rhs):
        if p in present:
            total = total + b * differentiate(f, p)
    for u, c in zip(hs.controls, hs.control_velocity_vars):
        if u in present:
            total = total + Expr.of(c) * differentiate(f, u)
    return total


def poisson_bracket(f, g, chart: CotangentChart) -> Expr:
    """``{f, g} = sum_j df/dx_j dg/dp_j - df/dp_j dg/dx_j``."""
    f, g = Expr.of(f), Expr.of(g)
    for e in (f, g):
        if any(v.kind == "control-velocity" for v in e.variables()):
            raise ValueError("poisson_bracket: arguments must not contain control-velocity variables")
    total = Expr.const(0)
    for x, p in chart.pairs():
        total = total + differentiate(f, x) * differentiate(g, p) - differentiate(f, p) * differentiate(g, x)
    return total


@dataclass(frozen=True)
class VectorFieldOnM:
    components: Tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(Expr.of(c) for c in self.components))

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __eq__(self, other) -> bool:
        if isinstance(other, VectorFieldOnM):
            other = other.components
        return tuple(self.components) == tuple(Expr.of(c) for c in other)

    def __hash__(self) -> int:
        return hash(self.components)


def lie_bracket(V, W, states: Sequence[Var]) -> VectorFieldOnM:
    """Coordinate bracket ``[V, W]^j = V^i dW^j/dx^i - W^i dV^j/dx^i``."""
    V = V if isinstance(V, VectorFieldOnM) else VectorFieldOnM(tuple(V))
    W = W if isinstance(W, VectorFieldOnM) else VectorFieldOnM(tuple(W))
    if len(V) != len(states) or len(W) != len(states):
        raise ValueError("vector fields must have one component per state")
    for comp in V.components + W.components:
        if any(v.kind in ("control", "control-velocity", "momentum") for v in comp.variables()):
            raise ValueError("lie_bracket requires control-free fields on M")
    out = []
    for j in range(len(states)):
        total = Expr.const(0)
        for i, x in enumerate(states):
            total = total + V.components[i] * differentiate(W.components[j], x) \
                - W.components[i] * differentiate(V.components[j], x)
        out.append(total)
    return VectorFieldOnM(tuple(out))
