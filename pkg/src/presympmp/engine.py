"""Constraint algorithm: primary constraints, stabilisation, splitting.

A :class:`Branch` stores its constraint equations, its inequations, and one
triangular substitution ``subst`` holding every variable eliminated so far:
states and momenta solved with constant coefficients, controls, and control
velocities.  Right-hand sides of ``subst`` never mention a bound variable.

New equations pass through a per-branch queue.  Each one is reduced by
``subst``; factors known to be nonzero are dropped; a product of several
remaining factors splits the branch into a disjoint cover; a single factor is
recorded and, when possible, solved for one variable.  Equations that cannot
be solved stay in the branch's residual list and are re-reduced whenever the
substitution grows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .hamiltonian import HamiltonianSystem, apply_XH
from .model import CotangentChart
from .symexpr import Expr, Var, constraint_form, differentiate, substitute
from .symexpr.ideal import (
    choose_solution,
    decide_zero,
    extend_bindings,
    nonzero_factors,
    strip_nonzero,
)

log = logging.getLogger(__name__)

MAX_STEPS = 16
MAX_BRANCHES = 64


class NonlinearVelocityError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    id: int
    expr: Expr
    origin: str
    parent: Optional[int] = None
    step: int = 0
    index: Optional[int] = None

    def provenance(self) -> str:
        if self.origin == "primary":
            return f"primary({self.index})"
        if self.origin in ("stabilization", "reduction", "split"):
            return f"{self.origin}({self.parent}, {self.step})"
        return self.origin

    def to_dict(self) -> dict:
        return {"id": self.id, "expr": str(self.expr), "origin": self.provenance()}


@dataclass
class Branch:
    id: str
    parent: Optional[str] = None
    equations: List[Constraint] = field(default_factory=list)
    inequations: List[Expr] = field(default_factory=list)
    subst: Dict[Var, Expr] = field(default_factory=dict)
    residual: List[Tuple[int, Expr]] = field(default_factory=list)
    status: str = "active"
    steps: int = 0
    constraint_steps: int = 0
    markers: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    children: List[str] = field(default_factory=list)
    reason: str = ""
    pending: List[Tuple[Expr, str, Optional[int], int]] = field(default_factory=list)
    next_id: int = 0
    pre_free_time: Optional[List[Expr]] = None
    h_implied: Optional[bool] = None

    # -- views ---------------------------------------------------------------
    @property
    def solved_controls(self) -> Dict[Var, Expr]:
        return {v: e for v, e in self.subst.items() if v.kind == "control"}

    @property
    def solved_control_velocities(self) -> Dict[Var, Expr]:
        return {v: e for v, e in self.subst.items() if v.kind == "control-velocity"}

    @property
    def eliminated(self) -> Dict[Var, Expr]:
        return {v: e for v, e in self.subst.items() if v.kind not in ("control", "control-velocity")}

    @property
    def is_empty(self) -> bool:
        return self.status == "empty"

    def equation_exprs(self) -> List[Expr]:
        return [c.expr for c in self.equations]

    def nonzero(self) -> List[Expr]:
        fs, _ = nonzero_factors(self.inequations, self.point_subst())
        return fs

    def point_subst(self) -> Dict[Var, Expr]:
        """The substitution restricted to coordinates (no control velocities)."""
        return {v: e for v, e in self.subst.items() if v.kind != "control-velocity"}

    def reduce(self, e) -> Expr:
        r = substitute(e, self.subst) if self.subst else Expr.of(e)
        return Expr(r.num, _reduced=True)

    def implies(self, e, nonzero: Optional[Sequence[Expr]] = None) -> bool:
        """Does ``e`` vanish on this branch?"""
        r = self.reduce(e)
        if r.is_zero():
            return True
        gens = [g for _, g in self.residual]
        if not gens:
            return False
        if nonzero is None:
            nonzero = self.nonzero()
        return decide_zero(r, gens, nonzero).result

    def copy(self, new_id: str) -> "Branch":
        return Branch(
            id=new_id,
            parent=self.id,
            equations=list(self.equations),
            inequations=list(self.inequations),
            subst=dict(self.subst),
            residual=list(self.residual),
            status=self.status,
            steps=self.steps,
            constraint_steps=self.constraint_steps,
            markers=list(self.markers),
            notes=list(self.notes),
            pending=list(self.pending),
            next_id=self.next_id,
            pre_free_time=self.pre_free_time,
            h_implied=self.h_implied,
        )

    def add_constraint(self, expr: Expr, origin: str, parent, step, index=None) -> Constraint:
        c = Constraint(self.next_id, expr, origin, parent, step, index)
        self.next_id += 1
        self.equations.append(c)
        return c

    def kill(self, reason: str) -> None:
        self.status = "empty"
        self.reason = reason
        self.pending = []

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "parent": self.parent,
            "status": self.status,
            "steps": self.steps,
            "constraint_steps": self.constraint_steps,
            "equations": [c.to_dict() for c in self.equations],
            "inequations": [str(q) for q in self.inequations],
            "solved_controls": _dump_map(self.solved_controls),
            "solved_control_velocities": _dump_map(self.solved_control_velocities),
            "eliminated": _dump_map(self.eliminated),
            "residual": [str(g) for _, g in self.residual],
            "markers": list(self.markers),
            "children": list(self.children),
        }
        if self.reason:
            out["reason"] = self.reason
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _dump_map(m: Dict[Var, Expr]) -> Dict[str, str]:
    return {v.name: str(e) for v, e in sorted(m.items(), key=lambda ve: ve[0].key)}


@dataclass
class AlgorithmOptions:
    max_steps: int = MAX_STEPS
    max_branches: int = MAX_BRANCHES
    pins: Tuple = ()
    free_time: Optional[bool] = None
    zero_fiber: bool = True


@dataclass
class ConstraintTree:
    p0: int
    nodes: Dict[str, Branch] = field(default_factory=dict)
    status: str = "complete"
    diagnostics: List[str] = field(default_factory=list)
    free_time: bool = False

    @property
    def root(self) -> Branch:
        return self.nodes["0"]

    def leaves(self) -> List[Branch]:
        return [b for b in self.nodes.values() if not b.children]

    def final(self) -> List[Branch]:
        """Stabilised non-empty leaves."""
        return [b for b in self.leaves() if b.status == "stabilized"]

    def to_dict(self) -> dict:
        return {
            "p0": self.p0,
            "status": self.status,
            "free_time": self.free_time,
            "diagnostics": list(self.diagnostics),
            "final": [b.id for b in self.final()],
            "branches": [self.nodes[k].to_dict() for k in sorted(self.nodes, key=_id_key)],
        }


def _id_key(bid: str):
    return tuple(int(x) for x in bid.split("."))


class _Budget(Exception):
    pass


class Engine:
    """Runs the algorithm for one Hamiltonian; owns the tree being built."""

    def __init__(self, hs: HamiltonianSystem, opts: Optional[AlgorithmOptions] = None):
        self.hs = hs
        self.opts = opts or AlgorithmOptions()
        self.tree = ConstraintTree(hs.p0)
        self.coord_vars = set(hs.states) | set(hs.momenta) | set(hs.controls) | set(hs.problem.parameters)

    # -- tree bookkeeping -----------------------------------------------------
    def _register(self, b: Branch) -> None:
        if len(self.tree.nodes) >= self.opts.max_branches:
            raise _Budget(f"branch budget of {self.opts.max_branches} exhausted")
        self.tree.nodes[b.id] = b

    def _child(self, b: Branch) -> Branch:
        c = b.copy(f"{b.id}.{len(b.children)}")
        b.children.append(c.id)
        self._register(c)
        return c

    # -- queue processing -----------------------------------------------------
    def drain(self, b: Branch) -> List[Branch]:
        """Process the queue of ``b``; returns the resulting live leaves."""
        while b.pending and b.status != "empty":
            expr, origin, parent, step = b.pending.pop(0)
            split = self._insert(b, expr, origin, parent, step)
            if split is not None:
                out = []
                for c in split:
                    out.extend(self.drain(c))
                return out
        return [] if b.status == "empty" else [b]

    def _insert(self, b: Branch, expr: Expr, origin: str, parent, step) -> Optional[List[Branch]]:
        r = b.reduce(expr)
        if r.is_zero():
            return None
        nonzero = b.nonzero()
        fs, contradictory = strip_nonzero(r, nonzero)
        if contradictory:
            b.kill(f"{r} = 0 contradicts the branch" + (" inequations" if not r.is_constant() else ""))
            return None
        if len(fs) > 1:
            return self._split(b, fs, _source_tag(origin, parent, step), step)
        f = fs[0]
        if b.residual and any(f == g for _, g in b.residual):
            return None
        c = next((e for e in b.equations if e.expr == f), None)
        if c is None:
            if b.residual and b.implies(f, nonzero):
                return None
            index = None
            if origin == "primary":
                index, parent = parent, None
            c = b.add_constraint(f, origin, parent, step, index)
        pick = choose_solution(f, f.variables() & self.coord_vars, nonzero)
        if pick is None:
            b.residual.append((c.id, f))
            return None
        v, value = pick
        self._bind(b, v, value)
        return None

    def _bind(self, b: Branch, v: Var, value: Expr) -> None:
        b.subst = extend_bindings(b.subst, v, value)
        if not value.is_polynomial():
            for q in _pin_factors(Expr(value.den, _reduced=True)):
                if q not in b.inequations:
                    b.inequations.append(q)
        self._requeue_residual(b)

    def _requeue_residual(self, b: Branch, force: bool = False) -> None:
        keep = []
        for cid, g in b.residual:
            r = b.reduce(g)
            if r == g and not force:
                keep.append((cid, g))
            else:
                b.pending.insert(0, (r, "reduction", cid, b.steps))
        b.residual = keep

    def _split(self, b: Branch, factors: List[Expr], parent, step, origin: str = "split") -> List[Branch]:
        """Disjoint cover: child i gets ``f_i = 0`` and ``f_j != 0`` for j < i."""
        children = []
        for i, f in enumerate(factors):
            c = self._child(b)
            c.inequations.extend(factors[:i])
            c.pending.insert(0, (f, origin, parent, step))
            if i:
                self._requeue_residual(c, force=True)
            children.append(c)
        b.status = "split"
        b.pending = []
        return children

    # -- algorithm ------------------------------------------------------------
    def start(self) -> List[Branch]:
        root = Branch(id="0")
        self._register(root)
        for pin in self.opts.pins:
            for q in _pin_factors(pin):
                root.inequations.append(q)
        for l, u in enumerate(self.hs.controls, start=1):
            root.pending.append((differentiate(self.hs.H, u), "primary", l, 0))
        return self.drain(root)

    def stabilize_once(self, b: Branch, step: int) -> "StabilizationOutcome":
        outcome = StabilizationOutcome(branches=[b])
        before_eqs = len(b.equations)
        before_subst = dict(b.subst)
        before_ineqs = len(b.inequations)
        for c in list(b.equations):
            if b.status != "active":
                break
            raw = apply_XH(self.hs, c.expr)
            r = b.reduce(raw)
            if r.is_zero():
                continue
            handled = self._handle_velocity_terms(b, r, c, step, outcome)
            if handled is not None:
                outcome.branches = handled
                outcome.changed = outcome.shrank = True
                return outcome
        if b.status == "empty":
            outcome.branches = []
            outcome.changed = outcome.shrank = True
            return outcome
        outcome.new_constraints = [e.expr for e in b.equations[before_eqs:]]
        outcome.new_bindings = {v: e for v, e in b.subst.items() if before_subst.get(v) != e}
        outcome.shrank = bool(outcome.new_constraints or len(b.inequations) != before_ineqs
                              or any(v.kind != "control-velocity" for v in outcome.new_bindings))
        outcome.changed = bool(outcome.shrank or outcome.new_bindings)
        return outcome

    def _handle_velocity_terms(self, b: Branch, r: Expr, c: Constraint, step: int,
                               outcome: "StabilizationOutcome") -> Optional[List[Branch]]:
        """Solve, drop, or split on control-velocity terms of ``r``.

        Returns the replacement branch list when a split happened, else None.
        """
        cvs = sorted((v for v in r.variables() if v.kind == "control-velocity"), key=lambda v: v.key)
        nonzero = b.nonzero()
        if cvs:
            p = r.num
            for v in cvs:
                if p.degree_in(v) > 1:
                    raise NonlinearVelocityError("nonlinear control-velocity dependence")
            for v in cvs:
                for w in cvs:
                    if v != w and not differentiate(differentiate(r, v), w).is_zero():
                        raise NonlinearVelocityError("nonlinear control-velocity dependence")
            coeffs = {v: Expr(p.coefficients_in(v).get(1), _reduced=True) for v in cvs}
            vanishing = [v for v in cvs if b.implies(coeffs[v], nonzero)]
            if vanishing:
                r = substitute(r, {v: 0 for v in vanishing})
                r = Expr(r.num, _reduced=True)
                msg = f"step {step}: dropped {', '.join(v.name for v in vanishing)} terms with coefficients vanishing on the branch"
                b.notes.append(msg)
                log.debug(msg)
                cvs = [v for v in cvs if v not in vanishing]
            if cvs:
                pick = choose_solution(r, cvs, nonzero, nonconstant_kinds=("control-velocity",))
                if pick is not None:
                    self._bind(b, *pick)
                    if not pick[1].is_polynomial():
                        outcome.assumed_nonzero.append(Expr(pick[1].den, _reduced=True))
                    return None
                v = cvs[0]
                coeff = coeffs[v]
                outcome.assumed_nonzero.append(coeff)
                return self._split_on_coefficient(b, coeff, step)
        if r.is_zero() or b.implies(r, nonzero):
            return None
        b.pending.append((r, "stabilization", c.id, step))
        leaves = self.drain(b)
        if leaves != [b]:
            return leaves
        return None

    def _split_on_coefficient(self, b: Branch, coeff: Expr, step: int) -> List[Branch]:
        """Two children: ``coeff != 0`` (velocity solvable) and ``coeff = 0``."""
        a = self._child(b)
        a.inequations.append(constraint_form(coeff))
        self._requeue_residual(a, force=True)
        z = self._child(b)
        z.pending.append((coeff, "split", "velocity-coefficient", step))
        b.status = "split"
        out = []
        for child in (a, z):
            out.extend(self.drain(child))
        return out

    def run(self) -> ConstraintTree:
        opts = self.opts
        free = opts.free_time if opts.free_time is not None else self.hs.problem.time_mode == "free"
        self.tree.free_time = free
        try:
            active = self.start()
            for step in range(1, opts.max_steps + 1):
                if not active:
                    break
                nxt = []
                for b in active:
                    out = self.stabilize_once(b, step)
                    for leaf in out.branches:
                        if leaf.status == "empty":
                            continue
                        if out.changed:
                            leaf.steps += 1
                            if out.shrank:
                                leaf.constraint_steps += 1
                            nxt.append(leaf)
                        else:
                            leaf.status = "stabilized"
                active = nxt
            if active:
                self.tree.status = "budget-exhausted"
                self.tree.diagnostics.append(f"step budget of {opts.max_steps} exhausted")
        except _Budget as exc:
            self.tree.status = "budget-exhausted"
            self.tree.diagnostics.append(str(exc))
        if free:
            for leaf in list(self.tree.final()):
                try:
                    self.add_free_time_constraint(leaf)
                except _Budget as exc:
                    self.tree.status = "budget-exhausted"
                    self.tree.diagnostics.append(str(exc))
        if self.hs.p0 == 0 and opts.zero_fiber:
            for leaf in self.tree.final():
                delete_zero_fiber(leaf, self.hs.chart)
        return self.tree

    def add_free_time_constraint(self, b: Branch) -> List[Branch]:
        """Append ``H = 0`` (not re-stabilised) to a stabilised leaf."""
        b.pre_free_time = [c.expr for c in b.equations]
        b.h_implied = b.implies(self.hs.H)
        dH = apply_XH(self.hs, self.hs.H)
        if not b.implies(b.reduce(dH)):
            msg = f"branch {b.id}: X_H(H) does not reduce to zero; H = 0 may not be stabilised"
            self.tree.diagnostics.append(msg)
            b.notes.append(msg)
        b.status = "active"
        b.pending.append((self.hs.H, "free-time-H", None, b.steps))
        leaves = self.drain(b)
        for leaf in leaves:
            leaf.status = "stabilized"
        return leaves


@dataclass
class StabilizationOutcome:
    branches: List[Branch]
    new_constraints: List[Expr] = field(default_factory=list)
    new_bindings: Dict[Var, Expr] = field(default_factory=dict)
    assumed_nonzero: List[Expr] = field(default_factory=list)
    changed: bool = False
    shrank: bool = False


def _source_tag(origin: str, parent, step) -> str:
    """Provenance text of the constraint a split came from."""
    if origin == "primary":
        return f"primary({parent})"
    if origin in ("stabilization", "reduction", "split"):
        return f"{origin}({parent}, {step})"
    return origin


def _pin_factors(pin) -> List[Expr]:
    from .symexpr import factor

    e = Expr.of(pin)
    if e.is_constant():
        if e.is_zero():
            raise ValueError("pin 0 != 0 is unsatisfiable")
        return []
    return [f for f, _ in factor(Expr(e.num, _reduced=True))]


def primary_constraints(hs: HamiltonianSystem, pins: Sequence = ()) -> Branch:
    """The branch cut out by ``dH/du_l = 0`` (no stabilisation)."""
    eng = Engine(hs, AlgorithmOptions(pins=tuple(pins)))
    leaves = eng.start()
    if len(leaves) == 1:
        return leaves[0]
    return eng.tree.root


def stabilize_once(hs: HamiltonianSystem, b: Branch, step: int = 1) -> StabilizationOutcome:
    eng = Engine(hs)
    eng.tree.nodes[b.id] = b
    return eng.stabilize_once(b, step)


def split_branch(b: Branch, c, hs: Optional[HamiltonianSystem] = None) -> List[Branch]:
    """Split ``b`` on the factors of constraint ``c``; unchanged if irreducible."""
    from .symexpr import factor

    expr = c.expr if isinstance(c, Constraint) else Expr.of(c)
    nonzero = b.nonzero()
    fs = [f for f, _ in factor(b.reduce(expr)) if f not in nonzero]
    if len(fs) < 2:
        return [b]
    eng = Engine(hs) if hs is not None else _BareEngine()
    eng.tree.nodes[b.id] = b
    children = eng._split(b, fs, None, b.steps, origin="user-split")
    return [leaf for ch in children for leaf in eng.drain(ch)]


class _BareEngine(Engine):
    def __init__(self):
        self.opts = AlgorithmOptions(max_branches=10**6)
        self.tree = ConstraintTree(0)
        self.coord_vars = _AllCoords()


class _AllCoords:
    def __rand__(self, other):
        return {v for v in other if v.kind != "control-velocity"}


def run_algorithm(hs: HamiltonianSystem, opts: Optional[AlgorithmOptions] = None) -> ConstraintTree:
    return Engine(hs, opts).run()


def delete_zero_fiber(b: Branch, chart: CotangentChart) -> Branch:
    """Empty the branch if it forces every momentum to vanish; else mark ``lambda != 0``."""
    if chart.p0 != 0:
        raise ValueError("zero-fiber deletion applies only to p0 = 0")
    if b.status == "empty":
        return b
    nonzero = b.nonzero()
    if all(b.implies(p, nonzero) for p in chart.momentum_vars):
        b.kill("zero fiber: every momentum vanishes on the branch")
    elif "lambda != 0" not in b.markers:
        b.markers.append("lambda != 0")
    return b


def add_free_time_constraint(hs: HamiltonianSystem, b: Branch) -> List[Branch]:
    eng = Engine(hs)
    eng.tree.nodes[b.id] = b
    return eng.add_free_time_constraint(b)
