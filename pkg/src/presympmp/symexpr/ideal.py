"""Deciding whether an expression vanishes on ``{gens = 0, ineqs != 0}``.

Three procedures are tried in order:

``triangular``
    generators are solved one variable at a time (constant coefficient, or a
    coefficient built from factors already known to be nonzero) and the
    candidate is reduced by the resulting substitution;
``momentum-linear``
    the leftover generators and the candidate are linear and homogeneous in
    the momentum variables, so membership is a rank test over the field of
    rational functions in the remaining variables;
``sampling``
    random rational points of the set are built by solving each leftover
    generator for a variable of degree one; a nonzero residue at such a point
    is a certificate, agreement at every point is probabilistic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .core import Expr, Poly, Var, constraint_form, eval_at, factor, primitive, substitute

SAMPLES = 64
DEFAULT_SOLVE_ORDER = ("control", "momentum", "state", "control-velocity", "parameter")


@dataclass(frozen=True)
class ZeroTest:
    result: bool
    method: str
    samples: int = 0

    def __bool__(self) -> bool:
        return self.result


@dataclass
class Triangular:
    """Outcome of :func:`triangularize`."""

    bindings: Dict[Var, Expr] = field(default_factory=dict)
    residual: List[Expr] = field(default_factory=list)
    nonzero: List[Expr] = field(default_factory=list)
    contradiction: Optional[str] = None

    def reduce(self, e) -> Expr:
        return substitute(e, self.bindings) if self.bindings else Expr.of(e)


def _numerator(e: Expr) -> Expr:
    return Expr(e.num, _reduced=True)


def _var_rank(order: Sequence[str]):
    rank = {k: i for i, k in enumerate(order)}
    return lambda v: (rank.get(v.kind, len(rank)), v.name)


def nonzero_factors(ineqs: Iterable, bindings: Dict[Var, Expr]) -> Tuple[List[Expr], Optional[str]]:
    """Irreducible factors of the inequations after substitution.

    Returns the factor list and, if some inequation is forced to vanish, a
    message naming it.
    """
    out: List[Expr] = []
    for q in ineqs:
        r = substitute(q, bindings) if bindings else Expr.of(q)
        if r.is_zero():
            return out, f"inequation {q} != 0 is violated"
        r = _numerator(r)
        for f, _ in factor(r):
            if f not in out:
                out.append(f)
    return out, None


def strip_nonzero(e: Expr, nonzero: Sequence[Expr]) -> Tuple[List[Expr], bool]:
    """Distinct factors of ``e`` that are not known to be nonzero.

    The flag is True when ``e`` is a nonzero constant times known-nonzero
    factors, i.e. the equation ``e = 0`` is contradictory.
    """
    e = _numerator(e)
    if e.is_zero():
        return [], False
    if e.is_constant():
        return [], True
    fs = [f for f, _ in factor(e) if f not in nonzero]
    return fs, not fs


def linear_solution(f: Expr, v: Var, nonzero: Sequence[Expr] = (), allow_nonconstant: bool = True):
    """Solve polynomial ``f = 0`` for ``v`` if ``f`` is affine in ``v``.

    The coefficient of ``v`` must be a nonzero constant or, when
    ``allow_nonconstant``, a product of factors in ``nonzero``.  Returns the
    solution or None.
    """
    p = f.num
    if p.degree_in(v) != 1:
        return None
    parts = p.coefficients_in(v)
    coeff = Expr(parts[1], _reduced=True)
    rest = Expr(parts.get(0, Poly()), _reduced=True)
    if coeff.is_constant():
        return -rest / coeff
    if not allow_nonconstant:
        return None
    if all(g in nonzero for g, _ in factor(coeff)):
        return -rest / coeff
    return None


def choose_solution(f: Expr, candidates: Iterable[Var], nonzero: Sequence[Expr] = (),
                    order: Sequence[str] = DEFAULT_SOLVE_ORDER,
                    nonconstant_kinds: Iterable[str] = ("control", "control-velocity")):
    """Pick the variable to eliminate from ``f = 0``.

    Constant coefficients are preferred over invertible non-constant ones;
    ties break by ``order`` then name.
    """
    rank = _var_rank(order)
    cands = sorted((v for v in f.variables() if v in set(candidates)), key=rank)
    for v in cands:
        sol = linear_solution(f, v, allow_nonconstant=False)
        if sol is not None:
            return v, sol
    kinds = set(nonconstant_kinds)
    for v in cands:
        if v.kind in kinds:
            sol = linear_solution(f, v, nonzero, allow_nonconstant=True)
            if sol is not None:
                return v, sol
    return None


def extend_bindings(bindings: Dict[Var, Expr], v: Var, value: Expr) -> Dict[Var, Expr]:
    """Add ``v := value`` keeping every right-hand side fully reduced."""
    value = substitute(value, bindings) if bindings else value
    out = {w: substitute(b, {v: value}) if v in b.variables() else b for w, b in bindings.items()}
    out[v] = value
    return out


def triangularize(gens: Iterable, ineqs: Iterable = (), *, order: Sequence[str] = DEFAULT_SOLVE_ORDER,
                  solvable: Optional[Iterable[Var]] = None) -> Triangular:
    """Solve generators one variable at a time until no progress is made."""
    tri = Triangular()
    pending = [Expr.of(g) for g in gens]
    ineqs = [Expr.of(q) for q in ineqs]
    allowed = None if solvable is None else set(solvable)
    changed = True
    while changed:
        changed = False
        tri.nonzero, bad = nonzero_factors(ineqs, tri.bindings)
        if bad:
            tri.contradiction = bad
            return tri
        nxt: List[Expr] = []
        for g in pending:
            r = tri.reduce(g)
            if r.is_zero():
                continue
            fs, contradictory = strip_nonzero(r, tri.nonzero)
            if contradictory:
                tri.contradiction = f"{g} = 0 forces a nonzero expression to vanish"
                return tri
            if len(fs) == 1:
                f = fs[0]
                cands = f.variables() if allowed is None else f.variables() & allowed
                pick = choose_solution(f, cands, tri.nonzero, order)
                if pick is not None:
                    tri.bindings = extend_bindings(tri.bindings, *pick)
                    changed = True
                    continue
                nxt.append(f)
            else:
                prod = Expr.const(1)
                for f in fs:
                    prod = prod * f
                nxt.append(prod)
        pending = nxt
    tri.residual = [constraint_form(g) for g in pending]
    tri.nonzero, bad = nonzero_factors(ineqs, tri.bindings)
    if bad:
        tri.contradiction = bad
    return tri


# --- momentum-linear rank test -------------------------------------------


def _momentum_vector(e: Expr, momenta: Sequence[Var]) -> Optional[List[Expr]]:
    """Coefficients of ``e`` w.r.t. momenta if linear homogeneous in them."""
    if not e.is_polynomial():
        return None
    mset = set(momenta)
    coeffs: Dict[Var, Dict] = {p: {} for p in momenta}
    for m, c in e.num.terms.items():
        hit = [(v, k) for v, k in m if v in mset]
        if len(hit) != 1 or hit[0][1] != 1:
            return None
        p = hit[0][0]
        rest = tuple((v, k) for v, k in m if v != p)
        coeffs[p][rest] = coeffs[p].get(rest, 0) + c
    return [Expr(Poly(coeffs[p]), _reduced=True) for p in momenta]


def expr_rank(rows: List[List[Expr]]) -> int:
    """Rank over the field of rational functions (exact zero test)."""
    rows = [list(r) for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if not rows[i][col].is_zero()), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pr = rows[rank]
        for i in range(len(rows)):
            if i != rank and not rows[i][col].is_zero():
                ratio = rows[i][col] / pr[col]
                rows[i] = [a - ratio * b for a, b in zip(rows[i], pr)]
        rank += 1
    return rank


def momentum_linear_member(e: Expr, gens: Sequence[Expr]) -> Optional[bool]:
    """Rank test; None when the inputs are not linear homogeneous in momenta."""
    momenta = sorted({v for g in list(gens) + [e] for v in g.variables() if v.kind == "momentum"},
                     key=lambda v: v.key)
    if not momenta:
        return None
    rows = []
    for g in gens:
        vec = _momentum_vector(g, momenta)
        if vec is None:
            return None
        rows.append(vec)
    target = _momentum_vector(e, momenta)
    if target is None:
        return None
    return expr_rank(rows + [target]) == expr_rank(rows)


# --- sampling --------------------------------------------------------------


def _rand_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-40, 40), rng.randint(1, 9))


def sample_points(tri: Triangular, extra_vars: Iterable[Var], count: int = SAMPLES, seed: int = 0,
                  max_attempts: int = 20) -> List[Dict[Var, Fraction]]:
    """Random rational points of ``{residual = 0, nonzero != 0}`` in the free variables.

    Bound variables are then obtained from ``tri.bindings``.  Returns fewer
    than ``count`` points if the residual generators cannot be solved.
    """
    rng = random.Random(seed)
    free = set(extra_vars) | {v for g in tri.residual for v in g.variables()}
    free |= {v for q in tri.nonzero for v in q.variables()}
    free |= {v for b in tri.bindings.values() for v in b.variables()}
    free -= set(tri.bindings)
    free_sorted = sorted(free, key=lambda v: v.key)
    points = []
    for _ in range(count * max_attempts):
        if len(points) >= count:
            break
        pt = _one_point(tri, free_sorted, rng)
        if pt is not None:
            points.append(pt)
    return points


def _one_point(tri: Triangular, free: List[Var], rng: random.Random) -> Optional[Dict[Var, Fraction]]:
    pt: Dict[Var, Fraction] = {}
    for g in tri.residual:
        r = substitute(g, pt) if pt else g
        if r.is_constant():
            if r.constant_value() != 0:
                return None
            continue
        vs = sorted(r.variables(), key=lambda v: v.key)
        rng.shuffle(vs)
        target = next((v for v in vs if r.num.degree_in(v) == 1), None)
        if target is None:
            return None
        for v in vs:
            if v != target:
                pt[v] = _rand_rational(rng)
        r = substitute(r, {v: pt[v] for v in vs if v != target})
        coeff = r.num.coefficients_in(target)
        if 1 not in coeff:
            return None
        a = coeff[1].constant_value()
        pt[target] = -coeff.get(0, Poly()).constant_value() / a
    for v in free:
        if v not in pt:
            pt[v] = _rand_rational(rng)
    try:
        for q in tri.nonzero:
            if eval_at(q, pt) == 0:
                return None
        for v, b in tri.bindings.items():
            pt[v] = eval_at(b, pt)
    except ZeroDivisionError:
        return None
    return pt


def decide_zero(e, gens: Iterable = (), ineqs: Iterable = (), *, seed: int = 0) -> ZeroTest:
    """Does ``e`` vanish on ``{gens = 0, ineqs != 0}``?  Reports the deciding method."""
    e = Expr.of(e)
    gens = [Expr.of(g) for g in gens]
    for x in [e] + gens:
        if not x.is_polynomial():
            raise ValueError("reduces_to_zero requires polynomial input")
    tri = triangularize(gens, ineqs)
    if tri.contradiction:
        return ZeroTest(True, "triangular")
    r = _numerator(tri.reduce(e))
    if r.is_zero():
        return ZeroTest(True, "triangular")
    if not tri.residual:
        return ZeroTest(False, "triangular")
    if any(r == g or r == -g for g in tri.residual) or constraint_form(r) in tri.residual:
        return ZeroTest(True, "triangular")
    member = momentum_linear_member(r, tri.residual)
    if member is not None:
        return ZeroTest(member, "momentum-linear")
    points = sample_points(tri, r.variables(), seed=seed)
    if not points:
        return ZeroTest(False, "undecided")
    for pt in points:
        try:
            if eval_at(r, pt) != 0:
                return ZeroTest(False, "sampling", len(points))
        except (KeyError, ZeroDivisionError):
            continue
    return ZeroTest(True, "sampling", len(points))


def reduces_to_zero(e, ideal_gens: Iterable = (), inequations: Iterable = ()) -> bool:
    return decide_zero(e, ideal_gens, inequations).result
