"""Exact multivariate polynomials and rational functions over Q.

Polynomials are sparse maps from monomials to :class:`fractions.Fraction`
coefficients.  A monomial is a tuple of ``(Var, exponent)`` pairs sorted by the
canonical variable order (states, momenta, controls, control velocities,
parameters; alphabetical inside each kind).  Terms print in graded
lexicographic order, highest first.

:class:`Expr` is the public type: a reduced quotient of two polynomials whose
denominator has leading coefficient one.  Expressions are immutable and
hashable, and two expressions are equal iff their canonical forms agree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Iterator, Mapping, Tuple, Union

KINDS = ("state", "momentum", "control", "control-velocity", "parameter")
_KIND_RANK = {kind: i for i, kind in enumerate(KINDS)}
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Var:
    """A named coordinate.  ``kind`` fixes its place in the variable order."""

    name: str
    kind: str = "parameter"

    def __post_init__(self):
        if not _IDENT.match(self.name):
            raise ValueError(f"invalid identifier {self.name!r}")
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown variable kind {self.kind!r}")

    @property
    def key(self) -> Tuple[int, str]:
        return (_KIND_RANK[self.kind], self.name)

    def __lt__(self, other: "Var") -> bool:
        return self.key < other.key

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"Var({self.name!r}, {self.kind!r})"

    # arithmetic promotes to Expr
    def __add__(self, other):
        return Expr.of(self) + other

    def __radd__(self, other):
        return other + Expr.of(self)

    def __sub__(self, other):
        return Expr.of(self) - other

    def __rsub__(self, other):
        return Expr.of(other) - Expr.of(self)

    def __mul__(self, other):
        return Expr.of(self) * other

    def __rmul__(self, other):
        return Expr.of(other) * Expr.of(self)

    def __truediv__(self, other):
        return Expr.of(self) / other

    def __rtruediv__(self, other):
        return Expr.of(other) / Expr.of(self)

    def __pow__(self, n: int):
        return Expr.of(self) ** n

    def __neg__(self):
        return -Expr.of(self)


Monomial = Tuple[Tuple[Var, int], ...]
ONE_MONO: Monomial = ()


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps: Dict[Var, int] = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items(), key=lambda ve: ve[0].key))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def mono_key(m: Monomial):
    """Sort key realising graded lex: larger key means larger monomial."""
    return (mono_degree(m), tuple((-_KIND_RANK[v.kind], _neg_name(v.name), e) for v, e in m))


class _neg_name(str):
    # inverts string order so that alphabetically earlier names rank higher
    def __lt__(self, other):
        return str.__gt__(self, other)

    def __gt__(self, other):
        return str.__lt__(self, other)

    def __le__(self, other):
        return str.__ge__(self, other)

    def __ge__(self, other):
        return str.__le__(self, other)


Number = Union[int, Fraction]


class Poly:
    """Sparse polynomial with rational coefficients.  Treat as immutable."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: Dict[Monomial, Fraction] = {m: c for m, c in (terms or {}).items() if c}
        self._hash = None

    @classmethod
    def const(cls, c: Number) -> "Poly":
        return cls({ONE_MONO: Fraction(c)})

    @classmethod
    def var(cls, v: Var) -> "Poly":
        return cls({((v, 1),): Fraction(1)})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and ONE_MONO in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get(ONE_MONO, Fraction(0))

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def scale(self, c: Number) -> "Poly":
        return Poly({m: c * k for m, k in self.terms.items()})

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result, base = Poly.const(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def variables(self) -> frozenset:
        return frozenset(v for m in self.terms for v, _ in m)

    def degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def degree_in(self, v: Var) -> int:
        return max((e for m in self.terms for w, e in m if w == v), default=0)

    def coefficients_in(self, v: Var) -> Dict[int, "Poly"]:
        """Split as sum of ``coeff_k * v**k`` with ``coeff_k`` free of ``v``."""
        parts: Dict[int, Dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            k = 0
            rest = []
            for w, e in m:
                if w == v:
                    k = e
                else:
                    rest.append((w, e))
            parts.setdefault(k, {})[tuple(rest)] = c
        return {k: Poly(t) for k, t in parts.items()}

    def diff(self, v: Var) -> "Poly":
        out: Dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            for i, (w, e) in enumerate(m):
                if w == v:
                    nm = m[:i] + (((w, e - 1),) if e > 1 else ()) + m[i + 1 :]
                    out[nm] = out.get(nm, 0) + c * e
                    break
        return Poly(out)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: mono_key(mc[0]), reverse=True)

    def leading(self) -> Tuple[Monomial, Fraction]:
        return max(self.terms.items(), key=lambda mc: mono_key(mc[0]))

    def content(self) -> Fraction:
        """Positive rational whose quotient leaves integer coprime coefficients."""
        from math import gcd

        num = 0
        den = 1
        for c in self.terms.values():
            num = gcd(num, c.numerator)
            den = den * c.denominator // gcd(den, c.denominator)
        return Fraction(num, den) if num else Fraction(1)

    def evaluate(self, point: Mapping[Var, Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for v, e in m:
                try:
                    term *= point[v] ** e
                except KeyError:
                    raise KeyError(f"unbound variable {v.name}") from None
            total += term
        return total

    def __str__(self) -> str:
        return _format_poly(self)

    def __repr__(self) -> str:
        return f"Poly({self})"


def _format_mono(m: Monomial) -> str:
    return "*".join(v.name if e == 1 else f"{v.name}^{e}" for v, e in m)


def _format_poly(p: Poly) -> str:
    if not p.terms:
        return "0"
    pieces = []
    for i, (m, c) in enumerate(p.sorted_terms()):
        sign = "-" if c < 0 else "+"
        a = abs(c)
        body = _format_mono(m)
        if not body:
            text = str(a)
        elif a == 1:
            text = body
        else:
            text = f"{a}*{body}"
        if i == 0:
            pieces.append(("-" if sign == "-" else "") + text)
        else:
            pieces.append(f" {sign} {text}")
    return "".join(pieces)


# --- sympy bridge for gcd and factorisation -------------------------------


def _to_sympy(polys: Iterable[Poly]):
    import sympy

    polys = list(polys)
    gens = sorted(set().union(*(p.variables() for p in polys)), key=lambda v: v.key)
    if not gens:
        return gens, None
    syms = sympy.symbols(f"g0:{len(gens)}")
    index = {v: i for i, v in enumerate(gens)}
    out = []
    for p in polys:
        rep = {}
        for m, c in p.terms.items():
            exps = [0] * len(gens)
            for v, e in m:
                exps[index[v]] = e
            rep[tuple(exps)] = sympy.Rational(c.numerator, c.denominator)
        out.append(sympy.Poly.from_dict(rep or {(0,) * len(gens): 0}, *syms, domain="QQ"))
    return gens, out


def _from_sympy(sp, gens) -> Poly:
    terms = {}
    for exps, c in sp.terms():
        m = tuple((gens[i], e) for i, e in enumerate(exps) if e)
        m = tuple(sorted(m, key=lambda ve: ve[0].key))
        terms[m] = Fraction(int(c.p), int(c.q))
    return Poly(terms)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    if a.is_constant() or b.is_constant():
        return Poly.const(1) if (a or b) else Poly()
    gens, (sa, sb) = _to_sympy([a, b])
    return _monic(_from_sympy(sa.gcd(sb), gens))


def poly_exquo(a: Poly, b: Poly) -> Poly:
    if b.is_constant():
        return a.scale(1 / b.constant_value())
    gens, (sa, sb) = _to_sympy([a, b])
    return _from_sympy(sa.exquo(sb), gens)


def poly_factor(p: Poly):
    """Irreducible factors of a non-constant polynomial: ``(unit, [(f, k), ...])``."""
    gens, (sp,) = _to_sympy([p])
    if sp is None:
        return p.constant_value(), []
    unit, pieces = sp.factor_list()
    c = Fraction(int(unit.p), int(unit.q))
    out = []
    for f, k in pieces:
        fp = _from_sympy(f, gens)
        prim = primitive(fp)
        c *= (fp.leading()[1] / prim.leading()[1]) ** k
        out.append((prim, k))
    return c, out


def _monic(p: Poly) -> Poly:
    if not p:
        return p
    return p.scale(1 / p.leading()[1])


def primitive(p: Poly) -> Poly:
    """Content-free with positive leading coefficient (the constraint form)."""
    if not p:
        return p
    q = p.scale(1 / p.content())
    return -q if q.leading()[1] < 0 else q


# --- public expression type ------------------------------------------------


class Expr:
    """Rational function ``num/den`` in canonical reduced form."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None, _reduced: bool = False):
        if den is None:
            den = Poly.const(1)
        if not den:
            raise ZeroDivisionError("division by an expression that is identically zero")
        if not _reduced:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den

    @classmethod
    def of(cls, value) -> "Expr":
        if isinstance(value, Expr):
            return value
        if isinstance(value, Var):
            return cls(Poly.var(value), _reduced=True)
        if isinstance(value, Poly):
            return cls(value, _reduced=True)
        if isinstance(value, (int, Fraction)) or isinstance(value, Rational):
            return cls(Poly.const(Fraction(value)), _reduced=True)
        raise TypeError(f"cannot convert {value!r} to Expr")

    @classmethod
    def const(cls, c: Number) -> "Expr":
        return cls(Poly.const(Fraction(c)), _reduced=True)

    # -- predicates --------------------------------------------------------
    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def is_zero(self) -> bool:
        return not self.num

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self.num.constant_value() / self.den.constant_value()

    def variables(self) -> frozenset:
        return self.num.variables() | self.den.variables()

    def free_of(self, vars_: Iterable[Var]) -> bool:
        return not (self.variables() & set(vars_))

    def poly(self) -> Poly:
        if not self.is_polynomial():
            raise ValueError("factor requires polynomial")
        return self.num.scale(1 / self.den.constant_value())

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other) -> "Expr":
        o = Expr.of(other)
        if self.den == o.den:
            return Expr(self.num + o.num, self.den)
        return Expr(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr(-self.num, self.den, _reduced=True)

    def __sub__(self, other) -> "Expr":
        return self + (-Expr.of(other))

    def __rsub__(self, other) -> "Expr":
        return Expr.of(other) - self

    def __mul__(self, other) -> "Expr":
        o = Expr.of(other)
        return Expr(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Expr":
        o = Expr.of(other)
        if o.is_zero():
            raise ZeroDivisionError("division by an expression that is identically zero")
        return Expr(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other) -> "Expr":
        return Expr.of(other) / self

    def __pow__(self, n: int) -> "Expr":
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n >= 0:
            return Expr(self.num**n, self.den**n, _reduced=True) if self.is_polynomial() else Expr(self.num**n, self.den**n)
        return Expr.const(1) / (self ** (-n))

    # -- identity ----------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Var)):
            other = Expr.of(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __str__(self) -> str:
        if self.den.is_constant():
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __repr__(self) -> str:
        return f"Expr({self})"

    def sort_key(self):
        return (str(self),)


def _reduce(num: Poly, den: Poly) -> Tuple[Poly, Poly]:
    if not num:
        return Poly(), Poly.const(1)
    if den.is_constant():
        c = den.constant_value()
        return (num.scale(1 / c) if c != 1 else num), Poly.const(1)
    g = poly_gcd(num, den)
    if not g.is_constant():
        num = poly_exquo(num, g)
        den = poly_exquo(den, g)
    lc = den.leading()[1]
    if den.is_constant():
        return num.scale(1 / lc), Poly.const(1)
    return num.scale(1 / lc), den.scale(1 / lc)


def as_expr(value) -> Expr:
    return Expr.of(value)


def normalize(e) -> Expr:
    """Canonical form.  Construction already canonicalises, so this is a copy."""
    e = Expr.of(e)
    return Expr(e.num, e.den)


def constraint_form(e) -> Expr:
    """Numerator made content free with positive leading coefficient."""
    e = Expr.of(e)
    return Expr(primitive(e.num), _reduced=True)


def differentiate(e, v: Var) -> Expr:
    e = Expr.of(e)
    if e.is_polynomial():
        return Expr(e.num.diff(v), e.den, _reduced=True)
    dn, dd = e.num.diff(v), e.den.diff(v)
    return Expr(dn * e.den - e.num * dd, e.den * e.den)


def eval_at(e, point: Mapping[Var, Number]) -> Fraction:
    e = Expr.of(e)
    pt = {v: Fraction(x) for v, x in point.items()}
    den = e.den.evaluate(pt)
    if den == 0:
        raise ZeroDivisionError(f"denominator of {e} vanishes at the point")
    return e.num.evaluate(pt) / den


def _check_acyclic(bindings: Mapping[Var, Expr]) -> None:
    deps = {v: Expr.of(b).variables() & set(bindings) for v, b in bindings.items()}
    state: Dict[Var, int] = {}

    def visit(v):
        mark = state.get(v)
        if mark == 1:
            raise ValueError(f"cyclic bindings through {v.name}")
        if mark == 2:
            return
        state[v] = 1
        for w in deps[v]:
            visit(w)
        state[v] = 2

    for v in sorted(deps, key=lambda x: x.key):
        visit(v)


def _subs_poly(p: Poly, bindings: Mapping[Var, Expr]) -> Expr:
    if not (p.variables() & bindings.keys()):
        return Expr(p, _reduced=True)
    # group by denominators so that polynomial substitutions stay in Poly
    if all(b.is_polynomial() for v, b in bindings.items()):
        powers: Dict[Tuple[Var, int], Poly] = {}
        out = Poly()
        acc: Dict[Monomial, Fraction] = {}
        for m, c in p.terms.items():
            term = Poly.const(c)
            rest = []
            for v, e in m:
                b = bindings.get(v)
                if b is None:
                    rest.append((v, e))
                    continue
                key = (v, e)
                if key not in powers:
                    powers[key] = b.poly() ** e
                term = term * powers[key]
            if rest:
                term = term * Poly({tuple(rest): Fraction(1)})
            for tm, tc in term.terms.items():
                acc[tm] = acc.get(tm, 0) + tc
        out = Poly(acc)
        return Expr(out, _reduced=True)
    total = Expr.const(0)
    for m, c in p.terms.items():
        term = Expr.const(c)
        for v, e in m:
            term = term * (bindings[v] ** e if v in bindings else Expr.of(v) ** e)
        total = total + term
    return total


def substitute(e, bindings: Mapping[Var, object]) -> Expr:
    """Simultaneous substitution followed by normalisation."""
    e = Expr.of(e)
    b = {v: Expr.of(x) for v, x in bindings.items()}
    _check_acyclic(b)
    if not b:
        return normalize(e)
    num = _subs_poly(e.num, b)
    if e.den.is_constant():
        return num / Expr.of(e.den)
    return num / _subs_poly(e.den, b)


def factor(e) -> list:
    """Irreducible factors with multiplicity, constant and content dropped."""
    e = Expr.of(e)
    if not e.is_polynomial():
        raise ValueError("factor requires polynomial")
    p = e.poly()
    if p.is_constant():
        return []
    _, pieces = poly_factor(p)
    out = [(Expr(f, _reduced=True), k) for f, k in pieces]
    out.sort(key=lambda fk: factor_order(fk[0]))
    return out


def factor_order(f: Expr):
    """Deterministic ordering for factor lists and split children."""
    vs = sorted(f.variables(), key=lambda v: v.key)
    return (tuple(v.key for v in vs), f.num.degree(), len(f.num.terms), str(f))


def iter_monomials(e: Expr) -> Iterator[Tuple[Monomial, Fraction]]:
    yield from e.num.sorted_terms()
