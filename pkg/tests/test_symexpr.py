from fractions import Fraction

import pytest

from presympmp.symexpr import (
    Expr,
    ParseError,
    Var,
    constraint_form,
    decide_zero,
    differentiate,
    eval_at,
    factor,
    normalize,
    parse,
    reduces_to_zero,
    substitute,
    to_text,
)

x = Var("x", "state")
v_x = Var("v_x", "state")
p_x = Var("p_x", "momentum")
p_y = Var("p_y", "momentum")
p_z = Var("p_z", "momentum")
q_x = Var("q_x", "momentum")
q_y = Var("q_y", "momentum")
q_z = Var("q_z", "momentum")
u1 = Var("u1", "control")
u2 = Var("u2", "control")
T = {v.name: v for v in (x, v_x, p_x, p_y, p_z, q_x, q_y, q_z, u1, u2)}


def P(s):
    return parse(s, T, strict=True)


def test_var_kind_is_checked():
    with pytest.raises(ValueError):
        Var("x", "velocity")


def test_differentiate_primary_constraint():
    e = P("u2*(1-x)*q_y + u2*x^2*q_z")
    assert differentiate(e, u2) == P("(1-x)*q_y + x^2*q_z")


def test_differentiate_constant():
    assert differentiate(Expr.const(Fraction(7, 3)), x).is_zero()


def test_differentiate_quotient():
    e = P("x/(x+1)")
    assert differentiate(e, x) == P("1/(x+1)^2")


def test_normalize_identity_and_idempotence():
    e = P("(1-x)*q_y + x^2*q_z - (q_y - x*q_y + x^2*q_z)")
    assert normalize(e).is_zero()
    f = P("(x+1)^3/(x^2-1)")
    assert normalize(normalize(f)) == normalize(f)
    assert f == P("(x+1)^2/(x-1)")


def test_sign_convention():
    assert constraint_form(P("-q_y + 4*q_z")) == constraint_form(P("4*q_z - q_y"))
    assert constraint_form(P("-q_y + 4*q_z")) == P("q_y - 4*q_z")
    assert constraint_form(P("6*x - 4")) == P("3*x - 2")


def test_division_by_zero_rejected():
    with pytest.raises(ZeroDivisionError):
        P("x") / (P("x") - P("x"))


def test_factor_pinned_locus():
    fs = factor(P("x^2*q_z*u2 - x*q_z*u2"))
    assert sorted((str(f), k) for f, k in fs) == sorted([("x", 1), ("x - 1", 1), ("q_z", 1), ("u2", 1)])


def test_factor_perfect_square_and_content():
    assert factor(P("x^2 - 2*x + 1")) == [(P("x - 1"), 2)]
    e = P("x^2*q_z - x*q_z")
    assert factor(e * 6) == factor(e)


def test_factor_requires_polynomial():
    with pytest.raises(ValueError, match="factor requires polynomial"):
        factor(P("1/x"))


def test_factor_soundness():
    e = P("3*(x-1)^2*(q_y - 2*x*q_z)*u2")
    prod = Expr.const(1)
    for f, k in factor(e):
        prod = prod * f ** k
    ratio = e / prod
    assert ratio.is_constant() and not ratio.is_zero()


def test_substitute_examples():
    assert substitute(P("(1-x)*q_y + x^2*q_z"), {x: 2}) == P("-q_y + 4*q_z")
    e = P("x*q_y + 1/(x+2)")
    assert substitute(e, {}) == normalize(e)


def test_substitute_is_simultaneous():
    assert substitute(P("x + q_y"), {x: P("q_y"), q_y: P("u1")}) == P("q_y + u1")


def test_substitute_rejects_cycles():
    with pytest.raises(ValueError, match="cyclic"):
        substitute(P("x"), {x: P("q_y + 1"), q_y: P("x")})


def test_substitute_eval_coherence():
    e = P("x^2*q_y - u1/(x+3)")
    b = {x: P("u2 + 1"), q_y: P("2*u1 - u2")}
    pt = {u1: Fraction(2, 3), u2: Fraction(-5, 7)}
    composed = {x: eval_at(b[x], pt), q_y: eval_at(b[q_y], pt), **pt}
    assert eval_at(substitute(e, b), pt) == eval_at(e, composed)


def test_eval_at_examples():
    assert eval_at(P("-q_y + 4*q_z"), {q_y: 4, q_z: 1}) == 0
    assert eval_at(P("x^2"), {x: Fraction(3, 2)}) == Fraction(9, 4)
    with pytest.raises(KeyError):
        eval_at(P("x + q_y"), {x: 1})
    with pytest.raises(ZeroDivisionError):
        eval_at(P("1/(x-1)"), {x: 1})


def test_eval_matches_float():
    import random

    rng = random.Random(3)
    e = P("x^3*q_y - 3/7*x*q_z + u1^2 - 2")
    for _ in range(100):
        pt = {v: Fraction(rng.randint(-50, 50), rng.randint(1, 11)) for v in (x, q_y, q_z, u1)}
        fl = {k: float(v) for k, v in pt.items()}
        approx = fl[x] ** 3 * fl[q_y] - 3 / 7 * fl[x] * fl[q_z] + fl[u1] ** 2 - 2
        assert abs(float(eval_at(e, pt)) - approx) <= 1e-12 * max(1.0, abs(approx))


def test_reduces_to_zero_examples():
    assert reduces_to_zero(P("q_x*v_x"), [P("q_x")], [])
    assert not reduces_to_zero(P("p_x"), [P("q_x")], [])
    gens = [P(s) for s in ("q_x", "-q_y+4*q_z", "p_x", "p_y-4*p_z", "x-2", "v_x")]
    assert reduces_to_zero(P("(-q_y+4*q_z)*u1"), gens, [P("q_z*u2")])


def test_decide_zero_reports_method():
    assert decide_zero(P("q_x*v_x"), [P("q_x")]).method == "triangular"
    r = decide_zero(P("q_y + q_z"), [P("x*q_y + q_z"), P("q_y - x*q_z")])
    assert r.method in ("momentum-linear", "triangular", "sampling")


def test_reduces_to_zero_rejects_rational():
    with pytest.raises(ValueError):
        reduces_to_zero(P("1/x"), [P("x")])


def test_parse_and_print_round_trip():
    for s in ("x^2*q_z - x*q_y + q_y", "3/2*x - u1^3", "(x + 1)/(x - 1)", "-q_y + 4*q_z", "0"):
        e = P(s)
        assert parse(to_text(e), T, strict=True) == e


def test_parse_errors():
    with pytest.raises(ParseError):
        P("x^(1/2)")
    with pytest.raises(ParseError):
        P("sin(x)")
    with pytest.raises(ParseError):
        P("unknown_var + 1")
