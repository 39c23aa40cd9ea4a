"""Exact symbolic expressions with rational coefficients."""

from .core import (
    KINDS,
    Expr,
    Poly,
    Var,
    as_expr,
    constraint_form,
    differentiate,
    eval_at,
    factor,
    factor_order,
    normalize,
    substitute,
)
from .ideal import ZeroTest, decide_zero, reduces_to_zero, triangularize
from .parse import ParseError, parse, to_text

__all__ = [
    "KINDS",
    "Expr",
    "ParseError",
    "Poly",
    "Var",
    "ZeroTest",
    "as_expr",
    "constraint_form",
    "decide_zero",
    "differentiate",
    "eval_at",
    "factor",
    "factor_order",
    "normalize",
    "parse",
    "reduces_to_zero",
    "substitute",
    "to_text",
    "triangularize",
]
