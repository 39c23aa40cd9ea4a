"""Infix text syntax: ``+ - * / ^``, integer exponents, rational literals ``p/q``."""

from __future__ import annotations

import ast
from typing import Mapping, Optional

from .core import Expr, Var


class ParseError(ValueError):
    pass


def parse(text: str, table: Optional[Mapping[str, Var]] = None, *, strict: bool = False,
          default_kind: str = "parameter") -> Expr:
    """Parse ``text`` into an :class:`Expr`.

    Identifiers are looked up in ``table``.  Unknown names are an error when
    ``strict`` is set and otherwise become variables of ``default_kind``.
    """
    if not isinstance(text, str):
        return Expr.of(text)
    try:
        tree = ast.parse(text.strip().replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None
    table = table or {}

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                exp = _int_literal(node.right)
                return walk(node.left) ** exp
            a, b = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                try:
                    return a / b
                except ZeroDivisionError:
                    raise ParseError(f"division by zero in {text!r}") from None
            raise ParseError(f"unsupported operator in {text!r}")
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return -walk(node.operand)
            if isinstance(node.op, ast.UAdd):
                return walk(node.operand)
        if isinstance(node, ast.Constant) and type(node.value) is int:
            return Expr.const(node.value)
        if isinstance(node, ast.Name):
            v = table.get(node.id)
            if v is None:
                if strict:
                    raise ParseError(f"unknown variable {node.id!r} in {text!r}")
                v = Var(node.id, default_kind)
            return Expr.of(v)
        raise ParseError(f"unsupported syntax in {text!r}")

    def _int_literal(node):
        sign = 1
        while isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            if isinstance(node.op, ast.USub):
                sign = -sign
            node = node.operand
        if isinstance(node, ast.Constant) and type(node.value) is int:
            return sign * node.value
        raise ParseError(f"exponents must be integer literals in {text!r}")

    return walk(tree)


def to_text(e) -> str:
    return str(Expr.of(e))
