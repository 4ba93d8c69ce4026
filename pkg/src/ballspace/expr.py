"""Small arithmetic expression language for exponents, weights and probes.

Grammar (Python expression syntax restricted to)::

    expr    := expr op expr | "-" expr | "(" expr ")" | call | NAME | NUMBER
    op      := "+" | "-" | "*" | "/" | "^" | "**" | "<" | "<=" | ">" | ">="
    call    := FUNC "(" expr {"," expr} ")"
    FUNC    := abs | max | min | log | exp | sqrt | sin | cos | chi
    NAME    := x1 .. xn | x | y | r | pi | e

``x`` and ``y`` alias ``x1`` and ``x2``; ``r`` is the Euclidean norm of the
point.  ``chi(a, b, v)`` is 1 where ``a <= v <= b`` and 0 elsewhere.
Comparisons evaluate to 0/1.
"""

from __future__ import annotations

import ast
import math
from typing import Callable

import numpy as np


class ExpressionError(ValueError):
    pass


_FUNCS = {
    "abs": np.abs,
    "max": np.maximum,
    "min": np.minimum,
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "chi": lambda a, b, v: ((v >= a) & (v <= b)).astype(float),
}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}

_CMPOPS = {ast.Lt: np.less, ast.LtE: np.less_equal, ast.Gt: np.greater, ast.GtE: np.greater_equal}


def _parse(text: str) -> ast.expr:
    try:
        return ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None


def _evaluate(node: ast.AST, env: dict):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id not in env:
            raise ExpressionError(f"unknown name {node.id!r}")
        return env[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _evaluate(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_evaluate(node.left, env), _evaluate(node.right, env))
    if isinstance(node, ast.Compare) and len(node.ops) == 1 and type(node.ops[0]) in _CMPOPS:
        res = _CMPOPS[type(node.ops[0])](_evaluate(node.left, env), _evaluate(node.comparators[0], env))
        return np.asarray(res, dtype=float)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
        args = [_evaluate(a, env) for a in node.args]
        if node.func.id in ("max", "min") and len(args) > 2:
            out = args[0]
            for a in args[1:]:
                out = _FUNCS[node.func.id](out, a)
            return out
        return _FUNCS[node.func.id](*args)
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def compile_expression(text: str, n: int) -> Callable[..., np.ndarray]:
    """Compile ``text`` into a vectorized function of ``n`` coordinate arrays."""
    tree = _parse(text.replace("^", "**"))

    def fn(*coords):
        if len(coords) != n:
            raise ExpressionError(f"expected {n} coordinates, got {len(coords)}")
        env = {"pi": math.pi, "e": math.e}
        for i, c in enumerate(coords):
            env[f"x{i + 1}"] = np.asarray(c, dtype=float)
        env["x"] = env["x1"]
        if n > 1:
            env["y"] = env["x2"]
        env["r"] = np.sqrt(sum(np.asarray(c, dtype=float) ** 2 for c in coords))
        with np.errstate(all="ignore"):
            return np.asarray(_evaluate(tree, env), dtype=float)

    # validate names eagerly so config errors surface at load time
    fn(*([np.array([0.5])] * n))
    return fn


def _literal(node: ast.AST):
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_literal(node.operand)
    if isinstance(node, ast.Name):
        if node.id in ("inf", "oo"):
            return math.inf
        return node.id
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        return parse_call_node(node)
    if isinstance(node, (ast.List, ast.Tuple)):
        return [_literal(e) for e in node.elts]
    raise ExpressionError(f"unsupported literal: {ast.dump(node)[:60]}")


def parse_call_node(node: ast.Call) -> tuple[str, list, dict]:
    return (
        node.func.id,
        [_literal(a) for a in node.args],
        {k.arg: _literal(k.value) for k in node.keywords},
    )


def parse_call(text: str) -> tuple[str, list, dict]:
    """Parse ``Name(arg, ..., key=value)`` into ``(name, args, kwargs)``.

    Arguments may be numbers, bare names, quoted strings, ``inf`` or nested calls.
    """
    node = _parse(text.replace("^", "**"))
    if isinstance(node, ast.Name):
        return node.id, [], {}
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)):
        raise ExpressionError(f"expected Name(...), got {text!r}")
    return parse_call_node(node)


def compile_univariate(text: str, var: str = "t") -> Callable[[np.ndarray], np.ndarray]:
    """Compile an expression in a single named variable (``t`` by default)."""
    tree = _parse(text.replace("^", "**"))

    def fn(t):
        env = {"pi": math.pi, "e": math.e, var: np.asarray(t, dtype=float)}
        with np.errstate(all="ignore"):
            return np.asarray(_evaluate(tree, env), dtype=float)

    fn(np.array([0.5]))
    return fn
