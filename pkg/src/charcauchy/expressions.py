"""Arithmetic expression grammar for coefficients and data.

Grammar: numbers, the identifiers ``u`` and ``v``, the operators
``+ - * / ^``, parentheses, and the functions ``sin``, ``cos``, ``exp`` and
``bump``. ``bump(c, w)`` is the unit-height bump ``exp(1 - 1/(1 - s^2))`` with
``s = (v - c)/w``; ``bump(x, c, w)`` takes an explicit argument.

Expressions become sympy objects, so exact partial derivatives are available.
"""
import re

import numpy as np
import sympy as sp

U, V = sp.symbols("u v", real=True)

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")
_NAMES = {"u", "v", "sin", "cos", "exp", "bump"}
_PUNCT = set("+-*/^(),")


class ExpressionError(ValueError):
    def __init__(self, text, message):
        super().__init__(f"{message} in expression {text!r}")
        self.text = text


def bump_expr(x, center, width):
    s = (x - center) / width
    return sp.Piecewise((sp.exp(1 - 1 / (1 - s**2)), s**2 < 1), (0, True))


def _bump(*args):
    if len(args) == 2:
        return bump_expr(V, args[0], args[1])
    if len(args) == 3:
        return bump_expr(*args)
    raise TypeError("bump takes (center, width) or (x, center, width)")


def tokenize(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        num, name, other = m.groups()
        if name is not None and name not in _NAMES:
            raise ExpressionError(text, f"unknown identifier {name!r} at column {m.start(2) + 1}")
        if other is not None and other not in _PUNCT:
            raise ExpressionError(text, f"unexpected character {other!r} at column {m.start(3) + 1}")
        out.append(num or name or other)
        pos = m.end()
    if not out:
        raise ExpressionError(text, "empty expression")
    return out


def parse_expression(text):
    """Parse a grammar string into a sympy expression in ``u`` and ``v``."""
    if isinstance(text, (int, float)):
        return sp.Float(text) if isinstance(text, float) else sp.Integer(text)
    if not isinstance(text, str):
        raise ExpressionError(repr(text), "expected a string")
    tokens = tokenize(text)
    local = {"u": U, "v": V, "sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "bump": _bump}
    try:
        expr = eval(" ".join("**" if t == "^" else t for t in tokens), {"__builtins__": {}}, local)
    except Exception as exc:  # syntax errors, wrong arity
        raise ExpressionError(text, f"cannot parse ({exc.__class__.__name__}: {exc})") from None
    expr = sp.sympify(expr)
    if not expr.free_symbols <= {U, V}:
        raise ExpressionError(text, "only u and v may appear")
    return expr


def as_expr(x):
    """Sympy expression from a grammar string, a number or an expression in ``u, v``."""
    return parse_expression(x) if isinstance(x, str) else sp.sympify(x)


def lambdify(expr):
    """Vectorised numpy evaluator ``f(u, v)`` that always returns a float array."""
    fn = sp.lambdify((U, V), expr, modules="numpy")

    def call(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        with np.errstate(all="ignore"):
            out = fn(u, v)
        return np.asarray(out, dtype=float) + np.zeros(np.broadcast(u, v).shape)

    return call
