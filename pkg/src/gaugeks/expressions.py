"""Closed-form expressions in one variable ``t`` from a fixed whitelist:
rational constants, ``pi``, ``t``, sums, products, quotients, integer
powers, ``sin`` and ``cos``.

Expressions are kept as small ASTs so they can be pretty-printed, combined
linearly, converted to exact polynomials when possible, and compiled once
into fast scalar (math) and vectorised (numpy) evaluators.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np

from . import polynomials as poly
from .errors import ParseError
from .lexer import TokenStream, number_value

# AST nodes: ("num", Fraction) | ("t",) | ("pi",) | ("neg", x)
#            | ("add"|"sub"|"mul"|"div", x, y) | ("pow", x, int)
#            | ("sin"|"cos", x)

Node = tuple

FUNCTIONS = ("sin", "cos")


def parse(text: str) -> Node:
    ts = TokenStream(text)
    node = _parse_sum(ts)
    ts.expect("end")
    return node


def parse_from(ts: TokenStream) -> Node:
    return _parse_sum(ts)


def _parse_sum(ts: TokenStream) -> Node:
    node = _parse_product(ts)
    while ts.at_sym("+", "-"):
        op = ts.next().text
        rhs = _parse_product(ts)
        node = ("add" if op == "+" else "sub", node, rhs)
    return node


def _parse_product(ts: TokenStream) -> Node:
    node = _parse_unary(ts)
    while ts.at_sym("*", "/"):
        op = ts.next().text
        rhs = _parse_unary(ts)
        node = ("mul" if op == "*" else "div", node, rhs)
    return node


def _parse_unary(ts: TokenStream) -> Node:
    if ts.at_sym("-"):
        ts.next()
        return ("neg", _parse_unary(ts))
    if ts.at_sym("+"):
        ts.next()
        return _parse_unary(ts)
    return _parse_power(ts)


def _parse_power(ts: TokenStream) -> Node:
    base = _parse_atom(ts)
    if ts.at_sym("^"):
        ts.next()
        neg = False
        if ts.at_sym("-"):
            ts.next()
            neg = True
        tok = ts.expect("num")
        exp = number_value(tok)
        if exp.denominator != 1:
            raise ts.error("only integer exponents are supported", tok)
        return ("pow", base, -int(exp) if neg else int(exp))
    return base


def _parse_atom(ts: TokenStream) -> Node:
    tok = ts.peek()
    if tok.kind == "num":
        ts.next()
        return ("num", number_value(tok))
    if tok.kind == "ident":
        name = tok.text
        if name == "t":
            ts.next()
            return ("t",)
        if name == "pi":
            ts.next()
            return ("pi",)
        if name in FUNCTIONS:
            ts.next()
            ts.expect("sym", "(")
            arg = _parse_sum(ts)
            ts.expect("sym", ")")
            return (name, arg)
        raise ts.error(f"unknown name {name!r} in expression", tok)
    if ts.at_sym("("):
        ts.next()
        node = _parse_sum(ts)
        ts.expect("sym", ")")
        return node
    raise ts.error(f"unexpected token {tok.text!r} in expression", tok)


def to_source(node: Node, ns: str) -> str:
    """Python source for the node; ``ns`` is 'math' or 'np'."""
    kind = node[0]
    if kind == "num":
        v: Fraction = node[1]
        if v.denominator == 1:
            return f"({v.numerator})"
        return f"({v.numerator}/{v.denominator})"
    if kind == "t":
        return "t"
    if kind == "pi":
        return f"{ns}.pi"
    if kind == "neg":
        return f"(-{to_source(node[1], ns)})"
    if kind in ("add", "sub", "mul", "div"):
        op = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[kind]
        return f"({to_source(node[1], ns)} {op} {to_source(node[2], ns)})"
    if kind == "pow":
        return f"({to_source(node[1], ns)} ** ({node[2]}))"
    if kind in FUNCTIONS:
        return f"{ns}.{kind}({to_source(node[1], ns)})"
    raise ValueError(f"bad node {node!r}")


def format_text(node: Node) -> str:
    kind = node[0]
    if kind == "num":
        return str(node[1])
    if kind == "t":
        return "t"
    if kind == "pi":
        return "pi"
    if kind == "neg":
        return f"-({format_text(node[1])})"
    if kind in ("add", "sub", "mul", "div"):
        op = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[kind]
        return f"({format_text(node[1])} {op} {format_text(node[2])})"
    if kind == "pow":
        return f"({format_text(node[1])})^{node[2]}"
    if kind in FUNCTIONS:
        return f"{kind}({format_text(node[1])})"
    raise ValueError(f"bad node {node!r}")


def compile_scalar(node: Node) -> Callable[[float], float]:
    src = to_source(node, "math")
    return eval(f"lambda t: {src}", {"math": math, "__builtins__": {}})


def compile_vector(node: Node) -> Callable[[np.ndarray], np.ndarray]:
    src = to_source(node, "np")
    fn = eval(f"lambda t: {src}", {"np": np, "__builtins__": {}})

    def vec(ts: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(fn(ts), dtype=float), ts.shape).copy()

    return vec


def to_polynomial(node: Node) -> poly.Coeffs | None:
    """Exact polynomial coefficients, or None when not a rational polynomial."""
    kind = node[0]
    if kind == "num":
        return poly.make([node[1]])
    if kind == "t":
        return poly.make([0, 1])
    if kind == "neg":
        inner = to_polynomial(node[1])
        return None if inner is None else poly.scale(inner, -1)
    if kind in ("add", "sub"):
        a, b = to_polynomial(node[1]), to_polynomial(node[2])
        if a is None or b is None:
            return None
        return poly.add(a, poly.scale(b, -1) if kind == "sub" else b)
    if kind == "mul":
        a, b = to_polynomial(node[1]), to_polynomial(node[2])
        if a is None or b is None:
            return None
        return poly.multiply(a, b)
    if kind == "div":
        a, b = to_polynomial(node[1]), to_polynomial(node[2])
        if a is None or b is None or not poly.is_constant(b) or b[0] == 0:
            return None
        return poly.scale(a, Fraction(1) / b[0])
    if kind == "pow":
        a = to_polynomial(node[1])
        exp = node[2]
        if a is None or exp < 0:
            return None
        acc = poly.make([1])
        for _ in range(exp):
            acc = poly.multiply(acc, a)
        return acc
    return None


def linear_combination(c1: Fraction, n1: Node, c2: Fraction, n2: Node) -> Node:
    return ("add", ("mul", ("num", Fraction(c1)), n1), ("mul", ("num", Fraction(c2)), n2))


# Golden-ratio step; a power-of-two ratio can alias oscillatory pieces.
# Deep enough to reach float granularity, so steep-but-convergent pieces
# (t**4096 near 1) stabilise while oscillatory ones keep failing.
_PROBE_RATIO = 0.6180339887498949
_PROBE_COUNT = 80
_PROBE_TOL = 1e-9


def probe_limit(fn: Callable[[float], float], point: float, side: int, reach: float) -> float | None:
    """Numeric one-sided limit estimate at ``point`` (side=+1 from the right).

    Approaches on a geometric sequence; returns None when the trailing
    probes have not stabilised to within 1e-9 (relative at large scale).
    """
    h = reach
    values = []
    for _ in range(_PROBE_COUNT):
        t = point + side * h
        try:
            values.append(fn(t))
        except (OverflowError, ValueError, ZeroDivisionError):
            return None
        h *= _PROBE_RATIO
    tail = values[-5:]
    mid = tail[-1]
    if not math.isfinite(mid):
        return None
    tol = _PROBE_TOL * max(1.0, abs(mid))
    if all(abs(v - mid) <= tol for v in tail):
        return mid
    return None
