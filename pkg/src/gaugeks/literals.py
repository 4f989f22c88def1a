"""Parsers for the textual literals used in problem documents and on the
command line.

    set       [0,1) (2,3] {5/2}
    function  step{ [0,1/2):0, {1/2}:1, (1/2,1]:1 }
              poly{ [0,1]: 3/2*t^2 - t }
              expr{ (0,1]: 2*t*cos(pi/t^2) + (2*pi/t)*sin(pi/t^2); value(0)=0 }
    gauge     gauge{ base: [0,1/2):1/8, [1/2,1]:1/16; at 1/3: 1/1024 }
    closed    cantor{hull:[0,1], ratio:1/3}
              complement{hull:[0,1], intervals: (1/3,2/3), (1/9,2/9)}
    sequence  seq{ n in 1..: step{ [0,1/n):n, [1/n,1]:0 } }

Endpoints and values are rational expressions (integers, exact decimals,
fractions, + - * / ^ and parentheses), so sequence templates can simply
substitute the index for ``n`` and re-parse.
"""

from __future__ import annotations

from fractions import Fraction

from . import expressions as ex
from .errors import ParseError
from .functions import ExprPiece, PiecewiseFunction, PolyPiece, Scalar
from .intervals import ElementarySet, Interval, normalize
from .lexer import Token, TokenStream, number_value
from .partitions import Gauge


# --- rational arithmetic ------------------------------------------------------


def eval_rational(node: ex.Node) -> Fraction:
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "neg":
        return -eval_rational(node[1])
    if kind == "add":
        return eval_rational(node[1]) + eval_rational(node[2])
    if kind == "sub":
        return eval_rational(node[1]) - eval_rational(node[2])
    if kind == "mul":
        return eval_rational(node[1]) * eval_rational(node[2])
    if kind == "div":
        d = eval_rational(node[2])
        if d == 0:
            raise ParseError("division by zero in rational constant")
        return eval_rational(node[1]) / d
    if kind == "pow":
        if node[2] < 0:
            base = eval_rational(node[1])
            if base == 0:
                raise ParseError("zero to a negative power")
            return Fraction(1) / base ** (-node[2])
        return eval_rational(node[1]) ** node[2]
    raise ParseError(f"not a rational constant: contains {kind!r}")


def parse_rational(text: str) -> Fraction:
    ts = TokenStream(text)
    value = _rational_from(ts)
    ts.expect("end")
    return value


def _rational_from(ts: TokenStream) -> Fraction:
    return eval_rational(ex.parse_from(ts))


# --- intervals and sets -------------------------------------------------------


def parse_interval(text: str) -> Interval:
    ts = TokenStream(text)
    iv = _interval_from(ts)
    ts.expect("end")
    return iv


def _interval_from(ts: TokenStream) -> Interval:
    tok = ts.peek()
    if ts.at_sym("{"):
        ts.next()
        point = _rational_from(ts)
        ts.expect("sym", "}")
        return Interval.singleton(point)
    if not ts.at_sym("[", "("):
        raise ts.error(f"expected an interval, found {tok.text!r}")
    lo_closed = ts.next().text == "["
    lo = _rational_from(ts)
    ts.expect("sym", ",")
    hi = _rational_from(ts)
    if not ts.at_sym("]", ")"):
        raise ts.error("expected ']' or ')' closing an interval")
    hi_closed = ts.next().text == "]"
    if lo > hi:
        raise ts.error(f"interval endpoints out of order: {lo} > {hi}", tok)
    if lo == hi and not (lo_closed and hi_closed):
        raise ts.error("degenerate interval must be closed on both sides", tok)
    return Interval(lo, hi, lo_closed, hi_closed)


def parse_set(text: str) -> ElementarySet:
    ts = TokenStream(text)
    out = []
    while ts.peek().kind != "end":
        out.append(_interval_from(ts))
        if ts.at_sym(","):
            ts.next()
    ts.expect("end")
    return normalize(out)


# --- functions ----------------------------------------------------------------


def parse_function(text: str) -> PiecewiseFunction:
    ts = TokenStream(text)
    f = _function_from(ts)
    ts.expect("end")
    return f


def _function_from(ts: TokenStream) -> PiecewiseFunction:
    tok = ts.expect("ident")
    if tok.text not in ("step", "poly", "expr"):
        raise ts.error(f"unknown function literal {tok.text!r}", tok)
    kind = tok.text
    ts.expect("sym", "{")
    segments: list[tuple[Interval, object]] = []
    point_values: dict[Fraction, Scalar] = {}
    decls: list[tuple] = []
    while True:
        if ts.at_sym("}"):
            break
        if ts.at_sym(";"):
            ts.next()
            decls.append(_decl_from(ts))
            continue
        iv = _interval_from(ts)
        ts.expect("sym", ":")
        if kind == "step":
            payload: object = _rational_from(ts)
        else:
            node = ex.parse_from(ts)
            if kind == "poly":
                coeffs = ex.to_polynomial(node)
                if coeffs is None:
                    raise ts.error("poly{} body is not a rational polynomial in t")
                payload = PolyPiece(coeffs)
            else:
                payload = node
        segments.append((iv, payload))
        if ts.at_sym(","):
            ts.next()
    ts.expect("sym", "}")

    limit_decls: dict[tuple[Fraction, int], Scalar | None] = {}
    unbounded = False
    for decl in decls:
        if decl[0] == "value":
            point_values[decl[1]] = decl[2]
        elif decl[0] == "limit":
            limit_decls[(decl[1], decl[2])] = decl[3]
        elif decl[0] == "variation_unbounded":
            unbounded = True

    resolved: list[tuple[Interval, object]] = []
    for iv, payload in segments:
        if isinstance(payload, tuple):  # expression AST
            declared_lo = limit_decls.get((iv.lo, +1), "auto")
            declared_hi = limit_decls.get((iv.hi, -1), "auto")
            payload = ExprPiece.create(
                payload, iv.lo, iv.hi, declared_lo, declared_hi, unbounded
            )
        resolved.append((iv, payload))
    return PiecewiseFunction.from_segments(resolved, point_values)


def _decl_from(ts: TokenStream) -> tuple:
    tok = ts.expect("ident")
    if tok.text == "value":
        ts.expect("sym", "(")
        point = _rational_from(ts)
        ts.expect("sym", ")")
        ts.expect("sym", "=")
        return ("value", point, _rational_from(ts))
    if tok.text == "limit":
        ts.expect("sym", "(")
        point = _rational_from(ts)
        if not ts.at_sym("+", "-"):
            raise ts.error("limit declaration needs a side, e.g. limit(0+)")
        side = 1 if ts.next().text == "+" else -1
        ts.expect("sym", ")")
        ts.expect("sym", "=")
        if ts.at_ident("none"):
            ts.next()
            return ("limit", point, side, None)
        return ("limit", point, side, _rational_from(ts))
    if tok.text == "variation":
        ts.expect("sym", "=")
        ts.expect("ident", "unbounded")
        return ("variation_unbounded",)
    raise ts.error(f"unknown declaration {tok.text!r}", tok)


# --- gauges -------------------------------------------------------------------


def parse_gauge(text: str) -> Gauge:
    ts = TokenStream(text)
    ts.expect("ident", "gauge")
    ts.expect("sym", "{")
    ts.expect("ident", "base")
    ts.expect("sym", ":")
    pieces: list[tuple[Interval, Fraction]] = []
    while True:
        iv = _interval_from(ts)
        ts.expect("sym", ":")
        pieces.append((iv, _rational_from(ts)))
        if ts.at_sym(","):
            ts.next()
            continue
        break
    overrides: list[tuple[Fraction, Fraction]] = []
    while ts.at_sym(";"):
        ts.next()
        while True:
            ts.expect("ident", "at")
            point = _rational_from(ts)
            ts.expect("sym", ":")
            overrides.append((point, _rational_from(ts)))
            if ts.at_sym(","):
                ts.next()
                continue
            break
    ts.expect("sym", "}")
    ts.expect("end")
    return Gauge.from_step(pieces, overrides)


# --- sequences ----------------------------------------------------------------


class SequenceTemplate:
    """``seq{ n in 1..: <function literal with n> }``, instantiated per index
    by token-level substitution."""

    def __init__(self, body: str, limit_literal: str | None = None):
        self.body = body
        self.limit_literal = limit_literal

    def instantiate(self, n: int) -> PiecewiseFunction:
        return parse_function(_substitute_n(self.body, n))

    def declared_limit(self) -> PiecewiseFunction | None:
        if self.limit_literal is None:
            return None
        return parse_function(self.limit_literal)


def parse_sequence_template(text: str) -> SequenceTemplate:
    ts = TokenStream(text)
    ts.expect("ident", "seq")
    ts.expect("sym", "{")
    ts.expect("ident", "n")
    ts.expect("ident", "in")
    ts.expect("num", "1")
    ts.expect("sym", "..")
    ts.expect("sym", ":")
    start = ts.peek().pos
    depth = 0
    body_end = None
    limit_start = None
    closing = None
    while True:
        tok = ts.next()
        if tok.kind == "end":
            raise ts.error("unterminated seq{} literal", tok)
        if tok.kind == "sym" and tok.text == "{":
            depth += 1
        elif tok.kind == "sym" and tok.text == "}":
            if depth == 0:
                closing = tok.pos
                break
            depth -= 1
        elif tok.kind == "sym" and tok.text == ";" and depth == 0 and body_end is None:
            body_end = tok.pos
            ts.expect("ident", "limit")
            ts.expect("sym", ":")
            limit_start = ts.peek().pos
    body = text[start : body_end if body_end is not None else closing].strip()
    limit_literal = text[limit_start:closing].strip() if limit_start is not None else None
    if not body:
        raise ParseError("empty seq{} body")
    return SequenceTemplate(body, limit_literal)


def _substitute_n(template: str, n: int) -> str:
    from .lexer import tokenize

    parts: list[str] = []
    for tok in tokenize(template):
        if tok.kind == "ident" and tok.text == "n":
            parts.append(f"({n})")
        elif tok.kind == "end":
            break
        else:
            parts.append(tok.text)
        parts.append(" ")
    return "".join(parts)


# --- closed-set descriptions ----------------------------------------------


def parse_closed_set(text: str):
    from .harnack import cantor_description, finite_description

    ts = TokenStream(text)
    head = ts.expect("ident")
    if head.text == "cantor":
        ts.expect("sym", "{")
        hull = None
        ratio = Fraction(1, 3)
        by_level = True
        while not ts.at_sym("}"):
            key = ts.expect("ident")
            ts.expect("sym", ":")
            if key.text == "hull":
                hull = _interval_from(ts)
            elif key.text == "ratio":
                ratio = _rational_from(ts)
            elif key.text == "mode":
                mode = ts.expect("ident").text
                if mode not in ("level", "interval"):
                    raise ts.error("mode must be 'level' or 'interval'")
                by_level = mode == "level"
            else:
                raise ts.error(f"unknown cantor key {key.text!r}", key)
            if ts.at_sym(","):
                ts.next()
        ts.expect("sym", "}")
        ts.expect("end")
        if hull is None:
            raise ParseError("cantor{} needs hull:[a,b]")
        return cantor_description(hull, ratio, by_level=by_level)
    if head.text == "complement":
        ts.expect("sym", "{")
        hull = None
        intervals: list[Interval] = []
        while not ts.at_sym("}"):
            key = ts.expect("ident")
            ts.expect("sym", ":")
            if key.text == "hull":
                hull = _interval_from(ts)
            elif key.text == "intervals":
                while ts.at_sym("[", "(", "{"):
                    intervals.append(_interval_from(ts))
                    if ts.at_sym(","):
                        ts.next()
            else:
                raise ts.error(f"unknown complement key {key.text!r}", key)
            if ts.at_sym(","):
                ts.next()
        ts.expect("sym", "}")
        ts.expect("end")
        if hull is None:
            raise ParseError("complement{} needs hull:[a,b]")
        return finite_description(hull, [ElementarySet((iv,)) for iv in intervals])
    raise ParseError(f"unknown closed-set literal {head.text!r}")


# --- rendering -----------------------------------------------------------------


def format_scalar(v) -> str:
    """p/q for rationals, shortest round-trip decimal for floats."""
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def parse_scalar(text: str) -> Scalar:
    text = text.strip()
    try:
        return parse_rational(text)
    except ParseError:
        return float(text)
