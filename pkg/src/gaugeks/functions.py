"""Regulated real functions on a compact interval, carried as breakpoints
plus closed-form pieces with certified one-sided limits.

A function is data: breakpoints ``a = t_0 < ... < t_m = b``, one piece per
open gap, an explicit point value at every breakpoint, and cached one-sided
limits.  Outside ``[a, b]`` every function is extended as a constant, so
``f(t-)`` at ``a`` and ``f(t+)`` at ``b`` equal the endpoint values and the
corresponding jumps vanish.

All-rational data (step / polynomial pieces) stay exact end to end;
whitelisted transcendental pieces evaluate in floating point and carry
declared or numerically probed limits, which may be flagged as missing.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from . import expressions as ex
from . import polynomials as poly
from .errors import DomainMismatch, NoOneSidedLimit, ParseError, SetOutsideDomain
from .intervals import ElementarySet, Interval

Scalar = Union[Fraction, float]

# sentinel distinguishing "no limit exists" from "not yet resolved"
NO_LIMIT = None


@dataclass(frozen=True)
class PolyPiece:
    coeffs: poly.Coeffs

    @staticmethod
    def constant(v) -> "PolyPiece":
        return PolyPiece(poly.make([v]))

    @property
    def is_constant(self) -> bool:
        return poly.is_constant(self.coeffs)

    def eval(self, t: Fraction) -> Fraction:
        return poly.evaluate(self.coeffs, t)

    def limit_at(self, point: Fraction) -> Fraction:
        return poly.evaluate(self.coeffs, point)

    def describe(self) -> str:
        return "poly[" + ",".join(str(c) for c in self.coeffs) + "]"


@dataclass(frozen=True)
class ExprPiece:
    node: ex.Node
    lo_point: Fraction
    hi_point: Fraction
    lo_limit: Scalar | None
    hi_limit: Scalar | None
    unbounded_variation: bool = False

    @staticmethod
    def create(
        node: ex.Node,
        lo_point,
        hi_point,
        declared_lo: Scalar | None = "auto",
        declared_hi: Scalar | None = "auto",
        unbounded_variation: bool = False,
    ) -> "ExprPiece":
        """Resolve the one-sided limits at both ends of the piece.

        ``"auto"`` probes numerically; an explicit value is cross-checked
        against the probe when the probe stabilises; ``None`` records that
        no limit exists at that end.
        """
        lo_point, hi_point = Fraction(lo_point), Fraction(hi_point)
        fn = ex.compile_scalar(node)
        reach = min(float(hi_point - lo_point) / 4, 0.125)
        lo = _resolve_limit(fn, float(lo_point), +1, reach, declared_lo)
        hi = _resolve_limit(fn, float(hi_point), -1, reach, declared_hi)
        return ExprPiece(node, lo_point, hi_point, lo, hi, unbounded_variation)

    def __post_init__(self):
        object.__setattr__(self, "_scalar_cache", ex.compile_scalar(self.node))
        object.__setattr__(self, "_vector_cache", None)

    def eval(self, t) -> float:
        return self._scalar_cache(float(t))  # type: ignore[attr-defined]

    def vector_fn(self):
        if self._vector_cache is None:  # type: ignore[attr-defined]
            object.__setattr__(self, "_vector_cache", ex.compile_vector(self.node))
        return self._vector_cache  # type: ignore[attr-defined]

    def limit_at(self, point: Fraction) -> Scalar | None:
        if point == self.lo_point:
            return self.lo_limit
        if point == self.hi_point:
            return self.hi_limit
        return self.eval(point)  # interior: continuous

    def describe(self) -> str:
        return "expr[" + ex.format_text(self.node) + "]"


def _resolve_limit(fn, point: float, side: int, reach: float, declared) -> Scalar | None:
    probed = ex.probe_limit(fn, point, side, reach)
    if declared == "auto":
        return probed
    if declared is None:
        return NO_LIMIT
    if probed is not None and abs(float(declared) - probed) > 1e-9 * max(1.0, abs(probed)):
        raise ParseError(
            f"declared one-sided limit {declared} disagrees with numeric probe {probed}"
        )
    return declared


Piece = Union[PolyPiece, ExprPiece]


@dataclass(frozen=True)
class PiecewiseFunction:
    lo: Fraction
    hi: Fraction
    breakpoints: tuple[Fraction, ...]
    pieces: tuple[Piece, ...]
    values: tuple[Scalar, ...]
    left_limits: tuple[Scalar | None, ...]
    right_limits: tuple[Scalar | None, ...]

    # --- construction -----------------------------------------------------

    @staticmethod
    def assemble(
        breakpoints: Sequence,
        pieces: Sequence[Piece],
        values: Sequence[Scalar],
        left_limits: Sequence[Scalar | None] | None = None,
        right_limits: Sequence[Scalar | None] | None = None,
    ) -> "PiecewiseFunction":
        bps = tuple(Fraction(t) for t in breakpoints)
        if len(bps) < 2:
            raise ValueError("domain must be non-degenerate: need at least two breakpoints")
        if any(u >= v for u, v in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(pieces) != len(bps) - 1 or len(values) != len(bps):
            raise ValueError("need one piece per gap and one value per breakpoint")
        m = len(pieces)
        if left_limits is None:
            left_limits = [values[0]] + [pieces[j].limit_at(bps[j + 1]) for j in range(m)]
        if right_limits is None:
            right_limits = [pieces[j].limit_at(bps[j]) for j in range(m)] + [values[m]]
        return PiecewiseFunction(
            bps[0], bps[-1], bps, tuple(pieces), tuple(values),
            tuple(left_limits), tuple(right_limits),
        )

    @staticmethod
    def from_segments(
        segments: Sequence[tuple[Interval, Piece | Scalar]],
        point_values: dict | None = None,
    ) -> "PiecewiseFunction":
        """Build from disjoint interval/piece pairs tiling a closed interval.

        ``point_values`` supplies values at points no segment covers (and
        overrides at points a segment does cover).
        """
        from .intervals import normalize

        point_values = {Fraction(k): v for k, v in (point_values or {}).items()}
        ivs = normalize([iv for iv, _ in segments])
        explicit = [Interval.singleton(p) for p in point_values]
        covered = normalize([*ivs.components, *[e for e in explicit if not ivs.contains(e.lo)]]) \
            if explicit else ivs
        if len(covered.components) != 1:
            raise ParseError(f"segments do not tile an interval: {covered}")
        hull = covered.components[0]
        if not (hull.lo_closed and hull.hi_closed) or hull.is_singleton():
            raise ParseError(f"segments must tile a closed non-degenerate interval, got {hull}")

        cuts = {hull.lo, hull.hi}
        for iv, _ in segments:
            cuts.add(iv.lo)
            cuts.add(iv.hi)
        cuts.update(point_values)
        bps = sorted(cuts)

        def segment_at(t: Fraction):
            for iv, payload in segments:
                if iv.contains(t):
                    return payload
            return None

        pieces: list[Piece] = []
        for u, v in zip(bps, bps[1:]):
            mid = (u + v) / 2
            payload = segment_at(mid)
            if payload is None:
                raise ParseError(f"no segment covers ({u},{v})")
            pieces.append(_as_piece(payload, u, v))
        values: list[Scalar] = []
        for t in bps:
            if t in point_values:
                values.append(point_values[t])
                continue
            payload = segment_at(t)
            if payload is None:
                raise ParseError(f"no segment or point value covers {t}")
            values.append(_eval_payload(payload, t))
        return PiecewiseFunction.assemble(bps, pieces, values)

    @staticmethod
    def polynomial(lo, hi, coeffs) -> "PiecewiseFunction":
        p = PolyPiece(poly.make(coeffs))
        lo, hi = Fraction(lo), Fraction(hi)
        return PiecewiseFunction.assemble([lo, hi], [p], [p.eval(lo), p.eval(hi)])

    @staticmethod
    def identity(lo, hi) -> "PiecewiseFunction":
        return PiecewiseFunction.polynomial(lo, hi, [0, 1])

    @staticmethod
    def constant(lo, hi, v) -> "PiecewiseFunction":
        return PiecewiseFunction.polynomial(lo, hi, [v])

    @staticmethod
    def indicator(lo, hi, where: ElementarySet, scale=1) -> "PiecewiseFunction":
        """scale * chi_where on [lo, hi]."""
        lo, hi = Fraction(lo), Fraction(hi)
        _require_inside(where, lo, hi)
        scale = Fraction(scale)
        cuts = sorted({lo, hi, *where.endpoints()})
        pieces = [
            PolyPiece.constant(scale if where.contains((u + v) / 2) else 0)
            for u, v in zip(cuts, cuts[1:])
        ]
        values = [scale if where.contains(t) else Fraction(0) for t in cuts]
        return PiecewiseFunction.assemble(cuts, pieces, values)

    @staticmethod
    def step(lo, hi, segments: Sequence[tuple[Interval, Scalar]]) -> "PiecewiseFunction":
        f = PiecewiseFunction.from_segments([(iv, v) for iv, v in segments])
        if (f.lo, f.hi) != (Fraction(lo), Fraction(hi)):
            raise ParseError(f"step segments tile [{f.lo},{f.hi}], expected [{lo},{hi}]")
        return f

    # --- pointwise calculus -------------------------------------------------

    def domain(self) -> tuple[Fraction, Fraction]:
        return self.lo, self.hi

    def _gap_index(self, t: Fraction) -> int:
        return bisect_right(self.breakpoints, t) - 1

    def eval(self, t) -> Scalar:
        if not isinstance(t, Fraction):
            t = Fraction(t)
        if t <= self.lo:
            return self.values[0]
        if t >= self.hi:
            return self.values[-1]
        i = self._gap_index(t)
        if self.breakpoints[i] == t:
            return self.values[i]
        return self.pieces[i].eval(t)

    def limit_left(self, t) -> Scalar:
        if not isinstance(t, Fraction):
            t = Fraction(t)
        if t <= self.lo:
            return self.values[0]
        if t > self.hi:
            return self.values[-1]
        i = self._gap_index(t)
        if self.breakpoints[i] == t:
            lim = self.left_limits[i]
        else:
            lim = self.pieces[i].eval(t)
        if lim is NO_LIMIT:
            raise NoOneSidedLimit(f"no left limit at {t}")
        return lim

    def limit_right(self, t) -> Scalar:
        if not isinstance(t, Fraction):
            t = Fraction(t)
        if t < self.lo:
            return self.values[0]
        if t >= self.hi:
            return self.values[-1]
        i = self._gap_index(t)
        if self.breakpoints[i] == t:
            lim = self.right_limits[i]
        else:
            lim = self.pieces[i].eval(t)
        if lim is NO_LIMIT:
            raise NoOneSidedLimit(f"no right limit at {t}")
        return lim

    def jump_minus(self, t) -> Scalar:
        return self.eval(t) - self.limit_left(t)

    def jump_plus(self, t) -> Scalar:
        return self.limit_right(t) - self.eval(t)

    def jump(self, t) -> Scalar:
        return self.limit_right(t) - self.limit_left(t)

    # --- structure ----------------------------------------------------------

    def spans(self):
        """(u, v, piece) for each open gap."""
        for j, piece in enumerate(self.pieces):
            yield self.breakpoints[j], self.breakpoints[j + 1], piece

    def is_step(self) -> bool:
        return all(isinstance(p, PolyPiece) and p.is_constant for p in self.pieces)

    def all_polynomial(self) -> bool:
        return all(isinstance(p, PolyPiece) for p in self.pieces)

    def jump_points(self) -> list[Fraction]:
        """Breakpoints where the function actually jumps (one side or both)."""
        out = []
        for t in self.breakpoints:
            if self.jump_minus(t) != 0 or self.jump_plus(t) != 0:
                out.append(t)
        return out

    def same_domain(self, other: "PiecewiseFunction") -> bool:
        return (self.lo, self.hi) == (other.lo, other.hi)

    # --- operations ---------------------------------------------------------

    def restrict(self, where: ElementarySet) -> "PiecewiseFunction":
        """Exact product with the indicator of ``where`` (g * chi_S)."""
        _require_inside(where, self.lo, self.hi)
        cuts = sorted({*self.breakpoints, *where.endpoints()})
        pieces: list[Piece] = []
        right_limits: list[Scalar | None] = []
        left_limits: list[Scalar | None] = [None] * (len(cuts))
        zero = PolyPiece.constant(0)
        for u, v in zip(cuts, cuts[1:]):
            inside = where.contains((u + v) / 2)
            if not inside:
                pieces.append(zero)
                right_limits.append(Fraction(0))
                left_limits[len(pieces)] = Fraction(0)
                continue
            i = self._gap_index((u + v) / 2)
            piece = self.pieces[i]
            pieces.append(piece)
            right_limits.append(piece.limit_at(u))
            left_limits[len(pieces)] = piece.limit_at(v)
        values = [self.eval(t) * (1 if where.contains(t) else 0) for t in cuts]
        left_limits[0] = values[0]
        right_limits.append(values[-1])
        return PiecewiseFunction(
            cuts[0], cuts[-1], tuple(cuts), tuple(pieces), tuple(values),
            tuple(left_limits), tuple(right_limits),
        )

    def linear_combination(self, c1, other: "PiecewiseFunction", c2) -> "PiecewiseFunction":
        """c1*self + c2*other, exact on the merged breakpoint grid."""
        if not self.same_domain(other):
            raise DomainMismatch(f"[{self.lo},{self.hi}] vs [{other.lo},{other.hi}]")
        c1, c2 = Fraction(c1), Fraction(c2)
        cuts = sorted({*self.breakpoints, *other.breakpoints})
        pieces: list[Piece] = []
        for u, v in zip(cuts, cuts[1:]):
            mid = (u + v) / 2
            p1 = self.pieces[self._gap_index(mid)]
            p2 = other.pieces[other._gap_index(mid)]
            pieces.append(_combine_pieces(c1, p1, c2, p2, u, v))
        values = [c1 * self.eval(t) + c2 * other.eval(t) for t in cuts]
        lefts = [
            _combine_limits(c1, _try_left(self, t), c2, _try_left(other, t)) for t in cuts
        ]
        rights = [
            _combine_limits(c1, _try_right(self, t), c2, _try_right(other, t)) for t in cuts
        ]
        return PiecewiseFunction(
            cuts[0], cuts[-1], tuple(cuts), tuple(pieces), tuple(values),
            tuple(lefts), tuple(rights),
        )

    def variation(self) -> Scalar:
        """Total variation on [a, b]; ``math.inf`` for pieces flagged or
        lacking a one-sided limit, a float estimate for other transcendental
        pieces, exact otherwise."""
        total: Scalar = Fraction(0)
        for j, t in enumerate(self.breakpoints):
            left = self.left_limits[j]
            right = self.right_limits[j]
            if left is NO_LIMIT or right is NO_LIMIT:
                return math.inf
            total += abs(self.values[j] - left) + abs(right - self.values[j])
        for u, v, piece in self.spans():
            if isinstance(piece, PolyPiece):
                var, exact = poly.variation_on_interval(piece.coeffs, u, v)
                total += var if exact else float(var)
            else:
                if piece.unbounded_variation:
                    return math.inf
                total += _sampled_variation(piece, u, v)
        return total

    def sup_abs(self) -> tuple[Scalar, bool]:
        """(bound, certified) for sup |f| over the domain."""
        best: Scalar = Fraction(0)
        certified = True
        for v in self.values:
            best = max(best, abs(v))
        for lim in (*self.left_limits, *self.right_limits):
            if lim is not NO_LIMIT:
                best = max(best, abs(lim))
        for u, v, piece in self.spans():
            if isinstance(piece, PolyPiece):
                mn, mx, exact = poly.extrema_on_interval(piece.coeffs, u, v)
                best = max(best, abs(mn), abs(mx))
                certified = certified and exact
            else:
                lo, hi = float(u), float(v)
                fn = piece._scalar_cache  # type: ignore[attr-defined]
                for k in range(129):
                    t = lo + (hi - lo) * k / 128
                    if u < t < v:
                        best = max(best, abs(fn(t)))
                certified = False
        return best, certified

    def describe(self) -> str:
        parts = []
        for j, (u, v, piece) in enumerate(self.spans()):
            parts.append(f"{self.breakpoints[j]}:{self.values[j]}")
            parts.append(f"({u},{v}):{piece.describe()}")
        parts.append(f"{self.hi}:{self.values[-1]}")
        return " ".join(parts)


def _as_piece(payload, u: Fraction, v: Fraction) -> Piece:
    if isinstance(payload, (PolyPiece, ExprPiece)):
        return payload
    if isinstance(payload, tuple):
        return ExprPiece.create(payload, u, v)
    return PolyPiece.constant(payload)


def _eval_payload(payload, t: Fraction) -> Scalar:
    if isinstance(payload, PolyPiece):
        return payload.eval(t)
    if isinstance(payload, ExprPiece):
        return payload.eval(t)
    if isinstance(payload, tuple):
        return ex.compile_scalar(payload)(float(t))
    return Fraction(payload)


def _require_inside(where: ElementarySet, lo: Fraction, hi: Fraction):
    for iv in where.components:
        if iv.lo < lo or iv.hi > hi:
            raise SetOutsideDomain(f"{iv} is outside [{lo},{hi}]")


def _try_left(f: PiecewiseFunction, t: Fraction) -> Scalar | None:
    try:
        return f.limit_left(t)
    except NoOneSidedLimit:
        return NO_LIMIT


def _try_right(f: PiecewiseFunction, t: Fraction) -> Scalar | None:
    try:
        return f.limit_right(t)
    except NoOneSidedLimit:
        return NO_LIMIT


def _combine_limits(c1: Fraction, l1, c2: Fraction, l2) -> Scalar | None:
    if c1 == 0 and c2 == 0:
        return Fraction(0)
    if c1 == 0:
        return NO_LIMIT if l2 is NO_LIMIT else c2 * l2
    if c2 == 0:
        return NO_LIMIT if l1 is NO_LIMIT else c1 * l1
    if l1 is NO_LIMIT or l2 is NO_LIMIT:
        return NO_LIMIT
    return c1 * l1 + c2 * l2


def _combine_pieces(c1: Fraction, p1: Piece, c2: Fraction, p2: Piece, u: Fraction, v: Fraction) -> Piece:
    if isinstance(p1, PolyPiece) and isinstance(p2, PolyPiece):
        return PolyPiece(poly.add(poly.scale(p1.coeffs, c1), poly.scale(p2.coeffs, c2)))
    n1 = p1.node if isinstance(p1, ExprPiece) else _poly_node(p1.coeffs)
    n2 = p2.node if isinstance(p2, ExprPiece) else _poly_node(p2.coeffs)
    lo = _combine_limits(c1, p1.limit_at(u), c2, p2.limit_at(u))
    hi = _combine_limits(c1, p1.limit_at(v), c2, p2.limit_at(v))
    unbounded = (isinstance(p1, ExprPiece) and p1.unbounded_variation and c1 != 0) or (
        isinstance(p2, ExprPiece) and p2.unbounded_variation and c2 != 0
    )
    return ExprPiece(ex.linear_combination(c1, n1, c2, n2), u, v, lo, hi, unbounded)


def _poly_node(coeffs: poly.Coeffs) -> ex.Node:
    node: ex.Node = ("num", coeffs[-1])
    for c in reversed(coeffs[:-1]):
        node = ("add", ("mul", node, ("t",)), ("num", c))
    return node


def _sampled_variation(piece: ExprPiece, u: Fraction, v: Fraction, n: int = 512) -> float:
    fn = piece._scalar_cache  # type: ignore[attr-defined]
    lo, hi = float(u), float(v)
    h = (hi - lo) / (n + 1)
    xs = [lo + h * (k + 1) for k in range(n)]
    total = 0.0
    prev = fn(xs[0])
    for x in xs[1:]:
        cur = fn(x)
        total += abs(cur - prev)
        prev = cur
    return total
