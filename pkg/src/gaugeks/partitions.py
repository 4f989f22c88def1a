"""Gauges, tagged partitions, delta-fine systems, a constructive Cousin
lemma, and Riemann-Stieltjes sums.

Gauges are restricted to positive step baselines plus finitely many
point overrides; for that class the work-stack bisection underlying
``cousin_partition`` provably terminates, and on constant baselines the
resulting partition is a uniform dyadic grid whose tags deviate from the
left endpoints only at override points.  ``uniform_grid_structure``
exposes that structure so huge partitions can be summed without being
materialised; its agreement with the naive construction is tested.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import GaugeKSError
from .functions import PiecewiseFunction, Scalar
from .intervals import Interval, normalize


@dataclass(frozen=True)
class Gauge:
    """delta(t) > 0 on [lo, hi]: step baseline plus point overrides."""

    pieces: tuple[tuple[Interval, Fraction], ...]
    overrides: tuple[tuple[Fraction, Fraction], ...] = ()

    def __post_init__(self):
        tiling = normalize([iv for iv, _ in self.pieces])
        if len(tiling.components) != 1:
            raise ValueError(f"gauge baseline does not tile an interval: {tiling}")
        hull = tiling.components[0]
        if not (hull.lo_closed and hull.hi_closed):
            raise ValueError("gauge baseline must tile a closed interval")
        for _, v in self.pieces:
            if v <= 0:
                raise ValueError("gauge baseline values must be positive")
        object.__setattr__(self, "_hull", hull)
        object.__setattr__(self, "_omap", dict(self.overrides))
        ordered = sorted(self.pieces, key=lambda x: x[0].start_key)
        starts = [iv.start_key for iv, _ in ordered]
        object.__setattr__(self, "_ordered", ordered)
        object.__setattr__(self, "_starts", starts)
        plateaus = {v for iv, v in self.pieces if not iv.is_singleton()}
        const = plateaus.pop() if (
            len(plateaus) == 1 and not any(iv.is_singleton() for iv, _ in self.pieces)
        ) else None
        object.__setattr__(self, "_const_baseline", const)
        for p, v in self.overrides:
            if v <= 0:
                raise ValueError("gauge override values must be positive")
            if not hull.contains(p):
                raise ValueError(f"override point {p} outside gauge domain {hull}")
            if v > self.baseline_value(p):
                raise ValueError(f"override at {p} may only shrink the baseline")

    @property
    def lo(self) -> Fraction:
        return self._hull.lo  # type: ignore[attr-defined]

    @property
    def hi(self) -> Fraction:
        return self._hull.hi  # type: ignore[attr-defined]

    def baseline_value(self, t) -> Fraction:
        if not isinstance(t, Fraction):
            t = Fraction(t)
        const = self._const_baseline  # type: ignore[attr-defined]
        if const is not None:
            if self.lo <= t <= self.hi:
                return const
            raise ValueError(f"{t} outside gauge domain")
        key = (t, 0)
        idx = bisect_right(self._starts, key) - 1  # type: ignore[attr-defined]
        for j in (idx, idx + 1):
            if 0 <= j < len(self._ordered):  # type: ignore[attr-defined]
                iv, v = self._ordered[j]  # type: ignore[attr-defined]
                if iv.contains(t):
                    return v
        raise ValueError(f"{t} outside gauge domain")

    def value(self, t) -> Fraction:
        if not isinstance(t, Fraction):
            t = Fraction(t)
        got = self._omap.get(t)  # type: ignore[attr-defined]
        if got is not None:
            return got
        return self.baseline_value(t)

    def min_plateau(self) -> Fraction:
        return min(v for iv, v in self.pieces if not iv.is_singleton())

    def override_count(self) -> int:
        singles = sum(1 for iv, _ in self.pieces if iv.is_singleton())
        return len(self.overrides) + singles

    def override_points(self) -> list[Fraction]:
        pts = {p for p, _ in self.overrides}
        pts.update(iv.lo for iv, _ in self.pieces if iv.is_singleton())
        return sorted(pts)

    @staticmethod
    def constant(lo, hi, delta, overrides: Iterable[tuple] = ()) -> "Gauge":
        iv = Interval.closed(Fraction(lo), Fraction(hi))
        ov = tuple(sorted((Fraction(p), Fraction(v)) for p, v in overrides))
        return Gauge(((iv, Fraction(delta)),), ov)

    @staticmethod
    def from_step(
        segments: Sequence[tuple[Interval, Fraction]],
        overrides: Iterable[tuple] = (),
    ) -> "Gauge":
        ov = tuple(sorted((Fraction(p), Fraction(v)) for p, v in overrides))
        return Gauge(tuple((iv, Fraction(v)) for iv, v in segments), ov)


@dataclass(frozen=True)
class TaggedPartition:
    nodes: tuple[Fraction, ...]
    tags: tuple[Fraction, ...]

    def __post_init__(self):
        nodes = tuple(Fraction(t) for t in self.nodes)
        tags = tuple(Fraction(t) for t in self.tags)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "tags", tags)
        if len(nodes) < 2 or len(tags) != len(nodes) - 1:
            raise ValueError("partition needs m >= 1 intervals and one tag each")
        for u, v in zip(nodes, nodes[1:]):
            if u >= v:
                raise ValueError("partition nodes must increase strictly")
        for j, xi in enumerate(tags):
            if not (nodes[j] <= xi <= nodes[j + 1]):
                raise ValueError(f"tag {xi} outside [{nodes[j]}, {nodes[j+1]}]")

    @property
    def size(self) -> int:
        return len(self.tags)

    def items(self):
        for j, xi in enumerate(self.tags):
            yield self.nodes[j], self.nodes[j + 1], xi

    def hull(self) -> tuple[Fraction, Fraction]:
        return self.nodes[0], self.nodes[-1]


@dataclass(frozen=True)
class DeltaFineSystem:
    """Ordered, possibly gappy tagged intervals; zero length allowed."""

    items: tuple[tuple[Fraction, Fraction, Fraction], ...]

    def __post_init__(self):
        items = tuple(
            (Fraction(b), Fraction(g), Fraction(x)) for b, g, x in self.items
        )
        object.__setattr__(self, "items", items)
        prev = None
        for beta, gamma, xi in items:
            if not (beta <= xi <= gamma):
                raise ValueError(f"tag {xi} outside [{beta}, {gamma}]")
            if prev is not None and beta < prev:
                raise ValueError("system intervals must be ordered left to right")
            prev = gamma

    @property
    def size(self) -> int:
        return len(self.items)


def is_delta_fine(p: TaggedPartition | DeltaFineSystem, gauge: Gauge) -> bool:
    """Every interval must fit strictly inside its tag's gauge window."""
    if isinstance(p, TaggedPartition):
        triples = list(p.items())
    else:
        triples = list(p.items)
    for u, v, xi in triples:
        d = gauge.value(xi)
        if not (xi - d < u and v < xi + d):
            return False
    return True


@dataclass
class CousinStats:
    max_depth: int = 0
    cells: int = 0


def cousin_partition(gauge: Gauge, hull: Interval | None = None) -> TaggedPartition:
    part, _ = cousin_partition_with_stats(gauge, hull)
    return part


def cousin_partition_with_stats(
    gauge: Gauge, hull: Interval | None = None
) -> tuple[TaggedPartition, CousinStats]:
    """Deterministic work-stack bisection.

    Pop [u, v]; tag u if v-u < delta(u), else v if v-u < delta(v), else the
    midpoint if v-u < delta(mid); otherwise bisect at the midpoint.  Tag
    preference (left, right, mid) is fixed so identical inputs reproduce
    identical partitions.
    """
    if hull is None:
        hull = Interval.closed(gauge.lo, gauge.hi)
    if not (hull.lo_closed and hull.hi_closed and hull.lo < hull.hi):
        raise ValueError("hull must be a closed non-degenerate interval")
    if hull.lo < gauge.lo or hull.hi > gauge.hi:
        raise ValueError("hull reaches outside the gauge domain")
    stats = CousinStats()
    nodes: list[Fraction] = [hull.lo]
    tags: list[Fraction] = []
    stack: list[tuple[Fraction, Fraction, int]] = [(hull.lo, hull.hi, 0)]
    depth_cap = _depth_cap(gauge, hull)
    while stack:
        u, v, depth = stack.pop()
        stats.max_depth = max(stats.max_depth, depth)
        if depth > depth_cap:
            raise GaugeKSError(
                f"cousin bisection exceeded depth cap {depth_cap}; gauge outside supported class?"
            )
        length = v - u
        mid = (u + v) / 2
        tag = None
        if length < gauge.value(u):
            tag = u
        elif length < gauge.value(v):
            tag = v
        elif length < gauge.value(mid):
            tag = mid
        if tag is not None:
            nodes.append(v)
            tags.append(tag)
            stats.cells += 1
            continue
        stack.append((mid, v, depth + 1))
        stack.append((u, mid, depth + 1))
    return TaggedPartition(tuple(nodes), tuple(tags)), stats


def _depth_cap(gauge: Gauge, hull: Interval) -> int:
    span = hull.hi - hull.lo
    floor = min(gauge.min_plateau(), min((v for _, v in gauge.overrides), default=span))
    depth = 0
    length = span
    while length >= floor:
        length /= 2
        depth += 1
    return depth + 2 * gauge.override_count() + 8


def theoretical_depth_bound(gauge: Gauge, hull: Interval | None = None) -> int:
    """log2(span / min-plateau) rounded up, plus 2 per override."""
    if hull is None:
        hull = Interval.closed(gauge.lo, gauge.hi)
    span = hull.hi - hull.lo
    plateau = gauge.min_plateau()
    depth = 0
    length = span
    while length >= plateau:
        length /= 2
        depth += 1
    return depth + 2 * gauge.override_count()


# --- predicted structure on constant baselines ------------------------------


@dataclass(frozen=True)
class UniformGrid:
    """Cousin partition of a constant-baseline gauge, without materialising.

    Cells are ``[origin + i*h, origin + (i+1)*h]`` for i in range(count),
    tagged at their left endpoint except for the cells listed in
    ``special`` (index -> tag).  ``None`` in special marks a cell that must
    be re-run through the work-stack (both endpoints and midpoint are
    overridden); this cannot occur for the oracle's own gauges.
    """

    origin: Fraction
    h: Fraction
    count: int
    special: tuple[tuple[int, Fraction | None], ...]

    def cell(self, i: int) -> tuple[Fraction, Fraction]:
        return self.origin + i * self.h, self.origin + (i + 1) * self.h


def uniform_grid_structure(gauge: Gauge, hull: Interval | None = None) -> UniformGrid | None:
    """Predict cousin_partition for a single-plateau gauge; None if the
    baseline is not constant over the hull."""
    if hull is None:
        hull = Interval.closed(gauge.lo, gauge.hi)
    positive = [(iv, v) for iv, v in gauge.pieces if not iv.is_singleton()]
    if len({v for _, v in positive}) != 1:
        return None
    if any(iv.is_singleton() for iv, _ in gauge.pieces):
        return None
    beta = positive[0][1]
    span = hull.hi - hull.lo
    depth = 0
    length = span
    while length >= beta:
        length /= 2
        depth += 1
    count = 1 << depth
    h = span / count
    omap = dict(gauge.overrides)
    special: list[tuple[int, Fraction | None]] = []
    for w in omap:
        if w < hull.lo or w >= hull.hi:
            continue
        offset = (w - hull.lo) / h
        if offset.denominator != 1:
            continue  # override never becomes a node; tags unaffected
        i = int(offset)
        u, v = hull.lo + i * h, hull.lo + (i + 1) * h
        mid = (u + v) / 2
        if h < gauge.value(u):
            continue  # override larger than the cell; left tag stands
        if h < gauge.value(v):
            special.append((i, v))
        elif h < gauge.value(mid):
            special.append((i, mid))
        else:
            special.append((i, None))
    return UniformGrid(hull.lo, h, count, tuple(sorted(special)))


def materialize_grid(gauge: Gauge, grid: UniformGrid) -> TaggedPartition:
    """Expand a UniformGrid to the explicit partition (testing aid)."""
    nodes = [grid.origin + i * grid.h for i in range(grid.count + 1)]
    tags: list[Fraction] = [grid.origin + i * grid.h for i in range(grid.count)]
    out_nodes: list[Fraction] = [nodes[0]]
    out_tags: list[Fraction] = []
    special = dict(grid.special)
    for i in range(grid.count):
        if i in special:
            tag = special[i]
            if tag is None:
                sub, _ = cousin_partition_with_stats(
                    gauge, Interval.closed(nodes[i], nodes[i + 1])
                )
                out_nodes.extend(sub.nodes[1:])
                out_tags.extend(sub.tags)
                continue
            tags[i] = tag
        out_nodes.append(nodes[i + 1])
        out_tags.append(tags[i])
    return TaggedPartition(tuple(out_nodes), tuple(out_tags))


# --- Riemann-Stieltjes sums --------------------------------------------------


def rs_sum_df_g(f: PiecewiseFunction, g: PiecewiseFunction, p: TaggedPartition) -> Scalar:
    """S(df, g, P) = sum [f(a_j) - f(a_{j-1})] g(xi_j)."""
    total: Scalar = Fraction(0)
    prev = f.eval(p.nodes[0])
    for j, xi in enumerate(p.tags):
        cur = f.eval(p.nodes[j + 1])
        df = cur - prev
        if df != 0:
            total += df * g.eval(xi)
        prev = cur
    return total


def rs_sum_f_dg(f: PiecewiseFunction, g: PiecewiseFunction, p: TaggedPartition) -> Scalar:
    """S(f, dg, P) = sum f(xi_j) [g(a_j) - g(a_{j-1})]."""
    total: Scalar = Fraction(0)
    prev = g.eval(p.nodes[0])
    for j, xi in enumerate(p.tags):
        cur = g.eval(p.nodes[j + 1])
        dg = cur - prev
        if dg != 0:
            total += f.eval(xi) * dg
        prev = cur
    return total


# --- sampling and gauge surgery ----------------------------------------------


def random_fine_partition(
    gauge: Gauge,
    rng: random.Random,
    hull: Interval | None = None,
    split_bias: float = 0.3,
) -> TaggedPartition:
    """A random delta-fine partition: random bisection points, random
    admissible tags.  Covers tag placements the deterministic Cousin
    construction never produces (e.g. interior jump points)."""
    if hull is None:
        hull = Interval.closed(gauge.lo, gauge.hi)
    # Geometry runs on an integer grid of 2**24 cells over the hull so
    # admissibility checks cost integer comparisons, not Fraction algebra.
    G = 1 << 24
    span = hull.hi - hull.lo
    grid = Fraction(span, G)
    lo = hull.lo

    def coord(i: int) -> Fraction:
        return lo + i * grid

    # gauge value at a grid point, in grid units (exact)
    unit_cache: dict[Fraction, Fraction] = {}

    def in_units(value: Fraction) -> Fraction:
        got = unit_cache.get(value)
        if got is None:
            got = unit_cache.setdefault(value, value / grid)
        return got

    override_at: dict[int, Fraction] = {}
    off_grid: list[tuple[Fraction, Fraction]] = []
    attractors: list[int] = []  # grid coords near override points, for biased cuts
    for w in gauge.override_points():
        if not hull.contains(w):
            continue
        pos = (w - lo) / grid
        attractors.append(int(pos))
        if pos.denominator == 1:
            override_at[int(pos)] = in_units(gauge.value(w))
        else:
            off_grid.append((w, gauge.value(w)))
    base_units = in_units(gauge.min_plateau())
    baseline_const = gauge._const_baseline is not None  # type: ignore[attr-defined]

    def units_at(i: int) -> Fraction:
        got = override_at.get(i)
        if got is not None:
            return got
        if baseline_const:
            return base_units
        return in_units(gauge.baseline_value(coord(i)))

    nodes: list[Fraction] = [lo]
    tags: list[Fraction] = []

    def rec(ui: int, vi: int, depth: int):
        length = vi - ui
        mid = (ui + vi) // 2
        ok: list[object] = []
        for ci in dict.fromkeys((ui, vi, mid, ui + 1 + rng.randrange(length) if length > 1 else mid)):
            if ui <= ci <= vi:
                d = units_at(ci)
                if ci - d < ui and vi < ci + d:
                    ok.append(ci)
        u_x, v_x = coord(ui), coord(vi)
        for w, d in off_grid:
            if u_x <= w <= v_x and w - d < u_x and v_x < w + d:
                ok.append(w)
        if ok and (depth >= 40 or length <= 1 or rng.random() >= split_bias):
            xi = ok[rng.randrange(len(ok))]
            nodes.append(v_x)
            tags.append(xi if isinstance(xi, Fraction) else coord(xi))
            return
        if length <= 1:
            raise GaugeKSError("gauge finer than the sampling grid")
        inside = [w for w in attractors if ui < w < vi]
        if inside and rng.random() < 0.5:
            # cut right at an override point so later segments can tag it
            cut = inside[rng.randrange(len(inside))]
        else:
            cut = ui + max(1, min(length - 1, (length * rng.randint(342, 682)) >> 10))
        rec(ui, cut, depth + 1)
        rec(cut, vi, depth + 1)

    rec(0, G, 0)
    return TaggedPartition(tuple(nodes), tuple(tags))


def glue_gauges(left: Gauge, right: Gauge, junction) -> Gauge:
    """One gauge on the union domain: left's values below the junction,
    right's above, their minimum at the junction itself."""
    c = Fraction(junction)
    if left.hi != c or right.lo != c:
        raise ValueError("gauges must meet exactly at the junction")
    pieces: list[tuple[Interval, Fraction]] = []
    for iv, v in left.pieces:
        trimmed = iv.intersect(Interval(left.lo, c, True, False))
        if trimmed is not None:
            pieces.append((trimmed, v))
    pieces.append((Interval.singleton(c), min(left.value(c), right.value(c))))
    for iv, v in right.pieces:
        trimmed = iv.intersect(Interval(c, right.hi, False, True))
        if trimmed is not None:
            pieces.append((trimmed, v))
    overrides = [(p, v) for p, v in (*left.overrides, *right.overrides) if p != c]
    return Gauge.from_step(pieces, overrides)


def pointwise_min_gauges(a: Gauge, b: Gauge) -> Gauge:
    if (a.lo, a.hi) != (b.lo, b.hi):
        raise ValueError("gauges must share a domain")
    cuts = sorted({a.lo, a.hi, *_cut_points(a), *_cut_points(b)})
    pieces: list[tuple[Interval, Fraction]] = []
    for u, v in zip(cuts, cuts[1:]):
        mid = (u + v) / 2
        pieces.append((Interval.open(u, v), min(a.baseline_value(mid), b.baseline_value(mid))))
    for t in cuts:
        pieces.append((Interval.singleton(t), min(a.baseline_value(t), b.baseline_value(t))))
    points = {p for p, _ in a.overrides} | {p for p, _ in b.overrides}
    overrides = [(p, min(a.value(p), b.value(p))) for p in sorted(points)]
    return Gauge.from_step(pieces, overrides)


def shrink_gauge_near_points(gauge: Gauge, points: Iterable, levels: int = 14) -> Gauge:
    """Refine a gauge so that delta(t) <= dist(t, P)/4 down to scale
    2**-levels near each point of P, with an override at each point.

    Step-quantised version of the quarter-distance constructions used to
    localise partitions around interval endpoints; stays inside the
    step-plus-overrides gauge class.
    """
    pts = sorted({Fraction(p) for p in points})
    caps: list[tuple[Interval, Fraction]] = []
    for p in pts:
        for j in range(levels + 1):
            r_out = Fraction(1, 2**j)
            r_in = Fraction(1, 2 ** (j + 1)) if j < levels else Fraction(0)
            value = r_in / 4 if j < levels else Fraction(1, 2 ** (levels + 2))
            for lo, hi in ((p - r_out, p - r_in), (p + r_in, p + r_out)):
                lo2, hi2 = max(lo, gauge.lo), min(hi, gauge.hi)
                if lo2 < hi2:
                    caps.append((Interval(lo2, hi2, True, True), value))
    cuts = sorted({gauge.lo, gauge.hi, *_cut_points(gauge), *(e for iv, _ in caps for e in (iv.lo, iv.hi))})
    cuts = [t for t in cuts if gauge.lo <= t <= gauge.hi]

    def capped(t: Fraction) -> Fraction:
        v = gauge.baseline_value(t)
        for iv, cap in caps:
            if iv.contains(t):
                v = min(v, cap)
        return v

    pieces: list[tuple[Interval, Fraction]] = []
    for u, v in zip(cuts, cuts[1:]):
        pieces.append((Interval.open(u, v), capped((u + v) / 2)))
    for t in cuts:
        pieces.append((Interval.singleton(t), capped(t)))
    overrides = [(p, min(gauge.value(p), Fraction(1, 2 ** (levels + 2)))) for p in pts]
    for p, v in gauge.overrides:
        if p not in dict(overrides):
            overrides.append((p, min(v, capped(p))))
    return Gauge.from_step(pieces, sorted(overrides))


def _cut_points(g: Gauge) -> list[Fraction]:
    out = set()
    for iv, _ in g.pieces:
        out.add(iv.lo)
        out.add(iv.hi)
    return sorted(out)
