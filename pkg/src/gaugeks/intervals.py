"""Bounded intervals with independently open/closed endpoints, and
elementary sets (finite disjoint unions) kept in minimal decomposition.

Endpoint comparisons use an epsilon trick: a start point maps to
``(lo, 0)`` when closed and ``(lo, +1)`` when open, an end point to
``(hi, 0)`` / ``(hi, -1)``.  Lexicographic order on these keys makes
membership, disjointness and adjacency tests one-liners over exact
rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import NotContained, OverlappingComponents


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: {self.lo} > {self.hi}")
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise ValueError("degenerate interval must be closed on both sides")

    # infimum/supremum regardless of closedness
    def infimum(self) -> Fraction:
        return self.lo

    def supremum(self) -> Fraction:
        return self.hi

    @property
    def start_key(self) -> tuple[Fraction, int]:
        return (self.lo, 0 if self.lo_closed else 1)

    @property
    def end_key(self) -> tuple[Fraction, int]:
        return (self.hi, 0 if self.hi_closed else -1)

    def length(self) -> Fraction:
        return self.hi - self.lo

    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def contains(self, t) -> bool:
        if not isinstance(t, Fraction):
            t = Fraction(t)
        return self.start_key <= (t, 0) <= self.end_key

    def contains_interval(self, other: "Interval") -> bool:
        return self.start_key <= other.start_key and other.end_key <= self.end_key

    def intersect(self, other: "Interval") -> "Interval | None":
        sk = max(self.start_key, other.start_key)
        ek = min(self.end_key, other.end_key)
        return _from_keys(sk, ek)

    def closure(self) -> "Interval":
        return Interval(self.lo, self.hi, True, True)

    @staticmethod
    def singleton(t) -> "Interval":
        t = Fraction(t)
        return Interval(t, t, True, True)

    @staticmethod
    def open(lo, hi) -> "Interval":
        return Interval(Fraction(lo), Fraction(hi), False, False)

    @staticmethod
    def closed(lo, hi) -> "Interval":
        return Interval(Fraction(lo), Fraction(hi), True, True)

    def __str__(self) -> str:
        if self.is_singleton():
            return "{%s}" % self.lo
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo},{self.hi}{right}"


def _from_keys(start_key, end_key) -> Interval | None:
    """Interval for a (start, end) key pair, or None when empty."""
    (lo, se), (hi, ee) = start_key, end_key
    if lo > hi or (lo == hi and (se != 0 or ee != 0)):
        return None
    return Interval(lo, hi, se == 0, ee == 0)


def _disjoint_sorted(a: Interval, b: Interval) -> bool:
    """True when a ends strictly before b starts (a sorted before b)."""
    return a.end_key < b.start_key


def _mergeable(a: Interval, b: Interval) -> bool:
    """Disjoint a, b (a before b) whose union is a single interval."""
    return a.hi == b.lo and (a.hi_closed or b.lo_closed)


@dataclass(frozen=True)
class ElementarySet:
    components: tuple[Interval, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def is_empty(self) -> bool:
        return not self.components

    def contains(self, t) -> bool:
        if not isinstance(t, Fraction):
            t = Fraction(t)
        key = (t, 0)
        lo, hi = 0, len(self.components) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            iv = self.components[mid]
            if key < iv.start_key:
                hi = mid - 1
            elif key > iv.end_key:
                lo = mid + 1
            else:
                return True
        return False

    def endpoints(self) -> list[Fraction]:
        out: list[Fraction] = []
        for iv in self.components:
            out.append(iv.lo)
            if iv.hi != iv.lo:
                out.append(iv.hi)
        return out

    def measure(self) -> Fraction:
        return sum((iv.length() for iv in self.components), Fraction(0))

    def hull(self) -> Interval | None:
        if self.is_empty:
            return None
        first, last = self.components[0], self.components[-1]
        return Interval(first.lo, last.hi, first.lo_closed, last.hi_closed)

    def __str__(self) -> str:
        if self.is_empty:
            return "{}"
        return " ".join(str(iv) for iv in self.components)


EMPTY = ElementarySet(())


def normalize(intervals: Iterable[Interval]) -> ElementarySet:
    """Canonical minimal decomposition of a disjoint interval family.

    Adjacent inputs whose union is an interval are merged; genuinely
    overlapping inputs are rejected.
    """
    items = sorted(intervals, key=lambda iv: (iv.start_key, iv.end_key))
    if not items:
        return EMPTY
    merged: list[Interval] = [items[0]]
    for iv in items[1:]:
        last = merged[-1]
        if not _disjoint_sorted(last, iv):
            raise OverlappingComponents(f"{last} overlaps {iv}")
        if _mergeable(last, iv):
            merged[-1] = Interval(last.lo, iv.hi, last.lo_closed, iv.hi_closed)
        else:
            merged.append(iv)
    return ElementarySet(tuple(merged))


def _merge_allow_overlap(intervals: Sequence[Interval]) -> ElementarySet:
    items = sorted(intervals, key=lambda iv: (iv.start_key, iv.end_key))
    if not items:
        return EMPTY
    merged: list[Interval] = [items[0]]
    for iv in items[1:]:
        last = merged[-1]
        if _disjoint_sorted(last, iv) and not _mergeable(last, iv):
            merged.append(iv)
        else:
            ek = max(last.end_key, iv.end_key)
            merged[-1] = _from_keys(last.start_key, ek)  # type: ignore[arg-type]
    return ElementarySet(tuple(merged))


def union(a: ElementarySet, b: ElementarySet) -> ElementarySet:
    return _merge_allow_overlap([*a.components, *b.components])


def intersect(a: ElementarySet, b: ElementarySet) -> ElementarySet:
    out = []
    for x in a.components:
        for y in b.components:
            got = x.intersect(y)
            if got is not None:
                out.append(got)
    return normalize(out)


def difference(a: ElementarySet, b: ElementarySet) -> ElementarySet:
    if a.is_empty:
        return EMPTY
    hull = a.hull()
    assert hull is not None
    room = Interval(hull.lo - 1, hull.hi + 1, True, True)
    return intersect(a, complement_in(intersect(b, ElementarySet((room,))), room))


def complement_in(a: ElementarySet, hull: Interval) -> ElementarySet:
    """``hull \\ a`` for a ⊆ hull."""
    for iv in a.components:
        if not hull.contains_interval(iv):
            raise NotContained(f"{iv} is not contained in {hull}")
    out: list[Interval] = []
    cursor = hull.start_key
    for iv in a.components:
        gap = _from_keys(cursor, _before_key(iv.start_key))
        if gap is not None:
            out.append(gap)
        cursor = _after_key(iv.end_key)
    gap = _from_keys(cursor, hull.end_key)
    if gap is not None:
        out.append(gap)
    return normalize(out)


def _before_key(start_key) -> tuple[Fraction, int]:
    """End key of the region immediately left of a start key."""
    v, eps = start_key
    return (v, -1 if eps == 0 else 0)


def _after_key(end_key) -> tuple[Fraction, int]:
    """Start key of the region immediately right of an end key."""
    v, eps = end_key
    return (v, 1 if eps == 0 else 0)


def is_subset(a: ElementarySet, b: ElementarySet) -> bool:
    return all(
        any(y.contains_interval(x) for y in b.components) for x in a.components
    )


def from_interval(iv: Interval) -> ElementarySet:
    return ElementarySet((iv,))
