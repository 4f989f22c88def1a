"""Exact univariate polynomial arithmetic over the rationals.

Coefficients are ``fractions.Fraction`` in ascending order of degree.  The
module also provides Sturm-sequence root isolation, interval extrema and
total variation (exact whenever the critical points are rational), and the
closed-form power sums needed to evaluate Riemann-Stieltjes sums over long
uniform grids without walking them cell by cell.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

Coeffs = tuple[Fraction, ...]

ZERO = (Fraction(0),)


def make(coeffs: Iterable) -> Coeffs:
    """Normalise to a trimmed ascending-coefficient tuple."""
    out = [Fraction(c) for c in coeffs]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    if not out:
        out = [Fraction(0)]
    return tuple(out)


def degree(p: Coeffs) -> int:
    return len(p) - 1


def is_zero(p: Coeffs) -> bool:
    return all(c == 0 for c in p)


def is_constant(p: Coeffs) -> bool:
    return len(p) == 1


def evaluate(p: Coeffs, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def evaluate_float(p: Coeffs, x: float) -> float:
    acc = 0.0
    for c in reversed(p):
        acc = acc * x + float(c)
    return acc


def add(p: Coeffs, q: Coeffs) -> Coeffs:
    n = max(len(p), len(q))
    return make(
        (p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)
    )


def scale(p: Coeffs, c) -> Coeffs:
    c = Fraction(c)
    return make(ci * c for ci in p)


def multiply(p: Coeffs, q: Coeffs) -> Coeffs:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return make(out)


def derivative(p: Coeffs) -> Coeffs:
    if len(p) == 1:
        return ZERO
    return make(Fraction(i) * p[i] for i in range(1, len(p)))


def antiderivative(p: Coeffs) -> Coeffs:
    return make([Fraction(0)] + [p[i] / (i + 1) for i in range(len(p))])


def compose_linear(p: Coeffs, alpha: Fraction, beta: Fraction) -> Coeffs:
    """Coefficients of ``p(alpha + beta*j)`` as a polynomial in ``j``."""
    acc: Coeffs = ZERO
    lin = make([alpha, beta])
    for c in reversed(p):
        acc = add(multiply(acc, lin), make([c]))
    return acc


def definite_integral(p: Coeffs, lo: Fraction, hi: Fraction) -> Fraction:
    anti = antiderivative(p)
    return evaluate(anti, hi) - evaluate(anti, lo)


def power_sums(max_degree: int, n_terms: int) -> list[Fraction]:
    """``S[m] = sum_{j=0}^{n_terms-1} j**m`` for m = 0..max_degree, exactly.

    Uses the binomial telescoping identity
    ``N**(m+1) = sum_i C(m+1, i) * S[i]`` solved for ``S[m]``.
    """
    n = Fraction(n_terms)
    sums: list[Fraction] = [n]
    for m in range(1, max_degree + 1):
        total = n ** (m + 1)
        for i in range(m):
            total -= math.comb(m + 1, i) * sums[i]
        sums.append(total / (m + 1))
    return sums


def sum_over_grid(p: Coeffs, n_terms: int) -> Fraction:
    """``sum_{j=0}^{n_terms-1} p(j)`` in closed form."""
    if n_terms <= 0:
        return Fraction(0)
    sums = power_sums(degree(p), n_terms)
    return sum((c * sums[m] for m, c in enumerate(p)), Fraction(0))


# --- Sturm sequences and root isolation -----------------------------------


def _sturm_chain(p: Coeffs) -> list[Coeffs]:
    chain = [p, derivative(p)]
    while not is_zero(chain[-1]) and degree(chain[-1]) > 0:
        rem = _poly_mod(chain[-2], chain[-1])
        if is_zero(rem):
            break
        chain.append(scale(rem, -1))
    return chain


def _poly_mod(p: Coeffs, q: Coeffs) -> Coeffs:
    rem = list(p)
    dq = degree(q)
    lead = q[-1]
    while len(rem) - 1 >= dq and any(c != 0 for c in rem):
        shift = len(rem) - 1 - dq
        factor = rem[-1] / lead
        for i in range(len(q)):
            rem[shift + i] -= factor * q[i]
        rem.pop()
        while len(rem) > 1 and rem[-1] == 0:
            rem.pop()
        if not rem:
            rem = [Fraction(0)]
    return make(rem)


def _sign_changes(chain: Sequence[Coeffs], x: Fraction) -> int:
    signs = []
    for q in chain:
        v = evaluate(q, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def squarefree(p: Coeffs) -> Coeffs:
    """Squarefree part p / gcd(p, p'): same roots, all simple."""
    g = _poly_gcd(p, derivative(p))
    if degree(g) == 0:
        return p
    q, _ = _poly_divmod(p, g)
    return q


def _poly_gcd(p: Coeffs, q: Coeffs) -> Coeffs:
    a, b = p, q
    while not is_zero(b):
        a, b = b, _poly_mod(a, b)
    if is_zero(a):
        return make([1])
    return scale(a, 1 / a[-1])


def _poly_divmod(p: Coeffs, q: Coeffs) -> tuple[Coeffs, Coeffs]:
    rem = list(p)
    quot = [Fraction(0)] * max(1, len(p) - len(q) + 1)
    dq = degree(q)
    lead = q[-1]
    while len(rem) - 1 >= dq and any(c != 0 for c in rem):
        shift = len(rem) - 1 - dq
        factor = rem[-1] / lead
        quot[shift] = factor
        for i in range(len(q)):
            rem[shift + i] -= factor * q[i]
        rem.pop()
        while len(rem) > 1 and rem[-1] == 0:
            rem.pop()
        if not rem:
            rem = [Fraction(0)]
    return make(quot), make(rem)


def count_roots(p: Coeffs, lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots of p in the open interval (lo, hi)."""
    sf = squarefree(p)
    if degree(sf) == 0:
        return 0
    chain = _sturm_chain(sf)
    # Nudge off endpoint roots: Sturm counts roots in (lo, hi].
    count = _sign_changes(chain, lo) - _sign_changes(chain, hi)
    if evaluate(sf, hi) == 0:
        count -= 1
    return count


def isolate_roots(p: Coeffs, lo: Fraction, hi: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Disjoint rational subintervals of (lo, hi), one distinct root each."""
    sf = squarefree(p)
    total = count_roots(sf, lo, hi)
    if total == 0:
        return []
    out: list[tuple[Fraction, Fraction]] = []
    stack = [(lo, hi, total)]
    while stack:
        u, v, k = stack.pop()
        if k == 0:
            continue
        if k == 1:
            out.append((u, v))
            continue
        m = (u + v) / 2
        while evaluate(sf, m) == 0:
            m = (u + m) / 2
        left = count_roots(sf, u, m)
        stack.append((u, m, left))
        stack.append((m, v, k - left))
    out.sort()
    return out


def refine_root(p: Coeffs, lo: Fraction, hi: Fraction, width: Fraction) -> tuple[Fraction, Fraction]:
    """Bisect an isolating interval until it is narrower than ``width``."""
    sf = squarefree(p)
    flo = evaluate(sf, lo)
    if flo == 0:
        return lo, lo
    while hi - lo > width:
        m = (lo + hi) / 2
        fm = evaluate(sf, m)
        if fm == 0:
            return m, m
        if (flo > 0) == (fm > 0):
            lo, flo = m, fm
        else:
            hi = m
    return lo, hi


def rational_root(p: Coeffs, lo: Fraction, hi: Fraction) -> Fraction | None:
    """The exact root inside an isolating interval, if it is rational."""
    sf = squarefree(p)
    den = math.lcm(*(c.denominator for c in sf))
    ints = [int(c * den) for c in sf]
    lead, const = ints[-1], ints[0]
    if const == 0:
        if lo < 0 < hi:
            return Fraction(0)
        const_idx = next(i for i, c in enumerate(ints) if c != 0)
        const = ints[const_idx]
    for q in _divisors(abs(lead)):
        for r in _divisors(abs(const)):
            for cand in (Fraction(r, q), Fraction(-r, q)):
                if lo < cand < hi and evaluate(sf, cand) == 0:
                    return cand
    return None


def _divisors(n: int) -> list[int]:
    if n == 0:
        return [1]
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.add(d)
            out.add(n // d)
        d += 1
    return sorted(out)


def critical_points(p: Coeffs, lo: Fraction, hi: Fraction) -> tuple[list[Fraction], bool]:
    """Points partitioning (lo, hi) into monotone stretches of p.

    Returns ``(points, exact)``.  Irrational critical points are replaced by
    rational approximations within 2**-60 and ``exact`` is set False; the
    points still separate the distinct roots of p', so piecewise monotonicity
    is preserved and only the evaluated values are approximate.
    """
    dp = derivative(p)
    if is_zero(dp) or degree(dp) == 0:
        return [], True
    pts: list[Fraction] = []
    exact = True
    for a, b in isolate_roots(dp, lo, hi):
        root = rational_root(dp, a, b) if a != b else a
        if root is None:
            a2, b2 = refine_root(dp, a, b, Fraction(1, 2**60))
            root = (a2 + b2) / 2
            exact = False
        pts.append(root)
    return sorted(pts), exact


def extrema_on_interval(p: Coeffs, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction, bool]:
    """(min, max, exact) of p over the closed interval [lo, hi]."""
    pts, exact = critical_points(p, lo, hi)
    values = [evaluate(p, x) for x in [lo, *pts, hi]]
    return min(values), max(values), exact


def variation_on_interval(p: Coeffs, lo: Fraction, hi: Fraction) -> tuple[Fraction, bool]:
    """Total variation of p over [lo, hi]; exact when p is piecewise
    monotone between rational critical points."""
    if lo == hi:
        return Fraction(0), True
    pts, exact = critical_points(p, lo, hi)
    xs = [lo, *pts, hi]
    total = Fraction(0)
    for u, v in zip(xs, xs[1:]):
        total += abs(evaluate(p, v) - evaluate(p, u))
    return total, exact
