"""Function-sequence machinery: equiregulatedness checking, bounded-scope
equi-integrability falsification, the convergence-of-integrals procedure,
and the uniform Saks-Henstock defect.

The underlying conditions quantify over all gauges, partitions and
indices, so none of them can be decided by a program.  Every checker here
is therefore a falsifier: it searches a bounded, seeded, reproducible
scope and returns either a concrete witness of failure or a verdict of
"no violation found in scope".  A pass is evidence, not a proof.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import polynomials as poly
from .errors import NoConvergence, NoOneSidedLimit
from .functions import PiecewiseFunction, PolyPiece, Scalar
from .integrator import IntegralResult, integrate
from .intervals import Interval
from .partitions import (
    DeltaFineSystem,
    Gauge,
    TaggedPartition,
    is_delta_fine,
    random_fine_partition,
    rs_sum_df_g,
)


@dataclass
class FunctionSequence:
    """Rule n -> f_n, with an optional declared pointwise limit."""

    generator: Callable[[int], PiecewiseFunction]
    declared_limit: PiecewiseFunction | None = None
    pointwise_bound: Callable[[Fraction], Scalar] | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        first = self.member(1)
        if self.declared_limit is not None:
            self._spot_check_convergence(first)

    def member(self, n: int) -> PiecewiseFunction:
        if n < 1:
            raise ValueError("sequence indices start at 1")
        if n not in self._cache:
            self._cache[n] = self.generator(n)
        return self._cache[n]

    def _spot_check_convergence(self, first: PiecewiseFunction):
        limit = self.declared_limit
        grid = sorted({*limit.breakpoints,
                       *((u + v) / 2 for u, v in zip(limit.breakpoints, limit.breakpoints[1:]))})
        early = max(abs(self.member(n).eval(t) - limit.eval(t)) for n in (1, 2) for t in grid)
        late = min(
            max(abs(self.member(n).eval(t) - limit.eval(t)) for t in grid) for n in (16, 64)
        )
        if late > early + 1e-6 and late > 1e-9:
            raise ValueError(
                f"declared limit looks wrong: pointwise error grew from {early} to {late}"
            )

    @staticmethod
    def constant(f: PiecewiseFunction, name: str = "") -> "FunctionSequence":
        return FunctionSequence(lambda n: f, declared_limit=f, name=name)


# --- verdicts ----------------------------------------------------------------


@dataclass(frozen=True)
class EquiregulatedVerdict:
    passed: bool
    counterexample: tuple[Fraction, str, int, Fraction, Scalar] | None = None
    flags: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


@dataclass(frozen=True)
class ViolationVerdict:
    violated: bool
    witness_n: int | None = None
    witness_partition: TaggedPartition | None = None
    witness_sum: Scalar | None = None
    reference: Scalar | None = None
    trials_run: int = 0

    @property
    def no_violation_found(self) -> bool:
        return not self.violated


# --- equiregulatedness ---------------------------------------------------------


def check_equiregulated(
    fs: FunctionSequence,
    n_max: int,
    tau_grid: list,
    eps,
    floor_power: int = 40,
) -> EquiregulatedVerdict:
    """For each tau and side, search for one window width valid for every
    n <= n_max; geometric shrinking with floor 2**-floor_power.

    A counterexample reports a concrete (tau, side, n, t) whose deviation
    from f_n(tau+-) reaches eps however small the window.
    """
    eps = Fraction(eps) if not isinstance(eps, float) else eps
    lo, hi = fs.member(1).domain()
    flags: list[str] = []
    for tau in tau_grid:
        tau = Fraction(tau)
        for side in ("left", "right"):
            if (side == "left" and tau <= lo) or (side == "right" and tau >= hi):
                continue
            reach = (tau - lo) if side == "left" else (hi - tau)
            width = min(reach / 2, Fraction(1, 4))
            floor = Fraction(1, 2**floor_power)
            last_witness = None
            while True:
                worst = None
                for n in range(1, n_max + 1):
                    f = fs.member(n)
                    target = f.limit_left(tau) if side == "left" else f.limit_right(tau)
                    window = (tau - width, tau) if side == "left" else (tau, tau + width)
                    dev, at, certified = _window_deviation(f, window, target, side, tau)
                    if dev >= eps:
                        worst = (n, at, dev, certified)
                        break
                if worst is None:
                    break  # this width works for every n
                last_witness = worst
                width /= 2
                if width < floor:
                    n, at, dev, certified = last_witness
                    if not certified:
                        flags.append(f"witness_at_{tau}_{side}_uncertified")
                    return EquiregulatedVerdict(
                        False, (tau, side, n, at, dev), tuple(flags)
                    )
    return EquiregulatedVerdict(True, None, tuple(flags))


def _window_deviation(f: PiecewiseFunction, window, target, side: str, tau: Fraction):
    """(max deviation found, witness point, certified) over the open window,
    excluding tau itself."""
    lo, hi = window
    candidates: list[Fraction] = []
    for t in f.breakpoints:
        if lo < t < hi and t != tau:
            candidates.append(t)
    cuts = sorted({lo, hi, *candidates})
    for u, v in zip(cuts, cuts[1:]):
        piece = f.pieces[f._gap_index((u + v) / 2)]
        if isinstance(piece, PolyPiece):
            pts, _ = poly.critical_points(piece.coeffs, u, v)
            candidates.extend(pts)
        else:
            for k in range(1, 32):
                candidates.append(u + (v - u) * Fraction(k, 32))
    # approach points near the excluded open ends
    candidates.append(lo + (hi - lo) / 997)
    candidates.append(hi - (hi - lo) / 997)
    best, at = Fraction(0), None
    for c in candidates:
        if not (lo < c < hi) or c == tau:
            continue
        dev = abs(f.eval(c) - target)
        if at is None or float(dev) > float(best):
            best, at = dev, c
    return best, at, True


# --- equi-integrability falsifiers ----------------------------------------------


def check_equi_integrability(
    fs: FunctionSequence,
    gs: FunctionSequence,
    gauge: Gauge,
    eta,
    n_max: int,
    trials: int,
    seed: int,
    interval: tuple | None = None,
) -> ViolationVerdict:
    """Sample random delta-fine partitions and test
    |S(df_n, g_n, P) - int d[f_n] g_n| < eta for all n <= n_max."""
    c, d = _bounds(fs, interval)
    hull = Interval.closed(c, d)
    refs: dict[int, Scalar] = {}
    for n in range(1, n_max + 1):
        f_n, g_n = fs.member(n), gs.member(n)
        key = _pair_key(f_n, g_n, refs)
        if key not in refs:
            refs[key] = integrate(f_n, g_n, c, d).value
    for trial in range(trials):
        rng = random.Random(f"{seed}:{trial}")
        part = random_fine_partition(gauge, rng, hull)
        sums: dict = {}
        for n in range(1, n_max + 1):
            f_n, g_n = fs.member(n), gs.member(n)
            key = _pair_key(f_n, g_n, sums)
            if key not in sums:
                sums[key] = rs_sum_df_g(f_n, g_n, part)
            s = sums[key]
            ref = refs[_pair_key(f_n, g_n, refs)]
            if not abs(s - ref) < eta:
                return ViolationVerdict(True, n, part, s, ref, trial + 1)
    return ViolationVerdict(False, trials_run=trials)


def cauchy_equi_criterion(
    fs: FunctionSequence,
    gs: FunctionSequence,
    gauge: Gauge,
    eps,
    n_max: int,
    trials: int,
    seed: int,
    interval: tuple | None = None,
) -> ViolationVerdict:
    """Pairs of random delta-fine partitions; no reference integrals needed:
    test |S(df_n, g_n, P) - S(df_n, g_n, Q)| < eps for all n <= n_max."""
    c, d = _bounds(fs, interval)
    hull = Interval.closed(c, d)
    for trial in range(trials):
        rng = random.Random(f"{seed}:{trial}")
        p = random_fine_partition(gauge, rng, hull)
        q = random_fine_partition(gauge, rng, hull)
        sums_p: dict = {}
        sums_q: dict = {}
        for n in range(1, n_max + 1):
            f_n, g_n = fs.member(n), gs.member(n)
            key = _pair_key(f_n, g_n, sums_p)
            if key not in sums_p:
                sums_p[key] = rs_sum_df_g(f_n, g_n, p)
                sums_q[key] = rs_sum_df_g(f_n, g_n, q)
            if not abs(sums_p[key] - sums_q[key]) < eps:
                return ViolationVerdict(True, n, p, sums_p[key], sums_q[key], trial + 1)
    return ViolationVerdict(False, trials_run=trials)


def _pair_key(f, g, _table) -> tuple[int, int]:
    return (id(f), id(g))


def _bounds(fs: FunctionSequence, interval: tuple | None) -> tuple[Fraction, Fraction]:
    if interval is not None:
        return Fraction(interval[0]), Fraction(interval[1])
    return fs.member(1).domain()


# --- convergence of integrals ----------------------------------------------------


@dataclass(frozen=True)
class ConvergenceOutcome:
    result: IntegralResult
    n_used: int
    cross_check_residual: Scalar | None
    cross_check_ok: bool | None
    flags: tuple[str, ...] = ()


def convergence_limit(
    fs: FunctionSequence,
    gs: FunctionSequence,
    tol: float,
    n_cap: int = 256,
    oracle_tol: Callable[[int], float] | None = None,
) -> ConvergenceOutcome:
    """Estimate lim_n int d[f_n] g_n by direct evaluation until two
    successive values differ by less than tol/2; cross-check against the
    integral of the declared limits when both are present.

    A failed cross-check is reported in the outcome, never hidden.
    """
    schedule = oracle_tol or (lambda n: tol / 4)
    prev: Scalar | None = None
    value: Scalar | None = None
    used = 0
    for n in range(1, n_cap + 1):
        f_n, g_n = fs.member(n), gs.member(n)
        cur = integrate(f_n, g_n, f_n.lo, f_n.hi, tol=schedule(n)).value
        used = n
        if prev is not None and abs(cur - prev) < tol / 2:
            value = cur
            break
        prev = cur
    if value is None:
        raise NoConvergence(f"integral sequence did not settle within {n_cap} terms")

    flags: list[str] = []
    residual: Scalar | None = None
    ok: bool | None = None
    if fs.declared_limit is not None and gs.declared_limit is not None:
        try:
            f, g = fs.declared_limit, gs.declared_limit
            limit_integral = integrate(f, g, f.lo, f.hi, tol=tol / 4).value
            residual = abs(limit_integral - value)
            ok = float(residual) <= tol
            if not ok:
                flags.append(f"cross_check_failed: |{limit_integral} - {value}| > {tol}")
        except (NoConvergence, NoOneSidedLimit) as err:
            flags.append(f"cross_check_unavailable: {err}")
    # a truncated limit estimate is never exact
    result = IntegralResult(value, False, tol, "gauge_oracle")
    return ConvergenceOutcome(result, used, residual, ok, tuple(flags))


# --- Saks-Henstock defect ---------------------------------------------------------


def saks_henstock_defect(
    fs: FunctionSequence,
    gs: FunctionSequence,
    gauge: Gauge,
    system: DeltaFineSystem,
    n: int,
    tol: float = 1e-9,
) -> Scalar:
    """| sum_j ( [f_n(gamma_j) - f_n(beta_j)] g_n(xi_j)
               - int_{beta_j}^{gamma_j} d[f_n] g_n ) |."""
    if not is_delta_fine(system, gauge):
        raise ValueError("system is not delta-fine for the given gauge")
    f_n, g_n = fs.member(n), gs.member(n)
    total: Scalar = Fraction(0)
    for beta, gamma, xi in system.items:
        term = (f_n.eval(gamma) - f_n.eval(beta)) * g_n.eval(xi)
        if beta != gamma:
            term -= integrate(f_n, g_n, beta, gamma, tol).value
        total += term
    return abs(total)
