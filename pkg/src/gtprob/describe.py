"""Description ranges.

Every forecaster ``theta`` is scored by ``L(theta)``, the capital it keeps
when the best forecaster bets against it. Those with ``L >= 1/C`` form the
description range for cutoff ``C``. This module grades forecasters, solves
for the range in one dimension, profiles nuisance parameters out of the
normal family, and finds the range of a functional ``h(theta)`` for
families of several binary cells or one finite outcome.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import _kernels
from .errors import DataError, DomainError, NonUnimodalError
from .families import (
    Dataset,
    FamilySpec,
    Kind,
    NormalSummary,
    binomial_log_ratio,
    mle,
    sufficient_stats,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
L_SLACK = 1e-12


class Grade(str, Enum):
    GOOD = "Good"
    FAIR = "Fair"
    POOR = "Poor"
    UNACCEPTABLE = "Unacceptable"


@dataclass(frozen=True)
class Cutoffs:
    """Lower limits of ``L`` for the grades good, fair and poor (acceptable)."""

    good: float = 1 / 2
    fair: float = 1 / 5
    acceptable: float = 1 / 15

    def __post_init__(self) -> None:
        if not 0.0 < self.acceptable < self.fair < self.good < 1.0:
            raise DomainError(f"cutoffs must satisfy 0 < acceptable < fair < good < 1, got {self}")

    @classmethod
    def parse(cls, text: str) -> Cutoffs:
        """Parse ``"a,b,c"``; entries may be fractions such as ``1/15``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise DataError(f"expected three cutoffs, got {text!r}")
        vals = []
        for p in parts:
            num, _, den = p.partition("/")
            try:
                vals.append(float(num) / float(den) if den else float(num))
            except (ValueError, ZeroDivisionError):
                raise DataError(f"bad cutoff {p!r}") from None
        return cls(*sorted(vals, reverse=True))

    def levels(self) -> list[tuple[str, float]]:
        """(label, C) rows from the strictest range outward."""
        return [("Good", 1.0 / self.good), ("Fair or better", 1.0 / self.fair), ("Acceptable", 1.0 / self.acceptable)]


def grade(L: float, cutoffs: Cutoffs = Cutoffs()) -> Grade:
    if not -L_SLACK <= L <= 1.0 + L_SLACK:
        raise DomainError(f"L must lie in [0, 1], got {L}")
    if L >= cutoffs.good:
        return Grade.GOOD
    if L >= cutoffs.fair:
        return Grade.FAIR
    if L >= cutoffs.acceptable:
        return Grade.POOR
    return Grade.UNACCEPTABLE


@dataclass(frozen=True)
class DescriptionRange:
    C: float
    target: str
    lo: float
    hi: float
    method: str
    estimate: float
    formula_mode: str | None = None
    lo_at_boundary: bool = False
    hi_at_boundary: bool = False
    grid_lo: float | None = None
    grid_hi: float | None = None
    argmin: tuple[float, ...] | None = None
    argmax: tuple[float, ...] | None = None
    notes: tuple[str, ...] = field(default=())

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def _check_C(C: float) -> float:
    if not C > 1.0 or not math.isfinite(C):
        raise DomainError(f"cutoff constant C must be a finite number > 1, got {C}")
    return float(C)


def bisect(f: Callable[[float], float], inside: float, outside: float, xtol: float = 1e-12) -> float:
    """Root of ``f`` between ``inside`` (f >= 0) and ``outside`` (f < 0)."""
    for _ in range(200):
        if abs(outside - inside) <= xtol:
            break
        mid = 0.5 * (inside + outside)
        if mid in (inside, outside):
            break
        if f(mid) >= 0.0:
            inside = mid
        else:
            outside = mid
    return inside


def _golden_max(g: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-12) -> float:
    c, d = hi - GOLDEN * (hi - lo), lo + GOLDEN * (hi - lo)
    gc, gd = g(c), g(d)
    while hi - lo > xtol:
        if gc >= gd:
            hi, d, gd = d, c, gc
            c = hi - GOLDEN * (hi - lo)
            gc = g(c)
        else:
            lo, c, gc = c, d, gd
            d = lo + GOLDEN * (hi - lo)
            gd = g(d)
    return c if gc >= gd else d


# ---------------------------------------------------------------- one dimension

def _scan_unimodal(l: Callable, peak: float, edge: float, points: int = 512) -> None:
    ts = peak + (edge - peak) * np.linspace(0.0, 1.0, points + 1)[1:-1]
    vals = np.asarray(l(ts), dtype=float)
    steps = np.diff(np.concatenate(([0.0], vals)))
    if np.any(steps > 1e-9 * (1.0 + np.abs(vals))):
        raise NonUnimodalError("log-ratio increases away from the maximizer: second mode")


def _binomial_interval(k: int, n: int, C: float, xtol: float = 1e-12):
    """(lo, hi, lo_at_boundary, hi_at_boundary) of {t : binomial log-ratio >= -ln C}."""
    target = -math.log(C)
    phat = k / n

    def l(t):
        return binomial_log_ratio(k, n, t)

    def f(t):
        return float(l(t)) - target

    ends = []
    for edge in (0.0, 1.0):
        if phat == edge:
            ends.append((edge, True))
            continue
        _scan_unimodal(l, phat, edge)
        if f(edge) >= 0.0:
            ends.append((edge, True))
            continue
        ends.append((bisect(f, phat, edge, xtol), False))
    (lo, lob), (hi, hib) = ends
    return lo, hi, lob, hib


def range_1d(family: FamilySpec, data: Dataset, C: float, xtol: float = 1e-12) -> DescriptionRange:
    """Range of a one-parameter family by bisection outward from the maximizer."""
    C = _check_C(C)
    if family.kind is Kind.BERNOULLI:
        n, k = sufficient_stats(family, data)
        target = "theta"
    elif family.kind is Kind.CELLS and family.dim == 1:
        ((n, k),) = sufficient_stats(family, data)
        target = f"theta[{family.labels[0]}]"
    else:
        raise DataError(f"range_1d needs a one-parameter family, got {family.kind.value} with {family.dim}")
    lo, hi, lob, hib = _binomial_interval(k, n, C, xtol)
    return DescriptionRange(C, target, lo, hi, "bisection", k / n, lo_at_boundary=lob, hi_at_boundary=hib)


# ---------------------------------------------------------------- normal family

def _summary(summary) -> NormalSummary:
    if isinstance(summary, Dataset):
        summary = summary.summary
    if not isinstance(summary, NormalSummary):
        raise DataError("a normal summary (n, mean, sd) is required")
    if not summary.sd > 0.0:
        raise DomainError("sd must be positive")
    return summary


def profile_normal_mean(summary: NormalSummary, mu: float) -> float:
    """Log-ratio at mean ``mu`` with sigma^2 set to its best value ``s^2 + (ybar - mu)^2``."""
    s = _summary(summary)
    d = (s.mean - mu) / s.sd
    return -0.5 * s.n * math.log1p(d * d)


def normal_mean_range(summary: NormalSummary, C: float, mode: str = "derived") -> DescriptionRange:
    """Closed-form range for the normal mean.

    ``derived`` solves the profile log-ratio against ``-ln C`` exactly,
    giving half-width ``s*sqrt(C**(2/N) - 1)``. ``paper`` uses
    ``s*sqrt((2C)**(1/N) - 1)``, the expression behind the published table.
    The two agree at ``C = 2``.
    """
    s = _summary(summary)
    C = _check_C(C)
    if mode == "derived":
        half = s.sd * math.sqrt(math.expm1(2.0 * math.log(C) / s.n))
    elif mode == "paper":
        half = s.sd * math.sqrt(math.expm1(math.log(2.0 * C) / s.n))
    else:
        raise DataError(f"mode must be 'paper' or 'derived', got {mode!r}")
    return DescriptionRange(C, "mu", s.mean - half, s.mean + half, "closed-form", s.mean, formula_mode=mode)


# ---------------------------------------------------------------- functionals

@dataclass(frozen=True)
class FunctionalSpec:
    """``component(i)``, ``difference(i, j)`` or ``oddsratio(i, j)``; indices or labels."""

    kind: str
    i: int | str
    j: int | str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("component", "difference", "oddsratio"):
            raise DataError(f"unknown functional {self.kind!r}")
        if (self.kind == "component") != (self.j is None):
            raise DataError(f"{self.kind} takes {'one index' if self.kind == 'component' else 'two indices'}")

    @classmethod
    def parse(cls, text: str) -> FunctionalSpec:
        """Parse ``diff:i,j``, ``component:i`` or ``oddsratio:i,j``."""
        name, _, args = text.partition(":")
        name = {"diff": "difference", "or": "oddsratio"}.get(name.strip(), name.strip())
        parts = [p.strip() for p in args.split(",") if p.strip()]
        parts = [int(p) if p.lstrip("-").isdigit() else p for p in parts]
        if not 1 <= len(parts) <= 2:
            raise DataError(f"bad functional {text!r}")
        return cls(name, *parts)

    def resolve(self, family: FamilySpec) -> tuple[int, int | None]:
        def idx(x):
            if isinstance(x, int):
                if not 0 <= x < family.dim:
                    raise DataError(f"index {x} out of range for {family.dim} parameters")
                return x
            return family.index(x)

        i = idx(self.i)
        j = None if self.j is None else idx(self.j)
        if j is not None and i == j:
            raise DataError("a functional of two components needs distinct indices")
        return i, j

    def name(self, family: FamilySpec) -> str:
        i, j = self.resolve(family)
        lab = family.labels
        if j is None:
            return f"theta[{lab[i]}]"
        op = "-" if self.kind == "difference" else "odds ratio"
        return f"theta[{lab[i]}] {op} theta[{lab[j]}]" if op == "-" else f"odds ratio({lab[i]}, {lab[j]})"

    def evaluate(self, values, family: FamilySpec) -> float:
        i, j = self.resolve(family)
        a = values[i]
        if j is None:
            return a
        b = values[j]
        if self.kind == "difference":
            return a - b
        return (a / (1.0 - a)) * ((1.0 - b) / b)


def _log_term(count: int, t, phat: float):
    """``count * log(t / phat)`` with zero counts contributing nothing."""
    if count == 0:
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
    with np.errstate(divide="ignore"):
        return count * (np.log(t) - math.log(phat))


class _Pair:
    """Profiled log-ratio over two coordinates (a, b) with the rest at their best values."""

    def __init__(self, family: FamilySpec, data: Dataset, i: int, j: int) -> None:
        st = sufficient_stats(family, data)
        self.simplex = family.kind is Kind.DISCRETE
        if self.simplex:
            n = sum(st)
            self.ci, self.cj = st[i], st[j]
            self.cr = n - self.ci - self.cj
            self.pi, self.pj, self.pr = self.ci / n, self.cj / n, self.cr / n
            self.rest_c = self.cr * math.log(self.pr) if self.cr else 0.0
        else:
            (self.ni, self.ki), (self.nj, self.kj) = st[i], st[j]
            self.cr, self.rest_c = 0, 0.0

    def la(self, a):
        if self.simplex:
            return _log_term(self.ci, a, self.pi)
        return binomial_log_ratio(self.ki, self.ni, a)

    def lb(self, b):
        if self.simplex:
            return _log_term(self.cj, b, self.pj)
        return binomial_log_ratio(self.kj, self.nj, b)

    def l(self, a: float, b: float) -> float:
        v = float(self.la(a)) + float(self.lb(b))
        if self.simplex:
            s = (1.0 - a) - b
            if s < 0.0:
                return -math.inf
            if self.cr:
                v += self.cr * math.log(s) - self.rest_c if s > 0.0 else -math.inf
        return v

    def b_range(self, a: float) -> tuple[float, float]:
        return (0.0, 1.0 - a) if self.simplex else (0.0, 1.0)

    def b_best(self, a: float) -> float:
        if not self.simplex:
            return self.kj / self.nj
        tot = self.cj + self.cr
        return (1.0 - a) * self.cj / tot if tot else 0.0

    def a_interval(self, C: float):
        """Projection of the range onto ``a`` (the remaining coordinates profiled)."""
        if self.simplex:
            n = self.ci + self.cj + self.cr
            return _binomial_interval(self.ci, n, C)
        return _binomial_interval(self.ki, self.ni, C)


def _b_edge(pair: _Pair, a: float, target: float, upper: bool) -> tuple[float, bool] | None:
    """Smallest (or largest) feasible b at fixed a; None when a is infeasible."""
    bb = pair.b_best(a)
    if pair.l(a, bb) < target:
        return None
    lo, hi = pair.b_range(a)
    edge = hi if upper else lo
    if bb == edge or pair.l(a, edge) >= target:
        return edge, True
    return bisect(lambda b: pair.l(a, b) - target, bb, edge), False


def _refine(pair: _Pair, h: Callable[[float, float], float], target: float, a_lo: float, a_hi: float,
            want_max: bool, scan: int = 201):
    """Extreme of h along the boundary of the range, as (value, a, b, b_at_boundary)."""
    upper = not want_max  # h decreases in b: max uses the lower b edge

    def g(a: float) -> float:
        e = _b_edge(pair, a, target, upper)
        if e is None:
            return -math.inf
        v = h(a, e[0])
        return v if want_max else -v

    if a_hi <= a_lo:
        a_best = a_lo
    else:
        grid = np.linspace(a_lo, a_hi, scan)
        vals = [g(float(a)) for a in grid]
        k = int(np.argmax(vals))
        lo_a, hi_a = float(grid[max(k - 1, 0)]), float(grid[min(k + 1, scan - 1)])
        a_best = _golden_max(g, lo_a, hi_a)
        if g(float(grid[k])) > g(a_best):
            a_best = float(grid[k])
    e = _b_edge(pair, a_best, target, upper)
    assert e is not None
    return h(a_best, e[0]), a_best, e[0], e[1]


def functional_range(family: FamilySpec, data: Dataset, h: FunctionalSpec, C: float,
                     resolution: float = 1e-3) -> DescriptionRange:
    """Range of ``h(theta)`` over forecasters with ``L(theta) >= 1/C``.

    Coordinates not named by ``h`` are profiled out at their best values.
    Two-coordinate functionals are first located on a grid of step
    ``resolution``, then refined along the boundary by golden-section search
    over the first coordinate and bisection over the second.
    """
    if family.kind not in (Kind.CELLS, Kind.DISCRETE):
        raise DataError(f"functional ranges need a cells or discrete family, got {family.kind.value}")
    C = _check_C(C)
    i, j = h.resolve(family)
    best = mle(family, data)
    if h.kind == "oddsratio" and (best[i] in (0.0, 1.0) or best[j] in (0.0, 1.0)):
        raise DomainError("odds ratio is undefined at a boundary maximizer")
    est = h.evaluate(best.values, family)
    target = -math.log(C)
    name = h.name(family)

    if j is None:
        st = sufficient_stats(family, data)
        k, n = (st[i][1], st[i][0]) if family.kind is Kind.CELLS else (st[i], sum(st))
        lo, hi, lob, hib = _binomial_interval(k, n, C)
        return DescriptionRange(C, name, lo, hi, "bisection", est, lo_at_boundary=lob, hi_at_boundary=hib)

    pair = _Pair(family, data, i, j)
    hkind = 0 if h.kind == "difference" else 1

    def hfun(a: float, b: float) -> float:
        if hkind == 0:
            return a - b
        if b <= 0.0 or a >= 1.0:
            return math.inf
        if b >= 1.0 or a <= 0.0:
            return 0.0
        return (a / (1.0 - a)) * ((1.0 - b) / b)

    steps = int(round(1.0 / resolution))
    grid = np.arange(1, steps, dtype=np.float64) / steps
    count, gmin, imin, jmin, gmax, imax, jmax = _kernels.grid_extremes(
        grid, np.asarray(pair.la(grid), dtype=float), grid, np.asarray(pair.lb(grid), dtype=float),
        target, hkind, pair.simplex, float(pair.cr), pair.rest_c,
    )
    a_lo, a_hi, a_lob, a_hib = pair.a_interval(C)
    vmax, amax, bmax, bmax_edge = _refine(pair, hfun, target, a_lo, a_hi, want_max=True)
    vmin, amin, bmin, bmin_edge = _refine(pair, hfun, target, a_lo, a_hi, want_max=False)
    notes = []
    if count:
        if gmax > vmax:
            vmax, amax, bmax = gmax, float(grid[imax]), float(grid[jmax])
            notes.append("grid maximum exceeded refinement")
        if gmin < vmin:
            vmin, amin, bmin = gmin, float(grid[imin]), float(grid[jmin])
            notes.append("grid minimum below refinement")
    else:
        notes.append("no grid point inside the range; refinement only")
    hi_edge = bmax_edge or (amax == a_hi and a_hib)
    lo_edge = bmin_edge or (amin == a_lo and a_lob)
    return DescriptionRange(
        C, name, vmin, vmax, "grid+bisection", est,
        lo_at_boundary=lo_edge, hi_at_boundary=hi_edge,
        grid_lo=gmin if count else None, grid_hi=gmax if count else None,
        argmin=(amin, bmin), argmax=(amax, bmax), notes=tuple(notes),
    )
