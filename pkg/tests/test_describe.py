import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq, minimize_scalar

from gtprob.describe import (
    Cutoffs,
    FunctionalSpec,
    Grade,
    _scan_unimodal,
    functional_range,
    grade,
    normal_mean_range,
    profile_normal_mean,
    range_1d,
)
from gtprob.errors import DataError, DomainError, NonUnimodalError
from gtprob.families import Dataset, FamilySpec, NormalSummary, log_lr, mle

FOURIER = NormalSummary(505, 33.31, 7.642)
LEVELS = [2.0, 5.0, 15.0]


def binom_oracle(k, n, C, step=1e-6):
    t = np.arange(1, int(round(1 / step))) * step
    with np.errstate(divide="ignore"):
        l = k * np.log(t / (k / n)) + (n - k) * np.log((1 - t) / (1 - k / n))
    ok = t[l >= -math.log(C)]
    return ok[0], ok[-1]


def normal_profile_oracle(s: NormalSummary, mu):
    # maximize the two-parameter log-ratio over log sigma^2 numerically
    def neg(logv):
        v = math.exp(logv)
        return -s.n * (math.log(s.sd) - 0.5 * logv - (s.sd**2 + (s.mean - mu) ** 2) / (2 * v) + 0.5)

    base = math.log(s.sd**2 + (s.mean - mu) ** 2)
    r = minimize_scalar(neg, bracket=(base - 1, base + 1), tol=1e-12)
    return -r.fun


def normal_range_oracle(s, C):
    f = lambda mu: normal_profile_oracle(s, mu) + math.log(C)
    return brentq(f, s.mean - 10 * s.sd, s.mean, xtol=1e-12), brentq(f, s.mean, s.mean + 10 * s.sd, xtol=1e-12)


def survey_grid_oracle(C, step=5e-4):
    g = np.arange(1, int(round(1 / step))) * step
    la = 8 * np.log(g / 0.8) + 2 * np.log((1 - g) / 0.2)
    lb = 12 * np.log(g / 0.6) + 8 * np.log((1 - g) / 0.4)
    ok = la[:, None] + lb[None, :] >= -math.log(C)
    d = np.where(ok, g[:, None] - g[None, :], np.nan)
    return np.nanmin(d), np.nanmax(d)


# ---------------------------------------------------------------- grades

@pytest.mark.parametrize(
    "L, want",
    [(0.5, Grade.GOOD), (0.3, Grade.FAIR), (0.05, Grade.UNACCEPTABLE), (1.0, Grade.GOOD), (0.0, Grade.UNACCEPTABLE),
     (1 / 5, Grade.FAIR), (1 / 15, Grade.POOR), (0.1, Grade.POOR)],
)
def test_grade(L, want):
    assert grade(L) is want


@pytest.mark.parametrize("cut, above, below", [(1 / 2, Grade.GOOD, Grade.FAIR), (1 / 5, Grade.FAIR, Grade.POOR),
                                               (1 / 15, Grade.POOR, Grade.UNACCEPTABLE)])
def test_grade_boundaries_exact(cut, above, below):
    assert grade(cut) is above
    assert grade(math.nextafter(cut, 0.0)) is below


def test_grade_domain_and_custom_cutoffs():
    for bad in (-0.01, 1.01, math.nan):
        with pytest.raises(DomainError):
            grade(bad)
    assert grade(1 + 1e-13) is Grade.GOOD
    c = Cutoffs.parse("1/3, 1/10, 1/100")
    assert c == Cutoffs(1 / 3, 1 / 10, 1 / 100)
    assert grade(0.2, c) is Grade.FAIR
    with pytest.raises(DomainError):
        Cutoffs(0.2, 0.5, 0.01)
    with pytest.raises(DataError):
        Cutoffs.parse("1/2,1/5")


# ---------------------------------------------------------------- binomial

@pytest.mark.parametrize("C, lo, hi", [(2, 0.644374, 0.751945), (5, 0.614135, 0.777366), (15, 0.587557, 0.798240)])
def test_binomial_ranges(bern, binom70, C, lo, hi):
    r = range_1d(bern, binom70, C)
    assert (r.lo, r.hi) == pytest.approx((lo, hi), abs=1e-6)
    olo, ohi = binom_oracle(70, 100, C)
    assert abs(r.lo - olo) <= 1e-5 and abs(r.hi - ohi) <= 1e-5
    for end in (r.lo, r.hi):
        assert abs(log_lr(bern, end, binom70).l + math.log(C)) <= 1e-6
    assert r.method == "bisection"


def test_binomial_collapse_and_boundary(bern, binom70):
    r = range_1d(bern, binom70, 1 + 1e-12)
    assert r.lo == pytest.approx(0.7, abs=1e-5) and r.hi == pytest.approx(0.7, abs=1e-5)
    r = range_1d(bern, Dataset.binomial(10, 10), 2)
    assert r.hi == 1.0 and r.hi_at_boundary and not r.lo_at_boundary
    assert r.lo == pytest.approx(0.5 ** (1 / 10), abs=1e-9)
    with pytest.raises(DomainError):
        range_1d(bern, binom70, 1.0)
    with pytest.raises(DataError):
        range_1d(FamilySpec.normal(), Dataset.normal_summary(5, 0, 1), 2)


def test_unimodality_scan_detects_second_mode():
    with pytest.raises(NonUnimodalError):
        _scan_unimodal(lambda t: -np.sin(12 * np.asarray(t)) ** 2, 0.0, 1.0)
    _scan_unimodal(lambda t: -(np.asarray(t) - 0.2) ** 2, 0.2, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 400), st.data(), st.floats(1.01, 100))
def test_binomial_range_properties(n, data, C):
    k = data.draw(st.integers(0, n))
    fam = FamilySpec.bernoulli()
    d = Dataset.binomial(n, k)
    r = range_1d(fam, d, C)
    assert r.lo <= k / n <= r.hi
    for end, edge in ((r.lo, r.lo_at_boundary), (r.hi, r.hi_at_boundary)):
        if not edge:
            assert abs(log_lr(fam, end, d).l + math.log(C)) <= 1e-6
    wider = range_1d(fam, d, C * 1.5)
    assert wider.lo <= r.lo and r.hi <= wider.hi


# ---------------------------------------------------------------- normal

def test_profile_examples():
    assert profile_normal_mean(FOURIER, 33.31) == 0.0
    d = brentq(lambda d: profile_normal_mean(FOURIER, 33.31 + d) + math.log(2), 0, 2)
    assert d == pytest.approx(0.4007, abs=1e-4)


@pytest.mark.parametrize("mu", [33.31, 33.0, 33.7, 30.0, 40.0])
def test_profile_matches_grid_maximization(mu):
    s = FOURIER
    d2 = (s.mean - mu) ** 2
    ratio = np.exp(np.arange(math.log(0.25), math.log(4 * (1 + d2 / s.sd**2)), 1e-4))
    v = s.sd**2 * ratio
    l = s.n * (np.log(s.sd) - 0.5 * np.log(v) - (s.sd**2 + d2) / (2 * v) + 0.5)
    assert profile_normal_mean(s, mu) == pytest.approx(l.max(), abs=1e-6)


@pytest.mark.parametrize("C", LEVELS + [1.5, 40.0])
def test_derived_mode_matches_oracle(C):
    r = normal_mean_range(FOURIER, C, "derived")
    olo, ohi = normal_range_oracle(FOURIER, C)
    assert abs(r.lo - olo) <= 1e-6 and abs(r.hi - ohi) <= 1e-6
    for end in (r.lo, r.hi):
        assert abs(profile_normal_mean(FOURIER, end) + math.log(C)) <= 1e-6


@pytest.mark.parametrize("C, lo, hi", [(2, 32.9, 33.7), (5, 32.8, 33.8), (15, 32.7, 33.9)])
def test_paper_mode_table(C, lo, hi):
    r = normal_mean_range(FOURIER, C, "paper")
    assert (round(r.lo, 1), round(r.hi, 1)) == (lo, hi)
    assert r.formula_mode == "paper"


def test_modes_agree_at_two_only():
    a, b = normal_mean_range(FOURIER, 2, "paper"), normal_mean_range(FOURIER, 2, "derived")
    assert a.lo == pytest.approx(b.lo, abs=1e-12) and a.hi == pytest.approx(b.hi, abs=1e-12)
    d15 = normal_mean_range(FOURIER, 15, "derived")
    assert (d15.lo, d15.hi) == pytest.approx((32.5165, 34.1035), abs=1e-4)
    assert d15.hi - 33.31 == pytest.approx(0.794, abs=5e-4)
    with pytest.raises(DataError):
        normal_mean_range(FOURIER, 2, "other")


@pytest.mark.parametrize("k", [0.01, 3.0, 1e4])
def test_normal_scale_equivariance(k):
    base = normal_mean_range(FOURIER, 5)
    r = normal_mean_range(NormalSummary(505, 33.31 * k, 7.642 * k), 5)
    assert r.lo == pytest.approx(base.lo * k, rel=1e-12) and r.hi == pytest.approx(base.hi * k, rel=1e-12)


def test_normal_nesting_and_membership():
    for mode in ("paper", "derived"):
        rs = [normal_mean_range(FOURIER, C, mode) for C in LEVELS]
        assert all(a.lo >= b.lo and a.hi <= b.hi for a, b in zip(rs, rs[1:]))
        assert all(33.31 in r for r in rs)


# ---------------------------------------------------------------- functionals

def test_survey_difference(survey):
    fam, data = survey
    r = functional_range(fam, data, FunctionalSpec.parse("diff:bf,bm"), 2)
    assert (r.lo, r.hi) == pytest.approx((-0.0101057, 0.3839780), abs=2e-7)
    olo, ohi = survey_grid_oracle(2)
    assert abs(r.grid_lo - olo) <= 0.01 and abs(r.grid_hi - ohi) <= 0.01
    assert abs(r.lo - olo) <= 1e-3 and abs(r.hi - ohi) <= 1e-3
    assert r.lo <= r.grid_lo and r.grid_hi <= r.hi
    for a, b in (r.argmin, r.argmax):
        l = 8 * math.log(a / 0.8) + 2 * math.log((1 - a) / 0.2) + 12 * math.log(b / 0.6) + 8 * math.log((1 - b) / 0.4)
        assert abs(l + math.log(2)) <= 1e-6


def test_survey_equal_rates_are_good(survey):
    fam, data = survey
    best = max(log_lr(fam, (x, x, 0.4, 1 / 6), data).L for x in np.linspace(0.6, 0.8, 2001))
    assert best == pytest.approx(0.532, abs=5e-4)
    r = functional_range(fam, data, FunctionalSpec("difference", 0, 1), 2)
    assert 0.0 in r


def test_survey_component(survey):
    fam, data = survey
    r = functional_range(fam, data, FunctionalSpec.parse("component:bf"), 2)
    f = lambda t: 8 * math.log(t / 0.8) + 2 * math.log((1 - t) / 0.2) + math.log(2)
    assert r.lo == pytest.approx(brentq(f, 0.01, 0.8, xtol=1e-14), abs=1e-9)
    assert r.hi == pytest.approx(brentq(f, 0.8, 0.9999, xtol=1e-14), abs=1e-9)
    assert (r.lo, r.hi) == pytest.approx((0.6283, 0.9187), abs=1e-4)
    tiny = functional_range(fam, data, FunctionalSpec("component", "bf"), 1 + 1e-12)
    assert tiny.lo == pytest.approx(0.8, abs=1e-5) and tiny.hi == pytest.approx(0.8, abs=1e-5)


def test_survey_odds_ratio(survey):
    fam, data = survey
    r = functional_range(fam, data, FunctionalSpec.parse("oddsratio:bf,bm"), 2)
    g = np.arange(1, 2000) * 5e-4
    la = 8 * np.log(g / 0.8) + 2 * np.log((1 - g) / 0.2)
    lb = 12 * np.log(g / 0.6) + 8 * np.log((1 - g) / 0.4)
    ok = la[:, None] + lb[None, :] >= -math.log(2)
    orr = (g[:, None] / (1 - g[:, None])) * ((1 - g[None, :]) / g[None, :])
    assert r.lo == pytest.approx(orr[ok].min(), rel=5e-3)
    assert r.hi == pytest.approx(orr[ok].max(), rel=5e-3)
    assert r.lo <= orr[ok].min() + 1e-12 and r.hi >= orr[ok].max() - 1e-12


@pytest.mark.parametrize("spec", ["diff:bf,bm", "diff:wm,bf", "oddsratio:wf,wm", "component:wm", "diff:1,3"])
def test_functional_nesting_and_membership(survey, spec):
    fam, data = survey
    h = FunctionalSpec.parse(spec)
    est = h.evaluate(mle(fam, data).values, fam)
    rs = [functional_range(fam, data, h, C) for C in LEVELS]
    for r in rs:
        assert r.lo <= est <= r.hi
    assert all(a.lo >= b.lo and a.hi <= b.hi for a, b in zip(rs, rs[1:]))


def test_discrete_difference_against_brute_force():
    fam = FamilySpec.discrete(["a", "b", "c"])
    data = Dataset.from_values(list("aaaabbbcccccccc"))
    r = functional_range(fam, data, FunctionalSpec("difference", "a", "b"), 5)
    g = np.arange(1, 4000) / 4000
    A, B = np.meshgrid(g, g, indexing="ij")
    Cc = 1 - A - B
    with np.errstate(invalid="ignore", divide="ignore"):
        l = 4 * np.log(A / (4 / 15)) + 3 * np.log(B / (3 / 15)) + 8 * np.log(Cc / (8 / 15))
    ok = (Cc > 0) & (l >= -math.log(5))
    d = (A - B)[ok]
    assert abs(r.lo - d.min()) <= 1e-3 and abs(r.hi - d.max()) <= 1e-3
    assert r.lo <= d.min() + 1e-12 and r.hi >= d.max() - 1e-12


def test_discrete_with_profiled_rest():
    fam = FamilySpec.discrete(["a", "b", "c", "d"])
    data = Dataset.from_values(list("aabbbbccddddd"))
    r = functional_range(fam, data, FunctionalSpec("difference", "a", "b"), 2)
    # profile: c and d share the leftover mass in proportion 2:5
    g = np.arange(1, 2000) / 2000
    A, B = np.meshgrid(g, g, indexing="ij")
    S = 1 - A - B
    with np.errstate(invalid="ignore", divide="ignore"):
        l = (2 * np.log(A / (2 / 13)) + 4 * np.log(B / (4 / 13)) + 2 * np.log(S * 2 / 7 / (2 / 13))
             + 5 * np.log(S * 5 / 7 / (5 / 13)))
    ok = (S > 0) & (l >= -math.log(2))
    d = (A - B)[ok]
    assert abs(r.lo - d.min()) <= 1e-3 and abs(r.hi - d.max()) <= 1e-3


def test_functional_errors(survey):
    fam, data = survey
    with pytest.raises(DataError):
        functional_range(FamilySpec.bernoulli(), Dataset.binomial(10, 3), FunctionalSpec("component", 0), 2)
    with pytest.raises(DataError):
        FunctionalSpec("ratio", 0, 1)
    with pytest.raises(DataError):
        FunctionalSpec("difference", 0)
    with pytest.raises(DataError):
        functional_range(fam, data, FunctionalSpec("difference", "bf", "bf"), 2)
    with pytest.raises(DataError):
        functional_range(fam, data, FunctionalSpec("difference", 0, 9), 2)


def test_boundary_cell_flags():
    fam = FamilySpec.cells(["x", "y"])
    data = Dataset.from_cell_counts({"x": (5, 5), "y": (1, 4)})
    r = functional_range(fam, data, FunctionalSpec("difference", "x", "y"), 2)
    assert r.hi_at_boundary
    assert r.lo <= 0.75 <= r.hi
    with pytest.raises(DomainError):
        functional_range(fam, data, FunctionalSpec("oddsratio", "x", "y"), 2)
