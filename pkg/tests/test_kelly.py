import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtprob.errors import DataError, DomainError, UnboundedPayoffError
from gtprob.families import Dataset, FamilySpec, log_lr, mle, sample
from gtprob.kelly import Competitor, compete, fractional_payoff, kelly_payoff, log_fractional, tournament
from gtprob.ledger import EventAllIn, LedgerSession, Table

B = FamilySpec.bernoulli()


def test_kelly_payoff_values():
    pay = kelly_payoff(Competitor(B, 0.5), Competitor(B, 0.7))
    assert pay.factor(1) == pytest.approx(1.4) and pay.factor(0) == pytest.approx(0.6)
    same = kelly_payoff(Competitor(B, 0.3), Competitor(B, 0.3))
    assert same.factor(1) == 1.0 and same.factor(0) == 1.0


def test_kelly_payoff_unbounded():
    d = FamilySpec.discrete(["a", "b"])
    with pytest.raises(UnboundedPayoffError):
        kelly_payoff(Competitor(d, (1.0, 0.0)), Competitor(d, (0.5, 0.5)))


@pytest.mark.parametrize("f, want1, want0", [(0.0, 1.0, 1.0), (1.0, 1.4, 0.6), (0.5, 1.2, 0.8)])
def test_fractional_payoff(f, want1, want0):
    for pay in (Table({"1": 1.4, "0": 0.6}), kelly_payoff(Competitor(B, 0.5), Competitor(B, 0.7))):
        fp = fractional_payoff(pay, f)
        assert fp.factor(1) == pytest.approx(want1) and fp.factor(0) == pytest.approx(want0)


def test_fractional_keeps_unit_expectation():
    fp = fractional_payoff(EventAllIn(0.2), 0.3)
    fc = {"1": 0.2, "0": 0.8}
    assert fp.expectation(__import__("gtprob.ledger", fromlist=["as_forecast"]).as_forecast(fc)) == pytest.approx(1.0)
    assert fp.factor(0) == pytest.approx(0.7)
    with pytest.raises(DomainError):
        fractional_payoff(Table({"1": 1.4, "0": 0.6}), 1.5)


def test_compete_binomial():
    r = compete(Competitor(B, 0.5), Competitor(B, 0.7), Dataset.binomial(100, 70))
    assert r.final_capital == pytest.approx(1 / log_lr(B, 0.5, Dataset.binomial(100, 70)).L, rel=1e-12)
    assert r.final_capital == pytest.approx(1.4**70 * 0.6**30, rel=1e-9)


def test_compete_identity_and_unbounded():
    data = Dataset.from_values([1, 0, 1])
    assert compete(Competitor(B, 0.4), Competitor(B, 0.4), data).final_capital == 1.0
    with pytest.raises(UnboundedPayoffError):
        compete(Competitor(B, 0.0), Competitor(B, 0.5), data)
    with pytest.raises(UnboundedPayoffError):
        compete(Competitor(B, 0.0), Competitor(B, 0.5, 0.5), data)


def test_compete_overflow_flag():
    big = Dataset.from_values([5000.0, 5001.0, 4999.5])
    n = FamilySpec.normal()
    r = compete(Competitor(n, (0.0, 1.0)), Competitor(n, (5000.0, 1.0)), big)
    assert r.overflow and r.final_capital is None and r.log_capital > 700


def _random_probe(rng):
    kind = rng.choice(["bern", "normal", "cells", "discrete"])
    if kind == "bern":
        fam = B
        th = lambda: (float(rng.uniform(0.01, 0.99)),)
    elif kind == "normal":
        fam = FamilySpec.normal()
        th = lambda: (float(rng.normal(0, 3)), float(rng.uniform(0.2, 5)))
    elif kind == "cells":
        fam = FamilySpec.cells(["a", "b", "c"])
        th = lambda: tuple(float(x) for x in rng.uniform(0.01, 0.99, 3))
    else:
        fam = FamilySpec.discrete(["a", "b", "c", "d"])

        def th():
            v = rng.dirichlet([2.0] * 4)
            v[-1] = 1.0 - v[:-1].sum()
            return tuple(float(x) for x in v)
    data = sample(fam, th(), int(rng.integers(1, 80)), int(rng.integers(0, 2**31)))
    return fam, th(), th(), data


def test_reciprocity_randomized():
    rng = np.random.default_rng(20240)
    for _ in range(100):
        fam, a, b, data = _random_probe(rng)
        ab = compete(Competitor(fam, a), Competitor(fam, b), data).log_capital
        ba = compete(Competitor(fam, b), Competitor(fam, a), data).log_capital
        assert abs(ab + ba) <= 1e-9


def test_ledger_equivalence():
    rng = np.random.default_rng(3)
    for _ in range(20):
        fam, a, b, data = _random_probe(rng)
        f = float(rng.choice([1.0, 0.5, 0.1]))
        den, num = Competitor(fam, a), Competitor(fam, b, f)
        s = LedgerSession("eq")
        pay = kelly_payoff(den, num)
        for rec in data.records:
            s.bet_payoff(None, pay, rec)
        assert s.capital == pytest.approx(compete(den, num, data).final_capital, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.0, 0.999), st.integers(1, 200), st.integers(0, 10**6))
def test_fractional_never_ruins(a, b, f, n, seed):
    data = sample(B, 0.5, n, seed)
    r = compete(Competitor(B, a), Competitor(B, b, f), data)
    assert r.log_capital >= n * math.log1p(-f) - 1e-9


def test_order_invariance():
    data = sample(FamilySpec.normal(), (1.0, 2.0), 300, 11)
    recs = list(data.records)
    random.Random(0).shuffle(recs)
    n = FamilySpec.normal()
    den, num = Competitor(n, (0.0, 1.5)), Competitor(n, (1.2, 2.5), 0.7)
    r1 = compete(den, num, data).final_capital
    r2 = compete(den, num, Dataset(tuple(recs))).final_capital
    assert r1 == pytest.approx(r2, rel=1e-12)


def test_log_fractional_stable():
    r = np.array([-800.0, -1.0, 0.0, 1.0, 800.0])
    out = log_fractional(r, 0.25)
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out[1:4], np.log(0.75 + 0.25 * np.exp(r[1:4])))
    assert out[-1] == pytest.approx(800 + math.log(0.25))
    assert log_fractional(-math.inf, 0.25) == pytest.approx(math.log(0.75))


def test_normal_summary_fraction_needs_records():
    n = FamilySpec.normal()
    with pytest.raises(DataError):
        compete(Competitor(n, (0, 1)), Competitor(n, (1, 1), 0.5), Dataset.normal_summary(10, 0.5, 1.0))


def test_tournament_ranks_mle_first():
    data = Dataset.binomial(100, 70)
    st_ = tournament(B, data, [0.5, 0.6, 0.7, 0.8])
    assert st_[0].theta.values == (0.7,) and st_[0].log_capital == 0.0
    assert [s.theta[0] for s in st_] == [0.7, 0.6, 0.8, 0.5]
    assert st_[-1].log_capital == pytest.approx(log_lr(B, 0.5, data).l)
