"""Kelly betting between forecasters.

Forecaster ``theta1`` sells any nonnegative payoff at its expected value
under ``P_theta1``. A Kelly bettor holding ``P_theta2`` buys the ratio
``P_theta2(Y) / P_theta1(Y)``, which costs exactly 1. Over a batch of
observations the bettor's final capital is the likelihood ratio of the two
forecasters; a fractional bettor stakes only ``f`` of its capital.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DataError, DomainError, UnboundedPayoffError
from .families import (
    Dataset,
    FamilySpec,
    Kind,
    ParamPoint,
    Record,
    ThetaLike,
    _logpmf,
    _records,
    check_theta,
    loglik,
    mle,
    sufficient_stats,
)
from .ledger import DistributionRatio, EventAllIn, FamilyForecast, PayoffSpec, Table

LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class Competitor:
    """A forecaster from ``family`` that bets with Kelly fraction ``fraction``."""

    family: FamilySpec
    theta: ParamPoint
    fraction: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", check_theta(self.family, self.theta, closed=True))
        if not 0.0 <= self.fraction <= 1.0:
            raise DomainError(f"fraction must lie in [0, 1], got {self.fraction}")


def kelly_payoff(denominator: Competitor, numerator: Competitor) -> DistributionRatio:
    """Payoff ``P_num / P_den`` bought from the denominator at price 1.

    The Kelly fraction is taken from the numerator (the bettor).
    """
    return DistributionRatio(
        FamilyForecast(numerator.family, numerator.theta),
        FamilyForecast(denominator.family, denominator.theta),
        numerator.fraction,
    )


def fractional_payoff(payoff: PayoffSpec, f: float) -> PayoffSpec:
    """Stake only ``f`` of capital: pointwise ``(1 - f) + f * S(y)``."""
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"fraction must lie in [0, 1], got {f}")
    if isinstance(payoff, DistributionRatio):
        return replace(payoff, fraction=payoff.fraction * f)
    if isinstance(payoff, Table):
        return Table({k: (1.0 - f) + f * v for k, v in payoff.payoffs.items()}, (1.0 - f) + f * payoff.default)
    if isinstance(payoff, EventAllIn):
        return Table({"1": (1.0 - f) + f / payoff.alpha}, 1.0 - f)
    raise DataError(f"unsupported payoff {payoff!r}")


def log_fractional(r, f: float):
    """``log((1 - f) + f * exp(r))`` without overflow; works on arrays."""
    if f == 1.0:
        return r
    if f == 0.0:
        return np.zeros_like(r) if isinstance(r, np.ndarray) else 0.0
    if isinstance(r, np.ndarray):
        with np.errstate(over="ignore", invalid="ignore"):
            neg = np.log1p(f * np.expm1(np.minimum(r, 0.0)))
            pos = r + np.log(f + (1.0 - f) * np.exp(-np.maximum(r, 0.0)))
        return np.where(r <= 0.0, neg, pos)
    if r <= 0.0:
        return math.log1p(f * math.expm1(r))
    return r + math.log(f + (1.0 - f) * math.exp(-r))


class CompeteResult(NamedTuple):
    final_capital: float | None
    log_capital: float
    overflow: bool


def _result(log_capital: float) -> CompeteResult:
    if log_capital > LOG_MAX:
        return CompeteResult(None, log_capital, True)
    return CompeteResult(math.exp(log_capital), log_capital, False)


def _record_log_ratio(family: FamilySpec, num: ParamPoint, den: ParamPoint, rec) -> float:
    a = _logpmf(family, num.values, rec)
    b = _logpmf(family, den.values, rec)
    if b == -math.inf:
        if a > -math.inf:
            raise UnboundedPayoffError(f"denominator gives observed outcome {rec!r} zero mass")
        raise DataError(f"observed outcome {rec!r} has zero mass under both forecasters")
    return a - b


def compete(denominator: Competitor, numerator: Competitor, data: Dataset) -> CompeteResult:
    """Run the numerator's Kelly bets against the denominator over ``data``.

    Records are scored in any order with an exactly rounded sum, so the
    result does not depend on record order. With ``fraction == 1`` the final
    capital is the likelihood ratio of numerator to denominator.
    """
    if numerator.family != denominator.family:
        raise DataError("competitors must come from the same family")
    family = numerator.family
    f = numerator.fraction
    num, den = numerator.theta, denominator.theta
    if data.summary is not None:
        st = sufficient_stats(family, data)
        if family.kind is Kind.BERNOULLI:
            n, k = st
            terms = []
            for y, count in ((1, k), (0, n - k)):
                if count:
                    terms.append(count * log_fractional(_record_log_ratio(family, num, den, Record(y)), f))
            return _result(math.fsum(terms))
        if f != 1.0:
            raise DataError("fractional competition on a normal summary needs raw records")
        return _result(loglik(family, num.values, st) - loglik(family, den.values, st))
    recs = _records(family, data)
    return _result(math.fsum(log_fractional(_record_log_ratio(family, num, den, r), f) for r in recs))


class Standing(NamedTuple):
    theta: ParamPoint
    log_capital: float


def tournament(family: FamilySpec, data: Dataset, thetas: Iterable[ThetaLike], fraction: float = 1.0) -> list[Standing]:
    """Rank candidate forecasters by the log capital they win betting against the best one."""
    best = Competitor(family, mle(family, data))
    out = []
    for th in thetas:
        th = check_theta(family, th, closed=True)
        out.append(Standing(th, compete(best, Competitor(family, th, fraction), data).log_capital))
    out.sort(key=lambda s: s.log_capital, reverse=True)
    return out
