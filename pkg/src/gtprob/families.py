"""Forecasting families used as competing forecasters.

A family is a set of probability forecasts indexed by a parameter point.
This module evaluates their densities, finds the best forecaster for a
dataset in closed form, and scores every other forecaster against it
through the log-ratio ``l(theta) = log P_theta(y) - log P_thetahat(y)``.

All arithmetic is in log space; ratios are exponentiated only when handed
back to the caller.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from .errors import DataError, DegenerateError, DomainError, EmptyCellError, LabelError

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
SUM_TOL = 1e-12


class Kind(str, Enum):
    BERNOULLI = "bernoulli"
    NORMAL = "normal"
    CELLS = "cells"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class FamilySpec:
    """A forecasting family.

    ``bernoulli``: one constant probability for a binary outcome.
    ``normal``: normal forecasts with parameter ``(mu, sigma^2)``.
    ``cells``: an independent success probability per cell label.
    ``discrete``: a probability vector over ``labels`` (m >= 2 outcomes).
    """

    kind: Kind
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if self.kind in (Kind.BERNOULLI, Kind.NORMAL) and self.labels:
            raise DomainError(f"{self.kind.value} family takes no labels")
        if self.kind is Kind.CELLS and len(self.labels) < 1:
            raise DomainError("cells family needs at least one cell")
        if self.kind is Kind.DISCRETE and len(self.labels) < 2:
            raise DomainError("discrete family needs at least two outcomes")
        if len(set(self.labels)) != len(self.labels):
            raise LabelError(f"labels must be distinct: {self.labels}")

    @classmethod
    def bernoulli(cls) -> FamilySpec:
        return cls(Kind.BERNOULLI)

    @classmethod
    def normal(cls) -> FamilySpec:
        return cls(Kind.NORMAL)

    @classmethod
    def cells(cls, labels: Iterable[str]) -> FamilySpec:
        return cls(Kind.CELLS, tuple(labels))

    @classmethod
    def discrete(cls, labels: Iterable[str]) -> FamilySpec:
        return cls(Kind.DISCRETE, tuple(labels))

    @property
    def dim(self) -> int:
        if self.kind is Kind.BERNOULLI:
            return 1
        if self.kind is Kind.NORMAL:
            return 2
        return len(self.labels)

    @property
    def outcomes(self) -> tuple | None:
        """Outcome space when it is finite and label-free, else None."""
        if self.kind is Kind.BERNOULLI:
            return (0, 1)
        if self.kind is Kind.DISCRETE:
            return self.labels
        return None

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise LabelError(f"unknown label {label!r}; declared {self.labels}") from None

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.value}
        if self.labels:
            d["labels"] = list(self.labels)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> FamilySpec:
        return cls(Kind(d["kind"]), tuple(d.get("labels", ())))


@dataclass(frozen=True)
class ParamPoint:
    """A parameter point; ``boundary`` marks a maximizer on the closed boundary."""

    values: tuple[float, ...]
    boundary: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __iter__(self):
        return iter(self.values)


ThetaLike = Union[ParamPoint, float, Sequence[float]]


def as_point(theta: ThetaLike) -> ParamPoint:
    if isinstance(theta, ParamPoint):
        return theta
    if isinstance(theta, (int, float, np.floating, np.integer)):
        return ParamPoint((float(theta),))
    return ParamPoint(tuple(theta))


def check_theta(family: FamilySpec, theta: ThetaLike, *, closed: bool = False) -> ParamPoint:
    """Validate ``theta`` for ``family``.

    Probabilities must lie in the open interval unless ``closed`` is set.
    Discrete probability vectors may contain zeros but must sum to one.
    """
    p = as_point(theta)
    if len(p) != family.dim:
        raise DomainError(f"{family.kind.value} family expects {family.dim} parameters, got {len(p)}")
    if any(math.isnan(v) for v in p):
        raise DomainError("parameter is NaN")
    if family.kind in (Kind.BERNOULLI, Kind.CELLS):
        for v in p:
            ok = 0.0 <= v <= 1.0 if closed else 0.0 < v < 1.0
            if not ok:
                raise DomainError(f"probability {v} outside {'[0, 1]' if closed else '(0, 1)'}")
    elif family.kind is Kind.NORMAL:
        mu, var = p.values
        if not math.isfinite(mu) or not (var > 0.0 and math.isfinite(var)):
            raise DomainError(f"normal parameter needs finite mu and sigma^2 > 0, got {p.values}")
    else:
        if any(v < 0.0 or v > 1.0 for v in p):
            raise DomainError(f"probability vector has entries outside [0, 1]: {p.values}")
        if abs(math.fsum(p.values) - 1.0) > SUM_TOL:
            raise DomainError(f"probability vector sums to {math.fsum(p.values)!r}, not 1")
    return p


@dataclass(frozen=True)
class Record:
    y: float | int | str
    label: str | None = None


@dataclass(frozen=True)
class NormalSummary:
    """Count, mean and population standard deviation of a sample."""

    n: int
    mean: float
    sd: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DataError("NormalSummary needs n >= 1")
        if not (self.sd >= 0.0) or not math.isfinite(self.mean):
            raise DataError("NormalSummary needs finite mean and sd >= 0")


@dataclass(frozen=True)
class BinomialSummary:
    n: int
    successes: int

    def __post_init__(self) -> None:
        if self.n < 1 or not 0 <= self.successes <= self.n:
            raise DataError(f"invalid binomial summary {self.successes}/{self.n}")


@dataclass(frozen=True)
class Dataset:
    """Observations of the target variable, as raw records or as a summary."""

    records: tuple[Record, ...] = ()
    summary: NormalSummary | BinomialSummary | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        if (self.summary is None) == (len(self.records) == 0):
            raise DataError("a dataset holds either nonempty records or a summary")

    @classmethod
    def from_values(cls, ys: Iterable, labels: Iterable[str | None] | None = None) -> Dataset:
        ys = list(ys)
        labs = [None] * len(ys) if labels is None else list(labels)
        if len(labs) != len(ys):
            raise DataError("labels and values differ in length")
        return cls(tuple(Record(y, lab) for y, lab in zip(ys, labs)))

    @classmethod
    def from_cell_counts(cls, counts: Mapping[str, tuple[int, int]]) -> Dataset:
        """Expand ``{label: (successes, trials)}`` into binary records."""
        recs = []
        for label, (k, n) in counts.items():
            if n < 0 or not 0 <= k <= n:
                raise DataError(f"invalid counts {k}/{n} for cell {label!r}")
            recs += [Record(1, label)] * k + [Record(0, label)] * (n - k)
        return cls(tuple(recs))

    @classmethod
    def normal_summary(cls, n: int, mean: float, sd: float) -> Dataset:
        return cls(summary=NormalSummary(n, mean, sd))

    @classmethod
    def binomial(cls, n: int, successes: int) -> Dataset:
        return cls(summary=BinomialSummary(n, successes))

    def __len__(self) -> int:
        if self.summary is not None:
            return self.summary.n
        return len(self.records)


class LogRatio(NamedTuple):
    l: float
    L: float


# ---------------------------------------------------------------- outcomes

def _binary(y) -> int:
    if isinstance(y, str):
        y = y.strip()
        if y not in ("0", "1"):
            raise DataError(f"binary outcome must be 0 or 1, got {y!r}")
        return int(y)
    if y in (0, 1) and not (isinstance(y, float) and math.isnan(y)):
        return int(y)
    raise DataError(f"binary outcome must be 0 or 1, got {y!r}")


def coerce_record(family: FamilySpec, record) -> Record:
    """Normalize a raw outcome or Record and check it against ``family``."""
    if not isinstance(record, Record):
        if isinstance(record, tuple) and len(record) == 2:
            record = Record(record[1], record[0])
        else:
            record = Record(record)
    label = record.label
    if family.kind is Kind.CELLS:
        if label is None:
            raise LabelError("cells family needs a labelled record")
        family.index(label)
        return Record(_binary(record.y), str(label))
    if label not in (None, ""):
        raise LabelError(f"{family.kind.value} family declares no record labels, got {label!r}")
    if family.kind is Kind.BERNOULLI:
        return Record(_binary(record.y))
    if family.kind is Kind.NORMAL:
        try:
            y = float(record.y)
        except (TypeError, ValueError):
            raise DataError(f"normal outcome must be real, got {record.y!r}") from None
        if not math.isfinite(y):
            raise DataError(f"normal outcome must be finite, got {y}")
        return Record(y)
    family.index(record.y)
    return Record(str(record.y))


# ---------------------------------------------------------------- densities

def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else -math.inf


def _xlogy(x: float, y: float) -> float:
    """x*log(y) with 0*log(0) = 0."""
    if x == 0:
        return 0.0
    return x * _log(y)


def _logpmf(family: FamilySpec, values: tuple[float, ...], rec: Record) -> float:
    kind = family.kind
    if kind is Kind.NORMAL:
        mu, var = values
        return -HALF_LOG_2PI - 0.5 * math.log(var) - (rec.y - mu) ** 2 / (2.0 * var)
    if kind is Kind.DISCRETE:
        return _log(values[family.index(rec.y)])
    t = values[0] if kind is Kind.BERNOULLI else values[family.index(rec.label)]
    return _log(t) if rec.y == 1 else _log(1.0 - t)


def log_density(family: FamilySpec, theta: ThetaLike, record) -> float:
    """Natural-log mass or density of one observation under ``theta``."""
    p = check_theta(family, theta)
    return _logpmf(family, p.values, coerce_record(family, record))


def log_density_codes(family: FamilySpec, theta: ThetaLike, codes: np.ndarray) -> np.ndarray:
    """Vectorized log density over encoded outcomes.

    Codes are 0/1 for bernoulli, reals for normal and outcome indices for
    discrete families.
    """
    v = as_point(theta).values
    codes = np.asarray(codes)
    with np.errstate(divide="ignore"):
        if family.kind is Kind.BERNOULLI:
            return np.where(codes == 1, np.log(v[0]), np.log1p(-v[0]))
        if family.kind is Kind.NORMAL:
            mu, var = v
            return -HALF_LOG_2PI - 0.5 * math.log(var) - (codes - mu) ** 2 / (2.0 * var)
        if family.kind is Kind.DISCRETE:
            return np.log(np.asarray(v))[codes]
    raise DataError("cells family has no label-free encoding")


def draw_codes(family: FamilySpec, theta: ThetaLike, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` encoded outcomes (see :func:`log_density_codes`)."""
    v = as_point(theta).values
    if family.kind is Kind.BERNOULLI:
        return (rng.random(n) < v[0]).astype(np.int64)
    if family.kind is Kind.NORMAL:
        return rng.normal(v[0], math.sqrt(v[1]), n)
    if family.kind is Kind.DISCRETE:
        return rng.choice(len(v), size=n, p=np.asarray(v))
    raise DataError("cells family has no label-free encoding")


# ---------------------------------------------------------- sufficient stats

def _records(family: FamilySpec, data: Dataset) -> list[Record]:
    return [coerce_record(family, r) for r in data.records]


def sufficient_stats(family: FamilySpec, data: Dataset):
    """Sufficient statistics of ``data`` for ``family``.

    bernoulli -> (n, k); normal -> (n, mean, population variance);
    cells -> list of (n_c, k_c) in label order; discrete -> list of counts.
    """
    s = data.summary
    if s is not None:
        if family.kind is Kind.BERNOULLI and isinstance(s, BinomialSummary):
            return (s.n, s.successes)
        if family.kind is Kind.NORMAL and isinstance(s, NormalSummary):
            return (s.n, float(s.mean), float(s.sd) ** 2)
        raise DataError(f"{type(s).__name__} does not fit the {family.kind.value} family")
    recs = _records(family, data)
    if family.kind is Kind.BERNOULLI:
        return (len(recs), sum(r.y for r in recs))
    if family.kind is Kind.NORMAL:
        ys = [r.y for r in recs]
        mean = math.fsum(ys) / len(ys)
        return (len(ys), mean, math.fsum((y - mean) ** 2 for y in ys) / len(ys))
    if family.kind is Kind.CELLS:
        cells = [[0, 0] for _ in family.labels]
        for r in recs:
            c = cells[family.index(r.label)]
            c[0] += 1
            c[1] += r.y
        for lab, (n, _) in zip(family.labels, cells):
            if n == 0:
                raise EmptyCellError(f"cell {lab!r} has no records")
        return [tuple(c) for c in cells]
    counts = [0] * family.dim
    for r in recs:
        counts[family.index(r.y)] += 1
    return counts


def mle(family: FamilySpec, data: Dataset) -> ParamPoint:
    """Closed-form best forecaster for ``data``.

    A success fraction of 0 or 1 (or an unobserved discrete outcome) puts the
    maximizer on the closed boundary; it is returned with ``boundary=True``.
    """
    st = sufficient_stats(family, data)
    if family.kind is Kind.BERNOULLI:
        n, k = st
        return ParamPoint((k / n,), boundary=k in (0, n))
    if family.kind is Kind.NORMAL:
        n, mean, var = st
        if var <= 0.0:
            raise DegenerateError("zero spread: the normal maximizer has sigma^2 = 0")
        return ParamPoint((mean, var))
    if family.kind is Kind.CELLS:
        vals = tuple(k / n for n, k in st)
        return ParamPoint(vals, boundary=any(k in (0, n) for n, k in st))
    n = sum(st)
    return ParamPoint(tuple(c / n for c in st), boundary=any(c == 0 for c in st))


def loglik(family: FamilySpec, values: Sequence[float], stats) -> float:
    """Total log-likelihood from sufficient statistics."""
    kind = family.kind
    if kind is Kind.BERNOULLI:
        n, k = stats
        return _xlogy(k, values[0]) + _xlogy(n - k, 1.0 - values[0])
    if kind is Kind.NORMAL:
        n, mean, var = stats
        mu, s2 = values
        return -n * (HALF_LOG_2PI + 0.5 * math.log(s2)) - n * (var + (mean - mu) ** 2) / (2.0 * s2)
    if kind is Kind.CELLS:
        return math.fsum(_xlogy(k, t) + _xlogy(n - k, 1.0 - t) for (n, k), t in zip(stats, values))
    return math.fsum(_xlogy(c, t) for c, t in zip(stats, values))


def log_lr(family: FamilySpec, theta: ThetaLike, data: Dataset) -> LogRatio:
    """Log-ratio of ``theta`` against the best forecaster, and the ratio itself.

    Raw records are scored observation by observation; summaries through
    their sufficient statistics. Both paths subtract the same computation at
    the maximizer, so ``log_lr(mle) == 0`` exactly.
    """
    p = check_theta(family, theta)
    best = mle(family, data)
    if data.summary is not None:
        st = sufficient_stats(family, data)
        l = loglik(family, p.values, st) - loglik(family, best.values, st)
    else:
        recs = _records(family, data)
        l = math.fsum(_logpmf(family, p.values, r) for r in recs) - math.fsum(
            _logpmf(family, best.values, r) for r in recs
        )
    return LogRatio(l, math.exp(l))


def binomial_log_ratio(k: int, n: int, t):
    """Log-ratio ``k log(t/p) + (n-k) log((1-t)/(1-p))`` with ``p = k/n``.

    Accepts scalars or arrays; zero counts contribute nothing.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    p = k / n
    with np.errstate(divide="ignore", invalid="ignore"):
        if k:
            out = out + k * (np.log(t) - math.log(p))
        if n - k:
            out = out + (n - k) * (np.log1p(-t) - math.log1p(-p))
    return out if out.ndim else float(out)


def normal_log_ratio(n: int, mean: float, sd: float, mu: float, var: float) -> float:
    """Closed-form normal log-ratio from a summary (population ``sd``)."""
    s2 = sd * sd
    return n * (math.log(sd) - 0.5 * math.log(var) - (s2 + (mean - mu) ** 2) / (2.0 * var) + 0.5)


# ---------------------------------------------------------------- sampling

def sample(family: FamilySpec, theta: ThetaLike, n: int, seed: int) -> Dataset:
    """Draw ``n`` records; the boundary of the parameter space is allowed."""
    if n < 1:
        raise DataError("sample size must be >= 1")
    p = check_theta(family, theta, closed=True)
    rng = np.random.default_rng(seed)
    if family.kind is Kind.CELLS:
        labels = [family.labels[i % family.dim] for i in range(n)]
        u = rng.random(n)
        ys = [int(ui < p[family.index(lab)]) for ui, lab in zip(u, labels)]
        return Dataset.from_values(ys, labels)
    codes = draw_codes(family, p, n, rng)
    if family.kind is Kind.DISCRETE:
        return Dataset.from_values(family.labels[c] for c in codes)
    if family.kind is Kind.BERNOULLI:
        return Dataset.from_values(int(c) for c in codes)
    return Dataset.from_values(float(c) for c in codes)


# ---------------------------------------------------------------- CSV

def read_csv(path, family: FamilySpec) -> Dataset:
    """Load a ``label,y`` (or ``y``) CSV file as records for ``family``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        if "y" not in fields or not set(fields) <= {"label", "y"}:
            raise DataError(f"{path}: header must be 'label,y' or 'y', got {fields}")
        recs = []
        for lineno, row in enumerate(reader, start=2):
            row = {k.strip(): (v.strip() if v is not None else v) for k, v in row.items()}
            label = row.get("label") or None
            try:
                recs.append(coerce_record(family, Record(row["y"], label)))
            except DataError as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from None
    if not recs:
        raise DataError(f"{path}: no records")
    return Dataset(tuple(recs))
