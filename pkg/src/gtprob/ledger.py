"""Betting-score ledgers.

A session starts with unit capital and multiplies it by the realized
payoff of one bet per round. Every payoff is nonnegative and has unit
expected value under the round's forecast, so capital can never be
injected: the only way to grow it is to bet well. Forecasts and payoffs
may change freely from round to round.

Sessions can be persisted to a newline-delimited JSON file. Loading a file
replays every round and refuses files whose stored factors or capitals do
not match the recomputation.
"""
from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Union

from .errors import (
    ClosedSessionError,
    DataError,
    DomainError,
    DuplicateSessionError,
    ExpectationError,
    LabelError,
    OpenSessionError,
    ReplayError,
    UnboundedPayoffError,
)
from .families import (
    FamilySpec,
    Kind,
    ParamPoint,
    Record,
    _logpmf,
    check_theta,
    coerce_record,
)

EXPECTATION_TOL = 1e-9
REPLAY_RTOL = 1e-12


# ---------------------------------------------------------------- forecasts

@dataclass(frozen=True)
class FamilyForecast:
    family: FamilySpec
    theta: ParamPoint

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", check_theta(self.family, self.theta))

    def log_prob(self, outcome) -> float:
        return _logpmf(self.family, self.theta.values, coerce_record(self.family, outcome))

    def probabilities(self) -> dict[str, float] | None:
        outs = self.family.outcomes
        if outs is None:
            return None
        return {str(y): math.exp(self.log_prob(y)) for y in outs}

    def to_dict(self) -> dict:
        return {"family": self.family.to_dict(), "theta": list(self.theta.values)}


@dataclass(frozen=True)
class DiscreteForecast:
    """A finite-outcome forecast given directly as ``{outcome: probability}``."""

    probs: Mapping[str, float]

    def __post_init__(self) -> None:
        probs = {str(k): float(v) for k, v in dict(self.probs).items()}
        if not probs or any(not (0.0 <= p <= 1.0) for p in probs.values()):
            raise DomainError(f"forecast probabilities must lie in [0, 1]: {probs}")
        if abs(math.fsum(probs.values()) - 1.0) > EXPECTATION_TOL:
            raise DomainError(f"forecast probabilities sum to {math.fsum(probs.values())!r}")
        object.__setattr__(self, "probs", probs)

    def probabilities(self) -> dict[str, float]:
        return dict(self.probs)

    def to_dict(self) -> dict:
        return {"probs": dict(self.probs)}


Forecast = Union[FamilyForecast, DiscreteForecast]


def as_forecast(obj) -> Forecast:
    if isinstance(obj, (FamilyForecast, DiscreteForecast)):
        return obj
    if isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[0], FamilySpec):
        return FamilyForecast(obj[0], check_theta(obj[0], obj[1]))
    if isinstance(obj, Mapping):
        return DiscreteForecast(obj)
    raise DataError(f"cannot interpret {obj!r} as a forecast")


def forecast_from_dict(d: Mapping) -> Forecast:
    if "probs" in d:
        return DiscreteForecast(d["probs"])
    fam = FamilySpec.from_dict(d["family"])
    return FamilyForecast(fam, ParamPoint(tuple(d["theta"])))


# ---------------------------------------------------------------- payoffs

@dataclass(frozen=True)
class EventAllIn:
    """Stake everything on an event of forecast probability ``alpha``."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")

    def factor(self, outcome) -> float:
        return 1.0 / self.alpha if _truthy(outcome) else 0.0

    def to_dict(self) -> dict:
        return {"form": "event", "alpha": self.alpha}


@dataclass(frozen=True)
class Table:
    """Payoff factor per outcome label; unlisted outcomes pay ``default``."""

    payoffs: Mapping[str, float]
    default: float = 0.0

    def __post_init__(self) -> None:
        pay = {str(k): float(v) for k, v in dict(self.payoffs).items()}
        bad = {k: v for k, v in pay.items() if not (v >= 0.0 and math.isfinite(v))}
        if bad or not (self.default >= 0.0 and math.isfinite(self.default)):
            raise DomainError(f"payoff factors must be finite and >= 0: {bad or self.default}")
        object.__setattr__(self, "payoffs", pay)
        object.__setattr__(self, "default", float(self.default))

    def factor(self, outcome) -> float:
        return self.payoffs.get(_key(outcome), self.default)

    def expectation(self, forecast: Forecast) -> float:
        probs = forecast.probabilities()
        if probs is None:
            raise DataError("a table payoff needs a forecast over finitely many outcomes")
        unknown = set(self.payoffs) - set(probs)
        if unknown:
            raise LabelError(f"payoff table names outcomes the forecast lacks: {sorted(unknown)}")
        return math.fsum(p * self.payoffs.get(y, self.default) for y, p in probs.items())

    def to_dict(self) -> dict:
        d = {"form": "table", "payoffs": dict(self.payoffs)}
        if self.default:
            d["default"] = self.default
        return d


@dataclass(frozen=True)
class DistributionRatio:
    """Fractional Kelly payoff ``(1 - f) + f * P_num(y) / P_den(y)``.

    Unit expectation under the denominator holds by construction, provided
    the denominator never gives zero mass where the numerator is positive.
    """

    numerator: FamilyForecast
    denominator: FamilyForecast
    fraction: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "numerator", as_forecast(self.numerator))
        object.__setattr__(self, "denominator", as_forecast(self.denominator))
        if not 0.0 <= self.fraction <= 1.0:
            raise DomainError(f"fraction must lie in [0, 1], got {self.fraction}")
        if self.numerator.family != self.denominator.family:
            raise DataError("numerator and denominator must share one outcome space")
        outs = self.numerator.family.outcomes
        if outs is not None and self.fraction > 0.0:
            for y in outs:
                if self.denominator.log_prob(y) == -math.inf and self.numerator.log_prob(y) > -math.inf:
                    raise UnboundedPayoffError(f"denominator gives outcome {y!r} zero mass")

    def log_ratio(self, outcome) -> float:
        num = self.numerator.log_prob(outcome)
        den = self.denominator.log_prob(outcome)
        if den == -math.inf:
            if num > -math.inf:
                raise UnboundedPayoffError(f"denominator gives outcome {outcome!r} zero mass")
            raise DomainError(f"outcome {outcome!r} has zero mass under both forecasts")
        return num - den

    def factor(self, outcome) -> float:
        f = self.fraction
        if f == 0.0:
            return 1.0
        r = math.exp(self.log_ratio(outcome))
        return r if f == 1.0 else (1.0 - f) + f * r

    def to_dict(self) -> dict:
        return {
            "form": "ratio",
            "numerator": self.numerator.to_dict(),
            "denominator": self.denominator.to_dict(),
            "fraction": self.fraction,
        }


PayoffSpec = Union[EventAllIn, Table, DistributionRatio]


def payoff_from_dict(d: Mapping) -> PayoffSpec:
    form = d.get("form")
    if form == "event":
        return EventAllIn(d["alpha"])
    if form == "table":
        return Table(d["payoffs"], d.get("default", 0.0))
    if form == "ratio":
        return DistributionRatio(
            forecast_from_dict(d["numerator"]), forecast_from_dict(d["denominator"]), d["fraction"]
        )
    raise DataError(f"unknown payoff form {form!r}")


def _truthy(outcome) -> bool:
    if isinstance(outcome, str):
        return outcome.strip().lower() in ("1", "true", "yes", "y")
    return bool(outcome)


def _key(outcome) -> str:
    if isinstance(outcome, Record):
        outcome = outcome.y
    if isinstance(outcome, bool):
        return str(int(outcome))
    if isinstance(outcome, float) and outcome.is_integer():
        return str(int(outcome))
    return str(outcome)


def _outcome_to_json(outcome):
    if isinstance(outcome, Record):
        return {"label": outcome.label, "y": outcome.y}
    if isinstance(outcome, bool):
        return int(outcome)
    return outcome


def _outcome_from_json(obj):
    if isinstance(obj, dict):
        return Record(obj["y"], obj.get("label"))
    return obj


# ---------------------------------------------------------------- sessions

@dataclass(frozen=True)
class BetRound:
    t: int
    forecast: Forecast | None
    payoff: PayoffSpec
    outcome: object
    factor: float
    capital_after: float


class Status(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


class Report(NamedTuple):
    evidence: float
    running_max: float
    dynamic_p: float
    rounds: int
    status: Status


class LedgerSession:
    """Append-only betting session with initial capital 1.

    One writer appends; concurrent readers see a consistent prefix because
    the round count is published only after a round is fully stored.
    """

    initial_capital = 1.0

    def __init__(self, id: str, sink=None) -> None:
        if not id:
            raise DataError("session id must be nonempty")
        self.id = id
        self._rounds: list[BetRound] = []
        self._path: list[float] = [1.0]
        self._maxes: list[float] = [1.0]
        self._n = 0
        self._closed = False
        self._lock = threading.Lock()
        self._sink = sink

    # reads
    @property
    def rounds(self) -> tuple[BetRound, ...]:
        n = self._n
        return tuple(self._rounds[:n])

    @property
    def capital_path(self) -> tuple[float, ...]:
        n = self._n
        return tuple(self._path[: n + 1])

    @property
    def capital(self) -> float:
        return self._path[self._n]

    @property
    def running_max(self) -> float:
        return self._maxes[self._n]

    @property
    def status(self) -> Status:
        return Status.CLOSED if self._closed else Status.OPEN

    @property
    def final(self) -> float | None:
        return self.capital if self._closed else None

    def report(self) -> Report:
        n = self._n
        s, m = self._path[n], self._maxes[n]
        return Report(s, m, min(1.0, 1.0 / m), n, self.status)

    # writes
    def bet_event(self, alpha: float, happened: bool) -> LedgerSession:
        """All-in bet on an event of probability ``alpha``: capital times 1/alpha or 0."""
        payoff = EventAllIn(alpha)
        forecast = DiscreteForecast({"1": alpha, "0": 1.0 - alpha})
        return self._append(forecast, payoff, int(bool(happened)))

    def bet_payoff(self, forecast, payoff: PayoffSpec, outcome) -> LedgerSession:
        """Buy ``payoff`` at price 1 under ``forecast`` and settle it on ``outcome``.

        For a :class:`DistributionRatio` the forecast may be omitted; it is
        the denominator, and any forecast given must equal it.
        """
        if isinstance(payoff, DistributionRatio):
            if forecast is not None and as_forecast(forecast) != payoff.denominator:
                raise ExpectationError("a ratio payoff has unit price only under its denominator")
            forecast = payoff.denominator
        else:
            forecast = as_forecast(forecast)
        if isinstance(payoff, Table):
            e = payoff.expectation(forecast)
            if abs(e - 1.0) > EXPECTATION_TOL:
                raise ExpectationError(f"payoff has expected value {e!r} under the forecast, not 1")
        elif isinstance(payoff, EventAllIn):
            probs = forecast.probabilities()
            if probs is None or abs(probs.get("1", 0.0) - payoff.alpha) > EXPECTATION_TOL:
                raise ExpectationError("event payoff needs a forecast giving the event probability alpha")
        outcome = self._check_outcome(forecast, outcome)
        return self._append(forecast, payoff, outcome)

    @staticmethod
    def _check_outcome(forecast: Forecast, outcome):
        if isinstance(forecast, FamilyForecast):
            rec = coerce_record(forecast.family, outcome)
            return rec if rec.label is not None else rec.y
        key = _key(outcome)
        if key not in forecast.probs:
            raise LabelError(f"outcome {key!r} is not in the forecast's outcome space")
        return key

    def _append(self, forecast, payoff, outcome, *, expect: tuple[float, float] | None = None) -> LedgerSession:
        with self._lock:
            if self._closed:
                raise ClosedSessionError(f"session {self.id!r} is closed")
            factor = payoff.factor(outcome)
            if not factor >= 0.0:
                raise DomainError(f"payoff factor {factor!r} is negative")
            before = self._path[self._n]
            after = before * factor
            if expect is not None:
                _verify(self.id, self._n + 1, "factor", expect[0], factor)
                _verify(self.id, self._n + 1, "capital_after", expect[1], after)
            rnd = BetRound(self._n + 1, forecast, payoff, outcome, factor, after)
            if self._sink is not None and expect is None:
                self._sink(_round_record(self.id, rnd))
            self._rounds.append(rnd)
            self._path.append(after)
            self._maxes.append(max(self._maxes[self._n], after))
            self._n += 1
        return self

    def close(self) -> float:
        """Close the session; the final score is the current capital, not the maximum."""
        with self._lock:
            if self._closed:
                raise ClosedSessionError(f"session {self.id!r} is already closed")
            if self._sink is not None:
                self._sink({"type": "close", "session_id": self.id, "final": self.capital})
            self._closed = True
        return self.capital

    def __repr__(self) -> str:
        return f"LedgerSession({self.id!r}, rounds={self._n}, capital={self.capital!r}, {self.status.value})"


def session_report(session: LedgerSession) -> Report:
    return session.report()


def aggregate(sessions: Iterable[LedgerSession]) -> float:
    """Sum of final capitals over sum of initial capitals, closed sessions only."""
    sessions = list(sessions)
    if not sessions:
        raise DataError("aggregate needs at least one session")
    still_open = [s.id for s in sessions if s.status is Status.OPEN]
    if still_open:
        raise OpenSessionError(f"sessions still open: {still_open}")
    return math.fsum(s.capital for s in sessions) / math.fsum(s.initial_capital for s in sessions)


# ---------------------------------------------------------------- persistence

def _round_record(session_id: str, rnd: BetRound) -> dict:
    return {
        "type": "round",
        "session_id": session_id,
        "t": rnd.t,
        "forecast": None if rnd.forecast is None else rnd.forecast.to_dict(),
        "payoff": rnd.payoff.to_dict(),
        "outcome": _outcome_to_json(rnd.outcome),
        "factor": rnd.factor,
        "capital_after": rnd.capital_after,
    }


def _verify(sid: str, t: int, what: str, stored: float, computed: float) -> None:
    if stored == computed:
        return
    scale = max(abs(stored), abs(computed))
    if not (abs(stored - computed) <= REPLAY_RTOL * scale):
        raise ReplayError(f"session {sid!r} round {t}: stored {what} {stored!r} != recomputed {computed!r}")


class Ledger:
    """A set of sessions with unique ids, optionally backed by a JSONL file.

    Reals are written with Python's shortest round-trip representation, so
    a reload reproduces every stored float bit for bit.
    """

    def __init__(self, path: str | os.PathLike | None = None) -> None:
        self.path = None if path is None else os.fspath(path)
        self.sessions: dict[str, LedgerSession] = {}
        self._lock = threading.Lock()

    def _write(self, rec: dict) -> None:
        if self.path is None:
            return
        line = json.dumps(rec, allow_nan=False, separators=(",", ":"))
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()

    def open_session(self, id: str) -> LedgerSession:
        with self._lock:
            if id in self.sessions:
                raise DuplicateSessionError(f"session {id!r} already exists")
            s = LedgerSession(id, sink=self._write)
            self._write({"type": "open", "session_id": id, "initial_capital": 1.0})
            self.sessions[id] = s
        return s

    def __getitem__(self, id: str) -> LedgerSession:
        try:
            return self.sessions[id]
        except KeyError:
            raise DataError(f"no session {id!r}") from None

    def __iter__(self):
        return iter(self.sessions.values())

    def __len__(self) -> int:
        return len(self.sessions)

    @classmethod
    def load(cls, path: str | os.PathLike) -> Ledger:
        """Read and replay a ledger file; any mismatch raises :class:`ReplayError`."""
        ledger = cls(path)
        if not os.path.exists(ledger.path):
            return ledger
        with open(ledger.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    ledger._replay(rec)
                except ReplayError as exc:
                    raise ReplayError(f"{ledger.path}:{lineno}: {exc}") from None
                except (DataError, KeyError, TypeError, ValueError) as exc:
                    raise ReplayError(f"{ledger.path}:{lineno}: malformed record: {exc}") from None
        return ledger

    def _replay(self, rec: dict) -> None:
        kind, sid = rec["type"], rec["session_id"]
        if kind == "open":
            if sid in self.sessions:
                raise ReplayError(f"session {sid!r} opened twice")
            if rec.get("initial_capital", 1.0) != 1.0:
                raise ReplayError(f"session {sid!r} does not start at unit capital")
            self.sessions[sid] = LedgerSession(sid, sink=self._write)
            return
        if sid not in self.sessions:
            raise ReplayError(f"record for unopened session {sid!r}")
        s = self.sessions[sid]
        if kind == "round":
            if rec["t"] != s._n + 1:
                raise ReplayError(f"session {sid!r}: round {rec['t']} out of sequence")
            fc = rec.get("forecast")
            forecast = None if fc is None else forecast_from_dict(fc)
            payoff = payoff_from_dict(rec["payoff"])
            try:
                s._append(forecast, payoff, _outcome_from_json(rec["outcome"]),
                          expect=(float(rec["factor"]), float(rec["capital_after"])))
            except ClosedSessionError as exc:
                raise ReplayError(str(exc)) from None
        elif kind == "close":
            if s._closed:
                raise ReplayError(f"session {sid!r} closed twice")
            _verify(sid, s._n, "final", float(rec["final"]), s.capital)
            s._closed = True
        else:
            raise ReplayError(f"unknown record type {kind!r}")
