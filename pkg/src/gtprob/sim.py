"""Monte Carlo check of Ville's inequality for Kelly capital processes.

Under the truth, a Kelly bettor's capital is a test martingale, so the
chance that it ever reaches ``threshold`` is at most ``1/threshold``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DataError, DomainError, UnboundedPayoffError
from .families import FamilySpec, Kind, ParamPoint, check_theta, draw_codes, log_density_codes
from .kelly import Competitor, kelly_payoff, log_fractional

CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    truth_family: FamilySpec
    truth_theta: ParamPoint
    bettor: Competitor
    horizon: int
    threshold: float
    paths: int
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "truth_theta", check_theta(self.truth_family, self.truth_theta))
        if self.truth_family.kind is Kind.CELLS:
            raise DataError("simulation needs a label-free family")
        if self.bettor.family != self.truth_family:
            raise DataError("bettor and truth must share a family")
        if self.horizon < 1 or self.paths < 1:
            raise DomainError("horizon and paths must be >= 1")
        if not self.threshold >= 1.0:
            raise DomainError(f"threshold must be >= 1, got {self.threshold}")


class VilleResult(NamedTuple):
    frequency: float
    standard_error: float
    hits: int
    paths: int
    mean_final: float
    sd_final: float


def path_rng(seed: int, path: int) -> np.random.Generator:
    """Independent stream for one path, reproducible on its own."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(path,))))


def _log_factors(cfg: SimConfig, codes: np.ndarray) -> np.ndarray:
    b = cfg.bettor
    num = log_density_codes(cfg.truth_family, b.theta, codes)
    den = log_density_codes(cfg.truth_family, cfg.truth_theta, codes)
    if np.any(np.isneginf(den) & ~np.isneginf(num)):
        raise UnboundedPayoffError("truth gives a drawn outcome zero mass")
    with np.errstate(invalid="ignore"):
        r = num - den
    return log_fractional(r, b.fraction)


def ville_frequency(config: SimConfig) -> VilleResult:
    """Fraction of simulated capital paths whose running maximum reaches the threshold.

    Each path draws ``horizon`` outcomes from the truth and multiplies the
    bettor's Kelly factors. The result is deterministic given the seed and
    does not depend on how paths are chunked.
    """
    cfg = config
    if cfg.truth_family.outcomes is not None and cfg.bettor.fraction > 0.0:
        kelly_payoff(Competitor(cfg.truth_family, cfg.truth_theta), cfg.bettor)
    log_thr = math.log(cfg.threshold)
    hits = 0
    finals: list[float] = []
    for start in range(0, cfg.paths, CHUNK):
        stop = min(start + CHUNK, cfg.paths)
        codes = np.stack([draw_codes(cfg.truth_family, cfg.truth_theta, cfg.horizon, path_rng(cfg.seed, p))
                          for p in range(start, stop)])
        logf = np.ascontiguousarray(_log_factors(cfg, codes), dtype=np.float64)
        hit, final, _ = _kernels.path_scan(logf, log_thr)
        hits += int(hit.sum())
        finals.extend(np.exp(final).tolist())
    P = cfg.paths
    freq = hits / P
    mean = math.fsum(finals) / P
    sd = math.sqrt(math.fsum((x - mean) ** 2 for x in finals) / (P - 1)) if P > 1 else 0.0
    return VilleResult(freq, math.sqrt(freq * (1.0 - freq) / P), hits, P, mean, sd)
