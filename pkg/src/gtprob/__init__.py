"""Testing by betting and descriptive analysis by Kelly competition."""
from .describe import (
    Cutoffs,
    DescriptionRange,
    FunctionalSpec,
    Grade,
    functional_range,
    grade,
    normal_mean_range,
    profile_normal_mean,
    range_1d,
)
from .errors import DataError, GTProbError, NumericalError
from .families import Dataset, FamilySpec, Kind, ParamPoint, log_lr, mle
from .kelly import Competitor, compete, fractional_payoff, kelly_payoff, tournament
from .ledger import DiscreteForecast, DistributionRatio, EventAllIn, FamilyForecast, Ledger, LedgerSession, Table, aggregate
from .sim import SimConfig, ville_frequency

__version__ = "0.1.0"

__all__ = [
    "Competitor", "Cutoffs", "DataError", "Dataset", "DescriptionRange", "DiscreteForecast",
    "DistributionRatio", "EventAllIn", "FamilyForecast", "FamilySpec", "FunctionalSpec", "GTProbError",
    "Grade", "Kind", "Ledger", "LedgerSession", "NumericalError", "ParamPoint", "SimConfig", "Table",
    "aggregate", "compete", "fractional_payoff", "functional_range", "grade", "kelly_payoff", "log_lr",
    "mle", "normal_mean_range", "profile_normal_mean", "range_1d", "tournament", "ville_frequency",
]
