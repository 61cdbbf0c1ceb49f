"""Classical quantities printed next to description ranges for comparison.

Only two are needed: the normal-theory error bound of a mean, and the
pooled standard error of a difference of two proportions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateError, DomainError

# Wichura (1988), algorithm AS 241, PPND16: about 1e-16 relative accuracy.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in reversed(coef):
        acc = acc * x + c
    return acc


def norm_ppf(p: float) -> float:
    """Standard normal quantile by rational approximation."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile needs 0 < p < 1, got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = math.sqrt(-math.log(p if q < 0.0 else 1.0 - p))
    if r <= 5.0:
        r -= 1.6
        z = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        z = _poly(_E, r) / _poly(_F, r)
    return -z if q < 0.0 else z


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class ErrorBound:
    """Half-width an estimate exceeds with two-sided probability ``probability``."""

    probability: float
    z: float
    bound: float

    @property
    def months(self) -> float:
        """The bound in months, for a year-valued mean."""
        return 12.0 * self.bound


def normal_error_bound(p: float, s: float, n: int) -> ErrorBound:
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if not s > 0.0 or n < 1:
        raise DomainError("need s > 0 and n >= 1")
    # upper quantile via the lower tail keeps full precision for tiny p
    z = -norm_ppf(p / 2.0)
    return ErrorBound(p, z, z * s / math.sqrt(n))


def two_prop_pooled_se(k1: int, n1: int, k2: int, n2: int) -> float:
    """Standard error of ``k1/n1 - k2/n2`` with a pooled proportion."""
    if n1 < 1 or n2 < 1 or not (0 <= k1 <= n1 and 0 <= k2 <= n2):
        raise DomainError(f"invalid counts {k1}/{n1}, {k2}/{n2}")
    pbar = (k1 + k2) / (n1 + n2)
    if pbar in (0.0, 1.0):
        raise DegenerateError(f"pooled proportion is {pbar}; the standard error degenerates")
    return math.sqrt(pbar * (1.0 - pbar) * (1.0 / n1 + 1.0 / n2))
