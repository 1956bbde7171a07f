"""Closed-form combinatorics, random-walk bound evaluators, and fitting.

Discrepancy laws are shifted binomials handled exactly (including the
odd/even parity split of the support); the half-line occupation-time
sums reduce to binomial survival functions and are evaluated in closed
form so the critical-exponent scan costs seconds, not hours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom


@dataclass(frozen=True)
class DiscretePmf:
    """Exact pmf on a set of (possibly negative) integers."""

    values: np.ndarray
    probs: np.ndarray

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def prob(self, predicate) -> float:
        mask = predicate(self.values)
        return float(self.probs[mask].sum())


def discrepancy_pmf(k: int, p: float) -> DiscretePmf:
    """Law of D = (#A - #B) over k independently typed sites: 2 Bin(k, p) - k.

    The support lives on k - 2Z: parity is exact, no smoothing."""
    if k < 1:
        raise ValueError("k must be >= 1")
    j = np.arange(k + 1)
    return DiscretePmf(values=2 * j - k, probs=binom.pmf(j, k, p))


def positive_part_mean(k: int, p: float) -> float:
    """E[1{D >= 0} D] for D = 2 Bin(k, p) - k, exactly."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    d = discrepancy_pmf(k, p)
    mask = d.values >= 0
    return float(np.dot(d.values[mask], d.probs[mask]))


def positive_part_envelope(k: int, p: float) -> float:
    """The upper envelope (1-2p)^-2 k^-1/2 (2 sqrt(p(1-p)))^k, without an
    absolute constant (fitted, never asserted, by callers)."""
    if not 0.0 < p < 0.5:
        raise ValueError("envelope defined for 0 < p < 1/2")
    a = 2.0 * math.sqrt(p * (1.0 - p))
    return (1.0 - 2.0 * p) ** -2 * k ** -0.5 * a**k


def positive_part_plus_one_mean(k: int, p: float) -> float:
    """E[1{D >= 0}(1 + D)], exactly, in closed form.

    With J ~ Bin(k, p) and m = ceil(k/2): D >= 0 iff J >= m, and
    E[J 1{J >= m}] = k p P(Bin(k-1, p) >= m-1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    m = (k + 1) // 2
    sf_m = binom.sf(m - 1, k, p)        # P(J >= m)
    sf_prev = binom.sf(m - 2, k - 1, p)  # P(Bin(k-1, p) >= m-1); sf(-1,0,p)=1
    return float((1.0 - k) * sf_m + 2.0 * k * p * sf_prev)


def expected_Uk(k: int, p: float) -> float:
    """Expected root occupancy of the k-th released half-line walker:
    2p (1-p)^-1 E[1{D >= 0}(1 + D)] with D the discrepancy over [0, k-1]."""
    return 2.0 * p / (1.0 - p) * positive_part_plus_one_mean(k, p)


@dataclass(frozen=True)
class UplusResult:
    value: float
    k_cap: int
    tail_bound: float  # certified bound on the truncated remainder


def expected_Uplus(p: float, k_cap: int | None = None) -> UplusResult:
    """Exact total expected root occupancy sum_{k>=1} E U_k with certified
    truncation: the summand is bounded by 2p/(1-p) (1+k) a^k with
    a = 2 sqrt(p(1-p)) (Chernoff at the median), which is summable for
    p < 1/2."""
    if not 0.25 < p < 0.5:
        raise ValueError("expected_Uplus requires 1/4 < p < 1/2 "
                         "(the series diverges at criticality)")
    a = 2.0 * math.sqrt(p * (1.0 - p))
    if k_cap is None:
        k_cap = max(64, math.ceil(math.log(1e-14) / math.log(a)))
    ks = np.arange(1, k_cap + 1)
    ms = (ks + 1) // 2
    sf_m = binom.sf(ms - 1, ks, p)
    sf_prev = binom.sf(ms - 2, ks - 1, p)
    inner = (1.0 - ks) * sf_m + 2.0 * ks * p * sf_prev
    total = 2.0 * p / (1.0 - p) * float(inner.sum())
    # Geometric remainder: sum_{k > K} (1+k) a^k in closed form.
    rem = a ** (k_cap + 1) * ((k_cap + 2) / (1 - a) + a / (1 - a) ** 2)
    tail = 2.0 * p / (1.0 - p) * rem
    return UplusResult(value=total, k_cap=int(k_cap), tail_bound=float(tail))


@dataclass(frozen=True)
class DevrResult:
    prob: float
    n_sites: int
    threshold: float
    mode: str  # "exact" or "normal-approx"


def devr_tail(r: int, d: int, p: float, c1: float) -> DevrResult:
    """P(D(B_r^d) >= c1 r^{d/2}) for the ball of N = (2r+1)^d sites."""
    if r < 1 or d < 1:
        raise ValueError("r and d must be positive")
    n = (2 * r + 1) ** d
    x = c1 * r ** (d / 2.0)
    j_min = math.ceil((n + x) / 2.0)
    if n <= 10**7:
        prob = float(binom.sf(j_min - 1, n, p))
        mode = "exact"
    else:
        mu, sd = n * p, math.sqrt(n * p * (1 - p))
        prob = float(0.5 * math.erfc((j_min - 0.5 - mu) / (sd * math.sqrt(2))))
        mode = "normal-approx"
    return DevrResult(prob=prob, n_sites=n, threshold=x, mode=mode)


def gr_prob(a: int, x: int) -> float:
    """Gambler's ruin: P(simple walk from 0 hits +x before -a) = a/(a+x)."""
    if a < 1 or x < 1:
        raise ValueError("a and x must be positive integers")
    return a / (a + x)


def gr_time_bound(a: int, x: int, t: float) -> float:
    """Time-constrained refinement 2a/(a+x) exp(-x^2/12t), valid for
    3 sqrt(t) <= x <= 2t."""
    if a < 1 or x < 1 or t <= 0:
        raise ValueError("a, x must be positive integers and t > 0")
    if not (3.0 * math.sqrt(t) <= x <= 2.0 * t):
        raise ValueError("gr_time_bound requires 3*sqrt(t) <= x <= 2t")
    return 2.0 * a / (a + x) * math.exp(-(x * x) / (12.0 * t))


def srw_max_bound(x: float, t: float) -> float:
    """Moderate-deviation bound P(M_t >= x) <= exp(-x^2/4t), 0 <= x <= 2t."""
    if t <= 0:
        raise ValueError("t must be positive")
    if not 0 <= x <= 2 * t:
        raise ValueError("srw bound valid only for 0 <= x <= 2t")
    return math.exp(-(x * x) / (4.0 * t))


def poisson_jump_bound(k: float, t: float) -> float:
    """P(M_t >= t + k) <= exp(-k^2 / (2(t+k))) for k >= 1."""
    if t <= 0 or k < 1:
        raise ValueError("requires t > 0 and k >= 1")
    return math.exp(-(k * k) / (2.0 * (t + k)))


def local_time_mean_bound(t: float) -> float:
    """E (time at origin in [0, t]) <= sqrt(t) for a rate-1 walk."""
    if t <= 0:
        raise ValueError("t must be positive")
    return math.sqrt(t)


def origin_visit_bound(k: float, t: float, c: float) -> float:
    """Sequential-release visit bound shape C k^-1/2 exp(-k^2/12t); C is a
    fit parameter reported by callers, never asserted."""
    if k <= 0 or t <= 0:
        raise ValueError("k and t must be positive")
    return c * k**-0.5 * math.exp(-(k * k) / (12.0 * t))


def rw_bounds(t: float) -> dict:
    """Record of the bound evaluators at horizon t (callables where a
    second argument is needed)."""
    return {
        "t": t,
        "local_time": local_time_mean_bound(t),
        "srw_max": lambda x: srw_max_bound(x, t),
        "poisson_jump": lambda k: poisson_jump_bound(k, t),
        "origin_visit": lambda k, c=1.0: origin_visit_bound(k, t, c),
    }


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    stderr: float
    r_squared: float
    n_points: int
    x_range: tuple

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "x_range": list(self.x_range),
        }


def _ols(x: np.ndarray, y: np.ndarray) -> FitResult:
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 points to fit")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    rss = float(np.sum(resid**2))
    tss = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if tss == 0 else 1.0 - rss / tss
    stderr = math.sqrt(rss / (n - 2) / sxx) if n > 2 else 0.0
    return FitResult(exponent=slope, intercept=intercept, stderr=stderr,
                     r_squared=r2, n_points=n,
                     x_range=(float(x.min()), float(x.max())))


def fit_power(series) -> FitResult:
    """log-log OLS: value ~ C t^exponent, for strictly positive data."""
    t = np.asarray([s[0] for s in series], dtype=float)
    v = np.asarray([s[1] for s in series], dtype=float)
    if np.any(t <= 0) or np.any(v <= 0):
        raise ValueError("power-law fit needs strictly positive data")
    return _ols(np.log(t), np.log(v))


def fit_log(series) -> FitResult:
    """Semi-log OLS: value ~ a + slope * log(n)."""
    n = np.asarray([s[0] for s in series], dtype=float)
    v = np.asarray([s[1] for s in series], dtype=float)
    if np.any(n <= 0):
        raise ValueError("log fit needs positive abscissae")
    return _ols(np.log(n), v)
