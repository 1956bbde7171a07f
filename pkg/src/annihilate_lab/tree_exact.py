"""Exact probability-mass-function calculus for the tree recursion.

The number of root visits on the depth-n directed tree satisfies a
recursive distributional equation: the next level's law is obtained by
adding an independent +/-1 particle mark, taking the positive part,
thinning by 1/d, and summing d independent branches.  Everything here
is computed exactly in float64 on finite supports, with truncated tail
mass tracked explicitly and folded into every comparison tolerance, so
inequality checks remain one-sided sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

MASS_TOL = 1e-12         # total-mass conservation tolerance
ZERO_CLIP = 1e-15        # below this a pmf entry counts as zero

# Upper-tail mass dropped after each recursion step.  Dropped mass
# compounds by a factor d per level (each of the d branches misses it
# independently), so the per-step trim must sit far below the published
# budget: 2^512 * 1e-200 ~ 1e-46.  float64 holds the resulting supports
# (~200 atoms) comfortably.
STEP_TAIL_EPS = 1e-200


@dataclass(frozen=True, eq=False)
class Pmf:
    """Finite-support pmf on {0, 1, ..., K} with tracked truncated tail.

    mass[k] = P(X = k); dropped_tail accumulates all mass ever trimmed
    from the upper tail.  Mass is never renormalized after trimming.
    """

    mass: np.ndarray
    dropped_tail: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=np.float64)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("pmf mass must be a nonempty 1-d array")
        if np.any(m < -1e-15):
            raise ValueError("pmf mass must be nonnegative")
        if self.dropped_tail < 0:
            raise ValueError("dropped tail must be nonnegative")
        total = float(m.sum()) + self.dropped_tail
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pmf mass + dropped tail = {total}, not 1")
        object.__setattr__(self, "mass", m)

    @classmethod
    def delta(cls, k: int) -> "Pmf":
        m = np.zeros(k + 1)
        m[k] = 1.0
        return cls(m)

    @classmethod
    def from_probs(cls, probs, dropped_tail: float = 0.0) -> "Pmf":
        return cls(np.asarray(probs, dtype=np.float64), dropped_tail)

    @classmethod
    def binomial(cls, n: int, q: float) -> "Pmf":
        return cls(binom.pmf(np.arange(n + 1), n, q))

    @property
    def support_bound(self) -> int:
        return self.mass.size - 1

    def total(self) -> float:
        return float(self.mass.sum())

    def mean(self) -> float:
        return float(np.dot(np.arange(self.mass.size), self.mass))

    def zero_mass(self) -> float:
        return float(self.mass[0])

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def allclose(self, other: "Pmf", tol: float = 1e-12) -> bool:
        n = max(self.mass.size, other.mass.size)
        a = np.zeros(n)
        b = np.zeros(n)
        a[: self.mass.size] = self.mass
        b[: other.mass.size] = other.mass
        return bool(np.all(np.abs(a - b) <= tol))


def _trimmed(mass: np.ndarray, dropped: float, eps_step: float) -> Pmf:
    """Drop upper-tail mass below eps_step (cumulative from the top), then
    pin the kept mass to total exactly 1 - dropped.

    The pinning corrects pure float drift (relative O(1e-16) per step),
    which would otherwise compound geometrically through the d-fold
    self-convolutions.  Dropped tail mass itself is never redistributed.
    """
    mass = np.maximum(mass, 0.0)
    tail = np.cumsum(mass[::-1])[::-1]
    keep = np.nonzero(tail > eps_step)[0]
    if keep.size == 0:
        cut = 1
    else:
        cut = keep[-1] + 1
    extra = float(mass[cut:].sum())
    kept = mass[:cut].copy()
    dropped = dropped + extra
    s = float(kept.sum())
    if s > 0.0:
        scale = (1.0 - dropped) / s
        if abs(scale - 1.0) > 1e-9:
            raise RuntimeError(f"mass drift too large to pin: scale {scale}")
        kept *= scale
    return Pmf(kept, dropped)


def pmf_step_plus(x: Pmf, p: float) -> Pmf:
    """Law of (X + Y)^+ with Y = +1 w.p. p, -1 w.p. 1-p, independent."""
    m = x.mass
    out = np.zeros(m.size + 1)
    out[1:] += p * m
    out[:-2] += (1 - p) * m[1:]
    out[0] += (1 - p) * m[0]
    return Pmf(out, x.dropped_tail)


def pmf_thin(x: Pmf, q: float) -> Pmf:
    """Law of Bin(X, q): mass'(k) = sum_n C(n,k) q^k (1-q)^(n-k) mass(n)."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("thinning probability must lie in [0, 1]")
    n = x.mass.size
    ks = np.arange(n)[:, None]
    ns = np.arange(n)[None, :]
    weights = binom.pmf(ks, ns, q)  # zero where k > n
    return Pmf(weights @ x.mass, x.dropped_tail)


def pmf_convolve(x: Pmf, y: Pmf) -> Pmf:
    """Law of X + Y for independent X, Y; dropped tails add."""
    return Pmf(np.convolve(x.mass, y.mass), x.dropped_tail + y.dropped_tail)


def pmf_convolve_power(x: Pmf, d: int) -> Pmf:
    """d-fold convolution via repeated squaring: O(log d) convolutions."""
    if d < 1:
        raise ValueError("convolution power must be >= 1")
    result = None
    base = x
    k = d
    while k:
        if k & 1:
            result = base if result is None else pmf_convolve(result, base)
        k >>= 1
        if k:
            base = pmf_convolve(base, base)
    return result


def pmf_shift(x: Pmf, by: int) -> Pmf:
    """Law of X + by (by may be negative if no mass is displaced below 0)."""
    if by >= 0:
        return Pmf(np.concatenate([np.zeros(by), x.mass]), x.dropped_tail)
    if np.any(x.mass[:(-by)] > ZERO_CLIP):
        raise ValueError("negative shift would push mass below zero")
    return Pmf(x.mass[-by:].copy(), x.dropped_tail)


def apply_A(x: Pmf, d: int, p: float, eps_step: float = STEP_TAIL_EPS) -> Pmf:
    """One recursion step: d-fold sum of Bin((X_i + Y_i)^+, 1/d)."""
    if d < 2:
        raise ValueError("branching d must be >= 2")
    branch = pmf_thin(pmf_step_plus(x, p), 1.0 / d)
    return _trimmed(*_unpack(pmf_convolve_power(branch, d)), eps_step)


def _unpack(x: Pmf):
    return x.mass, x.dropped_tail


def condition_positive(x: Pmf) -> Pmf:
    """Law of X | X > 0."""
    z = x.zero_mass()
    if z >= 1.0 - 1e-15:
        raise ValueError("cannot condition a point mass at zero on positivity")
    m = x.mass.copy()
    m[0] = 0.0
    scale = 1.0 - z
    return Pmf(m / scale, x.dropped_tail / scale)


def size_bias(x: Pmf) -> Pmf:
    """Size-bias transform: mass'(k) = k mass(k) / E X.

    Tail bookkeeping: trimmed mass sits just above the support cut in
    every use here, so its size-biased weight is charged at (K+1)/mean.
    """
    mu = x.mean()
    if mu <= 0:
        raise ValueError("size-bias transform requires positive mean")
    m = np.arange(x.mass.size) * x.mass / mu
    slack = max(0.0, 1.0 - float(m.sum()))
    dropped = slack + x.dropped_tail * x.mass.size / mu
    return Pmf(m, dropped)


def is_log_concave(x: Pmf, tol: float = 1e-12) -> bool:
    """P_n^2 >= P_{n-1} P_{n+1} for n >= 1 and no internal zeros."""
    m = np.where(x.mass < ZERO_CLIP, 0.0, x.mass)
    pos = np.nonzero(m)[0]
    if pos.size == 0:
        return False
    if np.any(m[pos[0]: pos[-1] + 1] == 0.0):
        return False
    mid = m[1:-1]
    prod = m[:-2] * m[2:]
    return bool(np.all(mid * mid >= prod * (1.0 - tol)))


def lr_dominates(x: Pmf, y: Pmf) -> bool:
    """True iff x is dominated by y in the likelihood-ratio order:
    P(Y=k)/P(X=k) increasing over the union of supports (inf where
    x has no mass, and never dropping back to a finite value)."""
    n = max(x.mass.size, y.mass.size)
    a = np.zeros(n)
    b = np.zeros(n)
    a[: x.mass.size] = np.where(x.mass < ZERO_CLIP, 0.0, x.mass)
    b[: y.mass.size] = np.where(y.mass < ZERO_CLIP, 0.0, y.mass)
    last_ratio = -math.inf
    seen_inf = False
    for k in range(n):
        if a[k] == 0.0 and b[k] == 0.0:
            continue
        if a[k] == 0.0:
            seen_inf = True
            continue
        # Finite ratio here; any finite value after an infinite one is a drop.
        if seen_inf:
            return False
        ratio = b[k] / a[k]
        if ratio < last_ratio * (1.0 - 1e-12):
            return False
        last_ratio = ratio
    return True


def st_dominates(x: Pmf, y: Pmf) -> bool:
    """True iff x is dominated by y in the usual stochastic order:
    CDF of x >= CDF of y pointwise, within the summed dropped tails."""
    tol = x.dropped_tail + y.dropped_tail + 1e-12
    n = max(x.mass.size, y.mass.size)
    cx = np.ones(n)
    cy = np.ones(n)
    cx[: x.mass.size] = x.cdf()
    cx[x.mass.size:] = cx[x.mass.size - 1]
    cy[: y.mass.size] = y.cdf()
    cy[y.mass.size:] = cy[y.mass.size - 1]
    return bool(np.all(cx >= cy - tol))


@dataclass
class RecursionSeries:
    """Exact laws of the visit-count recursion for n = 0 .. n_max."""

    d: int
    p: float
    kind: str                 # "W" (starts at delta_0) or "U" (delta_1, conditioned)
    pmfs: list = field(default_factory=list)

    @property
    def means(self) -> np.ndarray:
        return np.array([x.mean() for x in self.pmfs])

    @property
    def zero_mass(self) -> np.ndarray:
        return np.array([x.zero_mass() for x in self.pmfs])

    @property
    def dropped(self) -> np.ndarray:
        return np.array([x.dropped_tail for x in self.pmfs])


def w_sequence(d: int, p: float, n_max: int, eps: float = 1e-9,
               eps_step: float = STEP_TAIL_EPS) -> RecursionSeries:
    """Iterate the recursion from W_0 = delta_0 (root-visit counts)."""
    return _iterate(Pmf.delta(0), "W", d, p, n_max, eps, eps_step,
                    condition=False)


def u_sequence(d: int, p: float, n_max: int, eps: float = 1e-9,
               eps_step: float = STEP_TAIL_EPS) -> RecursionSeries:
    """Iterate the dominating sequence from U_0 = delta_1, conditioning
    each iterate on positivity before applying the recursion step."""
    return _iterate(Pmf.delta(1), "U", d, p, n_max, eps, eps_step,
                    condition=True)


def _iterate(start, kind, d, p, n_max, eps, eps_step, condition):
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    series = RecursionSeries(d=d, p=p, kind=kind, pmfs=[start])
    budget = eps * n_max
    cur = start
    for _ in range(n_max):
        src = condition_positive(cur) if condition else cur
        cur = apply_A(src, d, p, eps_step)
        if cur.dropped_tail > budget:
            raise RuntimeError(
                f"tail budget exceeded: dropped {cur.dropped_tail:.3e} "
                f"> {budget:.3e}; lower eps_step or raise eps")
        series.pmfs.append(cur)
    return series


def sb_coupling_q(d: int = 2, terms: int = 200) -> float:
    """The coupling constant q = prod_{i>=1} (1 - d^{-i})^2, converged to
    machine precision (the i-th factor differs from 1 by d^-i)."""
    q = 1.0
    for i in range(1, terms + 1):
        q *= (1.0 - d ** (-float(i))) ** 2
    return q


@dataclass
class SbCouplingReport:
    n: int
    dominates: bool
    q: float
    counterexample: tuple | None  # (k, cdf_biased, cdf_bound) at first failure


def check_sb_coupling_bound(series: RecursionSeries, n: int) -> SbCouplingReport:
    """Exact check that the size-biased U_n is stochastically dominated by
    1 + sum_{i=1..n} Bin(2, d^-i) + U_n (independent sum)."""
    if series.kind != "U":
        raise ValueError("size-bias coupling bound applies to the U-sequence")
    if series.p < 4.0 / 9.0 - 1e-12:
        raise ValueError("the coupling bound requires p >= 4/9")
    un = series.pmfs[n]
    bound = Pmf.delta(1)
    for i in range(1, n + 1):
        bound = pmf_convolve(bound, Pmf.binomial(2, series.d ** (-float(i))))
    bound = pmf_convolve(bound, un)
    biased = size_bias(un)
    ok = st_dominates(biased, bound)
    counter = None
    if not ok:
        tol = biased.dropped_tail + bound.dropped_tail + 1e-12
        m = max(biased.mass.size, bound.mass.size)
        cb = np.ones(m)
        cb[: biased.mass.size] = biased.cdf()
        cb[biased.mass.size:] = cb[biased.mass.size - 1]
        cd = np.ones(m)
        cd[: bound.mass.size] = bound.cdf()
        cd[bound.mass.size:] = cd[bound.mass.size - 1]
        bad = np.nonzero(cb < cd - tol)[0]
        k = int(bad[0])
        counter = (k, float(cb[k]), float(cd[k]))
    return SbCouplingReport(n=n, dominates=ok, q=sb_coupling_q(2), counterexample=counter)


def concentration_lower_tail_bound(mean: float, c: float, pq: float, x: float):
    """Lower-tail bounds from a (c, pq)-bounded size-bias coupling:
    exp(-(pq*mean/c) h(-x/(pq*mean))) and the quadratic relaxation
    exp(-x^2 / (2 pq c mean)), with h(y) = (1+y)log(1+y) - y."""
    if mean <= 0 or c <= 0 or not 0 < pq <= 1:
        raise ValueError("mean, c must be positive and pq a probability")
    pmu = pq * mean
    if not 0 <= x <= pmu + 1e-12:
        raise ValueError("x must lie in [0, pq*mean]")
    y = -min(x / pmu, 1.0)
    if y <= -1.0:
        h = 1.0  # limit of (1+y)log(1+y) - y at y = -1
    else:
        h = (1.0 + y) * math.log1p(y) - y
    exact = math.exp(-(pmu / c) * h)
    quadratic = math.exp(-(x * x) / (2.0 * pq * c * mean))
    return exact, quadratic


@dataclass
class AnticoncentrationReport:
    holds: bool
    counterexample_n: int | None
    margins: np.ndarray  # P(W_{n+1}=0) - 4^{-E W_n - 1} per n


def check_anticoncentration(series: RecursionSeries, slack: float = 1e-9) -> AnticoncentrationReport:
    """Exact check of P(W_{n+1} = 0) >= 4^{-E W_n - 1} along the series."""
    if series.kind != "W":
        raise ValueError("anticoncentration applies to the W-sequence")
    if series.p > 0.5 + 1e-12:
        raise ValueError("anticoncentration requires p <= 1/2")
    means = series.means
    zeros = series.zero_mass
    margins = zeros[1:] - 4.0 ** (-means[:-1] - 1.0)
    bad = np.nonzero(margins < -slack)[0]
    if bad.size:
        return AnticoncentrationReport(False, int(bad[0]), margins)
    return AnticoncentrationReport(True, None, margins)


def recursion_upper_iterate(q: float, mu0: float, n_max: int, eps: float = 0.0):
    """Iterate mu_{n+1} = mu_n / (1 - exp(-q mu_n)) - 2 eps and report the
    sequence plus sup_{10 <= n <= n_max} mu_n / log n."""
    if q <= 0 or mu0 <= 0:
        raise ValueError("q and mu0 must be positive")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    mus = np.empty(n_max + 1)
    mus[0] = mu0
    for n in range(n_max):
        m = mus[n]
        mus[n + 1] = m / -math.expm1(-q * m) - 2.0 * eps
        if mus[n + 1] <= 0:
            raise RuntimeError("iteration left the positive domain")
    lo = max(2, min(10, n_max))
    ns = np.arange(lo, n_max + 1)
    sup_ratio = float(np.max(mus[lo:] / np.log(ns)))
    return mus, sup_ratio


def subcritical_fixed_point(q: float, eps: float, tol: float = 1e-12) -> float:
    """Unique fixed point of phi(x) = x/(1 - exp(-qx)) - 2 eps, found by
    bisection on phi(x) - x, which is strictly decreasing."""
    if q <= 0:
        raise ValueError("q must be positive")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")

    def g(x: float) -> float:
        return x / -math.expm1(-q * x) - 2.0 * eps - x

    lo = 1e-12
    if g(lo) <= 0:
        raise RuntimeError("no bracket: phi - id not positive near 0 "
                           "(eps outside the monotone regime)")
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("no bracket: phi - id stayed positive")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
