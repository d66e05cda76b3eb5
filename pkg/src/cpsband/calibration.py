"""Inclusion-probability calibration for fixed-size unequal-probability designs.

Covers three distinct conversions:

* size variable -> clipped proportional-to-size inclusion probabilities
  with an exact expected-sample-size constraint;
* independent-Bernoulli parameters -> the exact first-order inclusion
  probabilities of the size-conditioned (fixed n) design;
* the inverse of that map, recovering the canonical Bernoulli
  parameters (sum p = n) that induce given fixed-size inclusion
  probabilities.

Plus the scalar helpers used by the large-sample covariance formulas:
the weight-truncation constant and the truncated weight itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .esp import prefix_table, suffix_table

__all__ = [
    "PopulationFrame",
    "InclusionProbabilities",
    "CanonicalPoissonParams",
    "CalibrationError",
    "canonicalize_poisson",
    "pips_probabilities",
    "cps_inclusion_from_poisson",
    "poisson_from_cps_inclusion",
    "solve_truncation_constant",
    "truncated_weight",
    "poisson_size_variance",
]

SUM_TOL = 1e-9


class CalibrationError(ValueError):
    """Raised when a calibration problem is infeasible or fails to converge."""


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PopulationFrame:
    """Study values y and strictly positive auxiliary sizes x for N units."""

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen_array(self.y))
        object.__setattr__(self, "x", _frozen_array(self.x))
        if self.y.ndim != 1 or self.x.ndim != 1:
            raise ValueError("y and x must be 1-d arrays")
        if self.y.shape != self.x.shape:
            raise ValueError("y and x must have equal length")
        if self.size < 1:
            raise ValueError("population must contain at least one unit")
        if not np.all(np.isfinite(self.y)) or not np.all(np.isfinite(self.x)):
            raise ValueError("population values must be finite")
        if np.any(self.x <= 0):
            raise ValueError("every auxiliary size must be strictly positive")

    @property
    def size(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class InclusionProbabilities:
    """First-order inclusion probabilities of a fixed-size design.

    Entries lie in (0, 1] and sum to the target sample size n.
    """

    pi: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "pi", _frozen_array(self.pi))
        if self.pi.ndim != 1:
            raise ValueError("pi must be a 1-d array")
        if not 1 <= self.n <= self.pi.shape[0]:
            raise CalibrationError("n must lie in [1, N]")
        if np.any(self.pi <= 0) or np.any(self.pi > 1):
            raise CalibrationError("inclusion probabilities must lie in (0, 1]")
        if abs(float(self.pi.sum()) - self.n) > SUM_TOL:
            raise CalibrationError("inclusion probabilities must sum to n")

    @property
    def size(self) -> int:
        return self.pi.shape[0]


@dataclass(frozen=True)
class CanonicalPoissonParams:
    """Bernoulli parameters of the canonical independent design, sum p = n.

    Units with p_i = 1 are deterministic inclusions.
    """

    p: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen_array(self.p))
        if self.p.ndim != 1:
            raise ValueError("p must be a 1-d array")
        if not 1 <= self.n <= self.p.shape[0]:
            raise CalibrationError("n must lie in [1, N]")
        if np.any(self.p <= 0) or np.any(self.p > 1):
            raise CalibrationError("parameters must lie in (0, 1]")
        if abs(float(self.p.sum()) - self.n) > SUM_TOL:
            raise CalibrationError("parameters must sum to n")

    @property
    def size(self) -> int:
        return self.p.shape[0]

    @property
    def odds(self) -> np.ndarray:
        # Certain units (p = 1) get infinite odds without a warning.
        with np.errstate(divide="ignore"):
            return self.p / (1.0 - self.p)


def pips_probabilities(x: np.ndarray, n: int) -> InclusionProbabilities:
    """Clipped proportional-to-size probabilities pi_i = min(c x_i / sum x, 1)
    with the constant c solved so that sum pi = n.

    The constraint function is continuous, piecewise linear and
    nondecreasing in c, so plain bisection is robust to the kinks the
    clipping introduces.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1-d array")
    n_units = x.shape[0]
    if not 1 <= n <= n_units:
        raise CalibrationError(f"n = {n} outside [1, {n_units}]")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise CalibrationError("auxiliary sizes must be finite and positive")
    if n == n_units:
        return InclusionProbabilities(pi=np.ones(n_units), n=n)

    shares = x / x.sum()

    def expected_size(c: float) -> float:
        return float(np.minimum(c * shares, 1.0).sum())

    lo, hi = 0.0, n / shares.min()
    c = hi
    for _ in range(200):
        c = 0.5 * (lo + hi)
        value = expected_size(c)
        if abs(value - n) <= 1e-12:
            break
        if value < n:
            lo = c
        else:
            hi = c
    pi = np.minimum(c * shares, 1.0)
    # The bisection residual is below 1e-12; spread it over the unclipped
    # units so the reported probabilities sum to n exactly.
    free = pi < 1.0
    pi[free] += (n - pi.sum()) / free.sum()
    return InclusionProbabilities(pi=pi, n=n)


def _cps_first_order_raw(p: np.ndarray, n: int) -> np.ndarray:
    """Exact first-order inclusion probabilities of the size-n conditioned
    design with Bernoulli parameters p; handles p_i in {0, 1} by reduction."""
    p = np.asarray(p, dtype=float)
    n_units = p.shape[0]
    if np.any(p < 0) or np.any(p > 1):
        raise CalibrationError("parameters must lie in [0, 1]")
    fixed_in = p == 1.0
    fixed_out = p == 0.0
    n_fixed = int(fixed_in.sum())
    if n < n_fixed:
        raise CalibrationError(
            f"sample size {n} is smaller than the {n_fixed} deterministic inclusions"
        )
    free = ~(fixed_in | fixed_out)
    m = n - n_fixed
    pi = np.zeros(n_units)
    pi[fixed_in] = 1.0
    if m == 0:
        return pi
    p_free = p[free]
    if m > p_free.shape[0]:
        raise CalibrationError("sample size exceeds the number of selectable units")
    if m == p_free.shape[0]:
        pi[free] = 1.0
        return pi
    odds = p_free / (1.0 - p_free)
    suf = suffix_table(odds, m)
    pre = prefix_table(odds, m - 1)
    # e_{m-1}(odds without i) = sum_k e_k(odds[:i]) * e_{m-1-k}(odds[i+1:]),
    # an addition-only split at position i.
    k_count = pre.value.shape[0]
    numerator = np.zeros(p_free.shape[0])
    for k in range(k_count):
        r = m - 1 - k
        if r < 0:
            break
        numerator += pre.value[k, :-1] * suf.value[r, 1:]
    shift = (pre.exponent[:-1] + suf.exponent[1:] - suf.exponent[0]).astype(np.int32)
    pi_free = np.ldexp(odds * (numerator / suf.value[m, 0]), shift)
    pi[free] = np.minimum(pi_free, 1.0)
    return pi


def cps_inclusion_from_poisson(params: CanonicalPoissonParams) -> InclusionProbabilities:
    """Exact first-order inclusion probabilities of the fixed-size design
    induced by conditioning the independent design on sample size n."""
    pi = _cps_first_order_raw(params.p, params.n)
    total = float(pi.sum())
    if abs(total - params.n) > SUM_TOL:
        raise CalibrationError(
            f"first-order probabilities sum to {total:.12g}, expected {params.n}"
        )
    return InclusionProbabilities(pi=pi, n=params.n)


def _renormalize_logodds(logit_p: np.ndarray, n: int) -> np.ndarray:
    """Shift log-odds by a common constant so the probabilities sum to n.

    A common shift stays inside the odds-equivalence class of the
    fixed-size design, so this is exactly the canonical representative.
    """

    def total(shift: float) -> float:
        return float(_expit(logit_p + shift).sum())

    lo, hi = -1.0, 1.0
    while total(lo) > n:
        lo *= 2.0
        if lo < -1e6:
            raise CalibrationError("log-odds renormalization failed to bracket")
    while total(hi) < n:
        hi *= 2.0
        if hi > 1e6:
            raise CalibrationError("log-odds renormalization failed to bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) < n:
            lo = mid
        else:
            hi = mid
    return logit_p + 0.5 * (lo + hi)


def _expit(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logit(q: np.ndarray) -> np.ndarray:
    return np.log(q) - np.log1p(-q)


def poisson_from_cps_inclusion(
    incl: InclusionProbabilities,
    *,
    damping: float = 0.8,
    max_iter: int = 500,
    tol: float = 1e-12,
) -> CanonicalPoissonParams:
    """Recover the canonical Bernoulli parameters (sum p = n) whose
    size-conditioned design has the given first-order probabilities.

    Damped fixed-point iteration on log-odds: each step moves the
    current log-odds by ``damping`` times the log-odds mismatch between
    target and achieved probabilities, then renormalizes to sum p = n.
    """
    pi = incl.pi
    n = incl.n
    n_units = incl.size
    deterministic = pi == 1.0
    free = ~deterministic
    m = n - int(deterministic.sum())
    p = np.ones(n_units)
    if m == 0:
        if free.any():
            raise CalibrationError("no free sample slots for the non-deterministic units")
        return CanonicalPoissonParams(p=p, n=n)
    pi_free = pi[free]
    if m == pi_free.shape[0]:
        return CanonicalPoissonParams(p=p, n=n)

    target_logit = _logit(pi_free)
    logit_p = _renormalize_logodds(target_logit.copy(), m)
    residual = np.inf
    for _ in range(max_iter):
        p_free = _expit(logit_p)
        achieved = _cps_first_order_raw(p_free, m)
        residual = float(np.max(np.abs(achieved - pi_free)))
        if residual <= tol:
            break
        logit_p = logit_p + damping * (target_logit - _logit(achieved))
        logit_p = _renormalize_logodds(logit_p, m)
    else:
        raise CalibrationError(
            f"parameter recovery did not converge within {max_iter} iterations "
            f"(residual {residual:.3e})"
        )
    p[free] = _expit(logit_p)
    # Exact canonical sum within the dataclass tolerance.
    return CanonicalPoissonParams(p=p, n=n)


def canonicalize_poisson(p, n: int) -> CanonicalPoissonParams:
    """The odds-equivalent representative whose parameters sum to n.

    Conditioning two independent designs on the same size yields the
    same fixed-size law whenever their odds are proportional, so any
    parameter vector can be traded for the one representative with
    sum p = n by a common log-odds shift.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise CalibrationError("p must be a 1-d array")
    if np.any(p <= 0) or np.any(p > 1):
        raise CalibrationError("p must lie in (0, 1]")
    out = np.ones(p.shape[0])
    free = p < 1.0
    count = int(free.sum())
    m = n - (p.shape[0] - count)
    if m < 0:
        raise CalibrationError("more deterministic units than sample slots")
    if count and m == 0:
        raise CalibrationError(
            "size-n law excludes every non-deterministic unit; "
            "no positive-parameter representative exists"
        )
    if 0 < m < count:
        out[free] = _expit(_renormalize_logodds(_logit(p[free]), m))
    return CanonicalPoissonParams(p=out, n=n)


def solve_truncation_constant(alpha: float, w_samples: np.ndarray) -> float:
    """The unique positive constant theta with
    mean_i min(theta * w_i / mean(w), 1) = alpha.

    The left side is continuous and nondecreasing in theta, so bisection
    on [0, mean(w)/min(w)] converges to the unique root.
    """
    if not 0.0 < alpha < 1.0:
        raise CalibrationError("alpha must lie in (0, 1)")
    w = np.asarray(w_samples, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise CalibrationError("w_samples must be a nonempty 1-d array")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise CalibrationError("weights must be finite and positive")
    mean_w = float(w.mean())
    scaled = w / mean_w

    def coverage(theta: float) -> float:
        return float(np.minimum(theta * scaled, 1.0).mean())

    lo, hi = 0.0, mean_w / float(w.min()) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        value = coverage(mid)
        if abs(value - alpha) <= 1e-10:
            return mid
        if value < alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def truncated_weight(w, theta: float, mean_w: float):
    """Cap weights at mean_w / theta: min(w, mean_w / theta)."""
    if theta <= 0 or mean_w <= 0:
        raise CalibrationError("theta and mean_w must be positive")
    return np.minimum(w, mean_w / theta)


def poisson_size_variance(params: CanonicalPoissonParams) -> float:
    """Variance of the random sample size of the independent design:
    sum p_i (1 - p_i)."""
    return float(np.sum(params.p * (1.0 - params.p)))
