"""Covariance estimation, sup-norm quantiles, and confidence bands.

The band pipeline estimates the limit covariance of the chosen
empirical process on the sampled thresholds, factorizes it, simulates
Gaussian sup norms through the factor, and turns the simulated quantile
into a uniform band of half-width q_hat / sqrt(N) around the estimated
CDF.  Both process variants share the same Gaussian draws when handed
the same stream, which keeps their quantiles comparable replication by
replication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple

import numpy as np

from .calibration import (
    InclusionProbabilities,
    PopulationFrame,
    _frozen_array,
)
from .samplers import RngStream, SampleIndicators

__all__ = [
    "CholeskyFactor",
    "ConfidenceBand",
    "CovarianceEstimate",
    "LimitCovariance",
    "QuantileEstimate",
    "build_band",
    "cholesky_psd",
    "coverage_check",
    "estimate_cov_hajek",
    "estimate_cov_ht",
    "limit_cov_hajek",
    "limit_cov_ht",
    "simulate_sup_quantile",
]

# A population model draws (y, x) pairs; see sim harness for the
# reference implementation.
PopulationModel = Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class CovarianceEstimate:
    """Estimated covariance of a process on sampled thresholds."""

    matrix: np.ndarray
    kind: Literal["HT", "HAJEK"]
    thresholds: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        thr = np.asarray(self.thresholds, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if thr.shape != (m.shape[0],):
            raise ValueError("one threshold per matrix row is required")
        if np.abs(m - m.T).max(initial=0.0) > 1e-12:
            raise ValueError("matrix must be symmetric")
        object.__setattr__(self, "matrix", _frozen_array(m, float))
        object.__setattr__(self, "thresholds", _frozen_array(thr, float))

    @property
    def order(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class QuantileEstimate:
    """Simulated gamma-quantile of a Gaussian sup norm."""

    gamma: float
    q_hat: float
    mc_draws: int

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.q_hat < 0.0:
            raise ValueError("quantile must be nonnegative")
        if self.mc_draws < 1:
            raise ValueError("mc_draws must be positive")


@dataclass(frozen=True)
class ConfidenceBand:
    """Uniform band center ± halfwidth at confidence level gamma."""

    center: np.ndarray
    halfwidth: float
    gamma: float

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=float)
        if center.ndim != 1:
            raise ValueError("center must be a 1-d array")
        if self.halfwidth < 0.0:
            raise ValueError("halfwidth must be nonnegative")
        object.__setattr__(self, "center", _frozen_array(center, float))

    @property
    def width(self) -> float:
        return 2.0 * self.halfwidth

    @property
    def lower(self) -> np.ndarray:
        """Lower band edge clipped to [0, 1] for display."""
        return np.clip(self.center - self.halfwidth, 0.0, 1.0)

    @property
    def upper(self) -> np.ndarray:
        """Upper band edge clipped to [0, 1] for display."""
        return np.clip(self.center + self.halfwidth, 0.0, 1.0)


def _z_scores(
    pop: PopulationFrame,
    pi: InclusionProbabilities,
    s: SampleIndicators,
    thresholds: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Z_{k,r} = I(Y_k <= t_r) − π_k · (HT slope estimate at t_r), for the
    sampled units k only, plus their per-unit quadratic weights."""
    thr = np.asarray(thresholds, dtype=float)
    if thr.ndim != 1 or thr.shape[0] < 1:
        raise ValueError("thresholds must be a nonempty 1-d array")
    d_n = float((pi.pi * (1.0 - pi.pi)).sum())
    if d_n == 0.0:
        raise ValueError("design has zero size variance; no covariance to estimate")
    sampled = np.flatnonzero(s.s == 1)
    pi_s = pi.pi[sampled]
    ind = pop.y[sampled, None] <= thr[None, :]
    slope = ((1.0 - pi_s) / pi_s) @ ind / d_n
    z = ind - pi_s[:, None] * slope[None, :]
    weight = (1.0 - pi_s) / pi_s**2
    return z, weight


def estimate_cov_ht(
    pop: PopulationFrame,
    pi: InclusionProbabilities,
    s: SampleIndicators,
    sampled_thresholds: np.ndarray,
) -> CovarianceEstimate:
    """Plug-in covariance of the Horvitz-Thompson process on the sampled
    thresholds: N^{-1} Σ_k s_k ((1−π_k)/π_k²) Z_{k,r} Z_{k,c}."""
    z, weight = _z_scores(pop, pi, s, sampled_thresholds)
    matrix = (z * weight[:, None]).T @ z / pop.size
    matrix = (matrix + matrix.T) / 2.0
    return CovarianceEstimate(matrix=matrix, kind="HT", thresholds=sampled_thresholds)


def estimate_cov_hajek(
    pop: PopulationFrame,
    pi: InclusionProbabilities,
    s: SampleIndicators,
    sampled_thresholds: np.ndarray,
) -> CovarianceEstimate:
    """As estimate_cov_ht but with the Z scores centered at their
    HT-weighted mean and normalization by N̂ = Σ s_k/π_k."""
    z, weight = _z_scores(pop, pi, s, sampled_thresholds)
    sampled = np.flatnonzero(s.s == 1)
    inv_pi = 1.0 / pi.pi[sampled]
    n_hat = float(inv_pi.sum())
    if n_hat == 0.0:
        raise ValueError("estimated population size is zero (empty sample)")
    z_bar = inv_pi @ z / n_hat
    centered = z - z_bar[None, :]
    matrix = (centered * weight[:, None]).T @ centered / n_hat
    matrix = (matrix + matrix.T) / 2.0
    return CovarianceEstimate(
        matrix=matrix, kind="HAJEK", thresholds=sampled_thresholds
    )


class LimitCovariance(NamedTuple):
    value: float
    stderr: float


def _kappa(x: np.ndarray, theta: float) -> np.ndarray:
    """Limit inclusion fraction κ(X) = θ·min(w, E w/θ)/E w with w = X."""
    mean_w = float(x.mean())
    w_theta = np.minimum(x, mean_w / theta)
    return theta * w_theta / mean_w


def _sigma_prime_terms(
    f_vals: np.ndarray, g_vals: np.ndarray, kappa: np.ndarray
) -> np.ndarray:
    """Per-draw integrands of the limit covariance of the HT process."""
    weight = (1.0 - kappa) / kappa
    denom = float((kappa * (1.0 - kappa)).mean())
    r_f = float((f_vals * (1.0 - kappa)).mean()) / denom
    r_g = float((g_vals * (1.0 - kappa)).mean()) / denom
    return weight * (f_vals - r_f * kappa) * (g_vals - r_g * kappa)


def limit_cov_ht(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    model: PopulationModel,
    theta: float,
    mc_n: int,
    rng: RngStream,
) -> LimitCovariance:
    """Monte Carlo estimate of the analytic limit covariance of the
    Horvitz-Thompson process at functions f and g:
    E[((1−κ)/κ)(f(Y) − R(f)κ)(g(Y) − R(g)κ)]."""
    if mc_n < 10_000:
        raise ValueError("mc_n must be at least 10^4")
    gen = rng.generator()
    y, x = model(gen, mc_n)
    kappa = _kappa(x, theta)
    terms = _sigma_prime_terms(f(y), g(y), kappa)
    return LimitCovariance(
        value=float(terms.mean()),
        stderr=float(terms.std(ddof=1) / math.sqrt(mc_n)),
    )


def limit_cov_hajek(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    model: PopulationModel,
    theta: float,
    mc_n: int,
    rng: RngStream,
) -> LimitCovariance:
    """Limit covariance of the Hájek process, the four-term correction of
    the Horvitz-Thompson one by the constant function; all four terms
    share one Monte Carlo draw so constants cancel exactly."""
    if mc_n < 10_000:
        raise ValueError("mc_n must be at least 10^4")
    gen = rng.generator()
    y, x = model(gen, mc_n)
    kappa = _kappa(x, theta)
    f_vals, g_vals = f(y), g(y)
    ones = np.ones_like(y, dtype=float)
    mean_f = float(f_vals.mean())
    mean_g = float(g_vals.mean())
    terms = (
        _sigma_prime_terms(f_vals, g_vals, kappa)
        - mean_f * _sigma_prime_terms(ones, g_vals, kappa)
        - mean_g * _sigma_prime_terms(f_vals, ones, kappa)
        + mean_f * mean_g * _sigma_prime_terms(ones, ones, kappa)
    )
    return LimitCovariance(
        value=float(terms.mean()),
        stderr=float(terms.std(ddof=1) / math.sqrt(mc_n)),
    )


class CholeskyFactor(NamedTuple):
    lower: np.ndarray
    jitter: float


def cholesky_psd(m: CovarianceEstimate) -> CholeskyFactor:
    """Lower-triangular L with L Lᵀ = matrix + jitter·I.

    Indicator classes yield exactly rank-deficient estimates whenever
    sampled thresholds tie, so the jitter escalates through
    {0, 1e-12, 1e-10, 1e-8} · trace/r until numpy's factorization
    accepts the matrix.  The jitter actually used is returned.
    """
    matrix = m.matrix
    if not matrix.any():
        return CholeskyFactor(lower=np.zeros_like(matrix), jitter=0.0)
    scale = float(np.trace(matrix)) / m.order
    eye = np.eye(m.order)
    for step in (0.0, 1e-12, 1e-10, 1e-8):
        jitter = step * scale
        try:
            lower = np.linalg.cholesky(matrix + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        return CholeskyFactor(lower=lower, jitter=jitter)
    raise np.linalg.LinAlgError(
        "covariance not factorizable even at the largest jitter"
    )


def simulate_sup_quantile(
    lower: np.ndarray,
    gamma: float,
    b_prime: int,
    rng: RngStream,
) -> QuantileEstimate:
    """Simulated gamma-quantile of max_r |(L Z)_r| over standard normal Z.

    The quantile is the order statistic at index ceil(gamma·B'), which
    never falls below the true empirical quantile.  Draws depend only
    on the stream and the matrix order, so factors of equal size handed
    the same stream see identical Gaussian vectors.
    """
    if b_prime < 100:
        raise ValueError("b_prime must be at least 100")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    lower = np.asarray(lower, dtype=float)
    gen = rng.generator()
    z = gen.standard_normal((b_prime, lower.shape[0]))
    sups = np.abs(z @ lower.T).max(axis=1)
    sups.sort()
    index = math.ceil(gamma * b_prime) - 1
    return QuantileEstimate(gamma=gamma, q_hat=float(sups[index]), mc_draws=b_prime)


def build_band(
    center_values: np.ndarray, q: QuantileEstimate, n_units: int
) -> ConfidenceBand:
    """Uniform band center ± q_hat/sqrt(N) around an estimated CDF."""
    if n_units < 1:
        raise ValueError("population size must be positive")
    return ConfidenceBand(
        center=center_values,
        halfwidth=q.q_hat / math.sqrt(n_units),
        gamma=q.gamma,
    )


def coverage_check(sup_stat: float, q: QuantileEstimate) -> bool:
    """Whether the observed sup statistic stays within the quantile
    (closed inequality, so hitting the bound counts as covered)."""
    return sup_stat <= q.q_hat
