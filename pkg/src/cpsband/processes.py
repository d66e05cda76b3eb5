"""Design-based empirical processes over the CDF indicator class.

All evaluations are step functions of the threshold t that jump only
where the population outcomes sit, so holding the values and the left
limits at each population point captures the entire path.  Sup norms
taken over those two arrays are exact sups over the whole real line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .calibration import (
    CanonicalPoissonParams,
    InclusionProbabilities,
    PopulationFrame,
    _frozen_array,
)
from .samplers import SampleIndicators

__all__ = [
    "ProcessEvaluation",
    "ThresholdGrid",
    "centered_process_evaluate",
    "hajek_evaluate",
    "htep_evaluate",
    "poisson_projection_variance",
    "projection_residual_R",
    "projection_statistic_T",
    "sup_norm_cdf",
]


@dataclass(frozen=True)
class ThresholdGrid:
    """Strictly increasing thresholds t for the indicators I(y <= t)."""

    t: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.shape[0] < 1:
            raise ValueError("grid must be a nonempty 1-d array")
        if not np.all(np.isfinite(t)):
            raise ValueError("grid must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "t", _frozen_array(t, float))

    @classmethod
    def from_population(cls, y: np.ndarray) -> "ThresholdGrid":
        """Deduplicated sorted outcomes; the exact-sup grid for step paths."""
        return cls(t=np.unique(np.asarray(y, dtype=float)))

    @property
    def size(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class ProcessEvaluation:
    """Process values and left limits on a threshold grid."""

    grid: ThresholdGrid
    values: np.ndarray
    values_left: np.ndarray
    kind: Literal["HTEP", "HEP", "CENTERED"]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        left = np.asarray(self.values_left, dtype=float)
        if values.shape != (self.grid.size,) or left.shape != values.shape:
            raise ValueError("evaluation arrays must align with the grid")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(left))):
            raise ValueError("evaluation must be finite")
        object.__setattr__(self, "values", _frozen_array(values, float))
        object.__setattr__(self, "values_left", _frozen_array(left, float))


def _weighted_counts(
    y: np.ndarray, weights: np.ndarray, t: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Σ_i w_i I(y_i <= t) and the strict (< t) version, per threshold."""
    order = np.argsort(y, kind="stable")
    cum = np.concatenate(([0.0], np.cumsum(weights[order])))
    y_sorted = y[order]
    right = cum[np.searchsorted(y_sorted, t, side="right")]
    left = cum[np.searchsorted(y_sorted, t, side="left")]
    return right, left


def _check_lengths(
    pop: PopulationFrame, pi: InclusionProbabilities, s: SampleIndicators
) -> None:
    if not pop.size == pi.pi.shape[0] == s.s.shape[0]:
        raise ValueError("population, probabilities, and sample lengths differ")


def htep_evaluate(
    pop: PopulationFrame,
    pi: InclusionProbabilities,
    s: SampleIndicators,
    grid: ThresholdGrid,
) -> ProcessEvaluation:
    """Horvitz-Thompson empirical process
    N^{-1/2} Σ_i (S_i/π_i − 1) I(y_i <= t)."""
    _check_lengths(pop, pi, s)
    weights = s.s / pi.pi - 1.0
    scale = 1.0 / math.sqrt(pop.size)
    right, left = _weighted_counts(pop.y, weights, grid.t)
    return ProcessEvaluation(
        grid=grid, values=scale * right, values_left=scale * left, kind="HTEP"
    )


def hajek_evaluate(
    pop: PopulationFrame,
    pi: InclusionProbabilities,
    s: SampleIndicators,
    grid: ThresholdGrid,
) -> ProcessEvaluation:
    """Hájek empirical process, the HT estimator of the CDF recentered by
    the estimated population size N̂ = Σ S_i/π_i:
    √N (N̂^{-1} Σ (S_i/π_i) I(y_i <= t) − N^{-1} Σ I(y_i <= t))."""
    _check_lengths(pop, pi, s)
    n_hat = float((s.s / pi.pi).sum())
    if n_hat == 0.0:
        raise ValueError("estimated population size is zero (empty sample)")
    weights = (pop.size / n_hat) * (s.s / pi.pi) - 1.0
    scale = 1.0 / math.sqrt(pop.size)
    right, left = _weighted_counts(pop.y, weights, grid.t)
    return ProcessEvaluation(
        grid=grid, values=scale * right, values_left=scale * left, kind="HEP"
    )


def centered_process_evaluate(
    pop: PopulationFrame,
    pi: InclusionProbabilities,
    s: SampleIndicators,
    grid: ThresholdGrid,
) -> ProcessEvaluation:
    """The population-centered companion of the Hájek process:
    N^{-1/2} Σ_i (S_i/π_i − 1)(I(y_i <= t) − F_N(t))."""
    _check_lengths(pop, pi, s)
    weights = s.s / pi.pi - 1.0
    total = float(weights.sum())
    scale = 1.0 / math.sqrt(pop.size)
    right, left = _weighted_counts(pop.y, weights, grid.t)
    ones = np.ones(pop.size)
    count_right, count_left = _weighted_counts(pop.y, ones, grid.t)
    values = scale * (right - total * count_right / pop.size)
    values_left = scale * (left - total * count_left / pop.size)
    return ProcessEvaluation(
        grid=grid, values=values, values_left=values_left, kind="CENTERED"
    )


def sup_norm_cdf(ev: ProcessEvaluation) -> float:
    """Exact sup_t of the absolute process over all of ℝ.

    The path is a step function jumping only at grid points and zero
    below the first one, so the sup is attained among the stored values
    and left limits.
    """
    return float(
        max(np.abs(ev.values).max(initial=0.0), np.abs(ev.values_left).max(initial=0.0))
    )


def projection_residual_R(
    f_values: np.ndarray, p: CanonicalPoissonParams
) -> float:
    """Slope of the projection of an independent-design estimator onto
    the sample-size overshoot: Σ f_i (1−p_i) / Σ p_i(1−p_i), or 0 when
    the design is deterministic."""
    f = np.asarray(f_values, dtype=float)
    if f.shape != p.p.shape:
        raise ValueError("f_values and p lengths differ")
    d_n = float((p.p * (1.0 - p.p)).sum())
    if d_n == 0.0:
        return 0.0
    return float((f * (1.0 - p.p)).sum() / d_n)


def projection_statistic_T(
    f_values: np.ndarray, s: SampleIndicators, p: CanonicalPoissonParams
) -> float:
    """The independent-design estimator of mean(f) with its sample-size
    component projected out:
    N^{-1} Σ (S_i/p_i) f_i − (R/N) Σ (S_i − p_i)."""
    f = np.asarray(f_values, dtype=float)
    if f.shape != p.p.shape or s.s.shape != p.p.shape:
        raise ValueError("f_values, sample, and p lengths differ")
    n_units = p.p.shape[0]
    r_slope = projection_residual_R(f, p)
    ht_term = float((s.s / p.p * f).sum()) / n_units
    overshoot = float((s.s - p.p).sum())
    return ht_term - r_slope * overshoot / n_units


def poisson_projection_variance(
    f_values: np.ndarray, p: CanonicalPoissonParams
) -> float:
    """Variance of the projected estimator under the independent design:
    N^{-1} Σ ((1−p_i)/p_i)(f_i − R·p_i)²."""
    f = np.asarray(f_values, dtype=float)
    if f.shape != p.p.shape:
        raise ValueError("f_values and p lengths differ")
    r_slope = projection_residual_R(f, p)
    terms = (1.0 - p.p) / p.p * (f - r_slope * p.p) ** 2
    return float(terms.sum() / p.p.shape[0])
