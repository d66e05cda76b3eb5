"""Brute-force reference implementations the tests trust over the package."""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np


def esp_exact(odds: list[Fraction | int], k: int) -> Fraction:
    """e_k by direct summation over all size-k subsets."""
    if k == 0:
        return Fraction(1)
    if k > len(odds):
        return Fraction(0)
    total = Fraction(0)
    for combo in combinations(odds, k):
        prod = Fraction(1)
        for value in combo:
            prod *= value
        total += prod
    return total


def weighted_cdf_counts_brute(
    y: np.ndarray, weights: np.ndarray, t: np.ndarray
) -> np.ndarray:
    """Double loop the vectorised counting code must reproduce."""
    return np.array([float(weights[y <= ti].sum()) for ti in t])


def binomial_central_interval(
    trials: int, prob: float, confidence: float
) -> tuple[int, int]:
    """Smallest central interval [lo, hi] with P(lo <= K <= hi) >= confidence."""
    log_q = math.log1p(-prob)
    log_p = math.log(prob)
    pmf = np.array(
        [
            math.exp(
                math.lgamma(trials + 1)
                - math.lgamma(k + 1)
                - math.lgamma(trials - k + 1)
                + k * log_p
                + (trials - k) * log_q
            )
            for k in range(trials + 1)
        ]
    )
    cdf = np.cumsum(pmf)
    tail = (1.0 - confidence) / 2.0
    lo = int(np.searchsorted(cdf, tail, side="left"))
    hi = int(np.searchsorted(cdf, 1.0 - tail, side="left"))
    return lo, hi
