"""Symmetric-function tables against exact rational enumeration."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpsband.esp import prefix_table, suffix_table

from helpers import esp_exact

# Integer odds <= 8 on <= 12 units keep every e_k below 2**53, so the
# addition-only recurrence with power-of-two rescaling is bit exact.
int_odds = st.lists(st.integers(1, 8), min_size=1, max_size=12)


def table_entry(table, k: int, j: int) -> float:
    return math.ldexp(table.value[k, j], int(table.exponent[j]))


@given(int_odds)
def test_suffix_table_is_exact_on_integers(odds):
    table = suffix_table(np.array(odds, dtype=float), kmax=len(odds))
    for j in range(len(odds) + 1):
        for k in range(len(odds) - j + 1):
            assert table_entry(table, k, j) == float(esp_exact(odds[j:], k))


@given(int_odds)
def test_prefix_table_is_exact_on_integers(odds):
    table = prefix_table(np.array(odds, dtype=float), kmax=len(odds))
    for i in range(len(odds) + 1):
        for k in range(i + 1):
            assert table_entry(table, k, i) == float(esp_exact(odds[:i], k))


@given(int_odds)
def test_structural_zeros(odds):
    table = suffix_table(np.array(odds, dtype=float), kmax=len(odds))
    n = len(odds)
    for j in range(n + 1):
        for k in range(n - j + 1, n + 1):
            assert table.value[k, j] == 0.0


def test_ratio_matches_fractions():
    odds = [2, 3, 5, 7, 4]
    table = suffix_table(np.array(odds, dtype=float), kmax=5)
    got = table.ratio(2, 1, 3, 0)
    want = esp_exact(odds[1:], 2) / esp_exact(odds, 3)
    assert got == pytest.approx(float(want), rel=1e-15)


def test_ratio_rejects_zero_denominator():
    table = suffix_table(np.array([1.0, 2.0]), kmax=2)
    with pytest.raises(ZeroDivisionError):
        table.ratio(0, 0, 2, 1)


def test_include_probability_matches_fractions():
    odds = [1, 4, 2, 6, 3]
    table = suffix_table(np.array(odds, dtype=float), kmax=3)
    # P(unit j enters | r slots among units j..N-1) = odds_j e_{r-1}(j+1:) / e_r(j:)
    for j in range(5):
        for r in range(1, min(3, 5 - j) + 1):
            want = odds[j] * esp_exact(odds[j + 1 :], r - 1) / esp_exact(odds[j:], r)
            assert table.include_probability(j, r) == pytest.approx(
                float(want), rel=1e-14
            )


def test_include_probability_forced_and_spent_states():
    table = suffix_table(np.array([2.0, 1.0, 3.0]), kmax=3)
    assert table.include_probability(0, 3) == 1.0
    assert table.include_probability(2, 1) == 1.0
    assert table.include_probability(1, 0) == 0.0


@given(st.lists(st.floats(0.01, 50.0), min_size=2, max_size=15))
def test_probability_matrix_agrees_with_scalar_path(odds):
    arr = np.array(odds)
    kmax = min(4, len(odds))
    table = suffix_table(arr, kmax=kmax)
    matrix = table.include_probability_matrix()
    n = len(odds)
    for r in range(kmax + 1):
        for j in range(n):
            if n - j < r:
                assert matrix[r, j] == 0.0
            else:
                assert matrix[r, j] == pytest.approx(
                    table.include_probability(j, r), abs=1e-14
                )


@given(st.lists(st.floats(0.01, 50.0), min_size=2, max_size=15))
def test_probability_matrix_rows_lie_in_unit_interval(odds):
    table = suffix_table(np.array(odds), kmax=min(5, len(odds)))
    matrix = table.include_probability_matrix()
    assert np.all(matrix >= 0.0)
    assert np.all(matrix <= 1.0)


def test_rescaling_survives_extreme_magnitudes():
    # 400 units with odds 2 push raw e_200 near 2**600, far past the
    # 2**256 rescale trigger, while every column entry stays
    # representable under the shared exponent.
    odds = np.full(400, 2.0)
    table = suffix_table(odds, kmax=200)
    # e_k / e_{k-1} for equal odds w is w * (N - k + 1) / k.
    want = 2.0 * (400 - 199) / 200
    assert table.ratio(200, 0, 199, 0) == pytest.approx(want, rel=1e-12)
    assert np.all(np.isfinite(table.value))


def test_underflowing_dynamic_range_is_detected():
    # Equal odds 1e6 over 400 units span ~2**4200 between e_0 and e_200,
    # beyond what one power-of-two exponent per column can hold.
    with pytest.raises(ArithmeticError):
        suffix_table(np.full(400, 1e6), kmax=200)


def test_rejects_negative_and_non_finite_odds():
    with pytest.raises(ValueError):
        suffix_table(np.array([1.0, -0.5]), kmax=1)
    with pytest.raises(ValueError):
        prefix_table(np.array([np.inf, 1.0]), kmax=1)
