"""Design calibration: pips clipping, the Poisson/fixed-size maps, and
the truncation constant."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpsband import (
    CalibrationError,
    CanonicalPoissonParams,
    InclusionProbabilities,
    PopulationFrame,
    canonicalize_poisson,
    cps_inclusion_from_poisson,
    enumerate_cps_distribution,
    exact_inclusion_orders,
    pips_probabilities,
    poisson_from_cps_inclusion,
    poisson_size_variance,
    solve_truncation_constant,
    total_variation,
    truncated_weight,
)

from conftest import design_params


class TestPipsProbabilities:
    def test_matches_hand_example_with_clipping(self):
        # One unit large enough to clip at 1; the rest share the remainder.
        incl = pips_probabilities(np.array([1.0, 1.0, 1.0, 10.0]), 2)
        np.testing.assert_allclose(incl.pi, [1 / 3, 1 / 3, 1 / 3, 1.0], atol=1e-12)

    def test_unclipped_case_is_plain_proportionality(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        incl = pips_probabilities(x, 2)
        np.testing.assert_allclose(incl.pi, 2 * x / x.sum(), atol=1e-12)

    def test_census_returns_ones(self):
        incl = pips_probabilities(np.array([5.0, 1.0, 3.0]), 3)
        np.testing.assert_allclose(incl.pi, 1.0)

    @given(
        st.lists(st.floats(0.01, 100.0), min_size=2, max_size=60),
        st.data(),
    )
    def test_sum_and_monotonicity(self, x, data):
        x = np.asarray(x)
        n = data.draw(st.integers(1, len(x)))
        incl = pips_probabilities(x, n)
        assert incl.pi.sum() == pytest.approx(n, abs=1e-9)
        assert np.all(incl.pi > 0) and np.all(incl.pi <= 1.0)
        order = np.argsort(x)
        assert np.all(np.diff(incl.pi[order]) >= -1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(CalibrationError):
            pips_probabilities(np.array([1.0, -1.0]), 1)
        with pytest.raises(CalibrationError):
            pips_probabilities(np.array([1.0, 2.0]), 3)


class TestCanonicalize:
    def test_known_shift(self):
        params = canonicalize_poisson(np.array([0.2, 0.5, 0.8]), 2)
        assert params.p.sum() == pytest.approx(2.0, abs=1e-9)
        # A common log-odds shift preserves the odds ordering.
        assert np.all(np.diff(params.p) > 0)

    @given(design_params(max_units=9))
    def test_law_invariant_under_canonicalization(self, params):
        # The fixed-size law only depends on odds ratios, so any
        # representative of the equivalence class enumerates identically.
        shifted = 1 / (1 + np.exp(-(np.log(params.odds) + 0.7)))
        d_canon = enumerate_cps_distribution(params.p, params.n)
        d_shift = enumerate_cps_distribution(shifted, params.n)
        assert total_variation(d_canon, d_shift) == pytest.approx(0.0, abs=1e-10)

    def test_rejects_infeasible_target(self):
        with pytest.raises(CalibrationError):
            canonicalize_poisson(np.array([0.5, 0.5]), 3)


class TestPoissonFixedSizeMaps:
    @given(design_params(max_units=9))
    def test_forward_map_matches_enumeration(self, params):
        d = enumerate_cps_distribution(params.p, params.n)
        pi_exact, _ = exact_inclusion_orders(d)
        incl = cps_inclusion_from_poisson(params)
        np.testing.assert_allclose(incl.pi, pi_exact, atol=1e-12)

    @given(design_params(min_units=3, max_units=40))
    @settings(max_examples=40)
    def test_round_trip_from_poisson_side(self, params):
        incl = cps_inclusion_from_poisson(params)
        back = poisson_from_cps_inclusion(incl)
        np.testing.assert_allclose(back.p, params.p, atol=1e-9)

    def test_round_trip_from_inclusion_side(self):
        rng = np.random.default_rng(52)
        for _ in range(10):
            n_units = int(rng.integers(5, 120))
            n = int(rng.integers(1, n_units))
            pi = pips_probabilities(rng.lognormal(0, 1, n_units), n)
            params = poisson_from_cps_inclusion(pi)
            again = cps_inclusion_from_poisson(params)
            np.testing.assert_allclose(again.pi, pi.pi, atol=1e-10)

    def test_clipped_units_stay_certain(self):
        pi = pips_probabilities(np.array([1.0, 1.0, 1.0, 50.0]), 2)
        params = poisson_from_cps_inclusion(pi)
        assert params.p[3] == 1.0
        incl = cps_inclusion_from_poisson(params)
        assert incl.pi[3] == 1.0

    def test_near_uniform_inclusion_maps_to_near_uniform_p(self):
        pi = InclusionProbabilities(pi=np.full(10, 0.3), n=3)
        params = poisson_from_cps_inclusion(pi)
        np.testing.assert_allclose(params.p, 0.3, atol=1e-12)


class TestTruncationConstant:
    def test_constant_weights_recover_alpha(self):
        w = np.ones(1000)
        assert solve_truncation_constant(0.25, w) == pytest.approx(0.25, abs=1e-9)

    def test_two_point_weights_hand_solution(self):
        # mean w = 2; for alpha = 0.9 the larger weight clips at 1 and
        # 0.5 (theta/2 + 1) = 0.9 gives theta = 1.6.
        w = np.array([1.0, 3.0])
        assert solve_truncation_constant(0.9, w) == pytest.approx(1.6, abs=1e-9)
        assert solve_truncation_constant(0.5, w) == pytest.approx(0.5, abs=1e-9)

    def test_agrees_with_pips_on_the_same_sample(self):
        # Both solve sum(min(c w, 1)) = n, so kappa equals the pips
        # probabilities when alpha = n / N.
        rng = np.random.default_rng(11)
        w = rng.lognormal(0, 1, 200)
        theta = solve_truncation_constant(0.1, w)
        mean_w = float(w.mean())
        kappa = theta * truncated_weight(w, theta, mean_w) / mean_w
        np.testing.assert_allclose(kappa, pips_probabilities(w, 20).pi, atol=1e-8)


@given(design_params(max_units=10))
def test_poisson_size_variance_matches_enumeration(params):
    from cpsband import enumerate_poisson_distribution, exact_design_moments

    if params.p.shape[0] > 12:
        return
    d = enumerate_poisson_distribution(params.p)
    _, var = exact_design_moments(d, lambda s: float(s.sum()))
    assert poisson_size_variance(params) == pytest.approx(var, abs=1e-10)


def test_population_frame_validation():
    with pytest.raises(ValueError):
        PopulationFrame(y=np.array([1.0, 2.0]), x=np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        PopulationFrame(y=np.array([1.0]), x=np.array([1.0, 2.0]))


def test_canonical_params_validation():
    with pytest.raises(CalibrationError):
        CanonicalPoissonParams(p=np.array([0.2, 0.5, 0.8]), n=2)
    params = CanonicalPoissonParams(p=np.array([0.5, 0.5, 1.0]), n=2)
    np.testing.assert_allclose(params.odds[:2], 1.0)
