"""Tests for carnap.py."""

from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carnap import (
    CarnapParams,
    CarnapRule,
    LambdaGamma,
    alpha_to_lambda_gamma,
    carnap_predict,
    dirichlet_mc_predictive,
    lambda_gamma_to_alpha,
    polya_sequence_probability,
    rising_factorial,
)
from core import CountStatistics, InvalidInputError, joint_probability, make_rng


def pooled(counts) -> CountStatistics:
    return CountStatistics(np.asarray(counts, dtype=np.int64)[:, None])


class TestCarnapParams:
    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(InvalidInputError):
            CarnapParams((1.0, 0.0))
        with pytest.raises(InvalidInputError):
            CarnapParams((1.0, -2.0))

    def test_needs_two_outcomes(self):
        with pytest.raises(InvalidInputError):
            CarnapParams((1.0,))

    def test_uniform_continuum(self):
        assert CarnapParams.uniform(3, 3.0).alpha == (1.0, 1.0, 1.0)


class TestCarnapPredict:
    def test_zero_counts_give_prior_mean(self):
        prediction = carnap_predict(pooled([0, 0, 0]), CarnapParams((1.0, 2.0, 3.0)))
        np.testing.assert_allclose(prediction, [1 / 6, 2 / 6, 3 / 6], atol=1e-15)

    def test_laplace_three_heads(self):
        prediction = carnap_predict(pooled([3, 0]), CarnapParams.laplace(2))
        assert prediction[0] == pytest.approx(4 / 5, abs=1e-15)

    def test_worked_three_outcome_case(self):
        prediction = carnap_predict(pooled([2, 0, 1]), CarnapParams((1.0, 1.0, 1.0)))
        np.testing.assert_allclose(prediction, [3 / 6, 1 / 6, 2 / 6], atol=1e-15)

    def test_rule_of_succession_for_all_short_histories(self):
        params = CarnapParams.laplace(2)
        for n in range(21):
            for heads in range(n + 1):
                prediction = carnap_predict(pooled([heads, n - heads]), params)
                assert abs(prediction[0] - (heads + 1) / (n + 2)) <= 1e-15
                assert abs(prediction[1] - (n - heads + 1) / (n + 2)) <= 1e-15

    def test_counts_are_pooled_over_types(self):
        counts = CountStatistics(np.array([[1, 2], [0, 3]]))
        np.testing.assert_allclose(carnap_predict(counts, CarnapParams.laplace(2)), [4 / 8, 4 / 8])

    def test_outcome_mismatch(self):
        with pytest.raises(InvalidInputError):
            carnap_predict(pooled([1, 1, 1]), CarnapParams.laplace(2))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0.05, 20.0), min_size=2, max_size=5).flatmap(
        lambda alpha: st.tuples(st.just(alpha), st.lists(st.integers(0, 1000), min_size=len(alpha),
                                                         max_size=len(alpha)).filter(lambda c: sum(c) > 0))))
    def test_distance_to_frequency_shrinks_as_one_over_n(self, case):
        alpha, counts = case
        n = sum(counts)
        prediction = carnap_predict(pooled(counts), CarnapParams(alpha))
        frequencies = np.asarray(counts, dtype=float) / n
        bound = (max(alpha) + sum(alpha)) / n
        assert np.max(np.abs(prediction - frequencies)) <= bound + 1e-12


class TestLambdaGamma:
    def test_uniform_case(self):
        assert lambda_gamma_to_alpha(LambdaGamma(2.0, (0.5, 0.5))).alpha == (1.0, 1.0)

    def test_skewed_case(self):
        np.testing.assert_allclose(lambda_gamma_to_alpha(LambdaGamma(4.0, (0.75, 0.25))).alpha, (3.0, 1.0))

    def test_rejects_nonpositive_lambda(self):
        with pytest.raises(InvalidInputError):
            LambdaGamma(0.0, (0.5, 0.5))

    @given(st.floats(0.01, 100.0), st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6))
    def test_round_trip(self, lam, raw):
        gamma = tuple(np.asarray(raw) / np.sum(raw))
        back = alpha_to_lambda_gamma(lambda_gamma_to_alpha(LambdaGamma(lam, gamma)))
        assert back.lam == pytest.approx(lam, rel=1e-12)
        np.testing.assert_allclose(back.gamma, gamma, rtol=1e-9, atol=1e-12)


class TestPolya:
    def test_empty_sequence(self):
        assert polya_sequence_probability((), CarnapParams.laplace(2)) == 1.0

    def test_heads_tails(self):
        params = CarnapParams.laplace(2)
        assert polya_sequence_probability((0, 1), params) == pytest.approx(1 / 6, rel=1e-12)
        assert polya_sequence_probability((1, 0), params) == pytest.approx(1 / 6, rel=1e-12)

    def test_rising_factorial(self):
        assert rising_factorial(2.0, 0) == 1.0
        assert rising_factorial(2.0, 3) == pytest.approx(24.0, rel=1e-12)

    def test_permutation_invariance_up_to_length_six(self):
        params = CarnapParams((0.7, 1.3, 2.1))
        for length in range(7):
            for sequence in product(range(3), repeat=length):
                reference = polya_sequence_probability(tuple(sorted(sequence)), params)
                assert polya_sequence_probability(sequence, params) == pytest.approx(reference, rel=1e-12)

    def test_closed_form_matches_chained_predictives(self):
        rng = make_rng(2024)
        for _ in range(1000):
            k = int(rng.integers(2, 5))
            params = CarnapParams(tuple(rng.uniform(0.2, 5.0, size=k)))
            sequence = tuple(int(x) for x in rng.integers(0, k, size=int(rng.integers(0, 9))))
            chained = joint_probability(CarnapRule(params), sequence)
            assert polya_sequence_probability(sequence, params) == pytest.approx(chained, rel=1e-12, abs=1e-300)

    @settings(max_examples=50, deadline=None)
    @given(st.permutations([0, 0, 1, 2, 2, 1, 0]))
    def test_joint_is_exchangeable(self, sequence):
        rule = CarnapRule(CarnapParams((1.0, 0.5, 2.0)))
        reference = joint_probability(rule, (0, 0, 0, 1, 1, 2, 2))
        assert joint_probability(rule, sequence) == pytest.approx(reference, rel=1e-12)


class TestDirichletMonteCarlo:
    def test_prior_mean_without_data(self):
        params = CarnapParams((1.0, 2.0, 3.0))
        estimate = dirichlet_mc_predictive(params, pooled([0, 0, 0]), 200_000, seed=5)
        assert estimate.within([1 / 6, 2 / 6, 3 / 6], sigmas=4.0)

    @pytest.mark.slow
    def test_laplace_value(self):
        estimate = dirichlet_mc_predictive(CarnapParams.laplace(2), pooled([3, 0]), 1_000_000, seed=17)
        assert estimate.within([0.8, 0.2], sigmas=4.0)
        assert estimate.stderr[0] < 1e-3

    @pytest.mark.slow
    def test_agrees_with_closed_form_on_random_cases(self):
        rng = make_rng(99)
        within_three = 0
        for case in range(20):
            k = int(rng.integers(2, 4))
            params = CarnapParams(tuple(rng.uniform(0.5, 3.0, size=k)))
            counts = pooled(rng.integers(0, 5, size=k))
            estimate = dirichlet_mc_predictive(params, counts, 1_000_000, seed=1000 + case)
            reference = carnap_predict(counts, params)
            assert estimate.within(reference, sigmas=4.0)
            within_three += estimate.within(reference, sigmas=3.0)
        assert within_three >= 19

    def test_result_does_not_depend_on_workers(self):
        params = CarnapParams((1.0, 1.0, 1.0))
        counts = pooled([2, 0, 1])
        serial = dirichlet_mc_predictive(params, counts, 250_000, seed=3)
        threaded = dirichlet_mc_predictive(params, counts, 250_000, seed=3, workers=3)
        np.testing.assert_array_equal(serial.mean, threaded.mean)
        np.testing.assert_array_equal(serial.stderr, threaded.stderr)

    def test_requires_samples(self):
        with pytest.raises(InvalidInputError):
            dirichlet_mc_predictive(CarnapParams.laplace(2), pooled([0, 0]), 0, seed=1)

