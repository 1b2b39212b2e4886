"""Tests for analogy.py: the two-type rule, its urn model and the analogy diagnostics."""

from collections import Counter
from itertools import product

import numpy as np
import pytest

from analogy import (
    AnalogicalRule,
    AnalogyParams,
    analogical_predict,
    check_beta_positivity,
    check_self_analogy,
    cross_type_term,
    limiting_predictive,
    urn_simulate,
    urn_simulate_batch,
)
from carnap import CarnapParams, carnap_predict, polya_sequence_probability
from core import CountStatistics, InvalidInputError, UndefinedLimitError, joint_probability, make_rng


def random_params(rng, beta: float, gamma: float, outcome_count: int = 3) -> AnalogyParams:
    alpha = rng.uniform(0.3, 3.0, size=(outcome_count, 2))
    return AnalogyParams(tuple(map(tuple, alpha)), beta, gamma)


class TestAnalogyParams:
    def test_rejects_negative_weights(self):
        with pytest.raises(InvalidInputError):
            AnalogyParams.symmetric(3, beta=-0.1)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(InvalidInputError):
            AnalogyParams(((1.0, 0.0), (1.0, 1.0), (1.0, 1.0)))

    def test_self_analogy_bound(self):
        with pytest.raises(InvalidInputError):
            AnalogyParams.symmetric(3, beta=1.5, self_analogy_bound=True)
        assert AnalogyParams.symmetric(3, beta=1.5).beta == 1.5

    def test_two_outcomes_are_flagged(self, caplog):
        params = AnalogyParams.symmetric(2, beta=0.5)
        assert params.below_derivation_minimum
        with caplog.at_level("WARNING"):
            AnalogicalRule(params)
        assert "outcomes" in caplog.text


class TestAnalogicalPredict:
    def test_zero_counts_give_prior_mean(self):
        params = AnalogyParams(((1.0, 1.0), (2.0, 1.0), (1.0, 1.0)), beta=0.5, gamma=0.5)
        np.testing.assert_allclose(analogical_predict(CountStatistics.zeros(3, 2), params, 0), [0.25, 0.5, 0.25])

    def test_worked_example(self):
        counts = CountStatistics(np.array([[2, 4], [1, 1], [0, 0]]))
        params = AnalogyParams.symmetric(3, 1.0, beta=0.5)
        assert analogical_predict(counts, params, 0)[0] == pytest.approx(5 / 8.5, abs=1e-12)

    def test_decoupled_types_reduce_to_carnap(self):
        rng = make_rng(1)
        params = random_params(rng, 0.0, 0.0)
        counts = CountStatistics(rng.integers(0, 6, size=(3, 2)))
        for type_ in (0, 1):
            own = CountStatistics(counts.n_ij[:, [type_]])
            expected = carnap_predict(own, CarnapParams(tuple(params.as_array()[:, type_])))
            np.testing.assert_allclose(analogical_predict(counts, params, type_), expected, atol=1e-15)

    def test_merged_types_reduce_to_pooled_carnap(self):
        params = AnalogyParams.symmetric(3, 1.5, beta=1.0, gamma=1.0)
        counts = CountStatistics(np.array([[3, 1], [0, 2], [4, 0]]))
        expected = carnap_predict(counts, CarnapParams((1.5, 1.5, 1.5)))
        for type_ in (0, 1):
            np.testing.assert_allclose(analogical_predict(counts, params, type_), expected, atol=1e-15)

    def test_rejects_wrong_shapes(self):
        params = AnalogyParams.symmetric(3)
        with pytest.raises(InvalidInputError):
            analogical_predict(CountStatistics.zeros(3, 1), params, 0)
        with pytest.raises(InvalidInputError):
            analogical_predict(CountStatistics.zeros(2, 2), params, 0)
        with pytest.raises(InvalidInputError):
            analogical_predict(CountStatistics.zeros(3, 2), params, 2)

    def test_cross_type_term(self):
        counts = CountStatistics(np.array([[2, 4], [1, 1], [0, 0]]))
        params = AnalogyParams.symmetric(3, 1.0, beta=0.5)
        np.testing.assert_allclose(cross_type_term(counts, params, 0), [2 / 8.5, 0.5 / 8.5, 0.0])


class TestUrnModel:
    def test_fixed_seed_is_reproducible(self):
        params = AnalogyParams.symmetric(3, 1.0, 0.5, 2.0)
        types = (0, 1) * 10
        assert urn_simulate(params, types, 42) == urn_simulate(params, types, 42)

    def test_rejects_bad_types(self):
        with pytest.raises(InvalidInputError):
            urn_simulate(AnalogyParams.symmetric(3), (0, 2), 1)

    def test_single_type_is_a_polya_urn(self):
        params = AnalogyParams(((1.0, 1.0), (2.0, 1.0)), 0.0, 0.0)
        runs = urn_simulate_batch(params, (0, 0, 0), 200_000, seed=8)
        carnap = CarnapParams((1.0, 2.0))
        empirical = Counter(map(tuple, runs.tolist()))
        for sequence in product(range(2), repeat=3):
            assert empirical[sequence] / 200_000 == pytest.approx(
                polya_sequence_probability(sequence, carnap), abs=0.005)

    def test_sequential_urn_matches_joints(self):
        params = AnalogyParams(((1.0, 0.5), (0.5, 1.5)), beta=0.8, gamma=0.3)
        types = (0, 1, 0, 1)
        rule = AnalogicalRule(params)
        runs = 20_000
        empirical = Counter(urn_simulate(params, types, seed) for seed in range(runs))
        tv = 0.5 * sum(abs(empirical[s] / runs - joint_probability(rule, s, types))
                       for s in product(range(2), repeat=4))
        assert tv < 0.04

    @pytest.mark.slow
    def test_batch_urn_matches_joints(self):
        params = AnalogyParams(((1.0, 2.0), (0.5, 1.0), (1.5, 0.5)), beta=0.5, gamma=2.0)
        types = (0, 1, 0, 1)
        rule = AnalogicalRule(params)
        runs = 1_000_000
        drawn = urn_simulate_batch(params, types, runs, seed=2718)
        codes = drawn @ np.array([27, 9, 3, 1])
        frequencies = np.bincount(codes, minlength=81) / runs
        joints = np.array([joint_probability(rule, s, types) for s in product(range(3), repeat=4)])
        assert joints.sum() == pytest.approx(1.0, abs=1e-12)
        assert 0.5 * np.abs(frequencies - joints).sum() < 0.01


class TestBetaPositivity:
    def test_zero_beta_gives_equality(self):
        report = check_beta_positivity(AnalogyParams.symmetric(3, 1.0, 0.0, 0.0))
        for row in report.rows:
            assert row.lhs == pytest.approx(row.rhs, abs=1e-15)
            assert not row.strict
            assert row.equivalence_holds

    def test_worked_example(self):
        report = check_beta_positivity(AnalogyParams.symmetric(3, 1.0, beta=0.5))
        row = next(r for r in report.rows if r.next_type == 0 and r.outcome == 0)
        assert row.lhs == pytest.approx(1.5 / 3.5, abs=1e-12)
        assert row.rhs == pytest.approx(1 / 3, abs=1e-12)
        assert row.strict

    def test_random_draws(self):
        rng = make_rng(6)
        for _ in range(100):
            beta = float(rng.choice([0.0, rng.uniform(0.01, 3.0)]))
            gamma = float(rng.choice([0.0, rng.uniform(0.01, 3.0)]))
            report = check_beta_positivity(random_params(rng, beta, gamma))
            assert report.holds
            assert np.all(np.diff(report.sweep_lhs, axis=0) > 0.0)


class TestSelfAnalogy:
    def test_holds_iff_weights_at_most_one(self):
        assert check_self_analogy(AnalogyParams.symmetric(3, 1.0, 1.0, 0.5)).holds
        assert not check_self_analogy(AnalogyParams.symmetric(3, 1.0, 2.0, 0.5)).holds
        assert not check_self_analogy(AnalogyParams.symmetric(3, 1.0, 0.5, 1.5)).holds


class TestLimitingPredictive:
    frequencies = np.array([[0.8, 0.2], [0.1, 0.4], [0.1, 0.4]])

    def test_zero_beta_gives_own_frequencies(self):
        params = AnalogyParams.symmetric(3)
        np.testing.assert_allclose(limiting_predictive(self.frequencies, params, 0.3, 0), self.frequencies[:, 0])

    def test_common_frequency(self):
        common = np.array([[0.5, 0.5], [0.3, 0.3], [0.2, 0.2]])
        params = AnalogyParams.symmetric(3, beta=1.7, gamma=0.4)
        np.testing.assert_allclose(limiting_predictive(common, params, 0.6, 1), common[:, 0])

    def test_convex_combination(self):
        params = AnalogyParams.symmetric(3, beta=1.0, gamma=1.0)
        assert limiting_predictive(self.frequencies, params, 0.5, 0)[0] == pytest.approx(0.5)

    def test_undefined_without_share_or_weight(self):
        with pytest.raises(UndefinedLimitError):
            limiting_predictive(self.frequencies, AnalogyParams.symmetric(3), 0.0, 0)
