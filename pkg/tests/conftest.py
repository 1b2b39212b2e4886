"""Shared fixtures for the inductive-logic test suite."""

from typing import Sequence

import numpy as np
import pytest

from analogy import AnalogicalRule, AnalogyParams
from carnap import CarnapParams, CarnapRule
from core import OutcomeSpace, PredictiveRule, TypedHistory, TypeSpace, as_simplex
from mixtures import SkyrmsRule, wheel_of_fortune
from symmetry import StreamConfig

# Per-type frequencies used by the convergence and transience checks.
TYPE0_FREQUENCIES = (0.8, 0.1, 0.1)
TYPE1_FREQUENCIES = (0.2, 0.4, 0.4)


class StickyRule(PredictiveRule):
    """Repeats the previous outcome with probability 0.6; order dependent."""

    def __init__(self, outcome_count: int = 2):
        self.name = "sticky"
        self.outcome_count = outcome_count
        self.type_count = 1

    def predict(self, history, next_type, future_types: Sequence[int] = ()):
        self._check_history(history, next_type)
        k = self.outcome_count
        if not history.outcomes:
            return as_simplex(np.full(k, 1.0 / k))
        probabilities = np.full(k, 0.4 / (k - 1))
        probabilities[history.outcomes[-1]] = 0.6
        return as_simplex(probabilities)


class FuturePeekingRule(PredictiveRule):
    """Shifts mass toward outcome 0 when a type-1 step is stipulated ahead."""

    def __init__(self, outcome_count: int = 2):
        self.name = "peeking"
        self.outcome_count = outcome_count
        self.type_count = 2

    def predict(self, history, next_type, future_types: Sequence[int] = ()):
        self._check_history(history, next_type)
        k = self.outcome_count
        if 1 in tuple(future_types):
            probabilities = np.full(k, 0.5 / (k - 1))
            probabilities[0] = 0.5
            return as_simplex(probabilities)
        return as_simplex(np.full(k, 1.0 / k))


@pytest.fixture
def laplace_rule() -> CarnapRule:
    return CarnapRule(CarnapParams.laplace(2))


@pytest.fixture
def uniform_carnap3() -> CarnapRule:
    return CarnapRule(CarnapParams((1.0, 1.0, 1.0)))


@pytest.fixture
def wheel_rule() -> SkyrmsRule:
    """Components (10, 10, 1) and (1, 10, 10): neighbouring outcomes 0-1 and 1-2."""
    return SkyrmsRule(wheel_of_fortune(3, 10.0, closed=False))


@pytest.fixture
def analogical_rule():
    def build(beta: float = 0.5, gamma: float = 0.0, outcome_count: int = 3, alpha: float = 1.0):
        return AnalogicalRule(AnalogyParams.symmetric(outcome_count, alpha, beta, gamma))
    return build


@pytest.fixture
def two_type_stream() -> StreamConfig:
    return StreamConfig((0.5, 0.5), (TYPE0_FREQUENCIES, TYPE1_FREQUENCIES))


@pytest.fixture
def spaces():
    return OutcomeSpace.of_size(3), TypeSpace.of_size(2)


@pytest.fixture
def history(spaces) -> TypedHistory:
    outcome_space, type_space = spaces
    return TypedHistory(outcome_space, type_space, (0, 1, 0), (0, 0, 1))
