"""
Exchangeable analogical systems built from mixtures of the basic system.
Skyrms-style finite mixtures of Carnapian methods and Maher's two-family Q-predicate
system with prior weight on the Wright manifold.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.special import expit, logsumexp

from carnap import CarnapParams, carnap_predict, log_polya_from_counts, log_polya_sequence_probability
from core import (
    CountRule,
    CountStatistics,
    InvalidInputError,
    PredictiveRule,
    RegularityError,
    SimplexVector,
    TypedHistory,
    as_simplex,
    pooled_limit,
)

logger = logging.getLogger(__name__)

MANIFOLD_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MixtureModel:
    """A finite mixture of basic systems with prior weights over the components."""

    components: Tuple[CarnapParams, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        components = tuple(c if isinstance(c, CarnapParams) else CarnapParams(c) for c in self.components)
        if not components:
            raise InvalidInputError("mixture needs at least one component")
        if len({c.outcome_count for c in components}) != 1:
            raise InvalidInputError("mixture components must share one outcome space")
        if len(self.weights) != len(components):
            raise InvalidInputError(f"{len(components)} components but {len(self.weights)} weights")
        weights = as_simplex(self.weights, tolerance=1e-9)
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "weights", tuple(float(w) for w in weights))

    @classmethod
    def uniform(cls, components: Sequence) -> "MixtureModel":
        return cls(tuple(components), (1.0 / len(components),) * len(components))

    @property
    def outcome_count(self) -> int:
        return self.components[0].outcome_count


def wheel_of_fortune(outcome_count: int, peak: float, base: float = 1.0, closed: bool = True) -> MixtureModel:
    """Equal-weight mixture whose components each favour one pair of neighbouring outcomes.

    Outcome i neighbours i + 1; with `closed` the last outcome also
    neighbours the first.
    """
    if outcome_count < 3:
        raise InvalidInputError("a wheel needs at least 3 outcomes")
    pairs = outcome_count if closed else outcome_count - 1
    components = []
    for i in range(pairs):
        alpha = [base] * outcome_count
        alpha[i] = alpha[(i + 1) % outcome_count] = peak
        components.append(CarnapParams(tuple(alpha)))
    return MixtureModel.uniform(components)


def _pooled_counts(outcomes: Sequence[int], outcome_count: int) -> np.ndarray:
    outcomes = np.asarray(tuple(outcomes), dtype=np.int64)
    if outcomes.size and (outcomes.min() < 0 or outcomes.max() >= outcome_count):
        raise InvalidInputError(f"outcome index out of range [0, {outcome_count})")
    return np.bincount(outcomes, minlength=outcome_count)


def _posterior_from_counts(model: MixtureModel, n_i: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_prior = np.log(np.asarray(model.weights))
    log_joint = log_prior + np.array([log_polya_from_counts(n_i, c.as_array()) for c in model.components])
    if not np.any(np.isfinite(log_joint)):
        raise RegularityError("every mixture component gives the sequence probability zero")
    return np.exp(log_joint - logsumexp(log_joint))


def mixture_posterior(model: MixtureModel, outcomes: Sequence[int]) -> SimplexVector:
    """Posterior weights of the components after observing `outcomes`."""
    posterior = _posterior_from_counts(model, _pooled_counts(outcomes, model.outcome_count))
    return as_simplex(posterior / posterior.sum())


def _skyrms_from_counts(model: MixtureModel, n_i: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    posterior = _posterior_from_counts(model, n_i)
    counts = CountStatistics(n_i[:, None])
    predictions = np.array([carnap_predict(counts, c) for c in model.components])
    return posterior, predictions


def skyrms_predict(model: MixtureModel, outcomes: Sequence[int]) -> SimplexVector:
    """Posterior-weighted average of the components' predictive distributions."""
    posterior, predictions = _skyrms_from_counts(model, _pooled_counts(outcomes, model.outcome_count))
    return as_simplex(posterior @ predictions)


def transient_analogy_gap(model: MixtureModel, outcomes: Sequence[int]) -> float:
    """sup_i of |mixture predictive - predictive of the a posteriori most probable component|."""
    posterior, predictions = _skyrms_from_counts(model, _pooled_counts(outcomes, model.outcome_count))
    best = int(np.argmax(posterior))
    return float(np.max(np.abs(posterior @ predictions - predictions[best])))


class SkyrmsRule(CountRule):
    """A finite mixture of basic systems as a type-blind predictive rule."""

    def __init__(self, model: MixtureModel, name: str = "skyrms"):
        self.model = model
        self.name = name
        self.outcome_count = model.outcome_count
        self.type_count = 1

    def predict_counts(self, counts: CountStatistics, next_type: int) -> SimplexVector:
        posterior, predictions = _skyrms_from_counts(self.model, counts.n_i)
        return as_simplex(posterior @ predictions)

    def limit_candidate(self, frequencies, type_ratios, next_type):
        return pooled_limit(frequencies, type_ratios)


class QPredicateEncoding:
    """Q_1 = (0, 0), Q_2 = (1, 0), Q_3 = (0, 1), Q_4 = (1, 1) as 0-based indices 0..3.

    A pair is (v, w): the value of the first predicate family, then the second.
    """

    PAIRS: Tuple[Tuple[int, int], ...] = ((0, 0), (1, 0), (0, 1), (1, 1))

    @classmethod
    def encode(cls, v: int, w: int) -> int:
        try:
            return cls.PAIRS.index((int(v), int(w)))
        except ValueError:
            raise InvalidInputError(f"({v}, {w}) is not a pair of binary values") from None

    @classmethod
    def decode(cls, q: int) -> Tuple[int, int]:
        if not 0 <= q < len(cls.PAIRS):
            raise InvalidInputError(f"Q-index must lie in [0, 4), got {q}")
        return cls.PAIRS[q]

    @classmethod
    def v_projection(cls, qs: Sequence[int]) -> Tuple[int, ...]:
        return tuple(cls.decode(q)[0] for q in qs)

    @classmethod
    def w_projection(cls, qs: Sequence[int]) -> Tuple[int, ...]:
        return tuple(cls.decode(q)[1] for q in qs)


@dataclass(frozen=True)
class MaherParams:
    """Weight on the dependent component plus priors for the joint and the two families."""

    weight: float
    alpha4: CarnapParams
    alpha_v: CarnapParams
    alpha_w: CarnapParams

    def __post_init__(self):
        if not 0.0 <= float(self.weight) <= 1.0:
            raise InvalidInputError(f"weight must lie in [0, 1], got {self.weight}")
        object.__setattr__(self, "weight", float(self.weight))
        for name, size in (("alpha4", 4), ("alpha_v", 2), ("alpha_w", 2)):
            value = getattr(self, name)
            if not isinstance(value, CarnapParams):
                value = CarnapParams(value)
                object.__setattr__(self, name, value)
            if value.outcome_count != size:
                raise InvalidInputError(f"{name} must have {size} entries, got {value.outcome_count}")

    @classmethod
    def uniform(cls, weight: float, alpha: float = 1.0) -> "MaherParams":
        return cls(weight, CarnapParams((alpha,) * 4), CarnapParams((alpha,) * 2), CarnapParams((alpha,) * 2))


def _component_log_probabilities(qs: Sequence[int], params: MaherParams) -> Tuple[float, float]:
    qs = tuple(int(q) for q in qs)
    dependent = log_polya_sequence_probability(qs, params.alpha4)
    independent = (log_polya_sequence_probability(QPredicateEncoding.v_projection(qs), params.alpha_v)
                   + log_polya_sequence_probability(QPredicateEncoding.w_projection(qs), params.alpha_w))
    return dependent, independent


def maher_log_sequence_probability(qs: Sequence[int], params: MaherParams) -> float:
    dependent, independent = _component_log_probabilities(qs, params)
    if params.weight == 1.0:
        return dependent
    if params.weight == 0.0:
        return independent
    return float(np.logaddexp(np.log(params.weight) + dependent, np.log1p(-params.weight) + independent))


def maher_sequence_probability(qs: Sequence[int], params: MaherParams) -> float:
    """w * Polya_4(qs) + (1 - w) * Polya_V(v-part) * Polya_W(w-part)."""
    return float(np.exp(maher_log_sequence_probability(qs, params)))


def maher_predict(qs: Sequence[int], params: MaherParams) -> SimplexVector:
    """Predictive over the four Q-predicates.

    Evaluated as the posterior-weighted average of the two components'
    predictives, which equals the ratio of sequence probabilities
    P(qs + q) / P(qs) and stays normalized on long sequences.
    """
    qs = tuple(int(q) for q in qs)
    dependent, independent = _component_log_probabilities(qs, params)
    if params.weight in (0.0, 1.0):
        dependent_share = params.weight
    else:
        dependent_share = float(expit(np.log(params.weight) + dependent - np.log1p(-params.weight) - independent))

    q_counts = CountStatistics(np.bincount(np.asarray(qs, dtype=np.int64), minlength=4)[:, None])
    joint = carnap_predict(q_counts, params.alpha4)
    v_counts = CountStatistics(np.bincount(np.asarray(QPredicateEncoding.v_projection(qs), dtype=np.int64),
                                           minlength=2)[:, None])
    w_counts = CountStatistics(np.bincount(np.asarray(QPredicateEncoding.w_projection(qs), dtype=np.int64),
                                           minlength=2)[:, None])
    v_pred = carnap_predict(v_counts, params.alpha_v)
    w_pred = carnap_predict(w_counts, params.alpha_w)
    product = np.array([v_pred[v] * w_pred[w] for v, w in QPredicateEncoding.PAIRS])
    return as_simplex(dependent_share * joint + (1.0 - dependent_share) * product)


class MaherRule(PredictiveRule):
    """Maher's system as a type-blind rule over the four Q-predicates."""

    def __init__(self, params: MaherParams, name: str = "maher"):
        self.params = params
        self.name = name
        self.outcome_count = 4
        self.type_count = 1

    def predict(self, history: TypedHistory, next_type: int, future_types: Sequence[int] = ()) -> SimplexVector:
        self._check_history(history, next_type)
        return maher_predict(history.outcomes, self.params)

    def limit_candidate(self, frequencies, type_ratios, next_type):
        return pooled_limit(frequencies, type_ratios)


def wright_manifold_point(a: float, b: float) -> SimplexVector:
    """The joint distribution over Q-predicates of independent families with P(v=1)=a, P(w=1)=b."""
    for name, value in (("a", a), ("b", b)):
        if not 0.0 <= value <= 1.0:
            raise InvalidInputError(f"{name} must lie in [0, 1], got {value}")
    point = [(a if v else 1.0 - a) * (b if w else 1.0 - b) for v, w in QPredicateEncoding.PAIRS]
    return as_simplex(point)


def check_on_manifold(x) -> bool:
    """x_1 = (x_1 + x_2)(x_1 + x_3) within tolerance."""
    x = as_simplex(x)
    if x.size != 4:
        raise InvalidInputError(f"a point of the 4-simplex has 4 entries, got {x.size}")
    return bool(abs(x[0] - (x[0] + x[1]) * (x[0] + x[2])) <= MANIFOLD_TOLERANCE)
