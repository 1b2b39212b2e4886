"""
Two-type analogical inductive logic with constant analogy weights beta and gamma.
Covers the predictive rule, its urn model and the diagnostics that read beta and gamma
as analogy parameters.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from core import (
    CountRule,
    CountStatistics,
    InvalidInputError,
    SimplexVector,
    UndefinedLimitError,
    as_simplex,
    make_rng,
)

logger = logging.getLogger(__name__)

TYPE_COUNT = 2
MIN_DERIVATION_OUTCOMES = 3
DEFAULT_BETA_SWEEP = (0.0, 0.25, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class AnalogyParams:
    """Prior weights alpha[i][j] (outcome i, type j) and analogy weights beta, gamma.

    beta scales type-1 counts in type-0 predictions, gamma scales type-0 counts
    in type-1 predictions. The matrix shape leaves room for more types, but
    validation pins it to two columns.
    """

    alpha: Tuple[Tuple[float, ...], ...]
    beta: float = 0.0
    gamma: float = 0.0
    self_analogy_bound: bool = False

    def __post_init__(self):
        matrix = np.asarray(self.alpha, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != TYPE_COUNT:
            raise InvalidInputError(f"alpha must be a k x {TYPE_COUNT} matrix, got shape {matrix.shape}")
        if matrix.shape[0] < 2:
            raise InvalidInputError("alpha needs at least 2 outcomes")
        if not np.all(np.isfinite(matrix)) or np.any(matrix <= 0.0):
            raise InvalidInputError("alpha: all entries must be positive")
        for name in ("beta", "gamma"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0.0:
                raise InvalidInputError(f"{name} must be nonnegative, got {value}")
            if self.self_analogy_bound and value > 1.0:
                raise InvalidInputError(f"{name} must not exceed 1 under the self-analogy bound, got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "alpha", tuple(tuple(float(a) for a in row) for row in matrix))
        object.__setattr__(self, "self_analogy_bound", bool(self.self_analogy_bound))

    @classmethod
    def symmetric(cls, outcome_count: int, alpha: float = 1.0, beta: float = 0.0,
                  gamma: float = 0.0, **kwargs) -> "AnalogyParams":
        return cls(((alpha, alpha),) * outcome_count, beta, gamma, **kwargs)

    @property
    def outcome_count(self) -> int:
        return len(self.alpha)

    @property
    def below_derivation_minimum(self) -> bool:
        """True for two outcomes, where the characterization behind the rule does not apply."""
        return self.outcome_count < MIN_DERIVATION_OUTCOMES

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    def analogy_weight(self, next_type: int) -> float:
        """Weight of the other type's counts in predictions for `next_type`."""
        return self.beta if next_type == 0 else self.gamma


def _check_type(next_type: int) -> int:
    if next_type not in (0, 1):
        raise InvalidInputError(f"next type must be 0 or 1, got {next_type}")
    return int(next_type)


def analogical_predict(counts: CountStatistics, params: AnalogyParams, next_type: int) -> SimplexVector:
    """(n_i,own + w n_i,other + alpha_i,own) / (N_own + w N_other + sum_j alpha_j,own)."""
    if counts.type_count != TYPE_COUNT:
        raise InvalidInputError(f"analogical rule needs exactly {TYPE_COUNT} types, got {counts.type_count}")
    if counts.outcome_count != params.outcome_count:
        raise InvalidInputError(
            f"counts cover {counts.outcome_count} outcomes but alpha has {params.outcome_count}"
        )
    own = _check_type(next_type)
    other = 1 - own
    weight = params.analogy_weight(own)
    alpha = params.as_array()[:, own]
    n = counts.n_ij
    totals = counts.N_j
    numerator = n[:, own] + weight * n[:, other] + alpha
    return as_simplex(numerator / (totals[own] + weight * totals[other] + alpha.sum()))


def cross_type_term(counts: CountStatistics, params: AnalogyParams, next_type: int) -> np.ndarray:
    """The part of each prediction contributed by the other type's counts."""
    own = _check_type(next_type)
    other = 1 - own
    weight = params.analogy_weight(own)
    totals = counts.N_j
    denominator = totals[own] + weight * totals[other] + params.as_array()[:, own].sum()
    return weight * counts.n_ij[:, other] / denominator


def limiting_predictive(frequencies, params: AnalogyParams, type_ratio: float, next_type: int = 0) -> SimplexVector:
    """Limit of the predictive when per-type frequencies and the share of type 0 converge.

    `frequencies` is a k x 2 matrix whose column j holds the outcome
    frequencies of type j. The alpha terms vanish in the limit.
    """
    frequencies = np.asarray(frequencies, dtype=float)
    if frequencies.shape != (params.outcome_count, TYPE_COUNT):
        raise InvalidInputError(
            f"frequencies must be a {params.outcome_count} x {TYPE_COUNT} matrix, got {frequencies.shape}"
        )
    for column in range(TYPE_COUNT):
        as_simplex(frequencies[:, column], tolerance=1e-9)
    if not 0.0 <= type_ratio <= 1.0:
        raise InvalidInputError(f"type ratio must lie in [0, 1], got {type_ratio}")
    own = _check_type(next_type)
    shares = (type_ratio, 1.0 - type_ratio)
    weight = params.analogy_weight(own)
    own_share = shares[own]
    other_share = weight * shares[1 - own]
    if own_share + other_share == 0.0:
        raise UndefinedLimitError(
            f"type {own} has vanishing share and zero analogy weight; the limit is undefined"
        )
    mixed = own_share * frequencies[:, own] + other_share * frequencies[:, 1 - own]
    return as_simplex(mixed / (own_share + other_share), tolerance=1e-9)


class AnalogicalRule(CountRule):
    """The two-type analogical rule as a predictive rule; future types are never consulted."""

    def __init__(self, params: AnalogyParams, name: str = "analogical"):
        self.params = params
        self.name = name
        self.outcome_count = params.outcome_count
        self.type_count = TYPE_COUNT
        if params.below_derivation_minimum:
            logger.warning(f"{name}: {params.outcome_count} outcomes; the rule is evaluated but its "
                           f"characterization assumes at least {MIN_DERIVATION_OUTCOMES}")

    def predict_counts(self, counts: CountStatistics, next_type: int) -> SimplexVector:
        return analogical_predict(counts, self.params, next_type)

    def limit_candidate(self, frequencies, type_ratios, next_type):
        return limiting_predictive(frequencies, self.params, float(type_ratios[0]), next_type)

    def __repr__(self) -> str:
        return f"AnalogicalRule(beta={self.params.beta}, gamma={self.params.gamma})"


def _check_type_sequence(type_sequence: Sequence[int]) -> np.ndarray:
    types = np.asarray(tuple(type_sequence), dtype=np.int64)
    if types.size == 0:
        raise InvalidInputError("type sequence must be nonempty")
    if types.min() < 0 or types.max() >= TYPE_COUNT:
        raise InvalidInputError(f"type indices must lie in [0, {TYPE_COUNT})")
    return types


def urn_simulate(params: AnalogyParams, type_sequence: Sequence[int],
                 seed: Union[int, np.random.Generator]) -> Tuple[int, ...]:
    """Run the two-urn scheme along a type sequence and return the drawn outcomes.

    Urn j starts with weight alpha[i][j] on label i. A draw of label i from
    urn j puts weight 1 on i back into urn j and the analogy weight of the
    other urn (gamma into urn 1 after a type-0 draw, beta into urn 0 after a
    type-1 draw) on i into the other urn.
    """
    types = _check_type_sequence(type_sequence)
    rng = make_rng(seed)
    weights = params.as_array().copy()
    deposit = (params.gamma, params.beta)
    outcomes = []
    for type_ in types:
        urn = weights[:, type_]
        outcome = int(np.searchsorted(np.cumsum(urn), rng.random() * urn.sum(), side="right"))
        outcome = min(outcome, params.outcome_count - 1)
        weights[outcome, type_] += 1.0
        weights[outcome, 1 - type_] += deposit[type_]
        outcomes.append(outcome)
    return tuple(outcomes)


def urn_simulate_batch(params: AnalogyParams, type_sequence: Sequence[int], runs: int, seed: int) -> np.ndarray:
    """Many independent urn runs along one type sequence; returns a runs x length array."""
    types = _check_type_sequence(type_sequence)
    if runs < 1:
        raise InvalidInputError("runs must be at least 1")
    rng = make_rng(seed)
    weights = np.broadcast_to(params.as_array(), (runs, params.outcome_count, TYPE_COUNT)).copy()
    deposit = (params.gamma, params.beta)
    rows = np.arange(runs)
    drawn = np.empty((runs, types.size), dtype=np.int64)
    for step, type_ in enumerate(types):
        cumulative = np.cumsum(weights[:, :, type_], axis=1)
        u = rng.random(runs) * cumulative[:, -1]
        outcome = np.minimum((cumulative <= u[:, None]).sum(axis=1), params.outcome_count - 1)
        weights[rows, outcome, type_] += 1.0
        weights[rows, outcome, 1 - type_] += deposit[type_]
        drawn[:, step] = outcome
    return drawn


def _single_observation(params: AnalogyParams, outcome: int, type_: int) -> CountStatistics:
    matrix = np.zeros((params.outcome_count, TYPE_COUNT), dtype=np.int64)
    matrix[outcome, type_] = 1
    return CountStatistics(matrix)


@dataclass(frozen=True)
class PositivityRow:
    outcome: int
    next_type: int
    lhs: float
    rhs: float
    strict: bool
    equivalence_holds: bool


@dataclass(frozen=True)
class BetaPositivityReport:
    """Evidence that beta (and gamma) act as positive analogy weights.

    For type 0 rows, lhs is the type-0 predictive of i after one type-1
    observation of i and rhs the type-0 prior predictive of i; type 1 rows are
    the mirror image for gamma.
    `sweep_lhs[s, i]` is the type-0 lhs of outcome i at `sweep_values[s]`.
    """

    rows: List[PositivityRow]
    sweep_values: Tuple[float, ...]
    sweep_lhs: np.ndarray
    monotone: bool

    @property
    def holds(self) -> bool:
        return self.monotone and all(row.equivalence_holds for row in self.rows)


def check_beta_positivity(params: AnalogyParams, sweep: Sequence[float] = DEFAULT_BETA_SWEEP) -> BetaPositivityReport:
    """Compare cross-type evidence against the prior predictive, outcome by outcome."""
    rows = []
    for next_type in (0, 1):
        other = 1 - next_type
        prior = analogical_predict(CountStatistics.zeros(params.outcome_count, TYPE_COUNT), params, next_type)
        for outcome in range(params.outcome_count):
            evidence = _single_observation(params, outcome, other)
            lhs = float(analogical_predict(evidence, params, next_type)[outcome])
            rhs = float(prior[outcome])
            strict = lhs > rhs
            positive = params.analogy_weight(next_type) > 0.0
            rows.append(PositivityRow(outcome, next_type, lhs, rhs, strict, strict == positive))

    sweep_values = tuple(sorted(float(b) for b in sweep))
    sweep_lhs = np.empty((len(sweep_values), params.outcome_count))
    for s, beta in enumerate(sweep_values):
        varied = dataclasses.replace(params, beta=beta, self_analogy_bound=False)
        for outcome in range(params.outcome_count):
            evidence = _single_observation(varied, outcome, 1)
            sweep_lhs[s, outcome] = analogical_predict(evidence, varied, 0)[outcome]
    monotone = bool(np.all(np.diff(sweep_lhs, axis=0) > 0.0))
    if not monotone:
        logger.warning(f"beta sweep {sweep_values} did not increase the cross-type predictive")
    return BetaPositivityReport(rows, sweep_values, sweep_lhs, monotone)


@dataclass(frozen=True)
class SelfAnalogyRow:
    outcome: int
    next_type: int
    same_type: float
    cross_type: float

    @property
    def holds(self) -> bool:
        return self.same_type >= self.cross_type


@dataclass(frozen=True)
class SelfAnalogyReport:
    """Predictive of i for type j after one type-j observation of i, against one of the other type."""

    rows: List[SelfAnalogyRow]

    @property
    def holds(self) -> bool:
        return all(row.holds for row in self.rows)


def check_self_analogy(params: AnalogyParams) -> SelfAnalogyReport:
    """Evaluate whether every type counts at least as much for itself as the other type does."""
    rows = []
    for next_type in (0, 1):
        for outcome in range(params.outcome_count):
            same = analogical_predict(_single_observation(params, outcome, next_type), params, next_type)
            cross = analogical_predict(_single_observation(params, outcome, 1 - next_type), params, next_type)
            rows.append(SelfAnalogyRow(outcome, next_type, float(same[outcome]), float(cross[outcome])))
    return SelfAnalogyReport(rows)
