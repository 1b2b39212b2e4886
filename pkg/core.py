"""
Core domain types for typed observation sequences and predictive rules.
Holds the sufficient statistics, the rule contract and chain-rule joints.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

SIMPLEX_TOLERANCE = 1e-12

# Probability vectors over outcomes are plain read-only float arrays.
SimplexVector = np.ndarray


class InductionError(Exception):
    """Base class for all library errors."""


class InvalidInputError(InductionError, ValueError):
    """A parameter, index or shape invariant was violated."""


class RegularityError(InductionError):
    """A conditional probability was requested on a zero-probability history."""


class NumericalDegeneracyError(InductionError, ArithmeticError):
    """A numerical procedure lost all of its mass (e.g. every weight underflowed)."""


class UndefinedLimitError(InductionError):
    """A limiting predictive probability does not exist for the given inputs."""


class ResourceLimitError(InductionError):
    """An enumeration would exceed its configured budget."""


def as_simplex(values, tolerance: float = SIMPLEX_TOLERANCE) -> SimplexVector:
    """Validate a probability vector and return it as a read-only float array."""
    vector = np.array(values, dtype=float)
    if vector.ndim != 1 or vector.size == 0:
        raise InvalidInputError(f"simplex vector must be one-dimensional and nonempty, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise InvalidInputError("simplex vector entries must be finite")
    if np.any(vector < -tolerance) or np.any(vector > 1.0 + tolerance):
        raise InvalidInputError("simplex vector entries must lie in [0, 1]")
    if abs(vector.sum() - 1.0) > tolerance:
        raise InvalidInputError(f"simplex vector must sum to 1, got {vector.sum()!r}")
    vector.flags.writeable = False
    return vector


def _default_labels(count: int) -> Tuple[str, ...]:
    return tuple(str(index) for index in range(count))


@dataclass(frozen=True)
class OutcomeSpace:
    """The finite set of values an observation can take."""

    labels: Tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise InvalidInputError(f"outcome space needs at least 2 outcomes, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"outcome labels must be distinct: {labels}")

    @classmethod
    def of_size(cls, count: int) -> "OutcomeSpace":
        return cls(_default_labels(count))

    @property
    def count(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        """Return the index of an outcome label."""
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise InvalidInputError(f"unknown outcome label {label!r}; expected one of {self.labels}") from None


@dataclass(frozen=True)
class TypeSpace:
    """The finite set of observation types; a single type is the type-free setting."""

    labels: Tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 1:
            raise InvalidInputError("type space needs at least 1 type")
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"type labels must be distinct: {labels}")

    @classmethod
    def of_size(cls, count: int) -> "TypeSpace":
        return cls(_default_labels(count))

    @property
    def count(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        """Return the index of a type label."""
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise InvalidInputError(f"unknown type label {label!r}; expected one of {self.labels}") from None


def _check_indices(values: Tuple[int, ...], bound: int, what: str) -> None:
    if not values:
        return
    array = np.asarray(values)
    if not np.issubdtype(array.dtype, np.integer):
        raise InvalidInputError(f"{what} indices must be integers")
    if array.min() < 0 or array.max() >= bound:
        raise InvalidInputError(f"{what} index out of range [0, {bound})")


@dataclass(frozen=True)
class TypedHistory:
    """A finite record of (outcome, type) observations with value semantics."""

    outcome_space: OutcomeSpace
    type_space: TypeSpace
    outcomes: Tuple[int, ...] = ()
    types: Tuple[int, ...] = ()

    def __post_init__(self):
        outcomes = tuple(int(x) for x in self.outcomes)
        types = tuple(int(t) for t in self.types)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "types", types)
        if len(outcomes) != len(types):
            raise InvalidInputError(
                f"outcome and type sequences differ in length ({len(outcomes)} != {len(types)})"
            )
        _check_indices(outcomes, self.outcome_space.count, "outcome")
        _check_indices(types, self.type_space.count, "type")

    @classmethod
    def empty(cls, outcome_space: OutcomeSpace, type_space: TypeSpace) -> "TypedHistory":
        return cls(outcome_space, type_space)

    @classmethod
    def from_labels(cls, outcome_space: OutcomeSpace, type_space: TypeSpace,
                    pairs: Sequence[Tuple[str, str]]) -> "TypedHistory":
        """Build a history from (outcome_label, type_label) pairs."""
        outcomes = tuple(outcome_space.index(outcome) for outcome, _ in pairs)
        types = tuple(type_space.index(type_) for _, type_ in pairs)
        return cls(outcome_space, type_space, outcomes, types)

    def __len__(self) -> int:
        return len(self.outcomes)

    def append(self, outcome: int, type_: int) -> "TypedHistory":
        """Return a new history extended by one observation."""
        return TypedHistory(self.outcome_space, self.type_space,
                            self.outcomes + (int(outcome),), self.types + (int(type_),))

    def prefix(self, length: int) -> "TypedHistory":
        return TypedHistory(self.outcome_space, self.type_space,
                            self.outcomes[:length], self.types[:length])

    def to_rows(self) -> List[dict]:
        """Rows in the `step,outcome_label,type_label` CSV layout."""
        return [
            {
                "step": step,
                "outcome_label": self.outcome_space.labels[outcome],
                "type_label": self.type_space.labels[type_],
            }
            for step, (outcome, type_) in enumerate(zip(self.outcomes, self.types))
        ]


@dataclass(frozen=True)
class CountStatistics:
    """Sufficient statistics n_ij (outcome i of type j) of a typed history."""

    n_ij: np.ndarray = field(repr=False)

    def __post_init__(self):
        matrix = np.array(self.n_ij, dtype=np.int64)
        if matrix.ndim != 2:
            raise InvalidInputError(f"count matrix must be two-dimensional, got shape {matrix.shape}")
        if np.any(matrix < 0):
            raise InvalidInputError("counts must be nonnegative")
        matrix.flags.writeable = False
        object.__setattr__(self, "n_ij", matrix)

    @classmethod
    def zeros(cls, outcome_count: int, type_count: int = 1) -> "CountStatistics":
        return cls(np.zeros((outcome_count, type_count), dtype=np.int64))

    @property
    def outcome_count(self) -> int:
        return self.n_ij.shape[0]

    @property
    def type_count(self) -> int:
        return self.n_ij.shape[1]

    @property
    def N_j(self) -> np.ndarray:
        """Per-type totals."""
        return self.n_ij.sum(axis=0)

    @property
    def n_i(self) -> np.ndarray:
        """Per-outcome totals pooled over types."""
        return self.n_ij.sum(axis=1)

    @property
    def n(self) -> int:
        return int(self.n_ij.sum())

    def add(self, outcome: int, type_: int) -> "CountStatistics":
        """Return the statistics after one more observation."""
        if not (0 <= outcome < self.outcome_count and 0 <= type_ < self.type_count):
            raise InvalidInputError(f"observation ({outcome}, {type_}) out of range")
        matrix = self.n_ij.copy()
        matrix[outcome, type_] += 1
        return CountStatistics(matrix)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountStatistics):
            return NotImplemented
        return self.n_ij.shape == other.n_ij.shape and bool(np.array_equal(self.n_ij, other.n_ij))

    def __hash__(self) -> int:
        return hash((self.n_ij.shape, self.n_ij.tobytes()))

    def __repr__(self) -> str:
        return f"CountStatistics(n_ij={self.n_ij.tolist()})"


def counts_from_history(history: TypedHistory) -> CountStatistics:
    """Tally a history into its count matrix."""
    matrix = np.zeros((history.outcome_space.count, history.type_space.count), dtype=np.int64)
    if history.outcomes:
        np.add.at(matrix, (np.asarray(history.outcomes), np.asarray(history.types)), 1)
    return CountStatistics(matrix)


class PredictiveRule(ABC):
    """Maps a history and the next observation's type to a distribution over outcomes.

    Rules are immutable and deterministic. `type_count` is the number of types
    the rule distinguishes; type-blind rules report 1 and accept histories
    over any type space.
    """

    name: str = "rule"
    outcome_count: int
    type_count: int = 1

    @abstractmethod
    def predict(self, history: TypedHistory, next_type: int,
                future_types: Sequence[int] = ()) -> SimplexVector:
        """Predictive distribution of the next outcome.

        `future_types` lists types stipulated for the steps after the next one.
        """

    def limit_candidate(self, frequencies: np.ndarray, type_ratios: np.ndarray,
                        next_type: int) -> Optional[SimplexVector]:
        """Where this rule's predictions go on a stream with the given per-type frequencies.

        `frequencies` is a k x m matrix of per-type outcome frequencies and
        `type_ratios` the limiting share of each type. Rules without a known
        limit return None.
        """
        return None

    def _check_history(self, history: TypedHistory, next_type: int) -> None:
        if history.outcome_space.count != self.outcome_count:
            raise InvalidInputError(
                f"{self.name}: history has {history.outcome_space.count} outcomes, rule expects {self.outcome_count}"
            )
        if not 0 <= next_type < history.type_space.count:
            raise InvalidInputError(f"{self.name}: next type {next_type} out of range")


class CountRule(PredictiveRule):
    """A rule whose predictions depend on the history only through its counts."""

    def predict(self, history: TypedHistory, next_type: int,
                future_types: Sequence[int] = ()) -> SimplexVector:
        self._check_history(history, next_type)
        return self.predict_counts(counts_from_history(history), next_type)

    @abstractmethod
    def predict_counts(self, counts: CountStatistics, next_type: int) -> SimplexVector:
        """Predictive distribution computed from sufficient statistics."""


def pooled_limit(frequencies: np.ndarray, type_ratios: np.ndarray) -> SimplexVector:
    """Pooled outcome frequency of a stream mixing types in the given ratios."""
    frequencies = np.asarray(frequencies, dtype=float)
    return as_simplex(frequencies @ np.asarray(type_ratios, dtype=float), tolerance=1e-9)


def _type_space_for(rule: PredictiveRule, types: Sequence[int], type_count: Optional[int]) -> TypeSpace:
    if type_count is None:
        type_count = max(rule.type_count, 1 + max(types, default=0))
    return TypeSpace.of_size(type_count)


def joint_probability(rule: PredictiveRule, outcomes: Sequence[int], types: Optional[Sequence[int]] = None,
                      type_count: Optional[int] = None) -> float:
    """Chain-rule probability of an outcome sequence given its type sequence.

    Types default to the single type 0. The product is accumulated left to
    right starting from 1.0.
    """
    outcomes = tuple(int(x) for x in outcomes)
    types = tuple(int(t) for t in types) if types is not None else (0,) * len(outcomes)
    if len(outcomes) != len(types):
        raise InvalidInputError("outcome and type sequences differ in length")
    history = TypedHistory.empty(OutcomeSpace.of_size(rule.outcome_count), _type_space_for(rule, types, type_count))
    # Validate the whole sequence before evaluating any prefix.
    TypedHistory(history.outcome_space, history.type_space, outcomes, types)
    probability = 1.0
    for outcome, type_ in zip(outcomes, types):
        probability *= float(rule.predict(history, type_)[outcome])
        history = history.append(outcome, type_)
    return probability


def predictive_from_joint(rule: PredictiveRule, history: TypedHistory, next_type: int) -> SimplexVector:
    """Predictive distribution recovered as a ratio of joint probabilities."""
    type_count = history.type_space.count
    denominator = joint_probability(rule, history.outcomes, history.types, type_count)
    if denominator <= 0.0:
        raise RegularityError(f"{rule.name}: history has probability zero, conditional undefined")
    numerators = [
        joint_probability(rule, history.outcomes + (outcome,), history.types + (next_type,), type_count)
        for outcome in range(rule.outcome_count)
    ]
    return as_simplex(np.array(numerators) / denominator, tolerance=1e-9)


def make_rng(seed: Union[int, np.random.Generator]) -> np.random.Generator:
    """The library's generator: PCG64 seeded through a SeedSequence.

    A generator passed in is returned unchanged, so callers can hand over
    a stream spawned elsewhere.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """Independent child generators derived from one seed, in a fixed order."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


@dataclass(frozen=True)
class TypeProcess:
    """An i.i.d. process over types; every finite type sequence has positive probability."""

    probabilities: Tuple[float, ...] = (0.5, 0.5)

    def __post_init__(self):
        probabilities = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "probabilities", probabilities)
        as_simplex(probabilities, tolerance=1e-9)
        if min(probabilities) <= 0.0:
            raise InvalidInputError("type process must give every type positive probability")

    @property
    def type_count(self) -> int:
        return len(self.probabilities)

    def sample(self, length: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.type_count, size=length, p=np.asarray(self.probabilities))


def sample_sequence(rule: PredictiveRule, type_sequence: Sequence[int],
                    rng: np.random.Generator) -> Tuple[int, ...]:
    """Draw an outcome sequence step by step from a rule's predictive distributions."""
    types = tuple(int(t) for t in type_sequence)
    type_space = _type_space_for(rule, types, None)
    history = TypedHistory.empty(OutcomeSpace.of_size(rule.outcome_count), type_space)
    # Validate the type sequence once.
    TypedHistory(history.outcome_space, type_space, (0,) * len(types), types)
    counts = CountStatistics.zeros(rule.outcome_count, type_space.count)
    outcomes = []
    for type_ in types:
        if isinstance(rule, CountRule):
            probabilities = rule.predict_counts(counts, type_)
        else:
            probabilities = rule.predict(history, type_)
        outcome = int(np.searchsorted(np.cumsum(probabilities), rng.random(), side="right"))
        outcome = min(outcome, rule.outcome_count - 1)
        outcomes.append(outcome)
        if isinstance(rule, CountRule):
            counts = counts.add(outcome, type_)
        else:
            history = history.append(outcome, type_)
    return tuple(outcomes)
