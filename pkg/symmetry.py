"""
Verification engine for the probabilistic symmetries of predictive rules.
Exhaustive finite checks of exchangeability, (generalized) partial exchangeability,
sufficientness and future-type independence, plus empirical Reichenbach limits.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core import (
    InvalidInputError,
    OutcomeSpace,
    PredictiveRule,
    ResourceLimitError,
    TypedHistory,
    TypeSpace,
    as_simplex,
    counts_from_history,
    make_rng,
)

logger = logging.getLogger(__name__)

EXACT_TOLERANCE = 1e-10
LIMIT_TOLERANCE = 1e-2
MAX_WITNESSES = 10
MIN_HORIZON = 10_000
DEFAULT_CHECKPOINTS = 20

CLASSIC = "classic"
MODIFIED = "modified"


@dataclass(frozen=True)
class EnumerationBudget:
    """Caps on exhaustive enumeration; exceeding one raises ResourceLimitError."""

    max_outcomes: int = 4
    max_length: int = 7
    max_nodes: int = 500_000

    @classmethod
    def from_env(cls) -> "EnumerationBudget":
        """Read INDUCTION_MAX_OUTCOMES, INDUCTION_MAX_LENGTH and INDUCTION_MAX_NODES."""
        defaults = cls()
        return cls(
            max_outcomes=int(os.getenv("INDUCTION_MAX_OUTCOMES", defaults.max_outcomes)),
            max_length=int(os.getenv("INDUCTION_MAX_LENGTH", defaults.max_length)),
            max_nodes=int(os.getenv("INDUCTION_MAX_NODES", defaults.max_nodes)),
        )

    def check(self, outcome_count: int, length: int, type_count: int) -> None:
        if outcome_count > self.max_outcomes:
            raise ResourceLimitError(f"{outcome_count} outcomes exceeds the cap of {self.max_outcomes}")
        if length > self.max_length:
            raise ResourceLimitError(f"length {length} exceeds the cap of {self.max_length}")
        branching = outcome_count * type_count
        nodes = sum(branching ** depth for depth in range(1, length + 1))
        if nodes > self.max_nodes:
            raise ResourceLimitError(f"{nodes} sequences to enumerate exceeds the cap of {self.max_nodes}")


@dataclass(frozen=True)
class Probe:
    """A replayable probability: the chance of a continuation given a history.

    With an empty history this is a joint probability; with a one-step
    continuation it is a predictive probability, optionally with stipulated
    future types.
    """

    history_outcomes: Tuple[int, ...]
    history_types: Tuple[int, ...]
    outcomes: Tuple[int, ...]
    types: Tuple[int, ...]
    type_count: int
    future_types: Tuple[int, ...] = ()

    def evaluate(self, rule: PredictiveRule) -> float:
        history = TypedHistory(OutcomeSpace.of_size(rule.outcome_count), TypeSpace.of_size(self.type_count),
                               self.history_outcomes, self.history_types)
        probability = 1.0
        for step, (outcome, type_) in enumerate(zip(self.outcomes, self.types)):
            future = self.future_types if step == 0 else ()
            probability *= float(rule.predict(history, type_, future)[outcome])
            history = history.append(outcome, type_)
        return probability

    def to_record(self) -> dict:
        return {
            "history_outcomes": list(self.history_outcomes),
            "history_types": list(self.history_types),
            "outcomes": list(self.outcomes),
            "types": list(self.types),
            "future_types": list(self.future_types),
        }


@dataclass(frozen=True)
class Witness:
    """Two probabilities a postulate says are equal, with their recorded values."""

    left: Probe
    right: Probe
    left_value: float
    right_value: float

    @property
    def gap(self) -> float:
        return abs(self.left_value - self.right_value)

    def to_record(self) -> dict:
        return {
            "left": self.left.to_record(),
            "right": self.right.to_record(),
            "left_value": self.left_value,
            "right_value": self.right_value,
            "gap": self.gap,
        }


def replay_witness(rule: PredictiveRule, witness: Witness) -> float:
    """Re-evaluate both sides of a witness and return their gap."""
    return abs(witness.left.evaluate(rule) - witness.right.evaluate(rule))


@dataclass(frozen=True)
class SymmetryReport:
    """Outcome of one postulate check; passed iff max_violation <= tolerance."""

    postulate: str
    rule: str
    tolerance: float
    max_violation: float
    witnesses: List[Witness] = field(default_factory=list)
    comparisons: int = 0

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_record(self) -> dict:
        return {
            "postulate": self.postulate,
            "rule": self.rule,
            "tolerance": self.tolerance,
            "max_violation": self.max_violation,
            "passed": self.passed,
            "comparisons": self.comparisons,
            "witnesses": [w.to_record() for w in self.witnesses],
        }

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.postulate} [{self.rule}]: {status} max_violation={self.max_violation:.3e} tol={self.tolerance:g}"


class _Groups:
    """Collects probabilities that must agree within each group."""

    def __init__(self):
        self._groups: Dict[Hashable, List[Tuple[Probe, float]]] = {}

    def add(self, key: Hashable, probe: Probe, value: float) -> None:
        self._groups.setdefault(key, []).append((probe, value))

    def report(self, postulate: str, rule: PredictiveRule, tolerance: float) -> SymmetryReport:
        max_violation = 0.0
        candidates = []
        comparisons = 0
        for members in self._groups.values():
            if len(members) < 2:
                continue
            comparisons += len(members) - 1
            low = min(members, key=lambda member: member[1])
            high = max(members, key=lambda member: member[1])
            gap = high[1] - low[1]
            max_violation = max(max_violation, gap)
            if gap > tolerance:
                candidates.append(Witness(high[0], low[0], high[1], low[1]))
        # Stable sort keeps enumeration order among equal gaps.
        candidates.sort(key=lambda witness: -witness.gap)
        report = SymmetryReport(postulate, rule.name, tolerance, max_violation,
                                candidates[:MAX_WITNESSES], comparisons)
        logger.debug(report.summary())
        return report


def _check_rule(rule: PredictiveRule, outcome_count: int) -> None:
    if rule.outcome_count != outcome_count:
        raise InvalidInputError(f"{rule.name} has {rule.outcome_count} outcomes, check asked for {outcome_count}")


def _expand(rule: PredictiveRule, history: TypedHistory, probability: float, depth: int,
            out: List[Tuple[Tuple[int, ...], Tuple[int, ...], float]]) -> None:
    if depth == 0:
        return
    for type_ in range(history.type_space.count):
        prediction = rule.predict(history, type_)
        for outcome in range(rule.outcome_count):
            child = history.append(outcome, type_)
            child_probability = probability * float(prediction[outcome])
            out.append((child.outcomes, child.types, child_probability))
            _expand(rule, child, child_probability, depth - 1, out)


def _enumerate_joints(rule: PredictiveRule, type_count: int, length: int,
                      workers: Optional[int]) -> List[Tuple[Tuple[int, ...], Tuple[int, ...], float]]:
    """Joint probabilities of every typed sequence of length 1..length, in a fixed order.

    Subtrees under each first observation are independent; with `workers`
    they are expanded concurrently and concatenated in their natural order.
    """
    root = TypedHistory.empty(OutcomeSpace.of_size(rule.outcome_count), TypeSpace.of_size(type_count))
    first_steps = [(type_, outcome) for type_ in range(type_count) for outcome in range(rule.outcome_count)]

    def subtree(step):
        type_, outcome = step
        child = root.append(outcome, type_)
        probability = 1.0 * float(rule.predict(root, type_)[outcome])
        out = [(child.outcomes, child.types, probability)]
        _expand(rule, child, probability, length - 1, out)
        return out

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(subtree, first_steps))
    else:
        parts = [subtree(step) for step in first_steps]
    return [entry for part in parts for entry in part]


def _histories(outcome_count: int, type_count: int, max_length: int):
    for length in range(max_length + 1):
        for outcomes in product(range(outcome_count), repeat=length):
            for types in product(range(type_count), repeat=length):
                yield outcomes, types


def check_exchangeability(rule: PredictiveRule, k: int, L: int, tol: float = EXACT_TOLERANCE,
                          budget: Optional[EnumerationBudget] = None,
                          workers: Optional[int] = None) -> SymmetryReport:
    """Joint probabilities must be invariant under every permutation of the outcome sequence."""
    _check_rule(rule, k)
    (budget or EnumerationBudget()).check(k, L, 1)
    groups = _Groups()
    for outcomes, types, probability in _enumerate_joints(rule, 1, L, workers):
        probe = Probe((), (), outcomes, types, 1)
        groups.add((len(outcomes), tuple(sorted(outcomes))), probe, probability)
    return groups.report("exchangeability", rule, tol)


def _within_type_key(outcomes: Tuple[int, ...], types: Tuple[int, ...], type_count: int):
    per_type = tuple(tuple(sorted(x for x, t in zip(outcomes, types) if t == j)) for j in range(type_count))
    return types, per_type


def check_partial_exchangeability(rule: PredictiveRule, k: int, L: int, tol: float = EXACT_TOLERANCE,
                                  budget: Optional[EnumerationBudget] = None,
                                  workers: Optional[int] = None) -> SymmetryReport:
    """Joints must be invariant under permutations that move outcomes only among positions of one type."""
    _check_rule(rule, k)
    type_count = 2
    (budget or EnumerationBudget()).check(k, L, type_count)
    groups = _Groups()
    for outcomes, types, probability in _enumerate_joints(rule, type_count, L, workers):
        probe = Probe((), (), outcomes, types, type_count)
        groups.add(_within_type_key(outcomes, types, type_count), probe, probability)
    return groups.report("partial_exchangeability", rule, tol)


class _MemoPredictor:
    """Caches predictions by (history, next type) within a single check."""

    def __init__(self, rule: PredictiveRule, type_count: int):
        self.rule = rule
        self.outcome_space = OutcomeSpace.of_size(rule.outcome_count)
        self.type_space = TypeSpace.of_size(type_count)
        self._cache: Dict[Tuple, np.ndarray] = {}

    def __call__(self, outcomes: Tuple[int, ...], types: Tuple[int, ...], next_type: int,
                 future_types: Tuple[int, ...] = ()) -> np.ndarray:
        key = (outcomes, types, next_type, future_types)
        if key not in self._cache:
            history = TypedHistory(self.outcome_space, self.type_space, outcomes, types)
            self._cache[key] = self.rule.predict(history, next_type, future_types)
        return self._cache[key]

    def continuation(self, outcomes, types, steps: Sequence[Tuple[int, int]]) -> float:
        probability = 1.0
        for outcome, type_ in steps:
            probability *= float(self(outcomes, types, type_)[outcome])
            outcomes = outcomes + (outcome,)
            types = types + (type_,)
        return probability


def check_generalized_partial_exchangeability(rule: PredictiveRule, k: int, L: int, tol: float = EXACT_TOLERANCE,
                                              budget: Optional[EnumerationBudget] = None,
                                              strict: bool = False) -> SymmetryReport:
    """Swap invariance of continuations after every history.

    Three-step continuations (i, k, j) at types (s, t, s) must match (j, k, i)
    whenever k differs from both i and j; two-step same-type continuations
    (i, j) at (s, s) must match (j, i). With `strict`, the three-step swap is
    also demanded when k equals i or j.
    """
    _check_rule(rule, k)
    type_count = 2
    if L < 2:
        raise InvalidInputError("generalized partial exchangeability needs L >= 2")
    (budget or EnumerationBudget()).check(k, L, type_count)
    predictor = _MemoPredictor(rule, type_count)
    groups = _Groups()
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]

    for outcomes, types in _histories(k, type_count, L - 2):
        for (i, j), s in product(pairs, range(type_count)):
            left = ((i, s), (j, s))
            right = ((j, s), (i, s))
            key = ("two-step", outcomes, types, i, j, s)
            for steps in (left, right):
                probe = Probe(outcomes, types, tuple(x for x, _ in steps), tuple(t for _, t in steps), type_count)
                groups.add(key, probe, predictor.continuation(outcomes, types, steps))

        if len(outcomes) > L - 3:
            continue
        for (i, j), middle, s, t in product(pairs, range(k), range(type_count), range(type_count)):
            if not strict and middle in (i, j):
                continue
            left = ((i, s), (middle, t), (j, s))
            right = ((j, s), (middle, t), (i, s))
            key = ("three-step", outcomes, types, i, middle, j, s, t)
            for steps in (left, right):
                probe = Probe(outcomes, types, tuple(x for x, _ in steps), tuple(t_ for _, t_ in steps), type_count)
                groups.add(key, probe, predictor.continuation(outcomes, types, steps))

    name = "generalized_partial_exchangeability" + ("_strict" if strict else "")
    return groups.report(name, rule, tol)


def check_sufficientness(rule: PredictiveRule, variant: str, k: int, L: int, tol: float = EXACT_TOLERANCE,
                         budget: Optional[EnumerationBudget] = None) -> SymmetryReport:
    """Predictions must agree across histories sharing the relevant count statistics.

    `classic` groups type-free histories by (i, n_i, n); `modified` groups
    two-type histories by (i, next type, n_i1, n_i2, N_1, N_2).
    """
    if variant not in (CLASSIC, MODIFIED):
        raise InvalidInputError(f"variant must be {CLASSIC!r} or {MODIFIED!r}, got {variant!r}")
    _check_rule(rule, k)
    type_count = 1 if variant == CLASSIC else 2
    (budget or EnumerationBudget()).check(k, L, type_count)
    predictor = _MemoPredictor(rule, type_count)
    groups = _Groups()
    for outcomes, types in _histories(k, type_count, L):
        counts = counts_from_history(TypedHistory(predictor.outcome_space, predictor.type_space, outcomes, types))
        for next_type in range(type_count):
            prediction = predictor(outcomes, types, next_type)
            for i in range(k):
                if variant == CLASSIC:
                    key = (i, int(counts.n_i[i]), counts.n)
                else:
                    key = (i, next_type, *map(int, counts.n_ij[i]), *map(int, counts.N_j))
                probe = Probe(outcomes, types, (i,), (next_type,), type_count)
                groups.add(key, probe, float(prediction[i]))
    return groups.report(f"sufficientness_{variant}", rule, tol)


def check_future_type_independence(rule: PredictiveRule, k: int, L: int, tol: float = EXACT_TOLERANCE,
                                   budget: Optional[EnumerationBudget] = None) -> SymmetryReport:
    """The next prediction must not change when 1 or 2 later types are stipulated."""
    _check_rule(rule, k)
    type_count = 2
    (budget or EnumerationBudget()).check(k, L, type_count)
    predictor = _MemoPredictor(rule, type_count)
    stipulations = [()] + [(u,) for u in range(type_count)] + list(product(range(type_count), repeat=2))
    groups = _Groups()
    for outcomes, types in _histories(k, type_count, max(L - 3, 0)):
        for next_type in range(type_count):
            for future in stipulations:
                prediction = predictor(outcomes, types, next_type, future)
                for i in range(k):
                    probe = Probe(outcomes, types, (i,), (next_type,), type_count, future)
                    groups.add((outcomes, types, next_type, i), probe, float(prediction[i]))
    return groups.report("future_type_independence", rule, tol)


@dataclass(frozen=True)
class StreamConfig:
    """An i.i.d. type process with i.i.d. outcomes per type.

    `outcome_frequencies[j]` is the outcome distribution of type j.
    """

    type_probabilities: Tuple[float, ...]
    outcome_frequencies: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        probabilities = as_simplex(self.type_probabilities, tolerance=1e-9)
        if np.any(probabilities <= 0.0):
            raise InvalidInputError("every type needs positive probability")
        if len(self.outcome_frequencies) != probabilities.size:
            raise InvalidInputError(
                f"{probabilities.size} types but {len(self.outcome_frequencies)} outcome frequency rows"
            )
        rows = tuple(tuple(float(f) for f in as_simplex(row, tolerance=1e-9)) for row in self.outcome_frequencies)
        if len({len(row) for row in rows}) != 1:
            raise InvalidInputError("every type needs frequencies over the same outcomes")
        object.__setattr__(self, "type_probabilities", tuple(float(p) for p in probabilities))
        object.__setattr__(self, "outcome_frequencies", rows)

    @property
    def type_count(self) -> int:
        return len(self.type_probabilities)

    @property
    def outcome_count(self) -> int:
        return len(self.outcome_frequencies[0])

    def sample(self, horizon: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Draw (outcomes, types) arrays of length `horizon`."""
        types = rng.choice(self.type_count, size=horizon, p=np.asarray(self.type_probabilities))
        draws = np.stack([rng.choice(self.outcome_count, size=horizon, p=np.asarray(row))
                          for row in self.outcome_frequencies])
        return draws[types, np.arange(horizon)], types


@dataclass(frozen=True)
class ReichenbachReport:
    """Predictive trajectory of a rule against two candidate limits.

    `trajectory` has one row per (checkpoint, type, outcome) with the
    predictive, the empirical per-type frequency and the rule's own limit
    candidate (NaN when the rule has none).
    """

    rule: str
    trajectory: pd.DataFrame
    reichenbach_gap: float
    convex_gap: float
    approaches: str


def checkpoint_steps(horizon: int, count: int = DEFAULT_CHECKPOINTS) -> np.ndarray:
    return np.unique(np.geomspace(min(100, horizon), horizon, count).astype(np.int64))


def estimate_reichenbach_limit(rule: PredictiveRule, stream: StreamConfig, horizon: int, seed: int,
                               checkpoints: int = DEFAULT_CHECKPOINTS) -> ReichenbachReport:
    """Simulate the stream and follow the rule's predictions at logarithmic checkpoints."""
    if horizon < MIN_HORIZON:
        raise InvalidInputError(f"horizon must be at least {MIN_HORIZON}, got {horizon}")
    if stream.outcome_count != rule.outcome_count:
        raise InvalidInputError(f"stream has {stream.outcome_count} outcomes, {rule.name} has {rule.outcome_count}")
    outcomes, types = stream.sample(horizon, make_rng(seed))
    outcome_space = OutcomeSpace.of_size(rule.outcome_count)
    type_space = TypeSpace.of_size(max(stream.type_count, rule.type_count))
    m = stream.type_count

    rows = []
    for step in checkpoint_steps(horizon, checkpoints):
        history = TypedHistory(outcome_space, type_space, outcomes[:step].tolist(), types[:step].tolist())
        n_ij = counts_from_history(history).n_ij[:, :m].astype(float)
        totals = n_ij.sum(axis=0)
        complete = bool(np.all(totals > 0)) and m >= rule.type_count
        frequencies = n_ij / np.where(totals > 0, totals, 1.0)
        ratios = totals / totals.sum()
        for type_ in range(m):
            if totals[type_] == 0:
                continue
            prediction = rule.predict(history, type_)
            candidate = rule.limit_candidate(frequencies, ratios, type_) if complete else None
            for outcome in range(rule.outcome_count):
                rows.append({
                    "step": int(step),
                    "type": type_,
                    "outcome": outcome,
                    "predictive": float(prediction[outcome]),
                    "frequency": float(frequencies[outcome, type_]),
                    "convex_limit": float(candidate[outcome]) if candidate is not None else np.nan,
                })

    trajectory = pd.DataFrame(rows)
    final = trajectory[trajectory["step"] == trajectory["step"].max()]
    reichenbach_gap = float((final["predictive"] - final["frequency"]).abs().max())
    convex_gap = float((final["predictive"] - final["convex_limit"]).abs().max())
    if np.isnan(convex_gap) or reichenbach_gap <= convex_gap:
        approaches = "reichenbach"
    else:
        approaches = "convex_combination"
    logger.info(f"{rule.name}: horizon {horizon}, frequency gap {reichenbach_gap:.2e}, "
                f"convex gap {convex_gap:.2e}, approaches {approaches}")
    return ReichenbachReport(rule.name, trajectory, reichenbach_gap, convex_gap, approaches)
