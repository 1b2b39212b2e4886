"""
Carnap's basic system of inductive logic (the generalized rule of succession).
Includes the lambda-gamma continuum, Polya sequence probabilities and a Monte Carlo
check of the Dirichlet mixture representation.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from core import (
    CountRule,
    CountStatistics,
    InvalidInputError,
    NumericalDegeneracyError,
    SimplexVector,
    as_simplex,
    pooled_limit,
    spawn_rngs,
)

logger = logging.getLogger(__name__)

MC_CHUNK_SIZE = 100_000


def _as_weights(values, what: str) -> Tuple[float, ...]:
    weights = np.asarray(values, dtype=float)
    if weights.ndim != 1 or weights.size < 2:
        raise InvalidInputError(f"{what}: need one weight per outcome and at least 2 outcomes")
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
        raise InvalidInputError(f"{what}: all entries must be positive")
    return tuple(float(w) for w in weights)


@dataclass(frozen=True)
class CarnapParams:
    """Per-outcome prior weights alpha_j of the basic system (all positive)."""

    alpha: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_weights(self.alpha, "alpha"))

    @classmethod
    def uniform(cls, outcome_count: int, weight: float) -> "CarnapParams":
        """Carnap's continuum with equal prior probabilities and total weight lambda."""
        return cls((weight / outcome_count,) * outcome_count)

    @classmethod
    def laplace(cls, outcome_count: int = 2) -> "CarnapParams":
        return cls((1.0,) * outcome_count)

    @property
    def outcome_count(self) -> int:
        return len(self.alpha)

    @property
    def total(self) -> float:
        return float(sum(self.alpha))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)


@dataclass(frozen=True)
class LambdaGamma:
    """Carnap's parameterization: a weight lambda and prior outcome probabilities gamma."""

    lam: float
    gamma: Tuple[float, ...]

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0.0:
            raise InvalidInputError(f"lambda must be positive, got {self.lam}")
        gamma = as_simplex(self.gamma)
        if np.any(gamma <= 0.0):
            raise InvalidInputError("gamma must give every outcome positive probability")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "gamma", tuple(float(g) for g in gamma))


def lambda_gamma_to_alpha(lg: LambdaGamma) -> CarnapParams:
    return CarnapParams(tuple(lg.lam * g for g in lg.gamma))


def alpha_to_lambda_gamma(params: CarnapParams) -> LambdaGamma:
    total = params.total
    return LambdaGamma(total, tuple(a / total for a in params.alpha))


def _check_counts(counts: CountStatistics, params: CarnapParams) -> None:
    if counts.outcome_count != params.outcome_count:
        raise InvalidInputError(
            f"counts cover {counts.outcome_count} outcomes but alpha has {params.outcome_count}"
        )


def carnap_predict(counts: CountStatistics, params: CarnapParams) -> SimplexVector:
    """(n_i + alpha_i) / (n + sum_j alpha_j), using counts pooled over types."""
    _check_counts(counts, params)
    alpha = params.as_array()
    return as_simplex((counts.n_i + alpha) / (counts.n + alpha.sum()))


def rising_factorial(x: float, m: int) -> float:
    """x (x + 1) ... (x + m - 1); equals 1 for m = 0."""
    return float(np.exp(gammaln(x + m) - gammaln(x))) if m else 1.0


def log_polya_from_counts(n_i: np.ndarray, alpha: np.ndarray) -> float:
    """Log of prod_i alpha_i^(n_i) / (sum alpha)^(n) via log-gamma differences."""
    n_i = np.asarray(n_i, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    return float(np.sum(gammaln(alpha + n_i) - gammaln(alpha))
                 - (gammaln(alpha.sum() + n_i.sum()) - gammaln(alpha.sum())))


def _outcome_counts(outcomes: Sequence[int], outcome_count: int) -> np.ndarray:
    outcomes = np.asarray(tuple(outcomes), dtype=np.int64)
    if outcomes.size and (outcomes.min() < 0 or outcomes.max() >= outcome_count):
        raise InvalidInputError(f"outcome index out of range [0, {outcome_count})")
    return np.bincount(outcomes, minlength=outcome_count)


def log_polya_sequence_probability(outcomes: Sequence[int], params: CarnapParams) -> float:
    return log_polya_from_counts(_outcome_counts(outcomes, params.outcome_count), params.as_array())


def polya_sequence_probability(outcomes: Sequence[int], params: CarnapParams) -> float:
    """Probability of an outcome sequence under the basic system, in closed form."""
    return float(np.exp(log_polya_sequence_probability(outcomes, params)))


class CarnapRule(CountRule):
    """The basic system as a type-blind predictive rule."""

    def __init__(self, params: CarnapParams, name: str = "carnap"):
        self.params = params
        self.name = name
        self.outcome_count = params.outcome_count
        self.type_count = 1

    def predict_counts(self, counts: CountStatistics, next_type: int) -> SimplexVector:
        return carnap_predict(counts, self.params)

    def limit_candidate(self, frequencies, type_ratios, next_type):
        return pooled_limit(frequencies, type_ratios)

    def __repr__(self) -> str:
        return f"CarnapRule(alpha={self.params.alpha})"


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A posterior-mean predictive estimate with its Monte Carlo standard error."""

    mean: np.ndarray
    stderr: np.ndarray
    samples: int

    def within(self, reference, sigmas: float = 3.0) -> bool:
        """True when every entry is within `sigmas` standard errors of `reference`."""
        return bool(np.all(np.abs(self.mean - np.asarray(reference)) <= sigmas * self.stderr))


def _weighted_moments(alpha: np.ndarray, n_i: np.ndarray, size: int, rng: np.random.Generator):
    """Log-space weight sums for one chunk, scaled by the chunk's own max log-weight."""
    theta = rng.dirichlet(alpha, size=size)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(n_i > 0, n_i * np.log(theta), 0.0)
    log_w = terms.sum(axis=1)
    top = log_w.max()
    if not np.isfinite(top):
        return -np.inf, None
    w = np.exp(log_w - top)
    w2 = w * w
    return top, (w.sum(), w @ theta, w2.sum(), w2 @ theta, w2 @ (theta * theta))


def dirichlet_mc_predictive(params: CarnapParams, counts: CountStatistics, samples: int, seed: int,
                            workers: Optional[int] = None) -> MonteCarloEstimate:
    """Estimate the Dirichlet-mixture predictive by importance weighting from the prior.

    Chance vectors are drawn from Dirichlet(alpha) and weighted by the i.i.d.
    likelihood of the pooled counts. The sample budget is split into chunks,
    each with its own generator spawned from `seed`; chunk sums are reduced in
    chunk order, so the result does not depend on `workers`.
    """
    if samples < 1:
        raise InvalidInputError("samples must be at least 1")
    _check_counts(counts, params)
    alpha = params.as_array()
    n_i = counts.n_i.astype(float)

    sizes = [MC_CHUNK_SIZE] * (samples // MC_CHUNK_SIZE)
    if samples % MC_CHUNK_SIZE:
        sizes.append(samples % MC_CHUNK_SIZE)
    rngs = spawn_rngs(seed, len(sizes))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda job: _weighted_moments(alpha, n_i, *job), zip(sizes, rngs)))
    else:
        chunks = [_weighted_moments(alpha, n_i, size, rng) for size, rng in zip(sizes, rngs)]

    tops = np.array([top for top, _ in chunks])
    if not np.any(np.isfinite(tops)):
        raise NumericalDegeneracyError("all importance weights underflowed to zero")
    global_top = tops.max()

    s_w = 0.0
    s_wt = np.zeros_like(alpha)
    s_w2 = 0.0
    s_w2t = np.zeros_like(alpha)
    s_w2tt = np.zeros_like(alpha)
    for top, sums in chunks:
        if sums is None:
            continue
        scale = np.exp(top - global_top)
        w_sum, wt_sum, w2_sum, w2t_sum, w2tt_sum = sums
        s_w += scale * w_sum
        s_wt += scale * wt_sum
        s_w2 += scale * scale * w2_sum
        s_w2t += scale * scale * w2t_sum
        s_w2tt += scale * scale * w2tt_sum

    mean = s_wt / s_w
    # Delta-method variance of the self-normalized estimator.
    spread = np.maximum(s_w2tt - 2.0 * mean * s_w2t + mean * mean * s_w2, 0.0)
    stderr = np.sqrt(spread) / s_w
    logger.debug(f"Dirichlet Monte Carlo: {samples} samples, effective size {s_w * s_w / s_w2:.1f}")
    return MonteCarloEstimate(mean=mean, stderr=stderr, samples=samples)
