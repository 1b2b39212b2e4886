"""
Experiment configuration and task execution for the inductive-logic harness.
Parses the versioned YAML schema, builds rules and runs predict/simulate/audit/converge/compare.
"""

import copy
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from analogy import AnalogicalRule, AnalogyParams, urn_simulate
from carnap import CarnapParams, CarnapRule, LambdaGamma, lambda_gamma_to_alpha
from core import (
    CountRule,
    CountStatistics,
    InvalidInputError,
    OutcomeSpace,
    PredictiveRule,
    TypedHistory,
    TypeProcess,
    TypeSpace,
    make_rng,
    sample_sequence,
    spawn_rngs,
)
from mixtures import MaherParams, MaherRule, MixtureModel, SkyrmsRule
from symmetry import (
    CLASSIC,
    EXACT_TOLERANCE,
    MODIFIED,
    EnumerationBudget,
    StreamConfig,
    SymmetryReport,
    check_exchangeability,
    check_future_type_independence,
    check_generalized_partial_exchangeability,
    check_partial_exchangeability,
    check_sufficientness,
    checkpoint_steps,
    estimate_reichenbach_limit,
)
from utils import load_history_csv

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RULE_KINDS = ("carnap", "analogical", "skyrms", "maher")
TASKS = ("predict", "simulate", "audit", "converge", "compare")
STOCHASTIC_TASKS = ("simulate", "converge", "compare")


class ConfigError(InvalidInputError):
    """The experiment configuration violates its schema."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


@contextmanager
def _parsing(field_name: str) -> Iterator[None]:
    """Report a malformed value as a ConfigError naming its field."""
    try:
        yield
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{field_name}: {e}") from None


def _sequence(value: Any) -> Sequence[Any]:
    if not isinstance(value, (list, tuple)):
        raise TypeError(f"expected a list, got {type(value).__name__} {value!r}")
    return value


def _integer(raw: Dict[str, Any], name: str, default: Optional[int], section: str) -> Optional[int]:
    value = raw.get(name, default)
    if value is None:
        return None
    with _parsing(f"{section}.{name}"):
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)


@dataclass(frozen=True)
class RuleSpec:
    """A named rule of one kind with its raw parameters."""

    kind: str
    name: str
    params: Dict[str, Any] = field(default_factory=dict)

    def build(self) -> PredictiveRule:
        """Instantiate the rule; parameter invariants are checked here."""
        p = self.params
        if self.kind == "carnap":
            if "alpha" in p:
                params = CarnapParams(p["alpha"])
            else:
                _require("lambda" in p and "gamma" in p, f"{self.name}: carnap needs alpha or lambda and gamma")
                params = lambda_gamma_to_alpha(LambdaGamma(p["lambda"], p["gamma"]))
            return CarnapRule(params, self.name)
        if self.kind == "analogical":
            _require("alpha" in p, f"{self.name}: analogical needs an alpha matrix")
            params = AnalogyParams(p["alpha"], p.get("beta", 0.0), p.get("gamma", 0.0),
                                   bool(p.get("self_analogy_bound", False)))
            return AnalogicalRule(params, self.name)
        if self.kind == "skyrms":
            _require("components" in p, f"{self.name}: skyrms needs components")
            components = [CarnapParams(alpha) for alpha in p["components"]]
            weights = p.get("weights")
            model = MixtureModel.uniform(components) if weights is None else MixtureModel(tuple(components), weights)
            return SkyrmsRule(model, self.name)
        if self.kind == "maher":
            params = MaherParams(p.get("weight", 0.5), CarnapParams(p.get("alpha4", (1.0,) * 4)),
                                 CarnapParams(p.get("alpha_v", (1.0,) * 2)), CarnapParams(p.get("alpha_w", (1.0,) * 2)))
            return MaherRule(params, self.name)
        raise ConfigError(f"{self.name}: unknown rule kind {self.kind!r}; expected one of {RULE_KINDS}")

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "name": self.name, **copy.deepcopy(self.params)}


@dataclass(frozen=True)
class ProcessSpec:
    """Type process, per-type outcome frequencies, horizon and seed."""

    type_probabilities: Optional[Tuple[float, ...]] = None
    outcome_frequencies: Optional[Tuple[Tuple[float, ...], ...]] = None
    type_pattern: Optional[Tuple[str, ...]] = None
    horizon: int = 10_000
    checkpoints: int = 20
    seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"horizon": self.horizon, "checkpoints": self.checkpoints, "seed": self.seed}
        if self.type_probabilities is not None:
            data["type_probabilities"] = list(self.type_probabilities)
        if self.outcome_frequencies is not None:
            data["outcome_frequencies"] = [list(row) for row in self.outcome_frequencies]
        if self.type_pattern is not None:
            data["type_pattern"] = list(self.type_pattern)
        return data


@dataclass(frozen=True)
class AuditSpec:
    """Enumeration length, tolerance and optional budget overrides for the audit task."""

    length: int = 5
    tolerance: float = EXACT_TOLERANCE
    max_outcomes: Optional[int] = None
    max_length: Optional[int] = None
    max_nodes: Optional[int] = None

    def budget(self) -> EnumerationBudget:
        base = EnumerationBudget.from_env()
        return EnumerationBudget(
            max_outcomes=self.max_outcomes if self.max_outcomes is not None else base.max_outcomes,
            max_length=self.max_length if self.max_length is not None else base.max_length,
            max_nodes=self.max_nodes if self.max_nodes is not None else base.max_nodes,
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"length": self.length, "tolerance": self.tolerance}
        for name in ("max_outcomes", "max_length", "max_nodes"):
            if getattr(self, name) is not None:
                data[name] = getattr(self, name)
        return data


@dataclass(frozen=True)
class ExperimentConfig:
    """The whole experiment: spaces, rules, process, optional history, audit settings, output."""

    outcomes: Tuple[str, ...]
    types: Tuple[str, ...]
    rules: Tuple[RuleSpec, ...]
    process: ProcessSpec = ProcessSpec()
    history: Tuple[Tuple[str, str], ...] = ()
    history_csv: Optional[str] = None
    audit: AuditSpec = AuditSpec()
    output: str = "results"
    schema_version: int = SCHEMA_VERSION

    @property
    def outcome_space(self) -> OutcomeSpace:
        return OutcomeSpace(self.outcomes)

    @property
    def type_space(self) -> TypeSpace:
        return TypeSpace(self.types)

    def build_rules(self) -> List[PredictiveRule]:
        return [spec.build() for spec in self.rules]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """Parse and validate a config mapping; every violation raises ConfigError."""
        _require(isinstance(data, dict), "config must be a mapping")
        _require(data.get("schema_version") == SCHEMA_VERSION,
                 f"schema_version: expected {SCHEMA_VERSION}, got {data.get('schema_version')!r}")
        known = {"schema_version", "outcomes", "types", "rules", "process", "history", "history_csv", "audit", "output"}
        unknown = sorted(set(data) - known)
        _require(not unknown, f"unknown top-level keys: {unknown}")

        with _parsing("outcomes"):
            outcomes = tuple(str(label) for label in _sequence(data.get("outcomes") or ()))
            outcome_space = OutcomeSpace(outcomes)
        with _parsing("types"):
            types = tuple(str(label) for label in _sequence(data.get("types") or ("type1",)))
            type_space = TypeSpace(types)

        raw_rules = data.get("rules") or []
        _require(isinstance(raw_rules, list) and raw_rules, "rules: at least one rule is required")
        rules = []
        for index, raw in enumerate(raw_rules):
            _require(isinstance(raw, dict) and "kind" in raw, f"rules[{index}]: needs a kind")
            raw = copy.deepcopy(raw)
            kind = raw.pop("kind")
            _require(kind in RULE_KINDS, f"rules[{index}].kind: {kind!r} not in {RULE_KINDS}")
            name = str(raw.pop("name", kind))
            rules.append(RuleSpec(kind, name, raw))
        names = [rule.name for rule in rules]
        _require(len(set(names)) == len(names), f"rules: names must be unique, got {names}")

        process = cls._parse_process(data.get("process") or {}, len(types), types)
        audit = cls._parse_audit(data.get("audit") or {})
        with _parsing("history"):
            history = tuple((str(o), str(t)) for o, t in _sequence(data.get("history") or ()))
            TypedHistory.from_labels(outcome_space, type_space, history)

        config = cls(outcomes, types, tuple(rules), process, history, data.get("history_csv"),
                     audit, str(data.get("output", "results")))
        config._validate_rules()
        return config

    @staticmethod
    def _parse_process(raw: Dict[str, Any], type_count: int, types: Tuple[str, ...]) -> ProcessSpec:
        _require(isinstance(raw, dict), "process: must be a mapping")
        probabilities = raw.get("type_probabilities")
        frequencies = raw.get("outcome_frequencies")
        pattern = raw.get("type_pattern")
        if probabilities is not None:
            with _parsing("process.type_probabilities"):
                probabilities = tuple(float(p) for p in _sequence(probabilities))
                _require(len(probabilities) == type_count, "process.type_probabilities: one entry per type")
                TypeProcess(probabilities)
        if frequencies is not None:
            with _parsing("process.outcome_frequencies"):
                frequencies = tuple(tuple(float(f) for f in _sequence(row)) for row in _sequence(frequencies))
                _require(len(frequencies) == type_count, "process.outcome_frequencies: one row per type")
        if pattern is not None:
            with _parsing("process.type_pattern"):
                pattern = tuple(str(label) for label in _sequence(pattern))
            unknown = sorted(set(pattern) - set(types))
            _require(pattern and not unknown, f"process.type_pattern: unknown or empty type labels {unknown}")
        horizon = _integer(raw, "horizon", 10_000, "process")
        checkpoints = _integer(raw, "checkpoints", 20, "process")
        _require(horizon >= 1, "process.horizon: must be positive")
        _require(checkpoints >= 1, "process.checkpoints: must be positive")
        seed = _integer(raw, "seed", None, "process")
        if seed is not None:
            _require(seed >= 0, "process.seed: must be a nonnegative integer")
        return ProcessSpec(probabilities, frequencies, pattern, horizon, checkpoints, seed)

    @staticmethod
    def _parse_audit(raw: Dict[str, Any]) -> AuditSpec:
        _require(isinstance(raw, dict), "audit: must be a mapping")
        length = _integer(raw, "length", 5, "audit")
        with _parsing("audit.tolerance"):
            tolerance = float(raw.get("tolerance", EXACT_TOLERANCE))
        _require(length >= 2, "audit.length: must be at least 2")
        _require(tolerance >= 0.0, "audit.tolerance: must be nonnegative")
        overrides = {name: _integer(raw, name, None, "audit") for name in ("max_outcomes", "max_length", "max_nodes")
                     if name in raw}
        return AuditSpec(length, tolerance, **overrides)

    def _validate_rules(self) -> None:
        for spec in self.rules:
            with _parsing(f"rules.{spec.name}"):
                rule = spec.build()
            _require(rule.outcome_count == len(self.outcomes),
                     f"rules.{spec.name}: rule has {rule.outcome_count} outcomes, config lists {len(self.outcomes)}")
            _require(rule.type_count == 1 or rule.type_count == len(self.types),
                     f"rules.{spec.name}: rule needs {rule.type_count} types, config lists {len(self.types)}")

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "schema_version": self.schema_version,
            "outcomes": list(self.outcomes),
            "types": list(self.types),
            "rules": [rule.to_dict() for rule in self.rules],
            "process": self.process.to_dict(),
            "audit": self.audit.to_dict(),
            "output": self.output,
        }
        if self.history:
            data["history"] = [list(pair) for pair in self.history]
        if self.history_csv is not None:
            data["history_csv"] = self.history_csv
        return data


def load_config(path: str) -> ExperimentConfig:
    """Read a YAML config file."""
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path} is not valid YAML: {e}") from None
    return ExperimentConfig.from_dict(data)


@dataclass
class TaskResult:
    """Artifacts of one task, held in memory until the task has fully succeeded."""

    task: str
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    documents: Dict[str, Any] = field(default_factory=dict)
    summary: str = ""


class ExperimentRunner:
    """Executes tasks for one config, keeping an execution history like a workflow engine."""

    def __init__(self, config: ExperimentConfig, seed: Optional[int] = None,
                 tolerance: Optional[float] = None):
        self.config = config
        self.seed = seed if seed is not None else config.process.seed
        self.tolerance = tolerance if tolerance is not None else config.audit.tolerance
        self.rules = config.build_rules()
        self.execution_history: List[Dict[str, Any]] = []

    def run(self, task: str) -> TaskResult:
        _require(task in TASKS, f"task: {task!r} not in {TASKS}")
        if task in STOCHASTIC_TASKS:
            _require(self.seed is not None, f"process.seed: a seed is required for the {task} task")
        context = {"task": task, "status": "running"}
        self.execution_history.append(context)
        logger.info(f"Running {task} with {len(self.rules)} rule(s)")
        try:
            result = getattr(self, f"_run_{task}")()
        except Exception as e:
            context["status"] = "error"
            context["error"] = str(e)
            raise
        context["status"] = "completed"
        return result

    def _history(self) -> TypedHistory:
        outcome_space, type_space = self.config.outcome_space, self.config.type_space
        if self.config.history_csv:
            return load_history_csv(self.config.history_csv, outcome_space, type_space)
        return TypedHistory.from_labels(outcome_space, type_space, self.config.history)

    def _stream(self) -> StreamConfig:
        process = self.config.process
        _require(process.outcome_frequencies is not None, "process.outcome_frequencies: required for this task")
        type_count = len(self.config.types)
        probabilities = process.type_probabilities or (1.0 / type_count,) * type_count
        try:
            return StreamConfig(probabilities, process.outcome_frequencies)
        except InvalidInputError as e:
            raise ConfigError(f"process: {e}") from None

    def _run_predict(self) -> TaskResult:
        history = self._history()
        labels = self.config.outcomes
        rows = []
        for rule in self.rules:
            for type_, type_label in enumerate(self.config.types):
                prediction = rule.predict(history, type_)
                row = {"rule": rule.name, "next_type": type_label, "history_length": len(history)}
                row.update({f"pred_{label}": float(p) for label, p in zip(labels, prediction)})
                rows.append(row)
        summary = f"{len(rows)} predictive rows after {len(history)} observations"
        return TaskResult("predict", tables={"predict.csv": pd.DataFrame(rows)}, summary=summary)

    def _simulation_rngs(self) -> Tuple[np.random.Generator, np.random.Generator]:
        """Independent type and outcome streams, recreated fresh on every call."""
        type_rng, outcome_rng = spawn_rngs(self.seed, 2)
        return type_rng, outcome_rng

    def _type_sequence(self) -> np.ndarray:
        process = self.config.process
        if process.type_pattern is not None:
            pattern = [self.config.types.index(label) for label in process.type_pattern]
            return np.resize(np.asarray(pattern, dtype=np.int64), process.horizon)
        type_count = len(self.config.types)
        probabilities = process.type_probabilities or (1.0 / type_count,) * type_count
        type_rng, _ = self._simulation_rngs()
        return TypeProcess(probabilities).sample(process.horizon, type_rng)

    def _trace(self, rule: PredictiveRule, outcomes, types) -> pd.DataFrame:
        """Predictions before each step alongside the observed outcome."""
        outcome_space, type_space = self.config.outcome_space, self.config.type_space
        rows = []
        counts = CountStatistics.zeros(outcome_space.count, type_space.count)
        history = TypedHistory.empty(outcome_space, type_space)
        for step, (outcome, type_) in enumerate(zip(outcomes, types)):
            if isinstance(rule, CountRule):
                prediction = rule.predict_counts(counts, int(type_))
                counts = counts.add(int(outcome), int(type_))
            else:
                prediction = rule.predict(history, int(type_))
                history = history.append(int(outcome), int(type_))
            row = {"step": step, "type": self.config.types[type_], "outcome": self.config.outcomes[outcome]}
            row.update({f"pred_{i}": float(p) for i, p in enumerate(prediction)})
            rows.append(row)
        return pd.DataFrame(rows)

    def _run_simulate(self) -> TaskResult:
        types = self._type_sequence()
        tables = {}
        for rule in self.rules:
            _, outcome_rng = self._simulation_rngs()
            if isinstance(rule, AnalogicalRule):
                outcomes = urn_simulate(rule.params, types, outcome_rng)
            else:
                outcomes = sample_sequence(rule, types, outcome_rng)
            tables[f"simulate_{rule.name}.csv"] = self._trace(rule, outcomes, types)
        summary = f"{len(types)} steps for {len(self.rules)} rule(s), seed {self.seed}"
        return TaskResult("simulate", tables=tables, summary=summary)

    def _audit_rule(self, rule: PredictiveRule) -> List[SymmetryReport]:
        k = rule.outcome_count
        length = self.config.audit.length
        budget = self.config.audit.budget()
        tol = self.tolerance
        if rule.type_count == 1:
            return [
                check_exchangeability(rule, k, length, tol, budget),
                check_sufficientness(rule, CLASSIC, k, length, tol, budget),
                check_future_type_independence(rule, k, length, tol, budget),
            ]
        return [
            check_partial_exchangeability(rule, k, length, tol, budget),
            check_generalized_partial_exchangeability(rule, k, length, tol, budget),
            check_sufficientness(rule, MODIFIED, k, length, tol, budget),
            check_future_type_independence(rule, k, length, tol, budget),
        ]

    def _run_audit(self) -> TaskResult:
        reports = [report for rule in self.rules for report in self._audit_rule(rule)]
        table = pd.DataFrame([
            {
                "rule": r.rule,
                "postulate": r.postulate,
                "tolerance": r.tolerance,
                "max_violation": r.max_violation,
                "passed": "PASS" if r.passed else "FAIL",
                "witnesses": len(r.witnesses),
            }
            for r in reports
        ])
        failed = sum(not r.passed for r in reports)
        summary = f"{len(reports) - failed} passed, {failed} failed"
        for report in reports:
            logger.info(report.summary())
        return TaskResult("audit", tables={"audit.csv": table},
                          documents={"audit.yaml": [r.to_record() for r in reports]}, summary=summary)

    def _run_converge(self) -> TaskResult:
        stream = self._stream()
        process = self.config.process
        frames = []
        verdicts = []
        for rule in self.rules:
            report = estimate_reichenbach_limit(rule, stream, process.horizon, self.seed, process.checkpoints)
            frame = report.trajectory.copy()
            frame.insert(0, "rule", rule.name)
            frame["type"] = [self.config.types[t] for t in frame["type"]]
            frame["outcome"] = [self.config.outcomes[o] for o in frame["outcome"]]
            frames.append(frame)
            verdicts.append(f"{rule.name}->{report.approaches}")
        summary = f"horizon {process.horizon}, " + ", ".join(verdicts)
        return TaskResult("converge", tables={"converge.csv": pd.concat(frames, ignore_index=True)}, summary=summary)

    def _run_compare(self) -> TaskResult:
        _require(len(self.rules) >= 2, "rules: compare needs at least two rules")
        stream = self._stream()
        process = self.config.process
        outcomes, types = stream.sample(process.horizon, make_rng(self.seed))
        outcome_space, type_space = self.config.outcome_space, self.config.type_space
        rows = []
        for step in checkpoint_steps(process.horizon, process.checkpoints):
            history = TypedHistory(outcome_space, type_space, outcomes[:step].tolist(), types[:step].tolist())
            for type_, type_label in enumerate(self.config.types):
                row: Dict[str, Any] = {"step": int(step), "type": type_label}
                for rule in self.rules:
                    prediction = rule.predict(history, type_)
                    row.update({f"{rule.name}_pred_{label}": float(p)
                                for label, p in zip(self.config.outcomes, prediction)})
                rows.append(row)
        summary = f"{len(self.rules)} rules over {process.horizon} steps, seed {self.seed}"
        return TaskResult("compare", tables={"compare.csv": pd.DataFrame(rows)}, summary=summary)
