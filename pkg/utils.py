"""
Utility functions for the inductive-logic harness.
Includes history CSV loading, atomic artifact export and run summaries.
"""

import os
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, TextIO, Tuple

import pandas as pd
import yaml

from core import InvalidInputError, OutcomeSpace, TypedHistory, TypeSpace

HISTORY_COLUMNS = ("step", "outcome_label", "type_label")


def load_history_csv(path: str, outcome_space: OutcomeSpace, type_space: TypeSpace) -> TypedHistory:
    """Read a `step,outcome_label,type_label` file into a typed history."""
    try:
        frame = pd.read_csv(path, dtype={"outcome_label": str, "type_label": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InvalidInputError(f"cannot read history {path}: {e}") from None
    missing = [column for column in HISTORY_COLUMNS if column not in frame.columns]
    if missing:
        raise InvalidInputError(f"history {path} lacks columns {missing}")
    frame = frame.sort_values("step", kind="stable")
    pairs = list(zip(frame["outcome_label"], frame["type_label"]))
    return TypedHistory.from_labels(outcome_space, type_space, pairs)


def history_to_dataframe(history: TypedHistory) -> pd.DataFrame:
    return pd.DataFrame(history.to_rows(), columns=list(HISTORY_COLUMNS))


def _discard(paths) -> None:
    for tmp in paths:
        if os.path.exists(tmp):
            os.remove(tmp)


def _stage(path: Path, write: Callable[[TextIO], None]) -> str:
    """Write into a temporary file beside `path` and return its name."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            write(f)
    except BaseException:
        _discard([tmp])
        raise
    return tmp


def _csv_writer(frame: pd.DataFrame) -> Callable[[TextIO], None]:
    return lambda f: frame.to_csv(f, index=False, float_format="%.17g")


def _yaml_writer(document: Any) -> Callable[[TextIO], None]:
    return lambda f: yaml.safe_dump(document, f, sort_keys=False, default_flow_style=False)


def _commit(staged: List[Tuple[str, Path]]) -> List[Path]:
    try:
        for tmp, target in staged:
            os.replace(tmp, target)
    finally:
        _discard(tmp for tmp, _ in staged)
    return [target for _, target in staged]


def export_to_csv(frame: pd.DataFrame, path: str) -> Path:
    """Write a table so the destination is either complete or untouched."""
    target = Path(path)
    return _commit([(_stage(target, _csv_writer(frame)), target)])[0]


def export_to_yaml(document: Any, path: str) -> Path:
    target = Path(path)
    return _commit([(_stage(target, _yaml_writer(document)), target)])[0]


def write_artifacts(out_dir: str, tables: Dict[str, pd.DataFrame], documents: Dict[str, Any]) -> List[Path]:
    """Export every table and document of a finished task into `out_dir`.

    All files are staged before any is renamed into place, so a failed write
    leaves none of them behind.
    """
    writers = [(name, _csv_writer(frame)) for name, frame in tables.items()]
    writers += [(name, _yaml_writer(document)) for name, document in documents.items()]
    staged: List[Tuple[str, Path]] = []
    try:
        for name, write in writers:
            target = Path(out_dir) / name
            staged.append((_stage(target, write), target))
    except BaseException:
        _discard(tmp for tmp, _ in staged)
        raise
    return _commit(staged)


def format_probability(value: float, digits: int = 4) -> str:
    return f"{value:.{digits}f}"


def generate_run_summary(task: str, summary: str, artifacts: List[Path]) -> str:
    """One line for stdout describing a finished run."""
    names = ", ".join(path.name for path in artifacts) or "no artifacts"
    return f"[{datetime.now().strftime('%Y-%m-%d %H:%M:%S')}] {task}: {summary} ({names})"
