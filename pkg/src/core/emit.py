import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Tuple

import numpy as np

from config.experiment import ExperimentConfig

# Column order of every CSV, after the leading seed and config_hash columns.
CSV_SCHEMAS: Dict[str, Tuple[str, ...]] = {
    "phase-sweep": (
        "c", "alpha", "label", "closed_form", "series_verdict", "series_value",
        "series_tail", "series_tail_method", "series_recurrence", "agree", "replicas", "censored",
        "mc_mean_duration", "mc_stderr_duration", "mc_capped_mean_duration",
        "mc_doubled_mean_duration", "mc_mean_change", "mc_capped_growth",
    ),
    "uniform-test": (
        "role", "n", "replicas", "ks_statistic", "p_value", "tolerance", "passed", "arcsine_ks_statistic",
    ),
    "classify": (
        "kernel", "schedule", "recurrence", "provenance", "method", "value", "tail_estimate", "tail_method",
    ),
    "excursions": (
        "step_cap", "replicas", "censored", "mean_duration", "stderr_duration",
        "capped_mean_duration", "mean_M", "stderr_M", "analytic_duration", "analytic_M",
        "z_duration", "z_M", "sandwich_violations", "tail_violations",
    ),
    "range": (
        "t", "paths", "observed", "mean_R", "min_R", "max_R", "mean_R_over_t",
        "lower_bound", "lower_violations", "upper_violations", "mean_right",
    ),
    "space": (
        "graph", "alpha", "step_cap", "replicas", "censored", "mean_duration",
        "stderr_duration", "capped_mean_duration", "analytic_duration", "z_duration",
        "mean_core_visits", "max_core_visit_gap", "max_core_visit_z", "core_visit_violations",
        "mean_core_crossings", "expected_crossings",
    ),
}


@dataclass
class ResultSet:
    """Rows of one experiment, its summary and the failed assertions."""
    experiment: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    @property
    def fields(self) -> Tuple[str, ...]:
        return CSV_SCHEMAS[self.experiment]

    @property
    def passed(self) -> bool:
        return not self.failures

    def add_row(self, **values) -> None:
        unknown = set(values) - set(self.fields)
        if unknown:
            raise KeyError(f"fields not in the {self.experiment} schema: {sorted(unknown)}")
        self.rows.append({name: values.get(name) for name in self.fields})

    def fail(self, message: str) -> None:
        self.failures.append(message)


def plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _cell(value: Any) -> str:
    value = plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(result: ResultSet, cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("seed", "config_hash") + result.fields)
    digest = cfg.config_hash
    for row in result.rows:
        writer.writerow([str(cfg.seed), digest] + [_cell(row[name]) for name in result.fields])
    return buf.getvalue()


def render_json(result: ResultSet, cfg: ExperimentConfig) -> str:
    doc = {
        "experiment": result.experiment,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash,
        "config": cfg.to_mapping(include_output=False),
        "passed": result.passed,
        "failures": list(result.failures),
        "summary": result.summary,
        "fields": list(result.fields),
        "rows": result.rows,
    }
    return json.dumps(plain(doc), indent=2, allow_nan=False) + "\n"


def emit(result: ResultSet, cfg: ExperimentConfig, fmt: str = None, out_dir: str = None) -> str:
    """
    Write the result file and return its path.

    Output depends only on the result and the config: no timestamps, fixed field
    order, so a rerun with the same seed reproduces the file byte for byte.
    """
    fmt = fmt or cfg.output.format
    out_dir = out_dir or cfg.output.dir
    if fmt == "csv":
        text = render_csv(result, cfg)
    elif fmt == "json":
        text = render_json(result, cfg)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    name = cfg.output.name or result.experiment
    path = os.path.join(out_dir, f"{name}.{fmt}")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path
