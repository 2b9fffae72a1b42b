"""
Experiment reports and run directories.

A run directory ``<out>/<experiment>-<UTC stamp>-<hash8>/`` holds

- manifest.json: config snapshot, config hash, master seed, timestamps,
  package versions and the artifact list (enough to rerun the experiment)
- summary.json: aggregates, acceptance checks and warnings
- rows.csv: one row per work item in a fixed column order
- trajectory-<name>.csv: trajectories emitted by the experiment, if any

All floats are written with repr so that reruns are byte-comparable.
"""

import csv
import json
import logging
import math
import platform
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy

from stochastic_rim.models.dynamics import Trajectory
from stochastic_rim.models.noise.path import Z0_TAIL_TOL
from stochastic_rim.models.spectral import SpectralModel
from .config import ExperimentConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
PACKAGE_NAME = "stochastic-rim"

# Row key carrying NoisePath.z0_tail_term; not written to rows.csv
TAIL_TERM_KEY = "z0_tail_term"


@dataclass
class TrajectoryExport:
    trajectory: Trajectory
    model: Optional[SpectralModel] = None
    extra: Dict[str, Sequence[float]] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    """Result of one experiment run."""

    experiment: str

    # Column order of rows.csv
    columns: List[str]

    # One dict per (path, ...) work item; only the keys in columns are written
    rows: List[Dict[str, Any]]

    # Empirical probabilities, fitted constants and rates, KS statistics
    aggregates: Dict[str, Any]

    # Acceptance thresholds evaluated on the aggregates
    checks: Dict[str, bool]

    # Validated config snapshot
    config: Dict[str, Any]

    # Master seed, path count and stream layout
    seed_manifest: Dict[str, Any]

    warnings: List[str] = field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""
    wall_clock: float = 0.0
    trajectories: Dict[str, TrajectoryExport] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def column(self, name: str, rows: Optional[List[Dict[str, Any]]] = None) -> List[Any]:
        return [r.get(name) for r in (self.rows if rows is None else rows)]

    def summary(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "passed": _jsonable(self.passed),
            "checks": _jsonable(dict(self.checks)),
            "aggregates": _jsonable(self.aggregates),
            "warnings": list(self.warnings),
            "n_rows": len(self.rows),
            "columns": list(self.columns),
            "seed_manifest": _jsonable(self.seed_manifest),
            "wall_clock_s": self.wall_clock,
        }


class RunClock:
    """Start/stop timestamps and wall-clock of a run."""

    def __init__(self):
        self.started_at = _utc_now()
        self._t0 = time.perf_counter()

    def stop(self, report: ExperimentReport) -> ExperimentReport:
        msg = tail_warning(report.rows)
        if msg is not None:
            logger.warning(msg)
            report.warnings.append(msg)
        report.started_at = self.started_at
        report.finished_at = _utc_now()
        report.wall_clock = time.perf_counter() - self._t0
        return report


def tail_warning(rows: List[Dict[str, Any]]) -> Optional[str]:
    """Summary of the rows whose path history was too short for z(0)."""
    terms: Dict[Any, float] = {}
    for r in rows:
        term = r.get(TAIL_TERM_KEY) or 0.0
        if term > Z0_TAIL_TOL:
            terms[r.get("path")] = max(term, terms.get(r.get("path"), 0.0))
    if not terms:
        return None
    return (
        f"history tail too short for z(0) on {len(terms)} path(s): "
        f"tail term up to {max(terms.values()):.2e} > {Z0_TAIL_TOL:.0e}"
    )


def seed_manifest(config: ExperimentConfig, **extra) -> Dict[str, Any]:
    out = {
        "master_seed": config.monte_carlo.master_seed,
        "n_paths": config.monte_carlo.n_paths,
        "bit_generator": "Philox",
        "path_seed": "SeedSequence(master_seed, spawn_key=(path_index,))",
        "streams": {"forward": 0, "backward": 1, "ou": 2, "bridge": 3, "bridge_neg": 4, "experiment": 5},
    }
    out.update(extra)
    return out


@dataclass
class RunManifest:
    experiment: str
    config: Dict[str, Any]
    config_hash: str
    master_seed: int
    started_at: str
    finished_at: str
    versions: Dict[str, str]
    artifacts: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "versions": self.versions,
            "artifacts": self.artifacts,
            "config": self.config,
        }

    def write(self, fpath: Union[str, Path]) -> None:
        Path(fpath).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n")

    @classmethod
    def load(cls, fpath: Union[str, Path]) -> "RunManifest":
        data = json.loads(Path(fpath).read_text())
        return cls(
            experiment=data["experiment"],
            config=data["config"],
            config_hash=data["config_hash"],
            master_seed=int(data["master_seed"]),
            started_at=data.get("started_at", ""),
            finished_at=data.get("finished_at", ""),
            versions=data.get("versions", {}),
            artifacts=list(data.get("artifacts", [])),
        )


def package_versions() -> Dict[str, str]:
    try:
        own = metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        own = "0+unknown"
    return {
        PACKAGE_NAME: own,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def format_value(value: Any) -> str:
    """Round-trip text of one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows_csv(report: ExperimentReport, fpath: Union[str, Path]) -> None:
    with open(fpath, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([format_value(row.get(c)) for c in report.columns])


def write_run(report: ExperimentReport, out_dir: Union[str, Path], config_hash: str) -> Path:
    """Create the run directory and write all artifacts; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = (report.started_at or _utc_now()).replace("-", "").replace(":", "")
    base = f"{report.experiment}-{stamp}-{config_hash[:8]}"
    run_dir = out_dir / base
    suffix = 1
    while run_dir.exists():
        run_dir = out_dir / f"{base}-{suffix}"
        suffix += 1
    run_dir.mkdir()

    artifacts = ["manifest.json", "summary.json", "rows.csv"]
    write_rows_csv(report, run_dir / "rows.csv")
    (run_dir / "summary.json").write_text(json.dumps(report.summary(), indent=2) + "\n")
    for name, export in report.trajectories.items():
        fname = f"trajectory-{name}.csv"
        export.trajectory.write_csv(run_dir / fname, export.model, export.extra)
        artifacts.append(fname)

    manifest = RunManifest(
        experiment=report.experiment,
        config=report.config,
        config_hash=config_hash,
        master_seed=int(report.seed_manifest.get("master_seed", 0)),
        started_at=report.started_at,
        finished_at=report.finished_at,
        versions=package_versions(),
        artifacts=artifacts,
    )
    manifest.write(run_dir / "manifest.json")
    logger.info(f"Run written to {run_dir}")
    return run_dir


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    return value
