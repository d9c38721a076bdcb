"""Delimited output and run metadata.

All numeric fields are written with full round-trip precision, and files
end with a trailing newline, so identical results produce byte-identical
files.
"""
from __future__ import annotations

import csv
import io
import os

import numpy as np

from .config import SimConfig, canonical_text
from .simulate import AggregatedResult, ExperimentResult, SweepResult

__all__ = [
    "write_raw_csv",
    "write_aggregate_csv",
    "read_aggregate_csv",
    "write_sweep_csv",
    "write_theorycheck_csv",
    "render_metadata",
    "write_metadata",
]

RAW_HEADER = ["experiment_id", "algorithm", "run", "t", "cum_regret"]
AGG_HEADER = ["experiment_id", "algorithm", "t", "mean_regret", "stderr", "n_runs"]
SWEEP_HEADER = ["algorithm", "param", "value", "final_mean_regret", "final_stderr", "selected"]
CHECK_HEADER = ["check", "point", "observed", "bound_lo", "bound_hi", "pass"]


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_rows(path: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(buf.getvalue())


def write_raw_csv(path: str, result: ExperimentResult) -> None:
    rows = []
    for label in result.curves:
        curve = result.curves[label]
        for run in range(curve.shape[0]):
            for j, t in enumerate(result.checkpoints):
                rows.append([result.experiment_id, label, run, int(t), _fmt(curve[run, j])])
    _write_rows(path, RAW_HEADER, rows)


def write_aggregate_csv(path: str, agg: AggregatedResult) -> None:
    rows = []
    for label in agg.mean:
        for j, t in enumerate(agg.checkpoints):
            rows.append(
                [agg.experiment_id, label, int(t), _fmt(agg.mean[label][j]), _fmt(agg.stderr[label][j]), agg.n_runs]
            )
    _write_rows(path, AGG_HEADER, rows)


def read_aggregate_csv(path: str) -> AggregatedResult:
    mean: dict[str, list[float]] = {}
    stderr: dict[str, list[float]] = {}
    checkpoints: list[int] = []
    experiment = ""
    n_runs = 0
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != AGG_HEADER:
            raise ValueError(f"unexpected header in {path!r}: {header}")
        for row in reader:
            experiment, label, t, m, se, n = row
            mean.setdefault(label, []).append(float(m))
            stderr.setdefault(label, []).append(float(se))
            n_runs = int(n)
            t = int(t)
            if len(checkpoints) < len(next(iter(mean.values()))):
                checkpoints.append(t)
    return AggregatedResult(
        experiment,
        np.asarray(checkpoints, dtype=int),
        n_runs,
        {k: np.asarray(v) for k, v in mean.items()},
        {k: np.asarray(v) for k, v in stderr.items()},
    )


def write_sweep_csv(path: str, result: SweepResult) -> None:
    rows = []
    for e in result.entries:
        rows.append(
            [
                e.algorithm,
                e.param if e.param is not None else "",
                _fmt(e.value) if e.value is not None else "",
                _fmt(e.final_mean_regret),
                _fmt(e.final_stderr),
                str(e.selected).lower(),
            ]
        )
    _write_rows(path, SWEEP_HEADER, rows)


def write_theorycheck_csv(path: str, checks) -> None:
    rows = []
    for report in checks:
        for row in report.rows:
            rows.append(
                [report.name, row.point, _fmt(row.observed), _fmt(row.bound_lo), _fmt(row.bound_hi), str(row.passed).lower()]
            )
    _write_rows(path, CHECK_HEADER, rows)


def render_metadata(cfg: SimConfig, *, version: str, experiment: str, status: str, notices: list[str]) -> str:
    lines = [
        "# simulation metadata; feed this file back via --config to rerun",
        f"# version = {version}",
        f"# experiment_id = {experiment}",
        f"# status = {status}",
        "# instance_protocol = fresh environment instance per run",
    ]
    lines.extend(f"# notice: {n}" for n in notices)
    return "\n".join(lines) + "\n" + canonical_text(cfg)


def write_metadata(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
