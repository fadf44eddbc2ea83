"""Trace files, summaries and plot-ready tables.

Layout of an experiment directory::

    config.yaml                          normalized copy of the config
    traces/<strategy>_trial<k>.jsonl     one JSON object per line
    timing/<strategy>_trial<k>.csv       eval,wall_time_seconds
    summary_<strategy>.csv               SCHEMAS["summary"]
    best_hyperparameters.csv             strategy,trial,eval,<dims...>,mean_loss

A trace file starts with a header object (``"type": "header"``) followed by
one ``"type": "eval"`` object per evaluated point. Wall-clock times live in
the timing sidecar so that the trace itself depends on the seed only.
"""

from __future__ import annotations

import csv
import json
import os
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .driver import EvaluationRecord, OptimizationTrace, STRATEGIES, summarize_trials

__all__ = [
    "SCHEMAS",
    "TraceFileError",
    "trace_name",
    "write_trace",
    "read_trace",
    "write_timing",
    "read_timing",
    "write_table",
    "read_table",
    "write_summary",
    "write_best_hyperparameters",
    "load_traces",
    "emit_plot_data",
]

SCHEMAS = {
    "summary": ["eval", "mean_best", "std_best", "mean_cum_seconds", "std_cum_seconds"],
    "timing": ["eval", "wall_time_seconds"],
    "convergence": ["strategy", "eval", "mean", "std"],
    "time": ["strategy", "eval", "mean_seconds", "std_seconds"],
    "hyperparameters": ["strategy", "dimension", "mean", "std"],
}

_TRACE_RE = re.compile(r"^(?P<strategy>[a-z]+)_trial(?P<trial>\d+)\.jsonl$")


class TraceFileError(ValueError):
    """A trace directory or file is missing, malformed or ragged."""


def trace_name(strategy: str, trial: int) -> str:
    return f"{strategy}_trial{trial:03d}"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def write_trace(path, trace: OptimizationTrace, *, trial: int, seed_entropy: Sequence[int]) -> None:
    """Write a trace; the bytes depend only on the trace contents."""
    header = {"type": "header", "strategy": trace.strategy, "trial": int(trial),
              "seed_entropy": [int(s) for s in seed_entropy], "config": trace.config}
    lines = [_dumps(header)]
    for i, rec in enumerate(trace.records):
        lines.append(_dumps({"type": "eval", "eval": i + 1, **rec.to_dict()}))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_trace(path) -> tuple[dict, OptimizationTrace]:
    path = Path(path)
    header = None
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceFileError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            kind = obj.get("type")
            if kind == "header":
                if header is not None or records:
                    raise TraceFileError(f"{path}:{lineno}: header must be the first line")
                header = obj
            elif kind == "eval":
                records.append(EvaluationRecord.from_dict(obj))
            else:
                raise TraceFileError(f"{path}:{lineno}: unknown record type {kind!r}")
    if header is None:
        raise TraceFileError(f"{path}: no header line")
    return header, OptimizationTrace(header["strategy"], records, header.get("config", {}))


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    os.replace(tmp, path)


def read_table(path) -> tuple[list[str], list[list]]:
    """Read a table written by :func:`write_table`; numeric cells become floats/ints."""
    def conv(cell: str):
        try:
            return int(cell)
        except ValueError:
            pass
        try:
            return float(cell)
        except ValueError:
            return cell

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TraceFileError(f"{path}: empty table")
    header = rows[0]
    body = []
    for i, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise TraceFileError(f"{path}:{i}: expected {len(header)} columns, got {len(row)}")
        body.append([conv(c) for c in row])
    return header, body


def write_timing(path, trace: OptimizationTrace) -> None:
    write_table(path, SCHEMAS["timing"],
                [(i + 1, float(r.wall_time_seconds)) for i, r in enumerate(trace.records)])


def read_timing(path) -> np.ndarray:
    header, rows = read_table(path)
    if header != SCHEMAS["timing"]:
        raise TraceFileError(f"{path}: unexpected header {header}")
    return np.array([r[1] for r in rows], dtype=float)


def _mean_std(rows: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    A = np.vstack(rows)
    return A.mean(axis=0), A.std(axis=0, ddof=0)


def write_summary(path, traces: Sequence[OptimizationTrace]) -> None:
    """Per-evaluation mean/std of best-so-far and of cumulative wall time."""
    mean, std = summarize_trials(traces)
    tmean, tstd = _mean_std([t.cumulative_time for t in traces])
    write_table(path, SCHEMAS["summary"],
                [(i + 1, float(mean[i]), float(std[i]), float(tmean[i]), float(tstd[i]))
                 for i in range(len(mean))])


def write_best_hyperparameters(path, dims: Sequence[str], entries) -> None:
    """``entries``: iterable of ``(strategy, trial, OptimizationTrace)``."""
    rows = []
    for strategy, trial, trace in entries:
        best = trace.best
        rows.append([strategy, trial, trace.best_index + 1, *map(float, best.raw), float(best.mean_loss)])
    write_table(path, ["strategy", "trial", "eval", *dims, "mean_loss"], rows)


def load_traces(directory) -> dict[str, list[tuple[int, OptimizationTrace, np.ndarray | None]]]:
    """Traces of an experiment grouped by strategy, ordered by trial.

    ``directory`` may be the experiment directory or its ``traces``
    subdirectory. Timing sidecars are attached when present.
    """
    directory = Path(directory)
    tdir = directory / "traces" if (directory / "traces").is_dir() else directory
    if not tdir.is_dir():
        raise TraceFileError(f"{directory}: not a directory")
    timing_dir = tdir.parent / "timing"
    found: dict[str, list] = {}
    for path in sorted(tdir.iterdir()):
        m = _TRACE_RE.match(path.name)
        if not m:
            continue
        _, trace = read_trace(path)
        tpath = timing_dir / (path.stem + ".csv")
        times = read_timing(tpath) if tpath.exists() else None
        if times is not None:
            if len(times) != len(trace):
                raise TraceFileError(f"{tpath}: {len(times)} rows for a trace of {len(trace)} evaluations")
            for rec, t in zip(trace.records, times):
                rec.wall_time_seconds = float(t)
        found.setdefault(m["strategy"], []).append((int(m["trial"]), trace, times))
    if not found:
        raise TraceFileError(f"{tdir}: no trace files")
    for entries in found.values():
        entries.sort(key=lambda e: e[0])
    return found


def _strategy_order(names) -> list[str]:
    known = [s for s in STRATEGIES if s in names]
    return known + sorted(n for n in names if n not in STRATEGIES)


def emit_plot_data(directory, out_dir=None) -> dict[str, Path]:
    """Write ``convergence.csv``, ``time.csv`` and ``hyperparameters.csv``.

    Convergence and time rows hold the mean and population std over trials
    of best-so-far loss and cumulative wall time at each evaluation index;
    the hyperparameter rows hold mean and std of each trial's best raw
    value per dimension. Returns the written paths by kind.
    """
    groups = load_traces(directory)
    directory = Path(directory)
    base = directory.parent if directory.name == "traces" else directory
    out_dir = Path(out_dir) if out_dir is not None else base / "plots"
    conv_rows, time_rows, hp_rows = [], [], []
    for strategy in _strategy_order(groups):
        entries = groups[strategy]
        traces = [t for _, t, _ in entries]
        lengths = {len(t) for t in traces}
        if len(lengths) != 1:
            raise TraceFileError(f"strategy {strategy}: ragged traces with lengths {sorted(lengths)}")
        mean, std = summarize_trials(traces)
        conv_rows += [(strategy, i + 1, float(m), float(s)) for i, (m, s) in enumerate(zip(mean, std))]
        if any(times is None for _, _, times in entries):
            missing = [trace_name(strategy, k) for k, _, times in entries if times is None]
            raise TraceFileError(f"missing timing files for {missing}")
        tmean, tstd = _mean_std([np.cumsum(times) for _, _, times in entries])
        time_rows += [(strategy, i + 1, float(m), float(s)) for i, (m, s) in enumerate(zip(tmean, tstd))]
        dims = traces[0].config.get("dims") or [f"x{j}" for j in range(len(traces[0].best.raw))]
        best = np.array([t.best.raw for t in traces], dtype=float)
        for j, name in enumerate(dims):
            hp_rows.append((strategy, name, float(best[:, j].mean()), float(best[:, j].std(ddof=0))))
    paths = {k: out_dir / f"{k}.csv" for k in ("convergence", "time", "hyperparameters")}
    write_table(paths["convergence"], SCHEMAS["convergence"], conv_rows)
    write_table(paths["time"], SCHEMAS["time"], time_rows)
    write_table(paths["hyperparameters"], SCHEMAS["hyperparameters"], hp_rows)
    return paths
