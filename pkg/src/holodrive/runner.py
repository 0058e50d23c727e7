"""Experiment execution: config in, CSV rows and a JSON manifest out.

Rows are produced in deterministic grid order no matter how they are
scheduled; worker threads only ever fill their own slot.  Per-row failures
are recorded in the `status` column and reported through the exit code
rather than aborting the run.  CSV dialect: comma-separated, '.' decimal,
header row, LF line endings, UTF-8; angles in radians, device energies in
units of the charging scale.  Wall-clock timing lives in the manifest so
that reruns of the same config stay byte-identical.
"""

from __future__ import annotations

import csv
import datetime
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .device import (
    ChargeBasisConfig,
    LevelTrackingError,
    TRANSITION_PAIRS,
    drive_operator,
    eigensystem,
    track_levels,
)
from .gates import (
    LEVEL_LABELS,
    ORANGE_ALLOWED,
    TRIANGLE_ALLOWED,
    gate_u2,
    gate_ub,
    gate_up,
    lambda_family,
    structure_check,
    tripod_family,
)
from .paths import geodesic_triangle_schedule, orange_slice_schedule

log = logging.getLogger("holodrive")

_GATE_RUNNERS = {"up": gate_up, "ub": gate_ub, "u2": gate_u2}
_SCHEME_LOOPS = {"up": orange_slice_schedule, "ub": geodesic_triangle_schedule}
_SCHEME_FAMILIES = {"up": lambda_family, "ub": tripod_family}
_SCHEME_ALLOWED = {"up": ORANGE_ALLOWED, "ub": TRIANGLE_ALLOWED}


class ExperimentFailure(RuntimeError):
    """The experiment could not produce any rows (numerical failure)."""


@dataclass(frozen=True)
class RunResult:
    csv_path: str
    manifest_path: str
    rows: int
    failures: int


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _run_units(units, parallel):
    """Evaluate callables, preserving order; exceptions become (None, error)."""

    def guarded(unit):
        try:
            return unit(), None
        except Exception as exc:  # recorded per row, surfaced via exit code
            log.info("unit failed: %s", exc)
            return None, f"error: {type(exc).__name__}: {exc}"

    if parallel <= 1 or len(units) <= 1:
        return [guarded(u) for u in units]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(guarded, units))


def _gate_rows(cfg, parallel):
    gate = cfg.gate
    runner = _GATE_RUNNERS[gate.kind]
    columns = ["experiment", "phi", "T", "grid", "mode", "fidelity", "gamma", "leakage"]
    if gate.kind == "u2":
        columns.append("spectator_deviation")
    if cfg.experiment == "fidelity-sweep":
        columns = ["experiment", "gate", "phi", "T", "grid", "mode", "fidelity", "infidelity", "gamma", "leakage"]

    def unit_for(horizon):
        def unit():
            report = runner(gate.phi, horizon, grid=gate.grid, mode=gate.mode,
                            omega=gate.omega, substeps=gate.substeps)
            row = {
                "experiment": cfg.experiment,
                "gate": gate.kind,
                "phi": gate.phi,
                "T": horizon,
                "grid": gate.grid,
                "mode": gate.mode,
                "fidelity": report.fidelity,
                "infidelity": 1.0 - report.fidelity,
                "gamma": report.gamma,
                "leakage": report.leakage,
            }
            if gate.kind == "u2":
                row["spectator_deviation"] = report.spectator_deviation
            return {k: row[k] for k in columns}

        return unit

    results = _run_units([unit_for(t) for t in gate.times], parallel)
    rows = []
    for horizon, (row, error) in zip(gate.times, results):
        if error is not None:
            row = {"experiment": cfg.experiment, "gate": gate.kind, "phi": gate.phi, "T": horizon,
                   "grid": gate.grid, "mode": gate.mode}
            row = {k: row.get(k, "") for k in columns}
        row["status"] = error or "ok"
        rows.append(row)
    return columns + ["status"], rows


def _spectrum_rows(cfg, parallel):
    sweep = cfg.sweep
    basis = ChargeBasisConfig(cfg.n_max)
    columns = ["experiment", "variable", "value"] + [f"E_{k}" for k in range(sweep.levels)]

    def unit_for(value):
        def unit():
            params = replace(cfg.device, **{sweep.variable: float(value)})
            energies, _ = eigensystem(params, basis, count=sweep.levels)
            row = {"experiment": cfg.experiment, "variable": sweep.variable, "value": value}
            row.update({f"E_{k}": energies[k] for k in range(sweep.levels)})
            return row

        return unit

    results = _run_units([unit_for(v) for v in sweep.values], parallel)
    rows = []
    for value, (row, error) in zip(sweep.values, results):
        if error is not None:
            row = {k: "" for k in columns}
            row.update({"experiment": cfg.experiment, "variable": sweep.variable, "value": value})
        row["status"] = error or "ok"
        rows.append(row)
    return columns + ["status"], rows


def _transition_rows(cfg, parallel):
    sweep = cfg.sweep
    basis = ChargeBasisConfig(cfg.n_max)
    pair_columns = ["t_" + k + l for k, l in TRANSITION_PAIRS]
    columns = ["experiment", "variable", "value"] + pair_columns

    def unit_for(value):
        def unit():
            params = replace(cfg.device, **{sweep.variable: float(value)})
            return eigensystem(params, basis), drive_operator(params, basis)

        return unit

    results = _run_units([unit_for(v) for v in sweep.values], parallel)
    # Label continuation is inherently sequential; run it over the
    # already-diagonalized frames.  A diagonalization failure or a tracking
    # ambiguity poisons every later row (the label chain is broken there).
    first_bad = next((s for s, (_, err) in enumerate(results) if err is not None), len(results))
    track_limit = first_bad
    blocked = "error: upstream row failed; labels cannot be tracked" if first_bad < len(results) else ""
    tracking = None
    if track_limit > 0:
        try:
            tracking = track_levels([result[0] for result, _ in results[:track_limit]], count=4)
        except LevelTrackingError as exc:
            blocked = f"error: LevelTrackingError: {exc}"
            track_limit = exc.sweep_index
            tracking = track_levels([result[0] for result, _ in results[:track_limit]], count=4)
    rows = []
    for s, (value, (result, error)) in enumerate(zip(sweep.values, results)):
        row = {k: "" for k in columns}
        row.update({"experiment": cfg.experiment, "variable": sweep.variable, "value": value})
        if error is not None:
            status = error
        elif s >= track_limit:
            status = blocked
        else:
            status = "ok"
            (_, vectors), gamma = result
            labels = {label: int(tracking[s, k]) for k, label in enumerate(LEVEL_LABELS)}
            for col, (k, l) in zip(pair_columns, TRANSITION_PAIRS):
                row[col] = float(abs(vectors[:, labels[k]].conj() @ gamma @ vectors[:, labels[l]]))
        row["status"] = status
        rows.append(row)
    return columns + ["status"], rows


def _structure_rows(cfg, parallel):
    settings = cfg.structure
    loop = _SCHEME_LOOPS[settings.scheme](settings.phi, settings.horizon)
    family = _SCHEME_FAMILIES[settings.scheme]()
    allowed = _SCHEME_ALLOWED[settings.scheme]
    columns = ["experiment", "scheme", "phi", "segment", "observed", "allowed", "passed"]

    def unit_for(segment):
        def unit():
            report = structure_check(loop, family, segment, allowed=allowed[segment], grid=settings.grid)
            return {
                "experiment": cfg.experiment,
                "scheme": settings.scheme,
                "phi": settings.phi,
                "segment": segment,
                "observed": _pairs_token(report.observed),
                "allowed": _pairs_token(report.allowed),
                "passed": report.passed,
            }

        return unit

    results = _run_units([unit_for(s) for s in range(len(loop.segments))], parallel)
    rows = []
    for segment, (row, error) in enumerate(results):
        if error is not None:
            row = {k: "" for k in columns}
            row.update({"experiment": cfg.experiment, "scheme": settings.scheme,
                        "phi": settings.phi, "segment": segment})
        row["status"] = error or "ok"
        rows.append(row)
    return columns + ["status"], rows


def _pairs_token(pairs):
    return "|".join(a + b for a, b in sorted(pairs))


def _trace_rows(cfg, parallel):
    settings = cfg.trace
    loop = _SCHEME_LOOPS[settings.scheme](settings.phi, settings.horizon)
    columns = ["experiment", "scheme", "opening", "t", "theta", "phi", "segment"]
    rows = []
    boundaries = [loop.segment_window(i)[1] for i in range(len(loop.segments))]
    for t in np.linspace(0.0, settings.horizon, settings.samples):
        theta, phi = loop.point(float(t))
        segment = next((i for i, b in enumerate(boundaries) if t <= b + 1e-12), len(boundaries) - 1)
        rows.append({
            "experiment": cfg.experiment,
            "scheme": settings.scheme,
            "opening": settings.phi,
            "t": float(t),
            "theta": float(theta),
            "phi": float(phi),
            "segment": segment,
            "status": "ok",
        })
    return columns + ["status"], rows


def build_rows(cfg, parallel=1):
    """All CSV rows for one experiment, in deterministic order."""
    if cfg.experiment in ("gate-up", "gate-ub", "gate-u2", "fidelity-sweep"):
        return _gate_rows(cfg, parallel)
    if cfg.experiment == "tct-spectrum":
        return _spectrum_rows(cfg, parallel)
    if cfg.experiment == "tct-transitions":
        return _transition_rows(cfg, parallel)
    if cfg.experiment == "structure-check":
        return _structure_rows(cfg, parallel)
    if cfg.experiment == "path-trace":
        return _trace_rows(cfg, parallel)
    raise AssertionError(f"unhandled experiment {cfg.experiment}")


def run_experiment(cfg: ExperimentConfig, out_dir=".", parallel=1, seed=None):
    """Execute one experiment; write `<name>.csv` and `<name>.manifest.json`.

    Returns a RunResult; `failures` counts rows whose status is not "ok".
    """
    started = time.monotonic()
    effective_seed = cfg.seed if seed is None else int(seed)
    log.info("running %s (name=%s, parallel=%d)", cfg.experiment, cfg.name, parallel)
    columns, rows = build_rows(cfg, parallel=parallel)
    failures = sum(1 for row in rows if row.get("status") != "ok")

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{cfg.name}.csv")
    manifest_path = os.path.join(out_dir, f"{cfg.name}.manifest.json")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    manifest = {
        "config": cfg.echo,
        "csv": os.path.basename(csv_path),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "experiment": cfg.experiment,
        "failures": failures,
        "name": cfg.name,
        "parallel": parallel,
        "rows": len(rows),
        "seed": effective_seed,
        "version": __version__,
        "wall_time_s": time.monotonic() - started,
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s (%d rows, %d failures)", csv_path, len(rows), failures)
    return RunResult(csv_path=csv_path, manifest_path=manifest_path, rows=len(rows), failures=failures)
