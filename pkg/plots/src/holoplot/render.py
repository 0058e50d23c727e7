"""CSV loading, schema checks, and the four figure renderers."""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("sphere-path", "spectrum", "transitions", "fidelity-vs-T")

_REQUIRED_COLUMNS = {
    "sphere-path": ("t", "theta", "phi", "segment"),
    "spectrum": ("variable", "value"),
    "transitions": ("variable", "value"),
    "fidelity-vs-T": ("T", "fidelity"),
}

_SEGMENT_MARKS = "ABCDEFGH"


class SchemaError(ValueError):
    """The input CSV does not match the schema of the requested figure kind."""


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: input CSV, figure kind, output image path."""

    input: str
    kind: str
    output: str
    title: str | None = None


def load_spec(path):
    """Read and validate a plot-spec JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"spec {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("plot spec must be a JSON object")
    unknown = sorted(set(raw) - {"input", "kind", "output", "title"})
    if unknown:
        raise SchemaError(f"unknown keys in plot spec: {', '.join(unknown)}")
    missing = sorted({"input", "kind", "output"} - set(raw))
    if missing:
        raise SchemaError(f"missing keys in plot spec: {', '.join(missing)}")
    if raw["kind"] not in FIGURE_KINDS:
        raise SchemaError(f"unknown figure kind {raw['kind']!r}; expected one of {FIGURE_KINDS}")
    return PlotSpec(input=raw["input"], kind=raw["kind"], output=raw["output"], title=raw.get("title"))


def _read_rows(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise SchemaError(f"{path}: no header row")
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read CSV {path}: {exc}") from exc
    return reader.fieldnames, rows


def load_table(spec):
    """Rows of the input CSV with status filtering and schema validation."""
    columns, rows = _read_rows(spec.input)
    required = _REQUIRED_COLUMNS[spec.kind]
    missing = sorted(set(required) - set(columns))
    if missing:
        raise SchemaError(
            f"{spec.input}: missing columns for kind {spec.kind!r}: "
            f"{', '.join(missing)} (found: {', '.join(columns)})"
        )
    if "status" in columns:
        rows = [row for row in rows if row["status"] == "ok"]
    if not rows:
        raise SchemaError(f"{spec.input}: no usable data rows")
    return columns, rows


def _floats(rows, column):
    try:
        return np.array([float(row[column]) for row in rows])
    except ValueError as exc:
        raise SchemaError(f"column {column!r} is not numeric: {exc}") from exc


def _series_columns(columns, prefix):
    return [c for c in columns if c.startswith(prefix)]


def _draw_sphere_path(ax, columns, rows):
    theta = _floats(rows, "theta")
    phi = _floats(rows, "phi")
    segment = _floats(rows, "segment").astype(int)
    x = np.sin(theta) * np.cos(phi)
    y = np.sin(theta) * np.sin(phi)
    z = np.cos(theta)

    grid = np.linspace(0.0, 2.0 * math.pi, 36)
    lat = np.linspace(0.0, math.pi, 18)
    gu, gv = np.meshgrid(grid, lat)
    ax.plot_wireframe(
        np.sin(gv) * np.cos(gu), np.sin(gv) * np.sin(gu), np.cos(gv),
        color="0.85", linewidth=0.4,
    )
    ax.plot(x, y, z, color="tab:red", linewidth=2.0)
    # mark the segment joints A, B, C, ... at each first sample of a segment
    marks = [0] + [i for i in range(1, len(segment)) if segment[i] != segment[i - 1]]
    for label, i in zip(_SEGMENT_MARKS, marks):
        ax.scatter([x[i]], [y[i]], [z[i]], color="k", s=14)
        ax.text(x[i] * 1.12, y[i] * 1.12, z[i] * 1.12, label, fontsize=11)
    ax.set_box_aspect((1, 1, 1))
    ax.set_axis_off()


def _draw_spectrum(ax, columns, rows):
    levels = _series_columns(columns, "E_")
    if not levels:
        raise SchemaError(f"spectrum input has no E_<k> columns (found: {', '.join(columns)})")
    x = _floats(rows, "value")
    for name in sorted(levels, key=lambda c: int(c.split("_")[1])):
        ax.plot(x, _floats(rows, name), label=name.replace("_", ""))
    ax.set_xlabel(rows[0]["variable"] + " / E_C")
    ax.set_ylabel("energy / E_C")
    ax.legend(fontsize=8, ncol=2)


def _draw_transitions(ax, columns, rows):
    moduli = _series_columns(columns, "t_")
    if not moduli:
        raise SchemaError(f"transitions input has no t_<kl> columns (found: {', '.join(columns)})")
    x = _floats(rows, "value")
    for name in moduli:
        ax.plot(x, _floats(rows, name), label="|" + name + "|")
    ax.set_xlabel(rows[0]["variable"] + " / E_C")
    ax.set_ylabel("|drive matrix element|")
    ax.legend(fontsize=8, ncol=2)


def _draw_fidelity(ax, columns, rows):
    horizon = _floats(rows, "T")
    fidelity = _floats(rows, "fidelity")
    infidelity = np.maximum(1.0 - fidelity, 1e-18)
    order = np.argsort(horizon)
    ax.loglog(horizon[order], infidelity[order], marker="o")
    ax.set_xlabel("total loop time T")
    ax.set_ylabel("gate infidelity 1 - F")
    ax.grid(True, which="both", alpha=0.3)


def render(spec):
    """Draw the requested figure and write it atomically to spec.output.

    Raises SchemaError before anything is written when the input does not
    match the figure kind; on success the output file is replaced in one step.
    """
    columns, rows = load_table(spec)
    if spec.kind == "sphere-path":
        fig = plt.figure(figsize=(5.0, 5.0))
        ax = fig.add_subplot(projection="3d")
        _draw_sphere_path(ax, columns, rows)
    else:
        fig, ax = plt.subplots(figsize=(5.5, 3.8))
        if spec.kind == "spectrum":
            _draw_spectrum(ax, columns, rows)
        elif spec.kind == "transitions":
            _draw_transitions(ax, columns, rows)
        else:
            _draw_fidelity(ax, columns, rows)
    fig.suptitle(spec.title or f"{spec.kind} ({os.path.basename(spec.input)})", fontsize=10)
    fig.tight_layout()

    out_dir = os.path.dirname(os.path.abspath(spec.output)) or "."
    os.makedirs(out_dir, exist_ok=True)
    suffix = os.path.splitext(spec.output)[1] or ".png"
    fd, tmp_path = tempfile.mkstemp(dir=out_dir, suffix=suffix)
    os.close(fd)
    try:
        fig.savefig(tmp_path, dpi=150)
        os.replace(tmp_path, spec.output)
    finally:
        plt.close(fig)
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
    return spec.output
