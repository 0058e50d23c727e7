"""Experiment configuration: a small, strictly-validated JSON schema.

Top level:

    {
      "schema": 1,
      "experiment": "gate-up" | "gate-ub" | "gate-u2" | "fidelity-sweep" |
                    "tct-spectrum" | "tct-transitions" | "structure-check" |
                    "path-trace",
      "name": "<output stem>",          # optional, defaults to the experiment
      "seed": 0,                        # optional, echoed into the manifest
      ... one experiment-specific block ...
    }

Unknown keys are rejected everywhere.  `parse_config` returns a typed
ExperimentConfig; validation failures raise ConfigError (CLI exit code 2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

from .device import DeviceParams

EXPERIMENTS = (
    "gate-up",
    "gate-ub",
    "gate-u2",
    "fidelity-sweep",
    "tct-spectrum",
    "tct-transitions",
    "structure-check",
    "path-trace",
)

_DEVICE_FIELDS = tuple(f.name for f in fields(DeviceParams))


class ConfigError(ValueError):
    """The configuration file is malformed or violates a precondition."""


def _require_mapping(obj, context):
    if not isinstance(obj, dict):
        raise ConfigError(f"{context} must be a JSON object")
    return obj


def _check_keys(mapping, allowed, required, context):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {', '.join(unknown)}")
    missing = sorted(set(required) - set(mapping))
    if missing:
        raise ConfigError(f"missing keys in {context}: {', '.join(missing)}")


def _number(mapping, key, context, default=None, positive=False, integer=False):
    if key not in mapping:
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context}.{key} must be a number")
    if integer and int(value) != value:
        raise ConfigError(f"{context}.{key} must be an integer")
    if positive and value <= 0:
        raise ConfigError(f"{context}.{key} must be positive")
    if not math.isfinite(value):
        raise ConfigError(f"{context}.{key} must be finite")
    return int(value) if integer else float(value)


def _choice(mapping, key, options, context, default=None):
    value = mapping.get(key, default)
    if value not in options:
        raise ConfigError(f"{context}.{key} must be one of {options}")
    return value


@dataclass(frozen=True)
class GateSettings:
    kind: str  # "up" | "ub" | "u2"
    phi: float
    times: tuple[float, ...]
    grid: int = 2048
    mode: str = "tqda"
    omega: float = 1.0
    substeps: int | None = None


@dataclass(frozen=True)
class SweepSettings:
    variable: str
    values: tuple[float, ...]
    levels: int = 6


@dataclass(frozen=True)
class StructureSettings:
    scheme: str  # "up" | "ub"
    phi: float
    horizon: float = 5.0
    grid: int = 512


@dataclass(frozen=True)
class TraceSettings:
    scheme: str
    phi: float
    horizon: float = 5.0
    samples: int = 256


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    name: str
    seed: int
    gate: GateSettings | None = None
    device: DeviceParams = field(default_factory=DeviceParams)
    n_max: int = 12
    sweep: SweepSettings | None = None
    structure: StructureSettings | None = None
    trace: TraceSettings | None = None
    echo: dict = field(default_factory=dict)


def _parse_times(block, context):
    times = block.get("times")
    if isinstance(times, list) and times:
        out = []
        for v in times:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                raise ConfigError(f"{context}.times entries must be positive numbers")
            out.append(float(v))
        return tuple(out)
    if isinstance(times, dict):
        _check_keys(times, ("log_start", "log_stop", "points"), ("log_start", "log_stop", "points"), f"{context}.times")
        start = _number(times, "log_start", context, positive=True)
        stop = _number(times, "log_stop", context, positive=True)
        points = _number(times, "points", context, positive=True, integer=True)
        if points < 2:
            raise ConfigError(f"{context}.times.points must be at least 2")
        ratio = (stop / start) ** (1.0 / (points - 1))
        return tuple(start * ratio**k for k in range(points))
    raise ConfigError(f"{context}.times must be a non-empty list or a log-range object")


def _parse_gate(raw, kind, context):
    block = _require_mapping(raw, context)
    _check_keys(block, ("phi", "times", "grid", "mode", "omega", "substeps"), ("phi", "times"), context)
    phi = _number(block, "phi", context)
    if not -2.0 * math.pi < phi < 2.0 * math.pi:
        raise ConfigError(f"{context}.phi must lie in (-2*pi, 2*pi)")
    substeps = _number(block, "substeps", context, positive=True, integer=True)
    return GateSettings(
        kind=kind,
        phi=phi,
        times=_parse_times(block, context),
        grid=_number(block, "grid", context, default=2048, positive=True, integer=True),
        mode=_choice(block, "mode", ("tqda", "bare"), context, default="tqda"),
        omega=_number(block, "omega", context, default=1.0, positive=True),
        substeps=substeps,
    )


def _parse_device(raw, context):
    block = _require_mapping(raw, context)
    _check_keys(block, _DEVICE_FIELDS + ("n_max",), (), context)
    n_max = _number(block, "n_max", context, default=12, positive=True, integer=True)
    values = {}
    for name in _DEVICE_FIELDS:
        if name in block:
            values[name] = _number(block, name, context)
    try:
        return DeviceParams(**values), n_max
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def _parse_sweep(raw, context, default_variable):
    block = _require_mapping(raw, context)
    _check_keys(block, ("variable", "start", "stop", "points", "values", "levels"), (), context)
    variable = block.get("variable", default_variable)
    if variable not in _DEVICE_FIELDS:
        raise ConfigError(f"{context}.variable must be a device parameter, got {variable!r}")
    if "values" in block:
        if not isinstance(block["values"], list) or not block["values"]:
            raise ConfigError(f"{context}.values must be a non-empty list")
        values = tuple(float(v) for v in block["values"])
    else:
        _check_keys(block, ("variable", "start", "stop", "points", "levels"), ("start", "stop", "points"), context)
        start = _number(block, "start", context)
        stop = _number(block, "stop", context)
        points = _number(block, "points", context, positive=True, integer=True)
        if points < 2:
            raise ConfigError(f"{context}.points must be at least 2")
        values = tuple(start + (stop - start) * k / (points - 1) for k in range(points))
    levels = _number(block, "levels", context, default=6, positive=True, integer=True)
    if levels < 4:
        raise ConfigError(f"{context}.levels must be at least 4")
    return SweepSettings(variable=variable, values=values, levels=levels)


def _parse_structure(raw, context):
    block = _require_mapping(raw, context)
    _check_keys(block, ("scheme", "phi", "horizon", "grid"), ("scheme", "phi"), context)
    return StructureSettings(
        scheme=_choice(block, "scheme", ("up", "ub"), context),
        phi=_number(block, "phi", context),
        horizon=_number(block, "horizon", context, default=5.0, positive=True),
        grid=_number(block, "grid", context, default=512, positive=True, integer=True),
    )


def _parse_trace(raw, context):
    block = _require_mapping(raw, context)
    _check_keys(block, ("scheme", "phi", "horizon", "samples"), ("scheme", "phi"), context)
    samples = _number(block, "samples", context, default=256, positive=True, integer=True)
    if samples < 8:
        raise ConfigError(f"{context}.samples must be at least 8")
    return TraceSettings(
        scheme=_choice(block, "scheme", ("up", "ub"), context),
        phi=_number(block, "phi", context),
        horizon=_number(block, "horizon", context, default=5.0, positive=True),
        samples=samples,
    )


def parse_config(raw):
    """Validate a decoded JSON object into an ExperimentConfig."""
    top = _require_mapping(raw, "config")
    _check_keys(
        top,
        ("schema", "experiment", "name", "seed", "gate", "device", "sweep", "structure", "trace"),
        ("schema", "experiment"),
        "config",
    )
    if top["schema"] != 1:
        raise ConfigError(f"unsupported schema version {top['schema']!r}")
    experiment = top["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    name = top.get("name", experiment)
    if not isinstance(name, str) or not name or "/" in name or name.startswith("."):
        raise ConfigError("config.name must be a plain file stem")
    seed = _number(top, "seed", "config", default=0, integer=True)

    gate = sweep = structure = trace = None
    device, n_max = DeviceParams(), 12

    if experiment in ("gate-up", "gate-ub", "gate-u2"):
        _check_keys(top, ("schema", "experiment", "name", "seed", "gate"), ("gate",), "config")
        gate = _parse_gate(top["gate"], experiment.split("-")[1], "config.gate")
    elif experiment == "fidelity-sweep":
        _check_keys(top, ("schema", "experiment", "name", "seed", "gate"), ("gate",), "config")
        block = _require_mapping(top["gate"], "config.gate")
        kind = _choice(block, "kind", ("up", "ub", "u2"), "config.gate", default="up")
        rest = {k: v for k, v in block.items() if k != "kind"}
        gate = _parse_gate(rest, kind, "config.gate")
    elif experiment in ("tct-spectrum", "tct-transitions"):
        _check_keys(top, ("schema", "experiment", "name", "seed", "device", "sweep"), ("sweep",), "config")
        if "device" in top:
            device, n_max = _parse_device(top["device"], "config.device")
        default_var = "e_i" if experiment == "tct-spectrum" else "e_j0_plus"
        sweep = _parse_sweep(top["sweep"], "config.sweep", default_var)
    elif experiment == "structure-check":
        _check_keys(top, ("schema", "experiment", "name", "seed", "structure"), ("structure",), "config")
        structure = _parse_structure(top["structure"], "config.structure")
    elif experiment == "path-trace":
        _check_keys(top, ("schema", "experiment", "name", "seed", "trace"), ("trace",), "config")
        trace = _parse_trace(top["trace"], "config.trace")

    return ExperimentConfig(
        experiment=experiment,
        name=name,
        seed=seed,
        gate=gate,
        device=device,
        n_max=n_max,
        sweep=sweep,
        structure=structure,
        trace=trace,
        echo=top,
    )


def load_config(path):
    """Read and validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)
