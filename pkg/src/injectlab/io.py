"""Flat key-value experiment configs, CSV trajectory emission, sidecar metrics.

Config files are plain text, one ``key = value`` per line; ``#`` starts a
comment and blank lines are skipped.  No sections, no nesting — a config
diff is a readable experiment diff.  Recognized scenario keys (defaults in
parentheses):

    epsilon (1e-3)                   injection period in seconds
    shape (square)                   square | sine
    amplitude (1.0)                  peak of the injected waveform; 0 disables
    phase_shift (default)            fraction of a period, or "default"
    n_periods (10)                   demodulation window length in periods
    h_step (default)                 integrator step; "default" = epsilon/100
    t_end (20.0)                     horizon in seconds
    x0 (0, 0, 0)                     initial plant state, three comma floats
    feedback_source (demod_yv)       demod_yv | true_x1 | ideal_lgh
    disturbance (2.0: -2.0)          comma list of time:value steps, or "none"
    reference (enabled)              "none" disables the setpoint entirely
    reference_level (0.0)            setpoint before the ramp
    reference_start_time (14.0)      ramp onset in seconds
    reference_slope (1.0)            ramp slope after onset
    reference_filter_bandwidth_hz (1.0)   first-order prefilter; 0 = raw ramp
    noise_sample_time, noise_power   both present enables measurement noise
    noise_seed (0)                   RNG seed for the noise draw
    stride (100)                     emit every stride-th integrator step

Verb-specific keys (``epsilons`` for sweeps, ``duration`` for noise studies)
are consumed by the command layer and rejected here unless listed in
``reserved``.  Every malformed or unknown entry raises :class:`ConfigError`
naming the offending key, before any simulation starts.

Trajectory CSVs carry one header row naming the columns and one data row per
emitted step, every value printed with 17 significant digits so a re-read
reproduces the exact binary floats (and hence every summary metric,
bit for bit).  The metrics sidecar uses the same key-value syntax as the
configs.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np

from .averaging import OrderStudy
from .noise import NoiseSpec, NoiseStudyRow
from .scenario import (
    CSV_COLUMNS,
    FEEDBACK_SOURCES,
    ConfigError,
    Reference,
    RunResult,
    Scenario,
)

__all__ = [
    "parse_config_text",
    "load_config",
    "scenario_from_config",
    "emit_csv",
    "read_csv",
    "write_metrics",
    "read_metrics",
    "emit_order_table",
    "order_fit_metrics",
    "emit_noise_table",
    "noise_metrics",
]

_FLOAT_FMT = "%.17g"


# -- config parsing ----------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into an ordered mapping of raw strings."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not eq or not key or not value:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        if key in mapping:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        mapping[key] = value
    return mapping


def load_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    return parse_config_text(text)


def _as_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {value!r}") from None


def _as_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {value!r}") from None


def _as_float_list(key: str, value: str) -> tuple[float, ...]:
    items = [p.strip() for p in value.split(",") if p.strip()]
    if not items:
        raise ConfigError(key, "expected a comma-separated list of numbers")
    return tuple(_as_float(key, p) for p in items)


def _as_schedule(key: str, value: str) -> tuple[tuple[float, float], ...]:
    if value.lower() == "none":
        return ()
    events = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        time_s, colon, value_s = part.partition(":")
        if not colon:
            raise ConfigError(key, f"expected 'time: value' pairs, got {part!r}")
        events.append((_as_float(key, time_s.strip()), _as_float(key, value_s.strip())))
    if not events:
        raise ConfigError(key, "expected at least one 'time: value' pair or 'none'")
    return tuple(events)


_SCENARIO_KEYS = frozenset({
    "epsilon", "shape", "amplitude", "phase_shift", "n_periods", "h_step",
    "t_end", "x0", "feedback_source", "disturbance", "reference",
    "reference_level", "reference_start_time", "reference_slope",
    "reference_filter_bandwidth_hz", "noise_sample_time", "noise_power",
    "noise_seed", "stride",
})


def scenario_from_config(mapping: Mapping[str, str], reserved=()) -> Scenario:
    """Build a validated Scenario from raw config strings.

    ``reserved`` keys belong to the calling command (e.g. ``epsilons``) and
    are skipped here; anything else outside the schema is rejected.
    """
    reserved = frozenset(reserved)
    unknown = set(mapping) - _SCENARIO_KEYS - reserved
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")

    kwargs: dict = {}
    if "epsilon" in mapping:
        kwargs["epsilon"] = _as_float("epsilon", mapping["epsilon"])
    if "shape" in mapping:
        kwargs["shape"] = mapping["shape"]
    if "amplitude" in mapping:
        kwargs["amplitude"] = _as_float("amplitude", mapping["amplitude"])
    if mapping.get("phase_shift", "default").lower() != "default":
        kwargs["phase_shift"] = _as_float("phase_shift", mapping["phase_shift"])
    if "n_periods" in mapping:
        kwargs["n_periods"] = _as_int("n_periods", mapping["n_periods"])
    if mapping.get("h_step", "default").lower() != "default":
        kwargs["h_step"] = _as_float("h_step", mapping["h_step"])
    if "t_end" in mapping:
        kwargs["t_end"] = _as_float("t_end", mapping["t_end"])
    if "x0" in mapping:
        x0 = _as_float_list("x0", mapping["x0"])
        if len(x0) != 3:
            raise ConfigError("x0", f"expected three numbers, got {len(x0)}")
        kwargs["x0"] = x0
    if "feedback_source" in mapping:
        if mapping["feedback_source"] not in FEEDBACK_SOURCES:
            raise ConfigError("feedback_source",
                              f"expected one of {FEEDBACK_SOURCES}")
        kwargs["feedback_source"] = mapping["feedback_source"]
    if "disturbance" in mapping:
        kwargs["disturbance"] = _as_schedule("disturbance", mapping["disturbance"])
    if "stride" in mapping:
        kwargs["stride"] = _as_int("stride", mapping["stride"])

    ref_keys = [k for k in mapping if k.startswith("reference")]
    if mapping.get("reference", "").lower() == "none":
        extras = [k for k in ref_keys if k != "reference"]
        if extras:
            raise ConfigError(extras[0], "reference is disabled ('reference = none')")
        kwargs["reference"] = None
    elif ref_keys:
        if "reference" in mapping:
            raise ConfigError("reference", "only 'none' is accepted here")
        kwargs["reference"] = Reference(
            level=_as_float("reference_level",
                            mapping.get("reference_level", "0.0")),
            start_time=_as_float("reference_start_time",
                                 mapping.get("reference_start_time", "14.0")),
            slope=_as_float("reference_slope",
                            mapping.get("reference_slope", "1.0")),
            filter_bandwidth_hz=_as_float(
                "reference_filter_bandwidth_hz",
                mapping.get("reference_filter_bandwidth_hz", "1.0")),
        )

    noise_keys = [k for k in mapping if k.startswith("noise_")]
    if noise_keys:
        for needed in ("noise_sample_time", "noise_power"):
            if needed not in mapping:
                raise ConfigError(needed, "required when any noise key is set")
        try:
            kwargs["noise"] = NoiseSpec(
                sample_time=_as_float("noise_sample_time",
                                      mapping["noise_sample_time"]),
                power=_as_float("noise_power", mapping["noise_power"]),
                seed=_as_int("noise_seed", mapping.get("noise_seed", "0")),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("noise_sample_time", str(exc)) from exc

    try:
        return Scenario(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:  # waveform / spec validation raised outside Scenario
        raise ConfigError("config", str(exc)) from exc


# -- CSV + metrics emission --------------------------------------------------

def emit_csv(res: RunResult, path) -> None:
    """Write the emitted rows as CSV: header + 17-significant-digit floats."""
    cols = res.emitted_columns()
    data = np.column_stack([cols[name] for name in CSV_COLUMNS])
    np.savetxt(path, data, fmt=_FLOAT_FMT, delimiter=",",
               header=",".join(CSV_COLUMNS), comments="")


def read_csv(path) -> dict[str, np.ndarray]:
    """Read an emitted CSV back into named column arrays."""
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: header names {len(names)} columns, "
                         f"rows carry {data.shape[1]}")
    return {name: data[:, j] for j, name in enumerate(names)}


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _FLOAT_FMT % float(value)
    return str(value)


def write_metrics(path, metrics: Mapping) -> None:
    """Write a summary block in the same key-value syntax as the configs."""
    lines = [f"{key} = {_format_value(value)}" for key, value in metrics.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_metrics(path) -> dict:
    """Read a metrics sidecar; numeric values come back as floats."""
    out: dict = {}
    for key, value in parse_config_text(Path(path).read_text()).items():
        if value == "true":
            out[key] = True
        elif value == "false":
            out[key] = False
        else:
            try:
                out[key] = float(value)
            except ValueError:
                out[key] = value
    return out


# -- study tables ------------------------------------------------------------

def emit_order_table(study: OrderStudy, path) -> None:
    """One row per epsilon: residual sups, late/early ratios, probe errors."""
    names = ["epsilon", *study.table]
    data = np.column_stack([study.epsilons, *study.table.values()])
    np.savetxt(path, data, fmt=_FLOAT_FMT, delimiter=",",
               header=",".join(names), comments="")


def order_fit_metrics(study: OrderStudy) -> dict:
    """Flatten the per-quantity order fits for the metrics sidecar."""
    out: dict = {}
    for name, fit in study.fits.items():
        out[f"slope_{name}"] = fit.slope
        out[f"r_squared_{name}"] = fit.r_squared
        out[f"usable_{name}"] = fit.usable
    return out


def emit_noise_table(rows: tuple[NoiseStudyRow, ...], path) -> None:
    fields = ("label", "n_periods", "amplitude",
              "predicted_var_ybar", "measured_var_ybar",
              "predicted_var_yv", "measured_var_yv",
              "measured_var_yv_windowed")
    lines = [",".join(fields)]
    for row in rows:
        lines.append(",".join(_format_value(getattr(row, f)) for f in fields))
    Path(path).write_text("\n".join(lines) + "\n")


def noise_metrics(rows: tuple[NoiseStudyRow, ...]) -> dict:
    """Flatten predicted/measured variances and their ratios for the sidecar."""
    out: dict = {}
    for row in rows:
        out[f"{row.label}_predicted_var_ybar"] = row.predicted_var_ybar
        out[f"{row.label}_measured_var_ybar"] = row.measured_var_ybar
        out[f"{row.label}_ratio_var_ybar"] = (
            row.measured_var_ybar / row.predicted_var_ybar)
        out[f"{row.label}_predicted_var_yv"] = row.predicted_var_yv
        out[f"{row.label}_measured_var_yv"] = row.measured_var_yv
        out[f"{row.label}_ratio_var_yv"] = (
            row.measured_var_yv / row.predicted_var_yv)
    return out
