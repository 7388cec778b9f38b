"""File formats: fringe-scan CSV, pulse-sequence text files, JSON results.

Scan CSV layout (exact header, '.' decimal separator, UTF-8):

    f_khz,p_p2,p_p1,p_0,p_m1,p_m2[,s_p2,s_p1,s_0,s_m1,s_m2]

one row per frequency, strictly increasing.  Populations above 1 (up to
1.05, as normalization noise can produce) are clamped to 1 with a warning;
anything outside [0, 1.05] is rejected.  Floats are written with repr, so
write/parse round-trips are value-exact and reruns are byte-identical.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .fitting import FitResult, SensitivityReport
from .model import FringeScan
from .sequence import DelaySpec, DetuningModel, PulseSpec

__all__ = [
    "SCAN_HEADER",
    "SCAN_HEADER_WITH_STDDEV",
    "ScanFormatError",
    "SequenceFormatError",
    "read_scan",
    "write_scan",
    "write_table",
    "parse_sequence_text",
    "read_sequence_file",
    "write_json",
    "fit_result_dict",
    "sensitivity_report_dict",
]

SCAN_HEADER = "f_khz,p_p2,p_p1,p_0,p_m1,p_m2"
SCAN_HEADER_WITH_STDDEV = SCAN_HEADER + ",s_p2,s_p1,s_0,s_m1,s_m2"

_POPULATION_CEILING = 1.05


class ScanFormatError(ValueError):
    """Malformed scan file; the message carries the offending line number."""


class SequenceFormatError(ValueError):
    """Malformed sequence file; the message carries the offending step index."""


def read_scan(path) -> FringeScan:
    """Parse a measured fringe scan from CSV."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ScanFormatError("line 1: empty file")
    header = lines[0].strip()
    if header == SCAN_HEADER_WITH_STDDEV:
        n_cols, with_stddev = 11, True
    elif header == SCAN_HEADER:
        n_cols, with_stddev = 6, False
    else:
        raise ScanFormatError(f"line 1: bad header {header!r}")
    rows = []
    linenos = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != n_cols:
            raise ScanFormatError(f"line {lineno}: expected {n_cols} fields, got {len(parts)}")
        try:
            rows.append([float(part) for part in parts])
        except ValueError:
            raise ScanFormatError(f"line {lineno}: non-numeric field") from None
        linenos.append(lineno)
    if not rows:
        raise ScanFormatError("line 2: no data rows")
    data = np.array(rows)
    f = data[:, 0]
    decreasing = np.flatnonzero(np.diff(f) <= 0.0)
    if decreasing.size:
        raise ScanFormatError(f"line {linenos[int(decreasing[0]) + 1]}: "
                              "frequencies must be strictly increasing")
    p = data[:, 1:6]
    out_of_range = np.flatnonzero(np.any((p < 0.0) | (p > _POPULATION_CEILING), axis=1))
    if out_of_range.size:
        raise ScanFormatError(f"line {linenos[int(out_of_range[0])]}: "
                              f"population outside [0, {_POPULATION_CEILING}]")
    n_clamped = int(np.count_nonzero(p > 1.0))
    if n_clamped:
        warnings.warn(f"{path}: clamped {n_clamped} population value(s) above 1 to 1")
        p = np.minimum(p, 1.0)
    stddev = data[:, 6:11] if with_stddev else None
    try:
        return FringeScan(f, p, stddev=stddev, source="measured")
    except ValueError as exc:
        raise ScanFormatError(str(exc)) from None


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_scan(path, scan: FringeScan) -> None:
    """Write a fringe scan as CSV, including stddev columns when present."""
    with_stddev = scan.stddev is not None
    lines = [SCAN_HEADER_WITH_STDDEV if with_stddev else SCAN_HEADER]
    for i in range(len(scan)):
        row = [scan.f_khz[i], *scan.populations[i]]
        if with_stddev:
            row += list(scan.stddev[i])
        lines.append(_format_row(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_table(path, header: str, columns) -> None:
    """Write a generic CSV table of float columns under an exact header."""
    arrays = [np.asarray(c, dtype=float) for c in columns]
    lines = [header]
    for i in range(arrays[0].size):
        lines.append(_format_row([a[i] for a in arrays]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_fields(parts, allowed, required, step_no):
    values = {}
    for part in parts:
        if "=" not in part:
            raise SequenceFormatError(f"step {step_no}: expected key=value, got {part!r}")
        key, _, raw = part.partition("=")
        if key not in allowed:
            raise SequenceFormatError(f"step {step_no}: unknown field {key!r}")
        if key in values:
            raise SequenceFormatError(f"step {step_no}: duplicate field {key!r}")
        try:
            values[key] = float(raw)
        except ValueError:
            raise SequenceFormatError(f"step {step_no}: non-numeric value for {key!r}") from None
    for key in required:
        if key not in values:
            raise SequenceFormatError(f"step {step_no}: missing field {key!r}")
    return values


def parse_sequence_text(text: str, detuning: DetuningModel | None = None):
    """Parse sequence steps from text, one step per line.

    Lines are ``pulse angle=<rad> [f=<khz>] [phase=<rad>]`` or
    ``delay T=<us> [phi=<rad>]``; blank lines and '#' comments are skipped.
    Pulses that carry a frequency become detuned pulses when ``detuning``
    is given, otherwise they are ideal rotations by the stated angle.
    """
    steps = []
    step_no = 0
    for line in text.splitlines():
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        step_no += 1
        parts = stripped.split()
        kind = parts[0]
        if kind == "pulse":
            values = _parse_fields(parts[1:], {"angle", "f", "phase"}, {"angle"}, step_no)
            f = values.get("f")
            steps.append(PulseSpec(
                angle=values["angle"],
                f_khz=f,
                detuning=detuning if f is not None else None,
                axis_phase=values.get("phase", 0.0),
            ))
        elif kind == "delay":
            values = _parse_fields(parts[1:], {"T", "phi"}, {"T"}, step_no)
            steps.append(DelaySpec(t_us=values["T"], phi=values.get("phi", 0.0)))
        else:
            raise SequenceFormatError(f"step {step_no}: unknown step kind {kind!r}")
    if not steps:
        raise SequenceFormatError("step 1: sequence file contains no steps")
    return tuple(steps)


def read_sequence_file(path, detuning: DetuningModel | None = None):
    return parse_sequence_text(Path(path).read_text(encoding="utf-8"), detuning)


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def fit_result_dict(result: FitResult, metadata: dict | None = None) -> dict:
    """JSON-ready view of a fit result, with a stable key order."""
    payload = {
        "converged": result.converged,
        "ill_conditioned": result.ill_conditioned,
        "iterations": result.iterations,
        "target_component": result.target,
        "free_parameters": list(result.free),
        "parameters": {
            "f0_khz": result.parameters["f0"],
            "t_us": result.parameters["t"],
            "phi_rad": result.parameters["phi"],
            "delta_khz": result.parameters["delta"],
            "amplitude_scale": result.parameters["scale"],
        },
        "stderr": {name: result.stderr[name] for name in result.free},
        "sum_squared_residuals": result.ssr,
        "n_points": int(result.residuals.size),
    }
    if metadata:
        payload["metadata"] = metadata
    return payload


def sensitivity_report_dict(report: SensitivityReport, metadata: dict | None = None) -> dict:
    payload = {
        "average_phase_sensitivity_rad": report.average_rad,
        "n_peaks": len(report.per_peak_rad),
        "peak_f_khz": list(report.peak_f_khz),
        "peak_phase_rad": list(report.peak_phase_rad),
        "per_peak_sensitivity_rad": list(report.per_peak_rad),
    }
    if metadata:
        payload["metadata"] = metadata
    return payload
