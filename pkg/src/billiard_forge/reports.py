"""JSON report bundles (schema version 1).

A bundle is a single JSON object with ``"schema": 1`` and any of the
sections listed in :data:`SECTIONS`. Readers ignore unknown fields, so
adding a section or a field is not a breaking change.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import jsonschema

from .errors import BilliardForgeError, ValidationError

SCHEMA_VERSION = 1


class ExportError(BilliardForgeError, OSError):
    """A report could not be written."""


_num = {"type": "number"}
_num_or_null = {"type": ["number", "null"]}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "billiard-forge report bundle",
    "type": "object",
    "required": ["schema"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "blueprint": {
            "type": "object",
            "required": ["N", "r", "eps", "tau0", "alpha1", "phi1", "phi0", "tau_c", "tau1", "H", "h",
                         "Delta", "gamma0"],
            "properties": {
                "N": {"type": "integer", "minimum": 3},
                "r": _num, "eps": _num, "tau0": _num, "alpha1": _num, "phi1": _num, "phi0": _num,
                "tau_c": _num, "tau1": _num, "H": _num, "h": _num, "Delta": _num,
                "gamma0": {
                    "type": "object",
                    "required": ["x", "y", "nx", "ny"],
                    "properties": {"x": _num, "y": _num, "nx": _num, "ny": _num},
                },
            },
        },
        "windows": {
            "type": "object",
            "required": ["R1", "R2", "window_low", "window_high", "case"],
            "properties": {
                "R1": _num, "R2": _num, "window_low": _pair,
                "window_high": {"oneOf": [_pair, {"type": "null"}]},
                "case": {"enum": ["item2", "item3"]},
            },
        },
        "trace": {
            "type": "object",
            "required": ["trace", "classification", "rotation_number", "resonance_flags"],
            "properties": {
                "trace": _num,
                "classification": {"enum": ["elliptic", "parabolic", "hyperbolic"]},
                "rotation_number": _num_or_null,
                "resonance_flags": {"type": "array", "items": _num},
            },
        },
        "curvature": {
            "type": "object",
            "required": ["sup_abs_curvature", "H", "Delta", "ratio", "C", "pass"],
            "properties": {"sup_abs_curvature": _num, "H": _num, "Delta": _num, "ratio": _num,
                           "C": _num, "pass": {"type": "boolean"}},
        },
        "gamma": {
            "type": "object",
            "required": ["variant", "k0", "pieces"],
            "properties": {"variant": {"enum": ["a", "b", "c", "flat"]}, "k0": _num,
                           "pieces": {"type": "array"}},
        },
        "closure": {
            "type": "object",
            "required": ["closure_error", "tol", "ok", "period"],
            "properties": {"closure_error": _num, "tol": _num, "ok": {"type": "boolean"},
                           "period": {"type": "integer"}},
        },
        "monodromy": {
            "type": "object",
            "required": ["analytic", "finite_difference", "relative_error"],
            "properties": {"relative_error": _num, "entrywise_relative_error": _num},
        },
        "probe": {
            "type": "object",
            "required": ["delta", "iterations", "max_deviation", "threshold", "verdict", "escaped_at"],
            "properties": {
                "delta": _num, "iterations": {"type": "integer"}, "max_deviation": _num, "threshold": _num,
                "verdict": {"enum": ["bounded", "escaped", "aborted"]},
                "escaped_at": {"type": ["integer", "null"]},
            },
        },
        "rotation": {
            "type": "object",
            "required": ["measured", "linear"],
            "properties": {"measured": _num, "linear": _num, "delta": _num},
        },
        "twist": {
            "type": "object",
            "required": ["amplitudes", "rotation_numbers", "slope", "slope_ci", "verdict", "note"],
            "properties": {
                "amplitudes": {"type": "array", "items": _num, "minItems": 5},
                "rotation_numbers": {"type": "array", "items": _num},
                "slope": _num_or_null, "slope_stderr": _num_or_null,
                "slope_ci": {"type": "array", "items": _num_or_null},
                "verdict": {"enum": ["twist nonzero", "inconclusive"]},
                "note": {"type": "string"},
            },
        },
    },
}

SECTIONS = tuple(k for k in SCHEMA["properties"] if k != "schema")


def _clean(obj):
    """Recursively convert to JSON-native types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return int(obj)
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


def make_bundle(**sections) -> dict:
    """Assemble a bundle from report objects (anything with ``to_dict``) or dicts."""
    doc = {"schema": SCHEMA_VERSION}
    for key, val in sections.items():
        if val is None:
            continue
        if key not in SECTIONS:
            raise ValidationError(f"unknown report section {key!r}")
        doc[key] = _clean(val.to_dict() if hasattr(val, "to_dict") else val)
    validate_bundle(doc)
    return doc


def validate_bundle(doc: dict) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ValidationError(f"report does not match schema v{SCHEMA_VERSION} at {where}: {e.message}") from e


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_bundle(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    validate_bundle(doc)
    return doc


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise ExportError(f"cannot write {os.fspath(path)}: {e.strerror or e}") from e


def export_reports(bundle: dict, path, table=None, bp=None, gamma=None, phase=None) -> list:
    """Write ``bundle`` as JSON to ``path`` and SVG figures next to it.

    ``scene.svg`` is written when a table is given, ``phase.svg`` when
    phase-portrait data is given. Returns the written paths.
    """
    from .svg import render_phase_portrait, render_scene

    validate_bundle(bundle)
    path = Path(path)
    _write(path, dumps(bundle))
    written = [path]
    if table is not None:
        p = path.with_name("scene.svg")
        _write(p, render_scene(table, bp=bp, gamma=gamma))
        written.append(p)
    if phase is not None and phase.trajectories:
        p = path.with_name("phase.svg")
        _write(p, render_phase_portrait(phase))
        written.append(p)
    return written
