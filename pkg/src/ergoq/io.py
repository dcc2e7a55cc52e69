"""Serialization: matrices and maps as JSON, 17-digit float output, CSV, schema checks."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from fractions import Fraction

import jsonschema
import numpy as np

from .errors import DimensionError, ValidationError
from .qcore import CPMap

__all__ = [
    "SCHEMA_VERSION",
    "cpmap_from_json",
    "cpmap_to_json",
    "dumps",
    "matrix_from_json",
    "matrix_to_json",
    "payload_schema",
    "to_csv",
    "validate_payload",
]

SCHEMA_VERSION = "1.0"


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError("only square matrices are serialized")
    return {"dim": M.shape[0], "re": M.real.tolist(), "im": M.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        D = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((D, D))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix object: {exc}") from exc
    if re.shape != (D, D) or im.shape != (D, D):
        raise DimensionError(f"matrix entries do not match dim={D}")
    return re + 1j * im


def cpmap_to_json(phi: CPMap) -> dict:
    return {"kraus": [matrix_to_json(K) for K in phi.kraus], "trace_preserving": bool(phi.trace_preserving)}


def cpmap_from_json(obj: dict) -> CPMap:
    try:
        kraus = [matrix_from_json(K) for K in obj["kraus"]]
    except KeyError as exc:
        raise ValidationError("map object needs a 'kraus' list") from exc
    if not kraus:
        raise ValidationError("kraus list is empty")
    return CPMap(np.array(kraus), trace_preserving=obj.get("trace_preserving"))


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = "%.17g" % x
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _plain(obj):
    """Convert numpy and rational values to JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": _plain(obj.real.tolist()), "im": _plain(obj.imag.tolist())}
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def _write(obj, out: list, indent: int, level: int):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + pad)
        for k, (key, v) in enumerate(obj.items()):
            if k:
                out.append(sep)
            out.append(json.dumps(str(key)) + ": ")
            _write(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        # numeric rows stay on one line
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            out.append("[" + ", ".join(_fmt_float(v) if isinstance(v, float) else str(v) for v in obj) + "]")
            return
        out.append("[" + pad)
        for k, v in enumerate(obj):
            if k:
                out.append(sep)
            _write(v, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float printed to 17 significant digits."""
    out: list[str] = []
    _write(_plain(obj), out, indent, 0)
    return "".join(out) + "\n"


def to_csv(header: list[str], rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_float(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


_NUM = {"type": ["number", "string"]}

_RESULT_SCHEMAS = {
    "fixed-point": {"required": ["start", "end", "final_state", "residuals", "converged"]},
    "estimate-mu": {"required": ["mu_hat", "standard_error", "per_pair", "trace_distance_mu"],
                    "properties": {"mu_hat": _NUM, "standard_error": _NUM}},
    "rank-one-residual": {"required": ["windows", "residuals", "slope", "r_squared"]},
    "haar-moments": {"required": ["m2", "m2_exact", "tr_w2", "entropy_deficit", "ks_semicircle"]},
    "wg-table": {"required": ["n", "L", "values", "floats"],
                 "properties": {"values": {"type": "object", "additionalProperties": {"type": "string"}}}},
    "mps-expect": {"required": ["finite"]},
    "mps-correlation": {"required": ["ells", "connected"]},
    "mps-entropy": {"required": ["bonds", "entropy", "spectra"]},
    "oracle-compare": {"required": ["checks", "all_passed"]},
}


def payload_schema(command: str) -> dict:
    if command not in _RESULT_SCHEMAS:
        raise ValidationError(f"no schema for command {command!r}")
    result = {"type": "object"}
    result.update(_RESULT_SCHEMAS[command])
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "required": ["schema_version", "command", "params", "result"],
        "properties": {
            "schema_version": {"const": SCHEMA_VERSION},
            "command": {"const": command},
            "params": {"type": "object"},
            "result": result,
        },
    }


def validate_payload(command: str, payload: dict) -> None:
    """Raise :class:`ValidationError` if ``payload`` does not match its schema."""
    try:
        jsonschema.validate(_plain(payload), payload_schema(command))
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"output failed schema validation: {exc.message}") from exc
