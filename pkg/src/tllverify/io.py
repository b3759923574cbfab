"""JSON (de)serialization for networks, properties and layered nets.

TLL file::

    {"n": 2, "m": 1, "N": 2, "M": 2,
     "outputs": [{"W": [[...]], "b": [...], "selectors": [[0], [1]]}]}

Property file (rows of ``A x <= b``; ``null`` means an infinite bound)::

    {"input_polytope": {"A": [[...]], "b": [...]},
     "output_box": {"lower": [0.0], "upper": [null]}}

All indices are 0-based.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .model import MultiTLLSpec, OutputBox, Polytope, TLLSpec, validate_multi

SCHEMA_VERSIONS = {
    "tll": 1,
    "property": 1,
    "verdict": 1,
    "layernet": 1,
    "results_csv": 1,
}


class FormatError(ValueError):
    """A file could not be parsed; the message names the offending field."""


def _read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(obj, indent=1, allow_nan=False) + "\n")


def _number(value, where: str, allow_null: bool = False) -> float:
    if value is None and allow_null:
        return math.nan
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _vector(value, where: str, allow_null: bool = False) -> np.ndarray:
    if not isinstance(value, list):
        raise FormatError(f"{where}: expected a list, got {type(value).__name__}")
    return np.array([_number(v, f"{where}[{k}]", allow_null) for k, v in enumerate(value)], dtype=float)


def _matrix(value, where: str, width: int | None = None) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise FormatError(f"{where}: expected a non-empty list of rows")
    rows = [_vector(r, f"{where}[{k}]") for k, r in enumerate(value)]
    w = width if width is not None else len(rows[0])
    for k, r in enumerate(rows):
        if len(r) != w:
            raise FormatError(f"{where}[{k}]: expected {w} entries, got {len(r)}")
    return np.array(rows, dtype=float)


def _field(obj, key: str, where: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    if key not in obj:
        raise FormatError(f"{where}: missing field '{key}'")
    return obj[key]


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{where}: expected an integer, got {value!r}")
    return value


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


# --- TLL networks -----------------------------------------------------------

def tll_to_dict(spec: TLLSpec | MultiTLLSpec) -> dict:
    if isinstance(spec, TLLSpec):
        spec = MultiTLLSpec((spec,))
    return {
        "n": spec.n,
        "m": spec.m,
        "N": spec.N,
        "M": spec.M,
        "outputs": [
            {
                "W": comp.W.tolist(),
                "b": comp.b.tolist(),
                "selectors": [list(s) for s in comp.selectors],
            }
            for comp in spec.outputs
        ],
    }


def tll_from_dict(obj: dict) -> MultiTLLSpec:
    n = _int(_field(obj, "n", "<root>"), "n")
    outputs = _field(obj, "outputs", "<root>")
    if not isinstance(outputs, list) or not outputs:
        raise FormatError("outputs: expected a non-empty list")
    comps = []
    for k, out in enumerate(outputs):
        where = f"outputs[{k}]"
        W = _matrix(_field(out, "W", where), f"{where}.W", width=n)
        b = _vector(_field(out, "b", where), f"{where}.b")
        sels_raw = _field(out, "selectors", where)
        if not isinstance(sels_raw, list):
            raise FormatError(f"{where}.selectors: expected a list of index lists")
        sels = []
        for j, s in enumerate(sels_raw):
            if not isinstance(s, list):
                raise FormatError(f"{where}.selectors[{j}]: expected a list")
            sels.append([_int(i, f"{where}.selectors[{j}][{q}]") for q, i in enumerate(s)])
        if len(b) != W.shape[0]:
            raise FormatError(f"{where}.b: length {len(b)} does not match {W.shape[0]} rows of W")
        comps.append(TLLSpec(W, b, sels))
    spec = MultiTLLSpec(tuple(comps))
    for key, actual in (("m", spec.m), ("N", spec.N), ("M", spec.M)):
        if key in obj and _int(obj[key], key) != actual:
            raise FormatError(f"{key}: header says {obj[key]} but outputs imply {actual}")
    validate_multi(spec).raise_if_invalid("TLL network")
    return spec


def save_tll(spec: TLLSpec | MultiTLLSpec, path):
    _write_json(path, tll_to_dict(spec))


def load_tll(path) -> MultiTLLSpec:
    try:
        return tll_from_dict(_read_json(path))
    except FormatError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise FormatError(f"{path}: {exc}") from exc


# --- properties -------------------------------------------------------------

def property_to_dict(polytope: Polytope, box: OutputBox) -> dict:
    return {
        "input_polytope": {"A": polytope.A.tolist(), "b": polytope.b.tolist()},
        "output_box": {
            "lower": [_finite(v) for v in box.lower],
            "upper": [_finite(v) for v in box.upper],
        },
    }


def property_from_dict(obj: dict) -> tuple[Polytope, OutputBox]:
    poly = _field(obj, "input_polytope", "<root>")
    A = _matrix(_field(poly, "A", "input_polytope"), "input_polytope.A")
    b = _vector(_field(poly, "b", "input_polytope"), "input_polytope.b")
    if len(b) != A.shape[0]:
        raise FormatError("input_polytope.b: length does not match rows of A")
    out = _field(obj, "output_box", "<root>")
    lower = _vector(_field(out, "lower", "output_box"), "output_box.lower", allow_null=True)
    upper = _vector(_field(out, "upper", "output_box"), "output_box.upper", allow_null=True)
    lower[np.isnan(lower)] = -np.inf
    upper[np.isnan(upper)] = np.inf
    if len(lower) != len(upper):
        raise FormatError("output_box: lower and upper differ in length")
    try:
        return Polytope.from_matrix(A, b), OutputBox(lower, upper)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_property(polytope: Polytope, box: OutputBox, path):
    _write_json(path, property_to_dict(polytope, box))


def load_property(path) -> tuple[Polytope, OutputBox]:
    try:
        return property_from_dict(_read_json(path))
    except FormatError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise FormatError(f"{path}: {exc}") from exc
