"""JSON schemas and deterministic serialization.

Complex matrices travel as ``{"rows": r, "cols": c, "data": [[re, im], ...]}``
row-major; factor shapes as ``{"dims": [...], "mult": [...]}``.  Reports are
serialized canonically: keys sorted, floats printed with 17 significant
digits so the decimal form round-trips doubles exactly and identical inputs
produce byte-identical output.
"""

from __future__ import annotations

import json
from math import prod

import numpy as np

from .errors import InputFormatError, ShapeMismatchError
from .linalg import FactorShape
from .scenarios import BellFunctional, OutcomeSpace, Scenario
from .states import QuantumState, state_from_vector


def _fmt_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    if x == int(x) and abs(x) < 1e16:
        return format(x, ".1f")
    return format(x, ".17g")


def canonical_dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON text: sorted keys, 17-significant-digit floats."""
    pad = " " * indent

    def render(o, depth):
        if o is None:
            return "null"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, (list, tuple, np.ndarray)):
            items = [render(v, depth + 1) for v in (o.tolist() if isinstance(o, np.ndarray) else o)]
            if not items:
                return "[]"
            if indent:
                inner = ",\n".join(pad * (depth + 1) + it for it in items)
                return "[\n" + inner + "\n" + pad * depth + "]"
            return "[" + ", ".join(items) + "]"
        if isinstance(o, dict):
            items = []
            for k in sorted(o):
                items.append(json.dumps(str(k)) + ": " + render(o[k], depth + 1))
            if not items:
                return "{}"
            if indent:
                inner = ",\n".join(pad * (depth + 1) + it for it in items)
                return "{\n" + inner + "\n" + pad * depth + "}"
            return "{" + ", ".join(items) + "}"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return render(obj, 0)


def load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc


def matrix_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in a.reshape(-1)],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"matrix object missing field: {exc}") from exc
    if len(data) != rows * cols:
        raise InputFormatError(f"matrix data length {len(data)} != rows*cols = {rows * cols}")
    flat = np.array([complex(re, im) for re, im in data])
    return flat.reshape(rows, cols)


def shape_to_json(shape: FactorShape) -> dict:
    return {"dims": list(shape.site_dims), "mult": list(shape.multiplicities)}


def shape_from_json(obj) -> FactorShape:
    try:
        return FactorShape(tuple(int(d) for d in obj["dims"]), tuple(int(m) for m in obj["mult"]))
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"shape object missing field: {exc}") from exc


def state_to_json(state: QuantumState) -> dict:
    return {"dims": list(state.site_dims), "matrix": matrix_to_json(state.rho)}


def state_from_json(obj) -> QuantumState:
    try:
        dims = tuple(int(d) for d in obj["dims"])
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"state object missing field: {exc}") from exc
    if "vector" in obj:
        vec = np.array([complex(re, im) for re, im in obj["vector"]])
        if vec.size != prod(dims):
            raise InputFormatError("state vector length does not match dims")
        return state_from_vector(dims, vec)
    if "matrix" in obj:
        return QuantumState(dims, matrix_from_json(obj["matrix"]))
    raise InputFormatError("state object needs a 'vector' or 'matrix' field")


def scenario_to_json(sc: Scenario) -> dict:
    return {
        "state": state_to_json(sc.state),
        "povms": [
            [[matrix_to_json(e) for e in setting] for setting in site]
            for site in sc.povms
        ],
        "outcomes": {"values": [list(v) for v in sc.outcomes.values]},
    }


def scenario_from_json(obj) -> Scenario:
    try:
        state = state_from_json(obj["state"])
        povms = tuple(
            tuple(tuple(matrix_from_json(e) for e in setting) for setting in site)
            for site in obj["povms"]
        )
        values = tuple(tuple(float(v) for v in site) for site in obj["outcomes"]["values"])
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"scenario object missing field: {exc}") from exc
    return Scenario(state, povms, OutcomeSpace(values))


def functional_to_json(f: BellFunctional) -> dict:
    return {
        "settings": list(f.settings),
        "outcomes": list(f.outcome_sizes),
        "coeffs": f.coeffs.tolist(),
    }


def functional_from_json(obj) -> BellFunctional:
    try:
        settings = tuple(int(s) for s in obj["settings"])
        coeffs = np.asarray(obj["coeffs"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"functional object missing field: {exc}") from exc
    if "outcomes" in obj:
        sizes = tuple(int(k) for k in obj["outcomes"])
    else:
        if coeffs.ndim != 2 * len(settings):
            raise InputFormatError("coefficient tensor order must be twice the site count")
        sizes = coeffs.shape[len(settings):]
    return BellFunctional(settings, sizes, coeffs)


def measure_to_json(m) -> dict:
    return {
        "settings": list(m.settings),
        "outcomes": list(m.outcome_sizes),
        "weights": m.weights.tolist(),
        "total_mass": m.total_mass(),
        "total_variation": m.total_variation(),
    }


def source_op_to_json(t, trace_norm_value: float, defining_residual: float) -> dict:
    return {
        "shape": shape_to_json(t.shape),
        "matrix": matrix_to_json(t.op),
        "builder": t.builder_tag,
        "trace_norm": trace_norm_value,
        "defining_residual": defining_residual,
    }


def operator_from_json(obj) -> tuple[FactorShape, np.ndarray]:
    try:
        shape = shape_from_json(obj["shape"])
        matrix = matrix_from_json(obj["matrix"])
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"operator object missing field: {exc}") from exc
    if matrix.shape != (shape.total_dim, shape.total_dim):
        raise ShapeMismatchError("operator matrix does not match its declared shape")
    return shape, matrix
