"""JSON schema for states: complex entries as [re, im] pairs, row-major, with a
"dim" header listing register labels and sizes."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .qcore import DensityOperator, Ensemble, HilbertDim, PureState, as_matrix, dim_of


class SchemaError(ValueError):
    pass


def _pairs(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [_pairs(row) for row in a]


def _complex(data, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"entries must be [re, im] pairs: {exc}") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise SchemaError(f"expected a {ndim}-d array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _dim(data: Mapping, n: int) -> HilbertDim:
    if "dim" not in data:
        return HilbertDim.single(n)
    try:
        return HilbertDim.from_json(data["dim"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed dim header: {exc}") from None


def operator_to_json(op) -> dict:
    if isinstance(op, PureState):
        return pure_to_json(op)
    return {"kind": "density", "dim": dim_of(op).to_json(), "data": _pairs(as_matrix(op))}


def operator_from_json(data: Mapping) -> DensityOperator:
    kind = data.get("kind", "density")
    if kind == "pure":
        return pure_from_json(data).density()
    if kind != "density":
        raise SchemaError(f"expected a density operator, got kind {kind!r}")
    m = _complex(data["data"], 2)
    return DensityOperator(m, _dim(data, m.shape[0]))


def pure_to_json(psi: PureState) -> dict:
    return {"kind": "pure", "dim": psi.dim.to_json(), "data": _pairs(psi.vector)}


def pure_from_json(data: Mapping) -> PureState:
    if data.get("kind", "pure") != "pure":
        raise SchemaError(f"expected a pure state, got kind {data.get('kind')!r}")
    v = _complex(data["data"], 1)
    return PureState(v, _dim(data, v.size))


def ensemble_to_json(ens: Ensemble) -> dict:
    return {
        "kind": "ensemble",
        "dim": ens.dim.to_json(),
        "probs": [float(p) for p in ens.probs],
        "states": [_pairs(s.vector) for s in ens.states],
    }


def ensemble_from_json(data: Mapping) -> Ensemble:
    if data.get("kind") != "ensemble":
        raise SchemaError(f"expected an ensemble, got kind {data.get('kind')!r}")
    states = [_complex(s, 1) for s in data["states"]]
    if not states:
        raise SchemaError("ensemble has no states")
    dim = _dim(data, states[0].size)
    return Ensemble(np.asarray(data["probs"], dtype=float), tuple(PureState(s, dim) for s in states), dim)


def unwrap(data: Mapping, key: str | None = None) -> Mapping:
    """Pull a state out of a CLI artifact {inputs, seed, version, results}."""
    if "results" not in data:
        return data
    res = data["results"]
    if key is None:
        key = next((k for k in ("ensemble", "state", "psi") if k in res), None)
    if key is None or key not in res:
        raise SchemaError(f"artifact has no state entry {key!r}; results keys: {sorted(res)}")
    return res[key]


def state_from_json(data: Mapping, key: str | None = None):
    """Dispatch on "kind"; CLI artifacts are unwrapped first."""
    data = unwrap(data, key)
    if "data" not in data and "states" not in data:
        raise SchemaError(f"not a state document (keys: {sorted(data)})")
    kind = data.get("kind")
    if kind == "pure":
        return pure_from_json(data)
    if kind == "ensemble":
        return ensemble_from_json(data)
    return operator_from_json(data)


def _clean(obj: Any) -> Any:
    """Make numpy scalars/arrays and non-finite floats JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def load(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON ({exc})") from None


def load_state(ref: str):
    """Read a state from ``path`` or ``path#key`` (key selects an artifact entry)."""
    path, _, key = str(ref).partition("#")
    return state_from_json(load(path), key or None)
