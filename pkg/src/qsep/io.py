"""JSON file formats for states, measurement families and reports.

Every file is an object ``{schema_version, kind, dims, data, metadata}``.
Complex numbers are ``[re, im]`` pairs, matrices are row-major lists of
rows, and floats are written with 17 significant digits so that
serialize -> parse -> serialize is byte-identical.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .linalg import DensityMatrix
from .measurements import GSICPOVM, POVM, MUBFamily, MUMFamily, validate_family

SCHEMA_VERSION = 1
FAMILY_KINDS = ("mub", "mum", "gsic")


class SchemaError(ValueError):
    pass


# -- deterministic JSON text ------------------------------------------------


def format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    s = format(float(x) + 0.0, ".17g")  # + 0.0 folds -0.0 into 0.0
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _inline(obj) -> bool:
    """Lists of scalars and lists of such lists stay on one line."""
    if not isinstance(obj, (list, tuple)):
        return True
    return all(not isinstance(x, (dict, list, tuple)) or (isinstance(x, (list, tuple)) and
               all(not isinstance(y, (dict, list, tuple)) for y in x)) for x in obj)


def _dump(obj, indent: int) -> str:
    pad = "  " * indent
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}  {json.dumps(str(k))}: {_dump(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if _inline(obj):
            return "[" + ", ".join(_dump(x, indent + 1) for x in obj) + "]"
        items = [f"{pad}  {_dump(x, indent + 1)}" for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return _dump(obj, 0) + "\n"


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- matrices ---------------------------------------------------------------


def matrix_to_data(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def data_to_matrix(data, n: int | None = None) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"matrix entries must be [re, im] number pairs: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise SchemaError(f"expected a square matrix of [re, im] pairs, got array shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise SchemaError(f"expected a {n}x{n} matrix, got {arr.shape[0]}x{arr.shape[1]}")
    return _complex(arr)


def _complex(arr: np.ndarray) -> np.ndarray:
    out = np.empty(arr.shape[:-1], dtype=complex)
    out.real, out.imag = arr[..., 0], arr[..., 1]
    return out


def _envelope(kind: str, dims, data, metadata: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "dims": [int(d) for d in dims],
        "data": data,
        "metadata": metadata,
    }


def _check_envelope(doc, kinds) -> None:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a JSON object")
    missing = {"schema_version", "kind", "dims", "data", "metadata"} - set(doc)
    if missing:
        raise SchemaError(f"missing top-level fields: {sorted(missing)}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {doc['schema_version']!r}")
    if doc["kind"] not in kinds:
        raise SchemaError(f"kind {doc['kind']!r} is not one of {list(kinds)}")
    dims = doc["dims"]
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise SchemaError(f"dims must be a non-empty list of positive integers, got {dims!r}")
    if not isinstance(doc["metadata"], dict):
        raise SchemaError("metadata must be an object")


# -- states -----------------------------------------------------------------


def state_to_doc(rho: DensityMatrix, metadata: dict | None = None) -> dict:
    return _envelope("state", rho.dims, matrix_to_data(rho.matrix), dict(metadata or {}))


def state_from_doc(doc) -> DensityMatrix:
    _check_envelope(doc, ("state",))
    n = int(np.prod(doc["dims"]))
    m = data_to_matrix(doc["data"], n)
    try:
        return DensityMatrix(m, doc["dims"])
    except ValueError as exc:
        raise SchemaError(f"not a valid density matrix: {exc}") from None


# -- measurement families ---------------------------------------------------


def family_to_doc(family, metadata: dict | None = None) -> dict:
    meta = dict(metadata or {})
    if isinstance(family, MUBFamily):
        data = [[[[float(z.real), float(z.imag)] for z in b[:, i]] for i in range(family.dim)] for b in family.bases]
        meta.setdefault("count", family.count)
    elif isinstance(family, MUMFamily):
        data = [[matrix_to_data(e) for e in p.elements] for p in family.povms]
        meta.setdefault("count", family.count)
        meta.setdefault("kappa", float(family.kappa))
    elif isinstance(family, GSICPOVM):
        data = [matrix_to_data(e) for e in family.elements]
        meta.setdefault("a", float(family.a))
    else:
        raise TypeError(f"not a measurement family: {type(family).__name__}")
    return _envelope(family.kind, [family.dim], data, meta)


def family_from_doc(doc, validate: bool = True):
    _check_envelope(doc, FAMILY_KINDS)
    if len(doc["dims"]) != 1:
        raise SchemaError(f"a measurement family acts on one subsystem, got dims {doc['dims']}")
    d = doc["dims"][0]
    kind, data, meta = doc["kind"], doc["data"], doc["metadata"]
    if not isinstance(data, list) or not data:
        raise SchemaError("data must be a non-empty list")
    try:
        if kind == "mub":
            bases = []
            for vecs in data:
                arr = np.array(vecs, dtype=float)
                if arr.shape != (d, d, 2):
                    raise SchemaError(f"each MUB basis must hold {d} vectors of {d} [re, im] pairs")
                bases.append(_complex(arr).T)
            family = MUBFamily(d, tuple(bases))
        elif kind == "mum":
            if "kappa" not in meta:
                raise SchemaError("MUM metadata must record kappa")
            povms = tuple(POVM(d, np.array([data_to_matrix(e, d) for e in els])) for els in data)
            family = MUMFamily(d, float(meta["kappa"]), povms)
        else:
            if "a" not in meta:
                raise SchemaError("GSIC metadata must record a")
            family = GSICPOVM(d, float(meta["a"]), np.array([data_to_matrix(e, d) for e in data]))
    except SchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"malformed {kind} data: {exc}") from None
    if validate:
        report = validate_family(family)
        if not report.passed:
            raise SchemaError(f"family fails its defining relations:\n{report}")
    return family


# -- files ------------------------------------------------------------------


def read_doc(path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None


def load_state(path) -> DensityMatrix:
    return state_from_doc(read_doc(path))


def load_family(path, validate: bool = True):
    return family_from_doc(read_doc(path), validate)


def save_state(path, rho: DensityMatrix, metadata: dict | None = None) -> None:
    atomic_write(path, dumps(state_to_doc(rho, metadata)))


def save_family(path, family, metadata: dict | None = None) -> None:
    atomic_write(path, dumps(family_to_doc(family, metadata)))
