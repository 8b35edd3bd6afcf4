"""Reading and writing instances, hull systems and results."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .applications import HullSystem
from .errors import InputError
from .walk import Instance


def _load_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def _float_array(value, what: str) -> np.ndarray:
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what}: expected numbers") from exc


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict) or "columns" not in doc:
        raise InputError('instance must be a JSON object with a "columns" field')
    cols = _float_array(doc["columns"], "columns")
    if cols.ndim != 2:
        raise InputError("columns must be a list of equal-length lists")
    n, m = cols.shape
    if doc.get("n", n) != n or doc.get("m", m) != m:
        raise InputError(f'declared n/m ({doc.get("n")}, {doc.get("m")}) do not match columns ({n}, {m})')
    x0 = _float_array(doc["x0"], "x0") if doc.get("x0") is not None else np.zeros(n)
    return Instance(cols.T, x0)


def instance_to_dict(inst: Instance) -> dict:
    return {
        "m": inst.m,
        "n": inst.n,
        "columns": inst.vectors.T.tolist(),
        "x0": inst.x0.tolist(),
    }


def read_instance(path) -> Instance:
    """Load an instance from JSON, or from CSV with one column per line."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror}") from exc
        if not rows:
            raise InputError(f"{path}: empty CSV")
        cols = _float_array(rows, "CSV columns")
        if cols.ndim != 2:
            raise InputError(f"{path}: rows have different lengths")
        return Instance.centered(cols.T)
    return instance_from_dict(_load_json(path))


def hull_system_from_dict(doc: dict) -> HullSystem:
    if not isinstance(doc, dict) or not isinstance(doc.get("sets"), list):
        raise InputError('hull system must be a JSON object with a "sets" list')
    points, coeffs = [], []
    for i, s in enumerate(doc["sets"]):
        if not isinstance(s, dict) or "points" not in s or "coeffs" not in s:
            raise InputError(f'set {i}: needs "points" and "coeffs"')
        p = _float_array(s["points"], f"set {i} points")
        if p.ndim != 2:
            raise InputError(f"set {i}: points must be a list of vectors")
        points.append(p)
        coeffs.append(_float_array(s["coeffs"], f"set {i} coeffs"))
    sys = HullSystem(points, coeffs)
    if "m" in doc and doc["m"] != sys.m:
        raise InputError(f'declared m = {doc["m"]} but points have dimension {sys.m}')
    return sys


def hull_system_to_dict(sys: HullSystem) -> dict:
    return {
        "m": sys.m,
        "sets": [{"points": p.tolist(), "coeffs": c.tolist()} for p, c in zip(sys.points, sys.coeffs)],
    }


def read_hull_system(path) -> HullSystem:
    return hull_system_from_dict(_load_json(path))


def instance_hash(inst: Instance) -> str:
    """SHA-256 over shape and the raw little-endian float64 data."""
    h = hashlib.sha256()
    h.update(f"{inst.m}x{inst.n}".encode())
    h.update(np.ascontiguousarray(inst.vectors, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(inst.x0, dtype="<f8").tobytes())
    return h.hexdigest()


def hull_hash(sys: HullSystem) -> str:
    h = hashlib.sha256()
    for p, c in zip(sys.points, sys.coeffs):
        h.update(f"{p.shape}".encode())
        h.update(np.ascontiguousarray(p, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(c, dtype="<f8").tobytes())
    return h.hexdigest()


def dumps(doc) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, doc) -> None:
    write_atomic(path, dumps(doc))
