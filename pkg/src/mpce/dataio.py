"""File formats for matrices, ensembles, and model envelopes.

Matrices travel either as CSV (one row per realization) or as the MPCE
binary block: magic bytes "MPCE", version u32 = 1, rows u32, cols u32, then
row-major little-endian float64 payload. Model envelopes are JSON with
arrays embedded as base64-encoded MPCE blocks.
"""

from __future__ import annotations

import base64
import json
import struct
from pathlib import Path

import numpy as np

from .fields import FieldEnsemble
from .grid import GridSpec

MAGIC = b"MPCE"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def matrix_to_bytes(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(np.atleast_2d(np.asarray(arr, dtype=float)))
    if arr.ndim != 2:
        raise ValueError("only 1-D or 2-D arrays are supported")
    rows, cols = arr.shape
    header = _HEADER.pack(MAGIC, VERSION, rows, cols)
    return header + arr.astype("<f8").tobytes(order="C")


def matrix_from_bytes(blob: bytes) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise ValueError("truncated MPCE block")
    magic, version, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError("bad magic bytes; not an MPCE block")
    if version != VERSION:
        raise ValueError(f"unsupported MPCE version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(blob) != expected:
        raise ValueError(f"MPCE block length {len(blob)} != expected {expected}")
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    return data.reshape(rows, cols).astype(float)


def write_matrix(path: str | Path, arr: np.ndarray, fmt: str = "bin") -> None:
    path = Path(path)
    if fmt == "bin":
        path.write_bytes(matrix_to_bytes(arr))
    elif fmt == "csv":
        np.savetxt(path, np.atleast_2d(arr), delimiter=",", fmt="%.17g")
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


def read_matrix(path: str | Path, fmt: str | None = None) -> np.ndarray:
    path = Path(path)
    if fmt is None:
        fmt = "bin" if path.read_bytes()[:4] == MAGIC else "csv"
    if fmt == "bin":
        return matrix_from_bytes(path.read_bytes())
    if fmt == "csv":
        return np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))
    raise ValueError(f"unknown matrix format {fmt!r}")


def encode_array(arr: np.ndarray) -> dict:
    """JSON-safe encoding of an array as an inline base64 MPCE block."""
    arr = np.asarray(arr, dtype=float)
    return {
        "shape": list(arr.shape),
        "block": base64.b64encode(matrix_to_bytes(arr.reshape(1, -1) if arr.ndim != 2 else arr)).decode("ascii"),
    }


def decode_array(d: dict) -> np.ndarray:
    mat = matrix_from_bytes(base64.b64decode(d["block"]))
    return mat.reshape(tuple(d["shape"]))


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_suffix(path.suffix + ".json")


def save_ensemble(path: str | Path, ensemble: FieldEnsemble, fmt: str = "bin") -> None:
    """Write ensemble values plus a grid-metadata JSON sidecar."""
    write_matrix(path, ensemble.values, fmt)
    meta = ensemble.grid.to_dict()
    meta["provenance"] = ensemble.provenance
    if ensemble.seed is not None:
        meta["seed"] = ensemble.seed
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_ensemble(path: str | Path, fmt: str | None = None) -> FieldEnsemble:
    values = read_matrix(path, fmt)
    meta = json.loads(sidecar_path(path).read_text())
    grid = GridSpec.from_dict(meta)
    return FieldEnsemble(
        grid=grid,
        values=values,
        provenance=meta.get("provenance", "unknown"),
        seed=meta.get("seed"),
    )


def save_json(path: str | Path, obj: dict) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
