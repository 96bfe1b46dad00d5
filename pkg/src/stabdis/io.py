"""On-disk formats.

States, disentangling records and DMRG checkpoints share one container: a
NumPy ``.npz`` archive holding the site tensors as ``t0000, t0001, ...``
(row-major, complex or real as stored), bond singular values as
``s0001, ...``, optional extra arrays, and a ``meta`` entry with a JSON
document carrying ``format_version``, ``kind`` and shape metadata.
Reports are plain JSON; tables are CSV with 17 significant digits.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .mps import MPS

FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def _mps_arrays(state: MPS) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    arrays = {f"t{i:04d}": np.asarray(t) for i, t in enumerate(state.tensors)}
    for b, s in enumerate(state.schmidt, start=1):
        if s is not None:
            arrays[f"s{b:04d}"] = np.asarray(s)
    meta = {
        "length": state.length,
        "shapes": [list(t.shape) for t in state.tensors],
        "dtype": str(state.dtype),
        "center": state.center,
        "truncation_error": state.truncation_error,
    }
    return arrays, meta


def _mps_from(data: Mapping[str, np.ndarray], meta: Mapping[str, Any]) -> MPS:
    L = meta["length"]
    ts = tuple(np.array(data[f"t{i:04d}"]) for i in range(L))
    for t, shape in zip(ts, meta["shapes"]):
        if list(t.shape) != list(shape):
            raise FormatError(f"tensor shape {t.shape} does not match metadata {shape}")
    schmidt = tuple(np.array(data[f"s{b:04d}"]) if f"s{b:04d}" in data else None for b in range(1, L))
    return MPS(ts, schmidt, center=meta["center"], truncation_error=meta["truncation_error"])


def save_container(path: str | Path, kind: str, state: MPS, meta: Mapping[str, Any] | None = None,
                   extra: Mapping[str, np.ndarray] | None = None) -> Path:
    arrays, mps_meta = _mps_arrays(state)
    for k, v in (extra or {}).items():
        arrays[f"x_{k}"] = np.asarray(v)
    doc = {"format_version": FORMAT_VERSION, "kind": kind, "mps": mps_meta, "meta": dict(meta or {})}
    arrays["meta"] = np.array(json.dumps(doc, sort_keys=True))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)
    return path


def load_container(path: str | Path, kind: str | None = None) -> tuple[MPS, dict, dict[str, np.ndarray]]:
    """Returns ``(state, meta, extra_arrays)``."""
    with np.load(path, allow_pickle=False) as data:
        doc = json.loads(str(data["meta"]))
        if doc.get("format_version") != FORMAT_VERSION:
            raise FormatError(f"unsupported format_version {doc.get('format_version')!r}")
        if kind is not None and doc.get("kind") != kind:
            raise FormatError(f"expected a {kind!r} container, found {doc.get('kind')!r}")
        state = _mps_from(data, doc["mps"])
        extra = {k[2:]: np.array(data[k]) for k in data.files if k.startswith("x_")}
    return state, doc["meta"], extra


def save_mps(path: str | Path, state: MPS, meta: Mapping[str, Any] | None = None) -> Path:
    return save_container(path, "mps", state, meta)


def load_mps(path: str | Path) -> MPS:
    return load_container(path, "mps")[0]


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def fmt(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
