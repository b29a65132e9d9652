"""JSON system specs, JSON/CSV emission and atomic file writes.

Floats are written with 17 significant digits so every value parses back
to the identical double. Non-finite values (the ``-inf`` sentinels) are
written as the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import SpecError
from .system import CoarseMap, LinearSystem

__all__ = [
    "SystemSpec",
    "parse_spec",
    "load_spec",
    "spec_to_dict",
    "dumps",
    "atomic_write_text",
    "write_json",
    "write_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_trajectory_csv",
    "with_units",
]


@dataclass(frozen=True)
class SystemSpec:
    system: LinearSystem
    W: Optional[CoarseMap] = None
    eta: Optional[float] = None
    L: Optional[float] = None
    seed: Optional[int] = None


def _reject_constant(name):
    raise SpecError(f"non-finite number {name} in spec")


def _real(x, what) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SpecError(f"{what} must be a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise SpecError(f"{what} must be finite")
    return x


def _int(x, what) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SpecError(f"{what} must be an integer, got {x!r}")
    return x


def _matrix(data, rows, cols, what) -> np.ndarray:
    if not isinstance(data, list):
        raise SpecError(f"{what} must be a flat row-major array")
    if len(data) != rows * cols:
        raise SpecError(f"{what} has {len(data)} entries, expected {rows}*{cols}")
    return np.array([_real(v, what) for v in data], dtype=float).reshape(rows, cols)


def parse_spec(obj: Dict[str, Any]) -> SystemSpec:
    """Build a :class:`SystemSpec` from a decoded JSON object.

    Raises
    ------
    SpecError
        On structural problems (missing keys, wrong lengths, non-numbers).
    NotSPDError, RankError
        When the numbers parse but ``Sigma`` or ``W`` are unusable.
    """
    if not isinstance(obj, dict):
        raise SpecError("spec must be a JSON object")
    for key in ("n", "A", "Sigma"):
        if key not in obj:
            raise SpecError(f"spec is missing '{key}'")
    n = _int(obj["n"], "n")
    if n < 1:
        raise SpecError("n must be >= 1")
    A = _matrix(obj["A"], n, n, "A")
    sig = obj["Sigma"]
    if isinstance(sig, dict):
        if set(sig) != {"isotropic"}:
            raise SpecError("Sigma object must be {\"isotropic\": sigma}")
        s = _real(sig["isotropic"], "Sigma.isotropic")
        if s <= 0:
            raise SpecError("isotropic sigma must be positive")
        Sigma = s * s * np.eye(n)
    else:
        Sigma = _matrix(sig, n, n, "Sigma")
    system = LinearSystem(A, Sigma)
    W = None
    if obj.get("W") is not None:
        w = obj["W"]
        if not isinstance(w, dict) or "k" not in w or "data" not in w:
            raise SpecError("W must be {\"k\": int, \"data\": [...]}")
        k = _int(w["k"], "W.k")
        if not 1 <= k <= n:
            raise SpecError(f"W.k must be in [1, {n}]")
        W = CoarseMap(_matrix(w["data"], k, n, "W.data"))
    eta = _real(obj["eta"], "eta") if obj.get("eta") is not None else None
    if eta is not None and eta < 0:
        raise SpecError("eta must be non-negative")
    L = _real(obj["L"], "L") if obj.get("L") is not None else None
    if L is not None and L <= 0:
        raise SpecError("L must be positive")
    seed = _int(obj["seed"], "seed") if obj.get("seed") is not None else None
    return SystemSpec(system, W, eta, L, seed)


def load_spec(path) -> SystemSpec:
    """Read and parse a spec file. ``OSError`` propagates for missing files."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON in {path}: {exc}") from None
    return parse_spec(obj)


def spec_to_dict(system: LinearSystem, W: Optional[CoarseMap] = None, eta=None, L=None,
                 seed=None) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "n": system.n,
        "A": system.A.ravel().tolist(),
        "Sigma": system.Sigma.ravel().tolist(),
    }
    if W is not None:
        out["W"] = {"k": W.k, "data": W.W.ravel().tolist()}
    for key, val in (("eta", eta), ("L", L), ("seed", seed)):
        if val is not None:
            out[key] = val
    return out


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = f"{x:.17g}"
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def with_units(data: Dict[str, Any], units: Dict[str, str]) -> Dict[str, Any]:
    """Attach a ``units`` table; numeric fields without an entry are
    labelled ``dimensionless``."""
    table = {}
    for key, val in data.items():
        if key == "units":
            continue
        if isinstance(val, (bool, np.bool_, str, dict)) or val is None:
            continue
        if isinstance(val, (list, tuple)) and any(isinstance(v, str) for v in val):
            continue
        table[key] = units.get(key, "dimensionless")
    out = dict(data)
    out["units"] = table
    return out


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write_text(path, dumps(obj))


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_csv_cell(v) for v in row) for row in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_matrix_csv(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    write_csv(path, [f"c{j + 1}" for j in range(M.shape[1])], M.tolist())


def read_matrix_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2))


def write_trajectory_csv(path, states, t0: int = 0, prefix: str = "x",
                         extra: Optional[Dict[str, np.ndarray]] = None) -> None:
    """CSV with header ``t,x1..xd`` (plus optional extra column blocks)."""
    states = np.asarray(states, dtype=float)
    blocks: List[np.ndarray] = [states]
    header = ["t"] + [f"{prefix}{j + 1}" for j in range(states.shape[1])]
    for name, block in (extra or {}).items():
        block = np.atleast_2d(np.asarray(block, dtype=float).T).T
        blocks.append(block)
        header += [f"{name}{j + 1}" for j in range(block.shape[1])]
    data = np.hstack(blocks)
    rows = [[t0 + i] + list(r) for i, r in enumerate(data)]
    write_csv(path, header, rows)
