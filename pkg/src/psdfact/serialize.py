"""JSON and CSV interchange for matrices, polytopes, factorizations.

JSON is the canonical format; matrices additionally support a small CSV
form (header ``side,r`` followed by the rows).  Every CLI run emits a
manifest with the command line, seed, package version and input hashes so
results can be reproduced bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .factorization import PsdFactorization
from .polytopes import HPolytope, SlackMatrix, VPolytope
from .rounding import GridParams, RoundedSystem


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=float)
    return {"side": int(m.shape[0]), "entries": [float(x) for x in m.ravel()]}


def matrix_from_json(obj: dict) -> np.ndarray:
    side = int(obj["side"])
    entries = np.asarray(obj["entries"], dtype=float)
    if entries.size != side * side:
        raise PreconditionError(
            f"matrix payload has {entries.size} entries, expected {side * side}"
        )
    return entries.reshape(side, side)


def matrix_to_csv(m: np.ndarray) -> str:
    m = np.asarray(m, dtype=float)
    lines = [f"side,{m.shape[0]}"]
    lines += [",".join(repr(float(x)) for x in row) for row in m]
    return "\n".join(lines) + "\n"


def matrix_from_csv(text: str) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("side,"):
        raise PreconditionError('matrix CSV must start with a "side,r" header')
    side = int(lines[0].split(",")[1])
    if len(lines) - 1 != side:
        raise PreconditionError(f"matrix CSV has {len(lines) - 1} rows, expected {side}")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    m = np.asarray(rows, dtype=float)
    if m.shape != (side, side):
        raise PreconditionError("matrix CSV rows have the wrong length")
    return m


def polytope_to_json(h: HPolytope, v: VPolytope | None) -> dict:
    out = {
        "n": h.dim,
        "rows": [
            {"a": [int(x) for x in a], "b": int(b)}
            for a, b in zip(h.a.tolist(), h.b.tolist())
        ],
    }
    out["points"] = [] if v is None else [[int(x) for x in p] for p in v.points.tolist()]
    return out


def polytope_from_json(obj: dict) -> tuple[HPolytope, VPolytope | None]:
    n = int(obj["n"])
    rows = obj.get("rows", [])
    a = np.asarray([r["a"] for r in rows], dtype=np.int64).reshape(len(rows), n)
    b = np.asarray([r["b"] for r in rows], dtype=np.int64)
    h = HPolytope(a=a, b=b)
    pts = obj.get("points") or []
    v = VPolytope(points=np.asarray(pts, dtype=np.int64).reshape(len(pts), n)) if pts else None
    return h, v


def slack_to_json(s: SlackMatrix) -> dict:
    out = {
        "shape": [int(x) for x in s.shape],
        "entries": [[float(x) for x in row] for row in s.as_float()],
        "max_entry": s.max_entry,
    }
    out["polytope"] = polytope_to_json(s.h, s.v) if s.h is not None else None
    return out


def slack_from_json(obj: dict) -> SlackMatrix:
    entries = np.asarray(obj["entries"], dtype=float)
    h = v = None
    if obj.get("polytope"):
        h, v = polytope_from_json(obj["polytope"])
    if h is not None and v is not None:
        return SlackMatrix(entries=entries, h=h, v=v)
    return SlackMatrix.from_entries(entries)


def factorization_to_json(f: PsdFactorization) -> dict:
    return {
        "r": f.side,
        "U": [matrix_to_json(u) for u in f.row_factors],
        "V": [matrix_to_json(v) for v in f.col_factors],
    }


def factorization_from_json(obj: dict) -> PsdFactorization:
    rows = [matrix_from_json(m) for m in obj["U"]]
    cols = [matrix_from_json(m) for m in obj["V"]]
    return PsdFactorization.from_factors(rows, cols, check_psd=False)


def grid_to_json(g: GridParams) -> dict:
    return {
        "n": g.n,
        "r": g.r,
        "delta": g.delta,
        "Delta": g.big_delta,
        "worst_case": g.worst_case,
    }


def grid_from_json(obj: dict) -> GridParams:
    return GridParams(
        n=int(obj["n"]),
        r=int(obj["r"]),
        delta=float(obj["delta"]),
        big_delta=float(obj["Delta"]),
        worst_case=bool(obj.get("worst_case", False)),
    )


def system_to_json(sys: RoundedSystem) -> dict:
    return {
        "n": sys.grid.n,
        "r": sys.grid.r,
        "grid": grid_to_json(sys.grid),
        "selected": list(sys.selected),
        "rows": [
            {
                "a": [float(x) for x in a],
                "b": float(b),
                "U": matrix_to_json(u),
            }
            for a, b, u in zip(sys.a, sys.b, sys.factors)
        ],
    }


def system_from_json(obj: dict) -> RoundedSystem:
    grid = grid_from_json(obj["grid"])
    rows = obj["rows"]
    a = np.asarray([r["a"] for r in rows], dtype=float)
    b = np.asarray([r["b"] for r in rows], dtype=float)
    factors = tuple(matrix_from_json(r["U"]) for r in rows)
    return RoundedSystem(
        a=a, b=b, factors=factors, grid=grid,
        selected=tuple(int(i) for i in obj.get("selected", [])),
    )


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record attached to every CLI report."""

    command: str
    seed: int
    version: str
    input_hashes: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "version": self.version,
            "input_hashes": dict(self.input_hashes),
            "wall_time_s": self.wall_time_s,
        }


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)
