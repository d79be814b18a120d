"""Integer polytopes given by inequalities and points, and slack matrices.

H-representations are always inputs (hand-written for the builtins);
facet enumeration is deliberately not provided.  Slack entries are exact
64-bit integers with an overflow guard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError, ResourceError

# Guard so that b - a.x plus intermediate sums stay well inside int64.
_INT_GUARD = 2**62

BUILTIN_NAMES = ("cube", "simplex", "crosspoly_01", "segment", "point", "moment_polygon")


def _as_int_array(a, name: str) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype.kind not in "iu":
        if not np.all(arr == np.round(arr)):
            raise PreconditionError(f"{name} must have integer entries")
    return arr.astype(np.int64)


@dataclass(frozen=True)
class HPolytope:
    """Inequality description a_i . x <= b_i with integer coefficients."""

    a: np.ndarray  # (m, n) int64
    b: np.ndarray  # (m,) int64

    def __post_init__(self):
        a = _as_int_array(self.a, "a")
        b = _as_int_array(self.b, "b")
        if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
            raise DimensionError("inequality rows and offsets disagree")
        rows = {tuple(row) + (off,) for row, off in zip(a.tolist(), b.tolist())}
        if len(rows) != a.shape[0]:
            raise PreconditionError("duplicate inequality rows")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class VPolytope:
    """Point description: distinct integer points, one per row."""

    points: np.ndarray  # (j, n) int64

    def __post_init__(self):
        pts = _as_int_array(self.points, "points")
        if pts.ndim != 2:
            raise DimensionError("points must be a 2-d array")
        if len({tuple(p) for p in pts.tolist()}) != pts.shape[0]:
            raise PreconditionError("duplicate points")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class SlackMatrix:
    """Nonnegative matrix of inequality slacks, with optional provenance."""

    entries: np.ndarray
    h: HPolytope | None = None
    v: VPolytope | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2:
            raise DimensionError("slack entries must be a 2-d array")
        if not np.all(np.isfinite(entries.astype(float))):
            raise PreconditionError("slack entries must be finite")
        if np.any(entries.astype(float) < 0):
            raise PreconditionError("slack entries must be nonnegative")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_entries(cls, raw) -> "SlackMatrix":
        """Wrap a plain nonnegative matrix (no polytope provenance)."""
        return cls(entries=np.asarray(raw))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def max_entry(self) -> float:
        return float(self.entries.max()) if self.entries.size else 0.0

    def as_float(self) -> np.ndarray:
        return self.entries.astype(float)


def build_slack(h: HPolytope, v: VPolytope) -> SlackMatrix:
    """Exact integer slack matrix S[i, j] = b_i - a_i . x_j.

    Every point must satisfy every inequality; a negative slack raises an
    error naming the offending (row, point) pair.
    """
    if h.dim != v.dim:
        raise DimensionError(f"dimension mismatch: rows in R^{h.dim}, points in R^{v.dim}")
    bound = (
        int(np.max(np.abs(h.a), initial=0))
        * max(h.dim, 1)
        * int(np.max(np.abs(v.points), initial=0))
        + int(np.max(np.abs(h.b), initial=0))
    )
    if bound >= _INT_GUARD:
        raise PreconditionError("coefficients too large for 64-bit slack computation")
    s = h.b[:, None] - h.a @ v.points.T
    if np.any(s < 0):
        i, j = np.argwhere(s < 0)[0]
        raise PreconditionError(
            f"point {j} violates inequality {i}: slack {int(s[i, j])}"
        )
    return SlackMatrix(entries=s, h=h, v=v)


def enumerate_01_vertices(h: HPolytope, max_dim: int = 24) -> VPolytope:
    """All points of {0,1}^n satisfying every inequality (brute force)."""
    n = h.dim
    if n > max_dim:
        raise ResourceError(f"2^{n} enumeration refused (n > {max_dim})")
    chunk = 1 << min(n, 16)
    keep = []
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        pts = (idx[:, None] >> shifts) & 1
        ok = np.all(h.a @ pts.T <= h.b[:, None], axis=0)
        if np.any(ok):
            keep.append(pts[ok])
    pts = np.concatenate(keep, axis=0) if keep else np.zeros((0, n), dtype=np.int64)
    return VPolytope(points=pts)


def _cube(n: int) -> tuple[HPolytope, VPolytope]:
    eye = np.eye(n, dtype=np.int64)
    a = np.concatenate([-eye, eye], axis=0)
    b = np.concatenate([np.zeros(n, dtype=np.int64), np.ones(n, dtype=np.int64)])
    h = HPolytope(a=a, b=b)
    return h, enumerate_01_vertices(h)


def _simplex(n: int) -> tuple[HPolytope, VPolytope]:
    eye = np.eye(n, dtype=np.int64)
    a = np.concatenate([-eye, np.ones((1, n), dtype=np.int64)], axis=0)
    b = np.concatenate([np.zeros(n, dtype=np.int64), np.ones(1, dtype=np.int64)])
    pts = np.concatenate([np.zeros((1, n), dtype=np.int64), eye], axis=0)
    return HPolytope(a=a, b=b), VPolytope(points=pts)


def _crosspoly_01(n: int) -> tuple[HPolytope, VPolytope]:
    # Vertices e_k and 1 - e_k inside the unit cube; the hand-written facet
    # list 0 <= x <= 1, 1 <= sum(x) <= n-1 is exact only for n in {2, 3}.
    if n not in (2, 3):
        raise PreconditionError("crosspoly_01 has a hand-written H-rep for n in {2, 3} only")
    eye = np.eye(n, dtype=np.int64)
    ones = np.ones((1, n), dtype=np.int64)
    a = np.concatenate([-eye, eye, -ones, ones], axis=0)
    b = np.concatenate(
        [
            np.zeros(n, dtype=np.int64),
            np.ones(n, dtype=np.int64),
            np.asarray([-1], dtype=np.int64),
            np.asarray([n - 1], dtype=np.int64),
        ]
    )
    pts = np.concatenate([eye, 1 - eye], axis=0)
    if n == 2:  # 1 - e_k duplicates e_k when n = 2
        pts = eye
    return HPolytope(a=a, b=b), VPolytope(points=pts)


def _segment(n: int) -> tuple[HPolytope, VPolytope]:
    if n != 1:
        raise PreconditionError("segment is one-dimensional; pass n=1")
    a = np.asarray([[-1], [1]], dtype=np.int64)
    b = np.asarray([0, 1], dtype=np.int64)
    pts = np.asarray([[0], [1]], dtype=np.int64)
    return HPolytope(a=a, b=b), VPolytope(points=pts)


def _point(n: int) -> tuple[HPolytope, VPolytope]:
    eye = np.eye(n, dtype=np.int64)
    a = np.concatenate([-eye, eye], axis=0)
    b = np.zeros(2 * n, dtype=np.int64)
    pts = np.zeros((1, n), dtype=np.int64)
    return HPolytope(a=a, b=b), VPolytope(points=pts)


def _moment_polygon(d: int) -> tuple[HPolytope, VPolytope]:
    """d-gon with vertices (z, z^2) for even z in [2d].

    Edges between consecutive vertices carry the inequality
    -y + (z1+z2) x - z1 z2 <= 0; the top chord closes the polygon.
    """
    if d < 3:
        raise PreconditionError("moment_polygon needs d >= 3")
    z = np.arange(1, d + 1, dtype=np.int64) * 2
    pts = np.stack([z, z * z], axis=1)
    rows = []
    offs = []
    for z1, z2 in zip(z[:-1], z[1:]):
        rows.append([int(z1 + z2), -1])
        offs.append(int(z1 * z2))
    rows.append([-int(z[0] + z[-1]), 1])
    offs.append(-int(z[0] * z[-1]))
    h = HPolytope(a=np.asarray(rows, dtype=np.int64), b=np.asarray(offs, dtype=np.int64))
    return h, VPolytope(points=pts)


def builtin_instance(name: str, n: int) -> tuple[HPolytope, VPolytope]:
    """Hand-written H- and V-representations of the test instances.

    For ``moment_polygon`` the second argument is the vertex count d.
    """
    builders = {
        "cube": _cube,
        "simplex": _simplex,
        "crosspoly_01": _crosspoly_01,
        "segment": _segment,
        "point": _point,
        "moment_polygon": _moment_polygon,
    }
    if name not in builders:
        raise PreconditionError(
            f"unknown instance {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
        )
    if n < 1:
        raise PreconditionError("dimension must be positive")
    return builders[name](n)
