"""Semidefinite factorizations of nonnegative matrices.

A factorization pairs PSD matrices (U_i) with (V^j), all of one side r,
such that <U_i, V^j> reproduces the target matrix entrywise.  This module
holds the data model, verification against a slack matrix, the canonical
diagonal embedding, a numerical search for low-rank factorizations, and
the potential function (product of the two largest operator norms) that
the rescaler drives down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericError, PreconditionError
from .polytopes import SlackMatrix
from . import symmat

# PSD acceptance slack for constructed factors: min eigenvalue may dip to
# -PSD_TOL * (1 + lambda_max) from floating-point noise.
PSD_TOL = 1e-9


def _check_psd(mat: np.ndarray, label: str) -> None:
    lam = np.linalg.eigvalsh(mat)
    if lam.size and lam[0] < -PSD_TOL * (1.0 + max(lam[-1], 0.0)):
        raise PreconditionError(
            f"{label} is not PSD: min eigenvalue {lam[0]:.3g}"
        )


@dataclass(frozen=True)
class PsdFactorization:
    """Row factors (U_i) and column factors (V^j), all PSD of one side."""

    row_factors: tuple
    col_factors: tuple

    def __post_init__(self):
        rows = tuple(np.asarray(u, dtype=float) for u in self.row_factors)
        cols = tuple(np.asarray(v, dtype=float) for v in self.col_factors)
        sides = {m.shape for m in rows + cols}
        if len(sides) > 1:
            raise DimensionError(f"factor sides disagree: {sorted(sides)}")
        for m in rows + cols:
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise DimensionError("factors must be square matrices")
        object.__setattr__(self, "row_factors", rows)
        object.__setattr__(self, "col_factors", cols)

    @classmethod
    def from_factors(cls, row_factors, col_factors, check_psd: bool = True):
        f = cls(row_factors=tuple(row_factors), col_factors=tuple(col_factors))
        if check_psd:
            for i, u in enumerate(f.row_factors):
                _check_psd(u, f"row factor {i}")
            for j, v in enumerate(f.col_factors):
                _check_psd(v, f"column factor {j}")
        return f

    @property
    def side(self) -> int:
        if self.row_factors:
            return self.row_factors[0].shape[0]
        if self.col_factors:
            return self.col_factors[0].shape[0]
        return 0

    @property
    def n_rows(self) -> int:
        return len(self.row_factors)

    @property
    def n_cols(self) -> int:
        return len(self.col_factors)

    def products(self) -> np.ndarray:
        """Matrix of trace inner products <U_i, V^j>."""
        if not self.row_factors or not self.col_factors:
            return np.zeros((self.n_rows, self.n_cols))
        u = np.stack(self.row_factors)
        v = np.stack(self.col_factors)
        return np.einsum("irs,jrs->ij", u, v)


def max_operator_norm(factors) -> float:
    """Largest operator norm over a nonempty tuple of symmetric matrices."""
    factors = tuple(factors)
    if not factors:
        raise PreconditionError("empty factor list")
    return max(symmat.operator_norm(m) for m in factors)


def potential(f: PsdFactorization) -> float:
    """Product of the largest operator norms of the two sides."""
    return max_operator_norm(f.row_factors) * max_operator_norm(f.col_factors)


@dataclass(frozen=True)
class FactorizationReport:
    """Result of checking <U_i, V^j> against a slack matrix."""

    max_abs_residual: float
    residual_location: tuple[int, int]
    lmax_u: float
    lmax_v: float
    potential: float
    tol: float
    passed: bool


def verify_factorization(
    f: PsdFactorization, s: SlackMatrix, tol: float = 1e-8
) -> FactorizationReport:
    """Compare all inner products against the slack entries.

    Passes iff the largest absolute residual is at most tol * (1 + Delta)
    with Delta the largest slack entry.
    """
    target = s.as_float()
    if (f.n_rows, f.n_cols) != target.shape:
        raise DimensionError(
            f"index sets disagree: factorization {f.n_rows}x{f.n_cols}, "
            f"slack {target.shape[0]}x{target.shape[1]}"
        )
    residual = np.abs(f.products() - target)
    if residual.size:
        loc = np.unravel_index(int(np.argmax(residual)), residual.shape)
        max_res = float(residual[loc])
    else:
        loc, max_res = (0, 0), 0.0
    lmax_u = max_operator_norm(f.row_factors) if f.row_factors else 0.0
    lmax_v = max_operator_norm(f.col_factors) if f.col_factors else 0.0
    return FactorizationReport(
        max_abs_residual=max_res,
        residual_location=(int(loc[0]), int(loc[1])),
        lmax_u=lmax_u,
        lmax_v=lmax_v,
        potential=lmax_u * lmax_v,
        tol=tol,
        passed=max_res <= tol * (1.0 + s.max_entry),
    )


def diagonal_embed(s: SlackMatrix) -> PsdFactorization:
    """Canonical exact factorization of side r = min(|I|, |J|).

    With rows the shorter side, U_i = e_i e_i^T and V^j = diag(S[:, j]);
    otherwise the roles flip.  Inner products reproduce S exactly.
    """
    entries = s.as_float()
    m, n = entries.shape
    if m <= n:
        rows = tuple(np.diag(e) for e in np.eye(m))
        cols = tuple(np.diag(entries[:, j]) for j in range(n))
    else:
        rows = tuple(np.diag(entries[i, :]) for i in range(m))
        cols = tuple(np.diag(e) for e in np.eye(n))
    return PsdFactorization(row_factors=rows, col_factors=cols)


@dataclass(frozen=True)
class FitConfig:
    """Knobs for the alternating projected-gradient search."""

    tol: float = 1e-7
    sweeps: int = 6000
    inner_steps: int = 5
    seed: int = 7


@dataclass(frozen=True)
class FitFailure:
    """Search outcome when no factorization at the target residual was found.

    Not evidence that none exists; the report must read "not found".
    """

    residual: float
    trace: tuple = field(default_factory=tuple)


def _project_psd_batch(x: np.ndarray) -> np.ndarray:
    """Symmetrize and clip eigenvalues to the PSD cone, batched."""
    x = (x + np.transpose(x, (0, 2, 1))) / 2.0
    lam, vec = np.linalg.eigh(x)
    return np.einsum("jab,jb,jcb->jac", vec, np.clip(lam, 0.0, None), vec)


def _pgd_side(fixed: np.ndarray, moving: np.ndarray, target: np.ndarray, steps: int) -> np.ndarray:
    """Projected-gradient steps on one side of the factorization.

    ``fixed`` has shape (m, r, r); ``moving`` (n, r, r); ``target`` (m, n).
    Minimizes sum of squared residuals over PSD ``moving`` via eigenvalue
    clipping after each gradient step.
    """
    m = fixed.shape[0]
    flat = fixed.reshape(m, -1)
    lip = 2.0 * float(np.linalg.norm(flat, 2)) ** 2
    if lip == 0.0:
        return moving
    step = 1.0 / lip
    for _ in range(steps):
        err = np.einsum("irs,jrs->ij", fixed, moving) - target
        grad = 2.0 * np.einsum("ij,irs->jrs", err, fixed)
        moving = _project_psd_batch(moving - step * grad)
    return moving


def alternating_fit(s: SlackMatrix, r: int, cfg: FitConfig = FitConfig()):
    """Search for a side-r factorization by alternating projected gradient.

    Sweeps alternate projected-gradient updates of the two sides with an
    extrapolation step between sweeps (reset whenever the residual jumps),
    which repairs the 1/k tail plain alternation suffers from.  Returns a
    PsdFactorization once the max residual drops to cfg.tol * (1 + Delta),
    else a FitFailure carrying the residual trace.
    """
    if r < 1:
        raise PreconditionError("side must be at least 1")
    target = s.as_float()
    m, n = target.shape
    rng = np.random.default_rng(cfg.seed)
    scale = np.sqrt(max(target.mean(), 1e-3) / r)
    u = _project_psd_batch(rng.standard_normal((m, r, r)) * scale)
    v = _project_psd_batch(rng.standard_normal((n, r, r)) * scale)

    threshold = cfg.tol * (1.0 + s.max_entry)
    trace = []
    u_prev, v_prev = u, v
    momentum = 1.0
    last = np.inf
    for _ in range(cfg.sweeps):
        m_next = (1.0 + np.sqrt(1.0 + 4.0 * momentum**2)) / 2.0
        beta = (momentum - 1.0) / m_next
        u_ex = u + beta * (u - u_prev)
        v_ex = v + beta * (v - v_prev)
        u_prev, v_prev = u, v
        v = _pgd_side(u_ex, v_ex, target, cfg.inner_steps)
        u = _pgd_side(
            np.ascontiguousarray(v), u_ex, target.T, cfg.inner_steps
        )
        residual = float(
            np.max(np.abs(np.einsum("irs,jrs->ij", u, v) - target))
        )
        if not np.isfinite(residual):
            raise NumericError("NaN/Inf in alternating-fit iterates")
        momentum = 1.0 if residual > last * 1.2 else m_next
        last = residual
        trace.append(residual)
        if residual <= threshold:
            return PsdFactorization.from_factors(list(u), list(v), check_psd=False)
    return FitFailure(residual=trace[-1] if trace else float("inf"), trace=tuple(trace))
