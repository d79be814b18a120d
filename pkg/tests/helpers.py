"""Shared generators and independent oracles for the test suite.

Oracles here deliberately avoid the library code paths they check:
operator norms come from power iteration, exponentials from a truncated
series, reconstructions from explicit rank-one sums.
"""

import numpy as np


def rng(seed):
    return np.random.default_rng(seed)


def random_symmetric(gen, n, scale=1.0):
    a = gen.standard_normal((n, n)) * scale
    return (a + a.T) / 2.0


def random_psd(gen, n, rank=None, scale=1.0):
    rank = n if rank is None else rank
    b = gen.standard_normal((n, rank)) * scale
    return b @ b.T / max(rank, 1)


def random_psd_with_gap(gen, n, gap, top=1.0):
    """PSD matrix with top eigenvalue ``top`` and spectral gap >= ``gap``."""
    lam = np.empty(n)
    lam[0] = top
    if n > 1:
        lam[1:] = gen.random(n - 1) * (top - gap)
    q = random_orthogonal(gen, n)
    return (q * lam) @ q.T


def random_orthogonal(gen, n):
    q, r = np.linalg.qr(gen.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def power_iteration_norm(a, iters=20000, tol=1e-14, seed=123):
    """Operator norm of symmetric a via power iteration on a^2.

    Squaring makes the dominant eigenvalue |lambda|_max^2 regardless of
    sign, so this also covers indefinite matrices.
    """
    gen = np.random.default_rng(seed)
    n = a.shape[0]
    x = gen.standard_normal(n)
    x /= np.linalg.norm(x)
    a2 = a @ a
    last = 0.0
    for _ in range(iters):
        y = a2 @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        val = float(x @ a2 @ x)
        if abs(val - last) <= tol * max(val, 1.0):
            last = val
            break
        last = val
    return float(np.sqrt(last))


def series_expm(a, terms=20):
    """Truncated power series for exp(a)."""
    n = a.shape[0]
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    return out
