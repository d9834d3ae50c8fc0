"""Dense linear solves by Gaussian elimination with partial pivoting.

Every matrix in this package is small (a handful of nodes or exosystem
states), so a plain elimination kernel is deterministic, dependency-free
and fast enough.  All entry points reject pivots below ``PIVOT_TOL``
instead of silently returning garbage.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PIVOT_TOL",
    "SingularMatrixError",
    "solve",
    "inv",
    "cond_inf",
    "matrix_rank",
]

PIVOT_TOL = 1e-12


class SingularMatrixError(ValueError):
    """Raised when elimination meets a pivot smaller than ``PIVOT_TOL``."""


def _as_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def solve(a, b, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Solve ``a @ x = b`` for ``x``.

    Parameters
    ----------
    a : (n, n) array_like
    b : (n,) or (n, k) array_like
        One right-hand side or a matrix of stacked right-hand sides.
    pivot_tol : float
        Absolute pivot magnitude below which the matrix is declared
        singular.

    Returns
    -------
    numpy.ndarray
        Solution with the same trailing shape as ``b``.
    """
    a = _as_square(a)
    n = a.shape[0]
    b = np.asarray(b, dtype=float)
    single = b.ndim == 1
    rhs = b.reshape(n, -1) if single else b
    if rhs.shape[0] != n:
        raise ValueError(f"right-hand side has {rhs.shape[0]} rows, expected {n}")

    aug = np.hstack([a.copy(), rhs.copy()])
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        if abs(aug[p, k]) < pivot_tol:
            raise SingularMatrixError(
                f"pivot {aug[p, k]:.3e} below tolerance {pivot_tol:.1e} at column {k}"
            )
        if p != k:
            aug[[k, p]] = aug[[p, k]]
        factors = aug[k + 1 :, k] / aug[k, k]
        aug[k + 1 :, k:] -= np.outer(factors, aug[k, k:])

    x = np.empty((n, rhs.shape[1]))
    for k in range(n - 1, -1, -1):
        x[k] = (aug[k, n:] - aug[k, k + 1 : n] @ x[k + 1 :]) / aug[k, k]
    return x[:, 0] if single else x


def inv(a, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Matrix inverse via :func:`solve` against the identity."""
    a = _as_square(a)
    return solve(a, np.eye(a.shape[0]), pivot_tol=pivot_tol)


def cond_inf(a) -> float:
    """Infinity-norm condition number; ``inf`` for singular input."""
    a = _as_square(a)
    if a.size == 0:
        return 1.0
    try:
        a_inv = inv(a)
    except SingularMatrixError:
        return float("inf")
    row_sum = np.abs(a).sum(axis=1).max()
    inv_row_sum = np.abs(a_inv).sum(axis=1).max()
    return float(row_sum * inv_row_sum)


def matrix_rank(a, rel_tol: float = 1e-9) -> int:
    """Numerical rank by row echelon reduction with partial pivoting.

    A pivot counts while its magnitude stays above ``rel_tol`` times the
    largest absolute entry of the original matrix.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D array")
    if a.size == 0:
        return 0
    scale = np.abs(a).max()
    if scale == 0.0:
        return 0
    tol = rel_tol * scale
    rows, cols = a.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        p = rank + int(np.argmax(np.abs(a[rank:, col])))
        if abs(a[p, col]) <= tol:
            continue
        if p != rank:
            a[[rank, p]] = a[[p, rank]]
        factors = a[rank + 1 :, col] / a[rank, col]
        a[rank + 1 :, col:] -= np.outer(factors, a[rank, col:])
        rank += 1
    return rank
