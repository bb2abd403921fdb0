"""Dense kernels for the evolution-matrix regression.

Matrices are 2-D float64 numpy arrays. Inversion is Gauss-Jordan
elimination with partial pivoting, written out explicitly; products and
transposes are thin checked wrappers over numpy.
"""
from __future__ import annotations

import numpy as np

PIVOT_TOL = 1e-12


class SingularMatrix(np.linalg.LinAlgError):
    """Raised when elimination meets a pivot smaller than the tolerance."""

    def __init__(self, column: int, pivot: float):
        self.column = column
        self.pivot = pivot
        super().__init__(f"matrix is singular: pivot {pivot:.3e} in column {column}")


def _as_matrix(m, name="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def gauss_jordan_invert(m, tol: float = PIVOT_TOL) -> np.ndarray:
    """Invert a square matrix by Gauss-Jordan elimination on ``[m | I]``.

    At each column the row with the largest remaining entry is swapped
    into pivot position. A pivot with magnitude below ``tol`` raises
    :class:`SingularMatrix` carrying the column index.
    """
    a = _as_matrix(m)
    n, cols = a.shape
    if n != cols:
        raise ValueError(f"cannot invert non-square matrix of shape {a.shape}")
    aug = np.hstack([a, np.eye(n)])
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(aug[col:, col])))
        pivot = aug[pivot_row, col]
        if not abs(pivot) >= tol:  # also catches NaN
            raise SingularMatrix(col, float(pivot))
        if pivot_row != col:
            aug[[col, pivot_row]] = aug[[pivot_row, col]]
        aug[col] /= pivot
        factors = aug[:, col].copy()
        factors[col] = 0.0
        aug -= np.outer(factors, aug[col])
    return aug[:, n:]


def normal_equations_solve(X, Y, ridge: float = 0.0) -> np.ndarray:
    """Least-squares ``B = (X^T X + ridge I)^{-1} X^T Y`` so that ``Y ≈ X B``."""
    X = _as_matrix(X, "X")
    Y = _as_matrix(Y, "Y")
    if X.shape[0] < 1:
        raise ValueError("need at least one sample row")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if ridge < 0:
        raise ValueError(f"ridge must be nonnegative, got {ridge}")
    gram = transpose(X) @ X
    if ridge:
        gram = gram + ridge * np.eye(gram.shape[0])
    return matmul(gauss_jordan_invert(gram), matmul(transpose(X), Y))


def matvec(m, v) -> np.ndarray:
    m = _as_matrix(m)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(f"cannot multiply {m.shape} matrix by vector of shape {v.shape}")
    return m @ v


def matmul(a, b) -> np.ndarray:
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def transpose(m) -> np.ndarray:
    return _as_matrix(m).T.copy()
