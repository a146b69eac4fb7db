"""Dense solves for the small Newton systems.

Matrices are plain 2-D float arrays. Factorization is LAPACK LU with
partial pivoting (via scipy); on top of it we enforce an explicit pivot
threshold so that a numerically singular system raises instead of silently
amplifying noise.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve


class SingularSystemError(RuntimeError):
    """The linear system is numerically singular at working precision."""


def solve_dense(M, rhs) -> np.ndarray:
    """Solve M x = rhs by LU with partial pivoting.

    Raises SingularSystemError when any pivot magnitude falls below
    machine epsilon times the max-norm of M. The inputs are not modified.
    """
    M = np.asarray(M, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    if rhs.shape != (M.shape[0],):
        raise ValueError(f"rhs length {rhs.shape} does not match matrix size {M.shape[0]}")
    if not np.all(np.isfinite(M)) or not np.all(np.isfinite(rhs)):
        raise ValueError("matrix and rhs entries must be finite")
    norm = np.max(np.sum(np.abs(M), axis=1))
    try:
        with warnings.catch_warnings():
            # an exact zero pivot only warns in scipy; the threshold check
            # below turns it into SingularSystemError
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(M)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    pivots = np.abs(np.diag(lu))
    threshold = np.finfo(float).eps * norm
    if norm == 0.0 or np.any(pivots < threshold):
        raise SingularSystemError(
            f"pivot below threshold {threshold:.3e}; system is numerically singular"
        )
    return lu_solve((lu, piv), rhs)
