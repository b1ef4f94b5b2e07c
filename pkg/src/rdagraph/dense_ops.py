"""Dense linear algebra shared by the 2D and graph solvers.

Matrices here are small (a few hundred rows at most), so everything is a
plain ``float64`` ndarray. The exponential is scipy's scaling-and-squaring
Pade implementation; this module only adds argument checking.
"""

import numpy as np
import scipy.linalg

__all__ = ["matrix_exp", "kron", "sym_eig", "check_matrix"]


def check_matrix(a, square=False, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def matrix_exp(a, t=1.0):
    """exp(t * a) by scaling and squaring with a diagonal Pade approximant."""
    a = check_matrix(a, square=True)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    return scipy.linalg.expm(t * a)


def kron(a, b):
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def sym_eig(s, asym_tol=1e-12):
    """Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix."""
    s = check_matrix(s, square=True)
    scale = max(np.abs(s).max(), np.finfo(float).tiny)
    if np.abs(s - s.T).max() > asym_tol * scale:
        raise ValueError("matrix is not symmetric")
    try:
        w, v = np.linalg.eigh(0.5 * (s + s.T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError("symmetric eigendecomposition failed") from exc
    return w, v
