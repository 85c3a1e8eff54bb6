"""Squared-exponential (RBF) kernel and the generalized-scale variant.

The kernel is ``k(a, b) = s2 * exp(-0.5 * (a-b)^T S^-1 (a-b))`` where the
scale ``S`` is either the kernel's diagonal matrix of per-dimension
lengthscale variances or, for :func:`eval_kernel_scaled`, an arbitrary
symmetric positive-definite matrix.  Lengthscales are stored as variances
(squared lengths), so they enter the quadratic form directly and add to
Gaussian covariances without conversion.

Points are 1-d float arrays of length ``d``; point sets are ``(n, d)``
arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class RbfKernel:
    """RBF kernel with amplitude ``s2`` and per-dimension scale variances.

    Parameters
    ----------
    amplitude_sq : float
        Kernel value at zero distance, ``k(x, x)``.  Must be positive.
    lengthscales : ndarray, shape (d,)
        Diagonal of the scale matrix (variances, input units squared).
        All entries must be positive.
    """

    amplitude_sq: float
    lengthscales: np.ndarray = field()

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size < 1:
            raise ValueError("lengthscales must be a 1-d vector with d >= 1")
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise ValueError("lengthscales must be finite and positive")
        if not np.isfinite(self.amplitude_sq) or self.amplitude_sq <= 0:
            raise ValueError("amplitude_sq must be finite and positive")
        object.__setattr__(self, "amplitude_sq", float(self.amplitude_sq))
        object.__setattr__(self, "lengthscales", ls)
        self.lengthscales.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.lengthscales.size


def _as_point(x, dim: int, name: str) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise ValueError(f"{name} has dimension {x.shape}, expected ({dim},)")
    return x


def _as_points(X, dim: int, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return X.reshape(0, dim)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"{name} has shape {X.shape}, expected (n, {dim})")
    return X


def eval_kernel(a, b, ker: RbfKernel) -> float:
    """Kernel value ``s2 * exp(-0.5 * sum_j (a_j - b_j)^2 / L_j)``."""
    a = _as_point(a, ker.dim, "a")
    b = _as_point(b, ker.dim, "b")
    sq = np.sum((a - b) ** 2 / ker.lengthscales)
    return float(ker.amplitude_sq * np.exp(-0.5 * sq))


def eval_kernel_scaled(a, b, amplitude_sq: float, scale) -> float:
    """Kernel value with an arbitrary SPD scale matrix.

    Computes ``amplitude_sq * exp(-0.5 * (a-b)^T scale^-1 (a-b))``.  With
    ``scale = diag(lengthscales)`` this reproduces :func:`eval_kernel`.

    Raises
    ------
    ValueError
        If ``scale`` is not symmetric positive definite (Cholesky failure).
    """
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    d = scale.shape[0]
    if scale.shape != (d, d):
        raise ValueError(f"scale must be square, got shape {scale.shape}")
    a = _as_point(a, d, "a")
    b = _as_point(b, d, "b")
    try:
        chol = np.linalg.cholesky(scale)
    except np.linalg.LinAlgError as exc:
        raise ValueError("scale matrix is not symmetric positive definite") from exc
    u = _solve_lower(chol, a - b)
    return float(amplitude_sq * np.exp(-0.5 * np.dot(u, u)))


def _solve_lower(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Forward substitution with a lower-triangular factor."""
    from scipy.linalg import solve_triangular

    return solve_triangular(chol, rhs, lower=True, check_finite=False)


def kernel_matrix(X, ker: RbfKernel) -> np.ndarray:
    """Gram matrix with entries ``k(x_i, x_j)`` for rows of ``X``.

    Symmetric with diagonal ``amplitude_sq``; positive semidefinite.
    """
    X = _as_points(X, ker.dim)
    scaled = X / np.sqrt(ker.lengthscales)
    sq = np.sum((scaled[:, None, :] - scaled[None, :, :]) ** 2, axis=-1)
    K = ker.amplitude_sq * np.exp(-0.5 * sq)
    return 0.5 * (K + K.T)


def kernel_cross(A, B, ker: RbfKernel) -> np.ndarray:
    """Cross-kernel matrix with entries ``k(a_i, b_j)``, shape (m, n)."""
    A = _as_points(A, ker.dim, "A")
    B = _as_points(B, ker.dim, "B")
    inv_ls = 1.0 / np.sqrt(ker.lengthscales)
    sa = A * inv_ls
    sb = B * inv_ls
    sq = np.sum((sa[:, None, :] - sb[None, :, :]) ** 2, axis=-1)
    return ker.amplitude_sq * np.exp(-0.5 * sq)


def kernel_vector(x, X, ker: RbfKernel) -> np.ndarray:
    """Cross-kernel vector with entries ``k(x, x_i)``; empty for n = 0."""
    x = _as_point(x, ker.dim, "x")
    X = _as_points(X, ker.dim)
    if X.shape[0] == 0:
        return np.zeros(0)
    sq = np.sum((X - x) ** 2 / ker.lengthscales, axis=1)
    return ker.amplitude_sq * np.exp(-0.5 * sq)


def kernel_gradient(a, b, ker: RbfKernel) -> np.ndarray:
    """Gradient of ``k(a, b)`` with respect to ``a``.

    Equals ``-(a - b) / lengthscales * k(a, b)``; antisymmetric under
    swapping the arguments and zero at ``a = b``.
    """
    a = _as_point(a, ker.dim, "a")
    b = _as_point(b, ker.dim, "b")
    return -(a - b) / ker.lengthscales * eval_kernel(a, b, ker)


def kernel_vector_jacobian(x, X, ker: RbfKernel) -> np.ndarray:
    """Jacobian of :func:`kernel_vector` with respect to ``x``.

    Returns an ``(n, d)`` array whose row ``i`` is the gradient of
    ``k(x, x_i)`` in ``x``.
    """
    x = _as_point(x, ker.dim, "x")
    X = _as_points(X, ker.dim)
    kv = kernel_vector(x, X, ker)
    return -(x - X) / ker.lengthscales * kv[:, None]
