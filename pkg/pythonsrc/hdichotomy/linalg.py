"""Matrix helpers. The vector norm is Euclidean, the operator norm spectral."""

import numpy as np

from helpers.errors import NumericalError, SingularMatrixError


def operator_norm(m: np.ndarray) -> float:
    """Largest singular value of ``m``."""
    arr = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NumericalError("operator_norm needs finite entries")
    if arr.size == 0:
        return 0.0
    try:
        return float(np.linalg.norm(arr, 2))
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD failed: {e}") from e


def operator_norms(stack: np.ndarray) -> np.ndarray:
    """Spectral norms of a stack of matrices, shape (..., n, n) -> (...)."""
    arr = np.asarray(stack, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NumericalError("operator_norms needs finite entries")
    try:
        return np.linalg.svd(arr, compute_uv=False)[..., 0]
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD failed: {e}") from e


def smallest_singular_value(m: np.ndarray) -> float:
    try:
        return float(np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)[-1])
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD failed: {e}") from e


def invert(m: np.ndarray) -> np.ndarray:
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"matrix is singular: {e}") from e
    if not np.all(np.isfinite(inv)):
        raise SingularMatrixError("inverse has non-finite entries")
    return inv


def right_divide(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ inv(b) without forming the inverse."""
    try:
        return np.linalg.solve(b.T, a.T).T
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"matrix is singular: {e}") from e


def projection_rank(p: np.ndarray) -> int:
    # trace of an idempotent equals its rank
    return int(round(float(np.trace(p))))


def idempotence_residual(p: np.ndarray) -> float:
    return operator_norm(p @ p - p)
