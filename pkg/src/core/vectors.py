"""
Dense vector arithmetic.

A DenseVec is a 1-D float64 numpy array. Helpers here never modify their
inputs and check dimensions before combining vectors.
"""

from typing import Iterable, Optional, Union

import numpy as np
import numpy.typing as npt

from src.errors import DimensionMismatchError, NumericalError

DenseVec = npt.NDArray[np.float64]

VectorLike = Union[DenseVec, Iterable[float]]


def as_vector(values: VectorLike, dim: Optional[int] = None) -> DenseVec:
    """
    Convert values to a fresh 1-D float64 array.

    Args:
        values: Any 1-D sequence of reals
        dim: Expected dimension, checked when given

    Returns:
        A new DenseVec

    Raises:
        DimensionMismatchError: If dim is given and does not match
        ValueError: If values is not one-dimensional
    """
    vec = np.array(values, dtype=np.float64, copy=True)
    if vec.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise DimensionMismatchError(dim, vec.shape[0])
    return vec


def zeros(dim: int) -> DenseVec:
    return np.zeros(dim, dtype=np.float64)


def check_same_dim(a: DenseVec, b: DenseVec) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(a.shape[0], b.shape[0])


def dot(a: DenseVec, b: DenseVec) -> float:
    """Inner product Σ aᵢbᵢ."""
    check_same_dim(a, b)
    return float(np.dot(a, b))


def norm2_sq(a: DenseVec) -> float:
    """Squared ℓ2 norm, computed as dot(a, a)."""
    return dot(a, a)


def norm2(a: DenseVec) -> float:
    return float(np.sqrt(norm2_sq(a)))


def axpy(alpha: float, x: DenseVec, y: DenseVec) -> DenseVec:
    """Return alpha·x + y as a new vector."""
    check_same_dim(x, y)
    return alpha * x + y


def require_finite(vec: DenseVec, what: str, iteration: Optional[int] = None) -> DenseVec:
    """Raise NumericalError unless every entry of vec is finite."""
    if not np.all(np.isfinite(vec)):
        raise NumericalError(f"non-finite entries in {what}", iteration=iteration)
    return vec
