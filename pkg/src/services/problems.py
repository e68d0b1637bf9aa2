"""
Problem Service

Objective functions used by the experiments, with their smoothness (L)
and strong-convexity (μ) constants:
- Least squares ½‖Ax − b‖², optionally split into row shards
- ℓ2-regularized logistic regression split into contiguous sample shards
"""

import copy
import logging
from abc import ABC, abstractmethod
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg
from scipy.special import expit

from src.core.vectors import DenseVec, as_vector, zeros
from src.errors import ConfigurationError, DimensionMismatchError
from src.services.datasets import Dataset

logger = logging.getLogger(__name__)

DEFAULT_EIG_ITERATIONS = 200
DEFAULT_EIG_RTOL = 1e-10
LEAST_SQUARES_SEED = 1906


def power_iteration(
    matvec: Callable[[DenseVec], DenseVec],
    dim: int,
    max_iterations: int = DEFAULT_EIG_ITERATIONS,
    rtol: float = DEFAULT_EIG_RTOL,
) -> float:
    """
    Largest eigenvalue of a symmetric PSD operator.

    Starts from the normalized all-ones vector so results are reproducible;
    stops when the Rayleigh quotient changes by less than rtol (relative).
    """
    v = np.full(dim, 1.0 / np.sqrt(dim))
    estimate = 0.0
    for _ in range(max_iterations):
        w = matvec(v)
        updated = float(np.dot(v, w))
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(updated - estimate) <= rtol * abs(updated):
            return updated
        estimate = updated
    logger.warning("power iteration hit its cap of %d iterations", max_iterations)
    return estimate


def extreme_eigenvalues(
    gram: np.ndarray,
    max_iterations: int = DEFAULT_EIG_ITERATIONS,
    rtol: float = DEFAULT_EIG_RTOL,
) -> tuple[float, float]:
    """
    (λ_max, λ_min) of a symmetric PSD matrix.

    λ_max by power iteration, λ_min by inverse power iteration on a Cholesky
    factorization; a singular matrix has λ_min = 0.
    """
    dim = gram.shape[0]
    lam_max = power_iteration(lambda v: gram @ v, dim, max_iterations, rtol)
    try:
        factor = scipy.linalg.cho_factor(gram)
    except np.linalg.LinAlgError:
        return lam_max, 0.0
    inverse_max = power_iteration(
        lambda v: scipy.linalg.cho_solve(factor, v), dim, max_iterations, rtol
    )
    lam_min = 1.0 / inverse_max if inverse_max > 0.0 else 0.0
    return lam_max, min(lam_min, lam_max)


class Problem(ABC):
    """
    f(x) = Σ_{l<m} f_l(x), L-smooth and μ-strongly convex (μ may be 0).

    Subclasses provide value, component_gradient and the constants; the full
    gradient is the left-to-right sum of the component gradients.
    """

    name: str = "problem"

    def __init__(self, dim: int, num_components: int, L: float, mu: float):
        if L < mu or mu < 0.0 or L <= 0.0:
            raise ConfigurationError(f"need L >= mu >= 0 and L > 0 (L={L}, mu={mu})")
        self.dim = dim
        self.num_components = num_components
        self.L = float(L)
        self.mu = float(mu)

    @abstractmethod
    def value(self, x: DenseVec) -> float:
        """Objective value."""

    @abstractmethod
    def component_gradient(self, index: int, x: DenseVec) -> DenseVec:
        """Gradient of f_index at x (0-based index)."""

    def gradient(self, x: DenseVec) -> DenseVec:
        self._check(x)
        total = zeros(self.dim)
        for grad in self.component_gradients(range(self.num_components), x):
            total = total + grad
        return total

    def component_gradients(self, indices: Sequence[int], x: DenseVec) -> list[DenseVec]:
        return [self.component_gradient(int(j), x) for j in indices]

    def _check(self, x: DenseVec) -> None:
        if x.shape != (self.dim,):
            raise DimensionMismatchError(self.dim, x.shape[0] if x.ndim else 0, what="problem")

    def _check_index(self, index: int) -> None:
        if not 0 <= index < self.num_components:
            raise IndexError(f"component {index} out of range [0, {self.num_components})")

    def describe(self) -> str:
        return (
            f"{self.name}: dim={self.dim}, m={self.num_components}, "
            f"L={self.L:.6g}, mu={self.mu:.6g}"
        )


def _contiguous_shards(count: int, num_shards: int) -> list[np.ndarray]:
    """Contiguous blocks in file order; sizes differ by at most one, larger blocks first."""
    return [block for block in np.array_split(np.arange(count), num_shards)]


class LeastSquaresProblem(Problem):
    """½‖Ax − b‖², with the rows of A split into contiguous components."""

    name = "least_squares"

    def __init__(
        self,
        A: np.ndarray,
        b: DenseVec,
        num_components: int = 1,
        eig_max_iterations: int = DEFAULT_EIG_ITERATIONS,
        eig_rtol: float = DEFAULT_EIG_RTOL,
    ):
        A = np.asarray(A, dtype=np.float64)
        b = as_vector(b)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise DimensionMismatchError(A.shape[0], b.shape[0], what="rows of A vs b")
        if not 1 <= num_components <= A.shape[0]:
            raise ConfigurationError(
                f"num_components must lie in [1, {A.shape[0]}], got {num_components}"
            )
        lam_max, lam_min = extreme_eigenvalues(A.T @ A, eig_max_iterations, eig_rtol)
        super().__init__(A.shape[1], num_components, lam_max, lam_min)
        self.A = A
        self.b = b
        self.shards = _contiguous_shards(A.shape[0], num_components)

    def value(self, x: DenseVec) -> float:
        self._check(x)
        residual = self.A @ x - self.b
        return 0.5 * float(np.dot(residual, residual))

    def gradient(self, x: DenseVec) -> DenseVec:
        if self.num_components == 1:
            self._check(x)
            return self.A.T @ (self.A @ x - self.b)
        return super().gradient(x)

    def component_gradient(self, index: int, x: DenseVec) -> DenseVec:
        self._check_index(index)
        self._check(x)
        rows = self.shards[index]
        A_l = self.A[rows]
        return A_l.T @ (A_l @ x - self.b[rows])


class LogisticProblem(Problem):
    """
    Σ_l Σ_{(a,b)∈D_l} log(1 + exp(−b⟨a, x⟩)) + (reg/2)‖x‖².

    Component l owns shard D_l and an equal share reg/(2m)‖x‖² of the
    regularizer, so the components sum to the full objective.
    """

    name = "logistic"

    def __init__(
        self,
        data: Dataset,
        reg: float,
        num_components: int,
        eig_max_iterations: int = DEFAULT_EIG_ITERATIONS,
        eig_rtol: float = DEFAULT_EIG_RTOL,
    ):
        if data.num_samples == 0:
            raise ConfigurationError("logistic problem needs a nonempty dataset")
        if reg < 0.0:
            raise ConfigurationError(f"regularization must be nonnegative, got {reg}")
        if not 1 <= num_components <= data.num_samples:
            raise ConfigurationError(
                f"num_components must lie in [1, {data.num_samples}], got {num_components}"
            )
        X = data.features
        lam_max = power_iteration(
            lambda v: X.T @ (X @ v), data.dim, eig_max_iterations, eig_rtol
        )
        super().__init__(data.dim, num_components, reg + 0.25 * lam_max, reg)
        self.data = data
        self.reg = float(reg)
        self.shards = _contiguous_shards(data.num_samples, num_components)

    def value(self, x: DenseVec) -> float:
        self._check(x)
        margins = self.data.labels * (self.data.features @ x)
        loss = float(np.sum(np.logaddexp(0.0, -margins)))
        return loss + 0.5 * self.reg * float(np.dot(x, x))

    def component_gradient(self, index: int, x: DenseVec) -> DenseVec:
        self._check_index(index)
        return self.component_gradients([index], x)[0]

    def component_gradients(self, indices: Sequence[int], x: DenseVec) -> list[DenseVec]:
        """
        Vectorized over the selected shards.

        Every row and every shard is reduced on its own, so a component's
        gradient does not depend on which other components share the call.
        """
        self._check(x)
        indices = [int(j) for j in indices]
        if not indices:
            return []
        for index in indices:
            self._check_index(index)
        shards = [self.shards[j] for j in indices]
        rows = np.concatenate(shards)
        X = self.data.features[rows]
        y = self.data.labels[rows]
        margins = (X * x).sum(axis=1)
        per_sample = (-y * expit(-y * margins))[:, None] * X
        starts = np.cumsum([0] + [len(shard) for shard in shards[:-1]])
        per_shard = np.add.reduceat(per_sample, starts, axis=0)
        per_shard += (self.reg / self.num_components) * x
        return list(per_shard)


def make_least_squares(
    A: Union[np.ndarray, Sequence[DenseVec]],
    b: DenseVec,
    num_components: int = 1,
    eig_max_iterations: int = DEFAULT_EIG_ITERATIONS,
    eig_rtol: float = DEFAULT_EIG_RTOL,
) -> LeastSquaresProblem:
    """
    Build f(x) = ½‖Ax − b‖² with L = λ_max(AᵀA) and μ = λ_min(AᵀA).

    Args:
        A: Matrix, or a sequence of row vectors
        b: Right-hand side, one entry per row
        num_components: Number of contiguous row shards

    Returns:
        LeastSquaresProblem
    """
    matrix = np.vstack([as_vector(row) for row in A]) if not isinstance(A, np.ndarray) else A
    return LeastSquaresProblem(matrix, b, num_components, eig_max_iterations, eig_rtol)


def make_random_least_squares(
    n: int = 50,
    seed: int = LEAST_SQUARES_SEED,
    num_components: int = 1,
    eig_max_iterations: int = DEFAULT_EIG_ITERATIONS,
    eig_rtol: float = DEFAULT_EIG_RTOL,
) -> LeastSquaresProblem:
    """Square least squares with A and b i.i.d. uniform on [0, 1] (PCG64 stream)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    A = rng.uniform(0.0, 1.0, size=(n, n))
    b = rng.uniform(0.0, 1.0, size=n)
    return LeastSquaresProblem(A, b, num_components, eig_max_iterations, eig_rtol)


def make_logistic(
    data: Dataset,
    reg: float,
    num_components: int,
    eig_max_iterations: int = DEFAULT_EIG_ITERATIONS,
    eig_rtol: float = DEFAULT_EIG_RTOL,
) -> LogisticProblem:
    """
    Build the regularized logistic objective over contiguous shards.

    μ = reg and L = reg + ¼·λ_max(XᵀX).
    """
    return LogisticProblem(data, reg, num_components, eig_max_iterations, eig_rtol)


def with_constants(problem: Problem, L: Optional[float] = None, mu: Optional[float] = None) -> Problem:
    """
    Shallow copy of problem with replaced constants.

    Any μ' ∈ [0, μ] and L' ≥ L are valid constants for the same function.
    """

    clone = copy.copy(problem)
    new_L = problem.L if L is None else float(L)
    new_mu = problem.mu if mu is None else float(mu)
    if new_mu > problem.mu or new_L < problem.L:
        raise ConfigurationError("replacement constants must satisfy mu' <= mu and L' >= L")
    clone.L, clone.mu = new_L, new_mu
    return clone
