"""
Feasible sets, prox functions and the dual-averaging maximization.

The maximization

    v = argmax_{u ∈ C} ⟨s, u⟩ − φ(u) − (μ/2)·Σ αᵢ‖xᵢ − u‖²

has an isotropic quadratic objective when φ(u) = (σ/2)‖u − c‖², so on a
closed convex set C its maximizer is the Euclidean projection of the
unconstrained one:

    v = Π_C( (s + μ·Σαᵢxᵢ + σ·c) / (μ·A + σ) ).
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from src.core.vectors import DenseVec, as_vector, check_same_dim, norm2, norm2_sq, zeros
from src.errors import ConfigurationError, DimensionMismatchError


class FeasibleSet(ABC):
    """A closed convex set C ⊆ Rⁿ with an exact Euclidean projection."""

    def __init__(self, dim: int):
        self.dim = dim

    @abstractmethod
    def project(self, x: DenseVec) -> DenseVec:
        """Nearest point of the set in ℓ2."""

    @abstractmethod
    def contains(self, x: DenseVec, tol: float = 1e-10) -> bool:
        """Membership up to tol."""

    @property
    def is_unconstrained(self) -> bool:
        return False

    def _check(self, x: DenseVec) -> None:
        if x.shape != (self.dim,):
            raise DimensionMismatchError(self.dim, x.shape[0], what="set")


class Unconstrained(FeasibleSet):
    """C = Rⁿ."""

    def project(self, x: DenseVec) -> DenseVec:
        self._check(x)
        return x.copy()

    def contains(self, x: DenseVec, tol: float = 1e-10) -> bool:
        self._check(x)
        return bool(np.all(np.isfinite(x)))

    @property
    def is_unconstrained(self) -> bool:
        return True

    def __repr__(self) -> str:
        return f"Unconstrained(dim={self.dim})"


class EuclideanBall(FeasibleSet):
    """{u : ‖u − center‖ ≤ radius}."""

    def __init__(self, center: DenseVec, radius: float):
        center = as_vector(center)
        if not radius > 0.0:
            raise ConfigurationError(f"ball radius must be positive, got {radius}")
        super().__init__(center.shape[0])
        self.center = center
        self.radius = float(radius)

    def project(self, x: DenseVec) -> DenseVec:
        self._check(x)
        offset = x - self.center
        dist = norm2(offset)
        if dist <= self.radius:
            return x.copy()
        return self.center + (self.radius / dist) * offset

    def contains(self, x: DenseVec, tol: float = 1e-10) -> bool:
        self._check(x)
        return norm2(x - self.center) <= self.radius * (1.0 + tol) + tol

    def __repr__(self) -> str:
        return f"EuclideanBall(dim={self.dim}, radius={self.radius})"


class Box(FeasibleSet):
    """{u : lower ≤ u ≤ upper} componentwise."""

    def __init__(self, lower: DenseVec, upper: DenseVec):
        lower, upper = as_vector(lower), as_vector(upper)
        check_same_dim(lower, upper)
        if np.any(lower > upper):
            raise ConfigurationError("box bounds need lower <= upper componentwise")
        super().__init__(lower.shape[0])
        self.lower = lower
        self.upper = upper

    def project(self, x: DenseVec) -> DenseVec:
        self._check(x)
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: DenseVec, tol: float = 1e-10) -> bool:
        self._check(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def __repr__(self) -> str:
        return f"Box(dim={self.dim})"


def project(feasible_set: FeasibleSet, x: DenseVec) -> DenseVec:
    return feasible_set.project(x)


@dataclass(frozen=True)
class ProxFunction:
    """φ(u) = (σ/2)‖u − center‖²."""
    center: DenseVec
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ConfigurationError(f"prox sigma must be positive, got {self.sigma}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def value(self, u: DenseVec) -> float:
        check_same_dim(u, self.center)
        return 0.5 * self.sigma * norm2_sq(u - self.center)

    def minimizer(self, feasible_set: FeasibleSet) -> DenseVec:
        """argmin over C of φ, i.e. the projection of the center."""
        return feasible_set.project(self.center)


@dataclass(frozen=True)
class ProxAccumulator:
    """Running Σ αᵢxᵢ and A = Σ αᵢ of the time-varying prox term."""
    weighted_x_sum: DenseVec
    weight_total: float
    mu: float

    @classmethod
    def empty(cls, dim: int, mu: float) -> "ProxAccumulator":
        return cls(weighted_x_sum=zeros(dim), weight_total=0.0, mu=mu)

    def add(self, alpha: float, x: DenseVec) -> "ProxAccumulator":
        check_same_dim(x, self.weighted_x_sum)
        return ProxAccumulator(
            weighted_x_sum=self.weighted_x_sum + alpha * x,
            weight_total=self.weight_total + alpha,
            mu=self.mu,
        )


def solve_v(
    s: DenseVec,
    prox: ProxFunction,
    acc: ProxAccumulator,
    feasible_set: FeasibleSet,
) -> DenseVec:
    """
    Maximize ⟨s, u⟩ − φ(u) − (μ/2)Σαᵢ‖xᵢ − u‖² over the feasible set.

    Args:
        s: Negative weighted gradient sum
        prox: Prox function φ
        acc: Accumulated Σαᵢxᵢ, A and μ
        feasible_set: The set C

    Returns:
        The maximizer v
    """
    check_same_dim(s, prox.center)
    check_same_dim(s, acc.weighted_x_sum)
    curvature = acc.mu * acc.weight_total + prox.sigma
    unconstrained = (s + acc.mu * acc.weighted_x_sum + prox.sigma * prox.center) / curvature
    if feasible_set.is_unconstrained:
        return unconstrained
    return feasible_set.project(unconstrained)


def prox_objective(
    u: DenseVec, s: DenseVec, prox: ProxFunction, acc: ProxAccumulator
) -> float:
    """
    ⟨s, u⟩ − φ(u) − (μ/2)Σαᵢ‖xᵢ − u‖², up to a constant independent of u.

    Σαᵢ‖xᵢ − u‖² = A‖u‖² − 2⟨Σαᵢxᵢ, u⟩ + const, so only the accumulator is needed.
    """
    quad = acc.weight_total * norm2_sq(u) - 2.0 * float(np.dot(acc.weighted_x_sum, u))
    return float(np.dot(s, u)) - prox.value(u) - 0.5 * acc.mu * quad


def hat_v(
    prev_v: DenseVec,
    x_k: DenseVec,
    mu: float,
    A_prev: float,
    A: float,
    sigma: float,
    alpha: float,
) -> DenseVec:
    """v̂ = (μA_{k-1}+σ)/(μA_k+σ)·v_{k-1} + μα_k/(μA_k+σ)·x_k."""
    check_same_dim(prev_v, x_k)
    denom = mu * A + sigma
    return ((mu * A_prev + sigma) / denom) * prev_v + (mu * alpha / denom) * x_k
