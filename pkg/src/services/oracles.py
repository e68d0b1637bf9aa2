"""
Oracle Service

Stochastic first-order oracles g̃ = ∇f(x) + ξ:
- exact gradients
- Gaussian-perturbed gradients
- mini-batch estimates for finite sums
- SAGA estimates with a per-component gradient memory

Every oracle meters the component gradients it evaluates and the bits an
uncompressed transmission of those gradients costs (32 bits per entry).
"""

import copy
import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.vectors import DenseVec, require_finite, zeros
from src.errors import ConfigurationError, OracleError
from src.services.problems import Problem

logger = logging.getLogger(__name__)

FLOAT_BITS = 32
MAX_ENUMERATED_OUTCOMES = 10_000
SAGA_REFRESH_EVERY = 1_000

Outcomes = list[tuple[float, DenseVec]]


def uncompressed_bits(dim: int, gradients: int) -> int:
    """Bits to send `gradients` dense vectors of length dim."""
    return FLOAT_BITS * dim * gradients


@dataclass
class OracleOutput:
    """A gradient estimate plus metering information."""
    grad_estimate: DenseVec
    component_evals: int
    bits: int
    noise_variance: Optional[float] = None

    def __post_init__(self) -> None:
        if self.component_evals < 0 or self.bits < 0:
            raise ValueError("oracle metering counts must be nonnegative")


class Oracle(ABC):
    """
    Base class for gradient oracles.

    `draw` samples an estimate from the oracle's current distribution without
    changing any memory; `query` is what a solver calls and may update state.
    """

    name: str = "oracle"

    def __init__(self, problem: Problem, rng: Optional[np.random.Generator] = None):
        self.problem = problem
        self.rng = rng if rng is not None else np.random.Generator(np.random.PCG64(0))

    @property
    def exact(self) -> bool:
        """True when every estimate equals ∇f(x)."""
        return False

    def initialize(self, x0: DenseVec) -> Optional[OracleOutput]:
        """Prepare the oracle at the starting point; returns the cost, if any."""
        return None

    @abstractmethod
    def draw(self, x: DenseVec) -> OracleOutput:
        """Sample one estimate at x without updating memory."""

    def query(self, x: DenseVec) -> OracleOutput:
        return self.draw(x)

    def outcomes(self, x: DenseVec) -> Optional[Outcomes]:
        """All (probability, estimate) pairs when there are few enough, else None."""
        return None

    def clone(self) -> "Oracle":
        """Independent copy (state and random stream) for diagnostics."""
        return copy.deepcopy(self)


class ExactOracle(Oracle):
    """g̃ = ∇f(x)."""

    name = "exact"

    @property
    def exact(self) -> bool:
        return True

    def draw(self, x: DenseVec) -> OracleOutput:
        return exact_oracle(self.problem, x)

    def outcomes(self, x: DenseVec) -> Optional[Outcomes]:
        return [(1.0, self.problem.gradient(x))]


class GaussianOracle(Oracle):
    """g̃ = ∇f(x) + ξ with ξ ~ N(0, ν·I)."""

    name = "gaussian"

    def __init__(self, problem: Problem, variance: float, rng: Optional[np.random.Generator] = None):
        if variance < 0.0:
            raise ConfigurationError(f"noise variance must be nonnegative, got {variance}")
        super().__init__(problem, rng)
        self.variance = float(variance)

    @property
    def exact(self) -> bool:
        return self.variance == 0.0

    def draw(self, x: DenseVec) -> OracleOutput:
        return gaussian_oracle(self.problem, x, self.variance, self.rng)

    def outcomes(self, x: DenseVec) -> Optional[Outcomes]:
        if self.variance == 0.0:
            return [(1.0, self.problem.gradient(x))]
        return None


class MinibatchOracle(Oracle):
    """g̃ = (m/b)·Σ_{j∈J} ∇f_j(x), J uniform without replacement, |J| = b."""

    name = "minibatch"

    def __init__(self, problem: Problem, batch_size: int, rng: Optional[np.random.Generator] = None):
        _check_batch_size(problem, batch_size)
        super().__init__(problem, rng)
        self.batch_size = batch_size

    def draw(self, x: DenseVec) -> OracleOutput:
        return minibatch_oracle(self.problem, x, self.batch_size, self.rng)

    def outcomes(self, x: DenseVec) -> Optional[Outcomes]:
        m, b = self.problem.num_components, self.batch_size
        count = math.comb(m, b)
        if count > MAX_ENUMERATED_OUTCOMES:
            return None
        grads = self.problem.component_gradients(range(m), x)
        scale = m / b
        results = []
        for batch in itertools.combinations(range(m), b):
            estimate = zeros(self.problem.dim)
            for j in batch:
                estimate = estimate + grads[j]
            results.append((1.0 / count, scale * estimate))
        return results


@dataclass
class SagaMemory:
    """Stored component gradients ∇f_l(ψ^l) and their running sum."""
    psi_grads: np.ndarray
    running_sum: DenseVec
    batch_size: int
    updates_since_refresh: int = 0
    last_drift: float = 0.0
    initialized: bool = True

    @classmethod
    def uninitialized(cls, problem: Problem, batch_size: int) -> "SagaMemory":
        _check_batch_size(problem, batch_size)
        return cls(
            psi_grads=np.zeros((problem.num_components, problem.dim)),
            running_sum=zeros(problem.dim),
            batch_size=batch_size,
            initialized=False,
        )

    @classmethod
    def at(cls, problem: Problem, x0: DenseVec, batch_size: int) -> "SagaMemory":
        """Memory with ψ^l = x0 for every component (one full pass)."""
        _check_batch_size(problem, batch_size)
        psi = np.vstack(problem.component_gradients(range(problem.num_components), x0))
        return cls(psi_grads=psi, running_sum=psi.sum(axis=0), batch_size=batch_size)

    def refresh(self) -> float:
        """Recompute the running sum from scratch; returns the relative drift."""
        recomputed = self.psi_grads.sum(axis=0)
        scale = max(float(np.linalg.norm(recomputed)), 1.0)
        self.last_drift = float(np.linalg.norm(self.running_sum - recomputed)) / scale
        self.running_sum = recomputed
        self.updates_since_refresh = 0
        if self.last_drift > 1e-8:
            logger.warning("SAGA running sum drifted by %.3e before refresh", self.last_drift)
        return self.last_drift


class SagaOracle(Oracle):
    """
    SAGA estimate

        g̃ = (m/b)Σ_{j∈J}∇f_j(x) − (m/b)Σ_{j∈J}∇f_j(ψ^j) + Σ_l ∇f_l(ψ^l)

    followed by ψ^j ← x for j ∈ J.
    """

    name = "saga"

    def __init__(self, problem: Problem, batch_size: int, rng: Optional[np.random.Generator] = None):
        super().__init__(problem, rng)
        self.memory = SagaMemory.uninitialized(problem, batch_size)

    @property
    def batch_size(self) -> int:
        return self.memory.batch_size

    def initialize(self, x0: DenseVec) -> Optional[OracleOutput]:
        self.memory = SagaMemory.at(self.problem, x0, self.memory.batch_size)
        m = self.problem.num_components
        return OracleOutput(
            grad_estimate=self.memory.running_sum.copy(),
            component_evals=m,
            bits=uncompressed_bits(self.problem.dim, m),
        )

    def draw(self, x: DenseVec) -> OracleOutput:
        batch = _sample_batch(self.problem.num_components, self.batch_size, self.rng)
        output, _ = _saga_estimate(self.problem, x, self.memory, batch)
        return output

    def query(self, x: DenseVec) -> OracleOutput:
        output, self.memory = saga_oracle(self.problem, x, self.memory, self.rng)
        return output

    def outcomes(self, x: DenseVec) -> Optional[Outcomes]:
        m, b = self.problem.num_components, self.batch_size
        count = math.comb(m, b)
        if count > MAX_ENUMERATED_OUTCOMES or not self.memory.initialized:
            return None
        return [
            (1.0 / count, _saga_estimate(self.problem, x, self.memory, np.array(batch))[0].grad_estimate)
            for batch in itertools.combinations(range(m), b)
        ]


def _check_batch_size(problem: Problem, batch_size: int) -> None:
    if not 1 <= batch_size <= problem.num_components:
        raise ConfigurationError(
            f"batch size must lie in [1, {problem.num_components}], got {batch_size}"
        )


def _sample_batch(m: int, b: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(rng.choice(m, size=b, replace=False))


def _saga_estimate(
    problem: Problem, x: DenseVec, memory: SagaMemory, batch: np.ndarray
) -> tuple[OracleOutput, list[DenseVec]]:
    if not memory.initialized:
        raise OracleError("SAGA memory must be initialized at x0 before the first query")
    fresh = problem.component_gradients(batch, x)
    correction = zeros(problem.dim)
    for j, grad in zip(batch, fresh):
        correction = correction + (grad - memory.psi_grads[j])
    scale = problem.num_components / memory.batch_size
    estimate = scale * correction + memory.running_sum
    output = OracleOutput(
        grad_estimate=require_finite(estimate, "SAGA estimate"),
        component_evals=len(batch),
        bits=uncompressed_bits(problem.dim, len(batch)),
    )
    return output, fresh


def exact_oracle(problem: Problem, x: DenseVec) -> OracleOutput:
    """The exact gradient; costs one pass over all m components."""
    m = problem.num_components
    return OracleOutput(
        grad_estimate=problem.gradient(x),
        component_evals=m,
        bits=uncompressed_bits(problem.dim, m),
        noise_variance=0.0,
    )


def gaussian_oracle(
    problem: Problem, x: DenseVec, variance: float, rng: np.random.Generator
) -> OracleOutput:
    """∇f(x) plus i.i.d. N(0, variance) noise per coordinate."""
    output = exact_oracle(problem, x)
    if variance > 0.0:
        noise = rng.normal(0.0, math.sqrt(variance), size=problem.dim)
        output.grad_estimate = output.grad_estimate + noise
    output.noise_variance = problem.dim * variance
    return output


def minibatch_oracle(
    problem: Problem, x: DenseVec, batch_size: int, rng: np.random.Generator
) -> OracleOutput:
    """(m/b)·Σ_{j∈J}∇f_j(x) for a uniform batch J of size b."""
    _check_batch_size(problem, batch_size)
    batch = _sample_batch(problem.num_components, batch_size, rng)
    estimate = zeros(problem.dim)
    for grad in problem.component_gradients(batch, x):
        estimate = estimate + grad
    return OracleOutput(
        grad_estimate=(problem.num_components / batch_size) * estimate,
        component_evals=batch_size,
        bits=uncompressed_bits(problem.dim, batch_size),
    )


def saga_oracle(
    problem: Problem, x: DenseVec, memory: SagaMemory, rng: np.random.Generator
) -> tuple[OracleOutput, SagaMemory]:
    """
    One SAGA query: estimate at x, then move ψ^j to x for the sampled batch.

    The memory is updated in place and returned.

    Raises:
        OracleError: If memory was never initialized at x0
    """
    batch = _sample_batch(problem.num_components, memory.batch_size, rng)
    output, fresh = _saga_estimate(problem, x, memory, batch)

    for j, grad in zip(batch, fresh):
        memory.running_sum = memory.running_sum + (grad - memory.psi_grads[j])
        memory.psi_grads[j] = grad
    memory.updates_since_refresh += 1
    if memory.updates_since_refresh >= SAGA_REFRESH_EVERY:
        memory.refresh()
    return output, memory


@dataclass(frozen=True)
class SagaLambdaBound:
    """λ limits for accelerated SAGA."""
    rate_bound: float
    batch_threshold: float
    rate_bound_within_threshold: bool

    @property
    def recommended(self) -> float:
        return min(self.rate_bound, self.batch_threshold)


def saga_lambda_bound(m: int, b: int, L: float, mu: float) -> SagaLambdaBound:
    """
    λ ≤ min{1/(m+1), (L/μ)·b²/(16m²)} (b²/(16m²) when μ = 0), and the
    threshold b³/(96m²) at which λ·96m²/b³ − 1 stops being nonpositive.

    Raises:
        ConfigurationError: For m < 1, b ∉ [1, m] or L ≤ μ
    """
    if m < 1 or not 1 <= b <= m:
        raise ConfigurationError(f"need m >= 1 and 1 <= b <= m (m={m}, b={b})")
    if mu < 0.0 or not L > mu:
        raise ConfigurationError(f"need L > mu >= 0 (L={L}, mu={mu})")

    batch_term = b * b / (16.0 * m * m)
    second = batch_term if mu == 0.0 else (L / mu) * batch_term
    rate_bound = min(1.0 / (m + 1), second)
    threshold = b**3 / (96.0 * m * m)
    return SagaLambdaBound(
        rate_bound=rate_bound,
        batch_threshold=threshold,
        rate_bound_within_threshold=rate_bound * 96.0 * m * m / b**3 <= 1.0,
    )
