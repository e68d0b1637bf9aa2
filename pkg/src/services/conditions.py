"""
Condition Service

Runtime checks of the variance conditions under which the accelerated
method keeps its rate:
- the per-iteration bound E‖ξ_k‖² ≤ (1/4λ)(A_{k−1}/A_k)‖∇f(x_k) − ∇f(x_{k−1})‖²
- the strong-growth bound E‖ξ‖² ≤ ((1−λ)/(1+λ))‖∇f(x)‖²

The left side is computed exactly when the oracle can enumerate its
outcomes, otherwise by Monte-Carlo on a clone of the oracle so the run's
own random stream is left untouched. Checks are diagnostic only.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

from src.core.vectors import DenseVec, norm2_sq
from src.core.weights import WeightState
from src.errors import ConfigurationError
from src.services.oracles import Oracle
from src.services.problems import Problem

logger = logging.getLogger(__name__)

DEFAULT_MC_SAMPLES = 200


@dataclass(frozen=True)
class ConditionReport:
    """Both sides of one variance condition at iteration k."""
    k: int
    lhs_variance_estimate: float
    rhs_bound: float
    num_mc_samples: int
    condition: str = "iteration"

    @property
    def satisfied(self) -> bool:
        return self.lhs_variance_estimate <= self.rhs_bound

    @property
    def exact(self) -> bool:
        """True when the left side came from exhaustive enumeration."""
        return self.num_mc_samples == 0

    def as_row(self) -> dict:
        return {
            "k": self.k,
            "condition": self.condition,
            "lhs": self.lhs_variance_estimate,
            "rhs": self.rhs_bound,
            "satisfied": self.satisfied,
            "mc_samples": self.num_mc_samples if self.num_mc_samples else "exact",
        }


def estimate_variance(
    problem: Problem, oracle: Oracle, x: DenseVec, num_mc: int
) -> tuple[float, int]:
    """
    E‖g̃ − ∇f(x)‖² for the oracle's current distribution at x.

    Returns:
        (estimate, samples used); samples is 0 for an exact enumeration
    """
    if num_mc < 1:
        raise ConfigurationError(f"num_mc must be >= 1, got {num_mc}")
    grad = problem.gradient(x)

    outcomes = oracle.outcomes(x)
    if outcomes is not None:
        return sum(p * norm2_sq(estimate - grad) for p, estimate in outcomes), 0

    scratch = oracle.clone()
    total = 0.0
    for _ in range(num_mc):
        total += norm2_sq(scratch.draw(x).grad_estimate - grad)
    return total / num_mc, num_mc


def check_iteration_condition(
    problem: Problem,
    oracle: Oracle,
    x_k: DenseVec,
    x_prev: DenseVec,
    weights: WeightState,
    num_mc: int = DEFAULT_MC_SAMPLES,
) -> ConditionReport:
    """
    Compare E‖ξ_k‖² with (1/4λ)(A_{k−1}/A_k)‖∇f(x_k) − ∇f(x_{k−1})‖².

    Args:
        weights: WeightState already advanced to iteration k (k ≥ 1)
    """
    if weights.k < 1:
        raise ConfigurationError("the per-iteration condition is defined for k >= 1")
    lhs, samples = estimate_variance(problem, oracle, x_k, num_mc)
    drift = norm2_sq(problem.gradient(x_k) - problem.gradient(x_prev))
    rhs = (weights.A_prev / weights.A) * drift / (4.0 * weights.lam)
    return ConditionReport(
        k=weights.k, lhs_variance_estimate=lhs, rhs_bound=rhs, num_mc_samples=samples
    )


def check_strong_growth(
    problem: Problem,
    oracle: Oracle,
    x: DenseVec,
    lam: float,
    num_mc: int = DEFAULT_MC_SAMPLES,
    k: int = 0,
) -> ConditionReport:
    """Compare E‖ξ‖² with ((1−λ)/(1+λ))‖∇f(x)‖²."""
    if not 0.0 < lam <= 1.0:
        raise ConfigurationError(f"lambda must lie in (0, 1], got {lam}")
    lhs, samples = estimate_variance(problem, oracle, x, num_mc)
    rhs = (1.0 - lam) / (1.0 + lam) * norm2_sq(problem.gradient(x))
    return ConditionReport(
        k=k,
        lhs_variance_estimate=lhs,
        rhs_bound=rhs,
        num_mc_samples=samples,
        condition="strong_growth",
    )


@dataclass
class ConditionMonitor:
    """
    Solver hook that checks both conditions before each oracle query.

    Violations are logged at WARNING; every report is kept in `reports`.
    """
    num_mc: int = DEFAULT_MC_SAMPLES
    strong_growth: bool = True
    reports: list[ConditionReport] = field(default_factory=list)

    def __call__(
        self,
        k: int,
        x_k: DenseVec,
        x_prev: DenseVec,
        weights: WeightState,
        oracle: Oracle,
    ) -> list[ConditionReport]:
        problem = oracle.problem
        found = [check_iteration_condition(problem, oracle, x_k, x_prev, weights, self.num_mc)]
        if self.strong_growth:
            found.append(check_strong_growth(problem, oracle, x_k, weights.lam, self.num_mc, k=k))

        for report in found:
            if not report.satisfied:
                logger.warning(
                    "k=%d: %s condition violated (lhs %.3e > rhs %.3e)",
                    k,
                    report.condition,
                    report.lhs_variance_estimate,
                    report.rhs_bound,
                )
        self.reports.extend(found)
        return found

    def violations(self, condition: Optional[str] = None) -> list[ConditionReport]:
        return [
            r for r in self.reports
            if not r.satisfied and (condition is None or r.condition == condition)
        ]
