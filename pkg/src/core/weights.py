"""
Weight recursion for the accelerated method.

Each step picks α_k > 0 solving L·α_k²/A_k = λ(μ·A_k + σ) with
A_k = A_{k-1} + α_k. Substituting A_k gives the quadratic

    (L − λμ)·α² − λ(2μA_{k-1} + σ)·α − λ(μA_{k-1}² + σA_{k-1}) = 0

whose positive root is taken. λ multiplies both the μ and the σ terms; the
growth bound below carries λσ and λμ as well.
"""

import math
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from src.errors import ConfigurationError


@dataclass(frozen=True)
class WeightState:
    """Scalar state of the recursion after k steps."""
    L: float
    mu: float
    sigma: float
    lam: float
    k: int = 0
    A_prev: float = 0.0
    alpha: float = 0.0
    A: float = 0.0

    def __post_init__(self) -> None:
        validate_weight_parameters(self.L, self.mu, self.sigma, self.lam)

    @property
    def step_residual(self) -> float:
        """Relative residual of L·α²/A = λ(μA + σ); 0 at k = 0."""
        if self.k == 0:
            return 0.0
        lhs = self.L * self.alpha * self.alpha / self.A
        rhs = self.lam * (self.mu * self.A + self.sigma)
        return abs(lhs - rhs) / abs(rhs)


def validate_weight_parameters(L: float, mu: float, sigma: float, lam: float) -> None:
    """
    Check the constants the recursion relies on.

    Raises:
        ConfigurationError: If L ≤ μ, μ < 0, σ ≤ 0 or λ ∉ (0, 1]
    """
    if not (0.0 < lam <= 1.0):
        raise ConfigurationError(f"lambda must lie in (0, 1], got {lam}")
    if mu < 0.0:
        raise ConfigurationError(f"mu must be nonnegative, got {mu}")
    if sigma <= 0.0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    if not L > mu:
        raise ConfigurationError(f"the weight recursion needs L > mu (L={L}, mu={mu})")


def initial_weights(L: float, mu: float, sigma: float, lam: float) -> WeightState:
    return WeightState(L=L, mu=mu, sigma=sigma, lam=lam)


def next_weight(state: WeightState) -> WeightState:
    """
    Advance the recursion by one step.

    Args:
        state: Current WeightState (k, A_k)

    Returns:
        WeightState at k + 1 with A_prev = old A
    """
    L, mu, sigma, lam = state.L, state.mu, state.sigma, state.lam
    A_prev = state.A

    a = L - lam * mu
    b = lam * (2.0 * mu * A_prev + sigma)
    c = lam * (mu * A_prev * A_prev + sigma * A_prev)
    # b > 0 and c ≥ 0, so adding the square root never cancels
    alpha = (b + math.sqrt(b * b + 4.0 * a * c)) / (2.0 * a)

    return replace(
        state,
        k=state.k + 1,
        A_prev=A_prev,
        alpha=alpha,
        A=A_prev + alpha,
    )


def weight_sequence(
    L: float, mu: float, sigma: float, lam: float, steps: int
) -> Iterator[WeightState]:
    """Yield the states for k = 1..steps."""
    state = initial_weights(L, mu, sigma, lam)
    for _ in range(steps):
        state = next_weight(state)
        yield state


def growth_lower_bound(L: float, mu: float, sigma: float, lam: float, k: int) -> float:
    """
    Lower bound on A_k:

        (λσ/2L)·∏_{i=1..k}(1 + max{2/i, √(λμ/L)}) − λσ/(2L)

    The product is accumulated in log space, so the result is +inf rather
    than an overflow error for very long horizons.
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    scale = lam * sigma / (2.0 * L)
    if k == 0:
        return 0.0
    linear = math.sqrt(lam * mu / L)
    log_prod = math.fsum(math.log1p(max(2.0 / i, linear)) for i in range(1, k + 1))
    try:
        product = math.exp(log_prod)
    except OverflowError:
        return math.inf
    return scale * product - scale


def phase_switch_index(L: float, mu: float, lam: float) -> Optional[int]:
    """
    Iteration where the linear term √(λμ/L) takes over from 2/i.

    Returns ceil(2·√(L/(λμ))), or None when μ = 0 (the sublinear term always wins).
    """
    if mu <= 0.0:
        return None
    return math.ceil(2.0 * math.sqrt(L / (lam * mu)))
