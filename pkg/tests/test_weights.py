import math

import numpy as np
import pytest

from src.core.weights import (
    WeightState,
    growth_lower_bound,
    initial_weights,
    next_weight,
    phase_switch_index,
    validate_weight_parameters,
    weight_sequence,
)
from src.errors import ConfigurationError
from src.services.problems import make_random_least_squares

SATURATION = 1e100


def random_configs(count: int, seed: int = 7):
    rng = np.random.Generator(np.random.PCG64(seed))
    configs = []
    for i in range(count):
        L = 10.0 ** rng.uniform(0.0, 3.0)
        mu = 0.0 if i % 5 == 0 else L * 10.0 ** rng.uniform(-6.0, -1.0)
        sigma = 10.0 ** rng.uniform(-2.0, 2.0)
        lam = rng.uniform(0.01, 1.0)
        configs.append((L, mu, sigma, lam))
    return configs


def test_first_step_example():
    state = next_weight(initial_weights(L=4.0, mu=0.0, sigma=1.0, lam=1.0))
    assert state.k == 1
    assert state.alpha == pytest.approx(0.25)
    assert state.A == pytest.approx(0.25)
    assert state.A_prev == 0.0


def test_second_step_example():
    states = list(weight_sequence(L=1.0, mu=0.0, sigma=1.0, lam=1.0, steps=2))
    assert states[0].A == pytest.approx(1.0)
    assert states[1].alpha == pytest.approx((1.0 + math.sqrt(5.0)) / 2.0)


def test_sublinear_regime_has_alpha_squared_equal_to_A():
    for state in weight_sequence(L=1.0, mu=0.0, sigma=1.0, lam=1.0, steps=1000):
        assert state.alpha**2 == pytest.approx(state.A, rel=1e-10)


def test_linear_regime_ratio_bounded_below():
    L, mu, sigma, lam = 100.0, 1.0, 1.0, 0.5
    floor = math.sqrt(lam * mu / L)
    for state in weight_sequence(L, mu, sigma, lam, steps=2000):
        if state.A > SATURATION:
            break
        assert state.alpha / state.A >= floor * (1.0 - 1e-12)


@pytest.mark.parametrize("L, mu, sigma, lam", random_configs(50))
def test_weights_increase_and_satisfy_step_identity(L, mu, sigma, lam):
    A_prev = 0.0
    for state in weight_sequence(L, mu, sigma, lam, steps=500):
        assert state.alpha > 0.0
        assert state.A > A_prev
        assert state.A == state.A_prev + state.alpha
        assert state.step_residual < 1e-9
        A_prev = state.A


@pytest.mark.parametrize("L, mu, sigma, lam", random_configs(50))
def test_growth_lower_bound_holds(L, mu, sigma, lam):
    scale = lam * sigma / (2.0 * L)
    linear = math.sqrt(lam * mu / L)
    log_prod = 0.0
    state = initial_weights(L, mu, sigma, lam)
    for i in range(1, 10_001):
        state = next_weight(state)
        if state.A > SATURATION:
            break
        log_prod += math.log1p(max(2.0 / i, linear))
        bound = scale * math.exp(log_prod) - scale
        assert state.A >= bound * (1.0 - 1e-12)


def test_growth_lower_bound_matches_incremental_product():
    L, mu, sigma, lam = 50.0, 0.5, 2.0, 0.3
    scale = lam * sigma / (2.0 * L)
    linear = math.sqrt(lam * mu / L)
    product = 1.0
    for k in range(1, 41):
        product *= 1.0 + max(2.0 / k, linear)
        assert growth_lower_bound(L, mu, sigma, lam, k) == pytest.approx(
            scale * product - scale, rel=1e-12
        )


def test_growth_lower_bound_sublinear_closed_form():
    L, sigma = 3.0, 2.0
    for k in [1, 2, 5, 30, 200]:
        expected = (sigma / (2.0 * L)) * ((k + 1) * (k + 2) / 2.0 - 1.0)
        assert growth_lower_bound(L, 0.0, sigma, 1.0, k) == pytest.approx(expected, rel=1e-12)


def test_growth_lower_bound_edges():
    assert growth_lower_bound(1.0, 0.0, 1.0, 1.0, 0) == 0.0
    assert growth_lower_bound(1.0, 0.5, 1.0, 1.0, 1_000_000) == math.inf
    with pytest.raises(ValueError):
        growth_lower_bound(1.0, 0.0, 1.0, 1.0, -1)


def test_phase_switch_index():
    assert phase_switch_index(100.0, 1.0, 1.0) == 20
    assert phase_switch_index(4.0, 1.0, 1.0) == 4
    assert phase_switch_index(1.0, 0.0, 1.0) is None


def least_squares_constants():
    problem = make_random_least_squares(50)
    return problem.L, problem.mu


@pytest.mark.parametrize(
    "constants, steps",
    [(lambda: (100.0, 1.0), 200), (least_squares_constants, 1200)],
    ids=["kappa100", "random-least-squares"],
)
def test_contraction_in_both_phases(constants, steps):
    L, mu = constants()
    sigma, lam = 1.0, 1.0
    linear_sq = lam * mu / L
    upper = 1.0 - math.sqrt(linear_sq)
    switch = phase_switch_index(L, mu, lam)
    assert switch < steps
    states = list(weight_sequence(L, mu, sigma, lam, steps=steps))
    for state in states[1:]:
        k = state.k
        ratio = state.A_prev / state.A
        if k < switch:
            assert ratio >= 1.0 - math.sqrt(4.0 / k**2 + linear_sq) - 1e-12
        assert ratio <= upper + 1e-12
        assert ratio <= 1.0 / (1.0 + 0.5 * math.sqrt(linear_sq)) + 1e-12


def test_contraction_without_strong_convexity():
    for state in list(weight_sequence(10.0, 0.0, 1.0, 1.0, steps=300))[1:]:
        assert state.A_prev / state.A >= 1.0 - 2.0 / state.k - 1e-12


def test_halving_lambda_never_increases_weights():
    L, mu, sigma = 20.0, 0.2, 1.0
    full = list(weight_sequence(L, mu, sigma, 1.0, steps=100))
    half = list(weight_sequence(L, mu, sigma, 0.5, steps=100))
    for a, b in zip(full, half):
        assert b.alpha <= a.alpha * (1.0 + 1e-12)
        assert b.A <= a.A * (1.0 + 1e-12)


@pytest.mark.parametrize(
    "L, mu, sigma, lam",
    [
        (1.0, 0.0, 1.0, 0.0),
        (1.0, 0.0, 1.0, 1.5),
        (1.0, 0.0, 1.0, -0.1),
        (1.0, 1.0, 1.0, 1.0),
        (1.0, 2.0, 1.0, 1.0),
        (1.0, 0.0, 0.0, 1.0),
        (1.0, -0.1, 1.0, 1.0),
    ],
)
def test_invalid_parameters_rejected(L, mu, sigma, lam):
    with pytest.raises(ConfigurationError):
        validate_weight_parameters(L, mu, sigma, lam)
    with pytest.raises(ConfigurationError):
        WeightState(L=L, mu=mu, sigma=sigma, lam=lam)


def test_step_residual_zero_at_start():
    assert initial_weights(1.0, 0.0, 1.0, 1.0).step_residual == 0.0
