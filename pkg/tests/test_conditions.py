import logging

import numpy as np
import pytest

from src.core.geometry import ProxFunction
from src.core.random_streams import make_rng
from src.core.vectors import as_vector, norm2_sq, zeros
from src.core.weights import initial_weights, next_weight
from src.errors import ConfigurationError
from src.services.conditions import (
    ConditionMonitor,
    ConditionReport,
    check_iteration_condition,
    check_strong_growth,
    estimate_variance,
)
from src.services.oracles import ExactOracle, GaussianOracle, MinibatchOracle
from src.solvers.accelerated import AcceleratedGradient
from src.solvers.trace import StoppingRule


@pytest.fixture
def weights_k2():
    return next_weight(next_weight(initial_weights(L=10.0, mu=0.0, sigma=1.0, lam=0.5)))


def test_exact_oracle_satisfies_iteration_condition(small_least_squares, weights_k2, rng):
    x_prev, x_k = rng.standard_normal(5), rng.standard_normal(5)
    report = check_iteration_condition(small_least_squares, ExactOracle(small_least_squares), x_k, x_prev, weights_k2)
    assert report.lhs_variance_estimate == 0.0
    assert report.exact
    assert report.satisfied
    assert report.condition == "iteration"
    assert report.k == 2


def test_iteration_condition_rhs(small_least_squares, weights_k2, rng):
    x_prev, x_k = rng.standard_normal(5), rng.standard_normal(5)
    report = check_iteration_condition(small_least_squares, ExactOracle(small_least_squares), x_k, x_prev, weights_k2)
    drift = norm2_sq(small_least_squares.gradient(x_k) - small_least_squares.gradient(x_prev))
    expected = (weights_k2.A_prev / weights_k2.A) * drift / (4.0 * 0.5)
    assert report.rhs_bound == pytest.approx(expected, rel=1e-12)


def test_unchanged_point_has_zero_bound(small_least_squares, weights_k2):
    x = as_vector([0.1, 0.2, 0.3, 0.4, 0.5])
    report = check_iteration_condition(small_least_squares, ExactOracle(small_least_squares), x, x.copy(), weights_k2)
    assert report.rhs_bound == 0.0
    assert report.satisfied


def test_iteration_condition_needs_k_at_least_one(small_least_squares):
    with pytest.raises(ConfigurationError):
        check_iteration_condition(
            small_least_squares, ExactOracle(small_least_squares), zeros(5), zeros(5), initial_weights(1.0, 0.0, 1.0, 1.0)
        )


def test_minibatch_variance_is_enumerated(small_least_squares, rng):
    oracle = MinibatchOracle(small_least_squares, batch_size=2)
    x = rng.standard_normal(5)
    variance, samples = estimate_variance(small_least_squares, oracle, x, num_mc=10)
    assert samples == 0
    grad = small_least_squares.gradient(x)
    manual = np.mean([norm2_sq(e - grad) for _, e in oracle.outcomes(x)])
    assert variance == pytest.approx(manual, rel=1e-12)
    assert variance > 0.0


def test_strong_growth_with_lambda_one(small_least_squares, rng):
    x = rng.standard_normal(5)
    report = check_strong_growth(small_least_squares, ExactOracle(small_least_squares), x, lam=1.0)
    assert report.rhs_bound == 0.0
    assert report.satisfied
    assert report.condition == "strong_growth"

    noisy = check_strong_growth(small_least_squares, GaussianOracle(small_least_squares, 1.0, make_rng(0)), x, lam=1.0)
    assert not noisy.satisfied
    assert noisy.num_mc_samples == 200


@pytest.mark.parametrize("point, satisfied", [([10.0, 10.0], True), ([0.5, 0.5], False)])
def test_strong_growth_with_gaussian_noise(identity_problem, point, satisfied):
    oracle = GaussianOracle(identity_problem, variance=1.0, rng=make_rng(3))
    report = check_strong_growth(identity_problem, oracle, as_vector(point), lam=0.01, num_mc=2000)
    assert report.lhs_variance_estimate == pytest.approx(2.0, rel=0.15)
    assert report.rhs_bound == pytest.approx(0.99 / 1.01 * 2.0 * point[0] ** 2)
    assert report.satisfied is satisfied


def test_checks_leave_the_oracle_stream_alone(identity_problem):
    x = as_vector([1.0, 1.0])
    oracle = GaussianOracle(identity_problem, variance=1.0, rng=make_rng(4))
    check_strong_growth(identity_problem, oracle, x, lam=0.5, num_mc=50)
    fresh = GaussianOracle(identity_problem, variance=1.0, rng=make_rng(4))
    np.testing.assert_array_equal(oracle.query(x).grad_estimate, fresh.query(x).grad_estimate)


def test_check_argument_validation(identity_problem):
    oracle = ExactOracle(identity_problem)
    with pytest.raises(ConfigurationError):
        check_strong_growth(identity_problem, oracle, zeros(2), lam=0.0)
    with pytest.raises(ConfigurationError):
        estimate_variance(identity_problem, oracle, zeros(2), num_mc=0)


def test_report_row():
    report = ConditionReport(k=3, lhs_variance_estimate=1.0, rhs_bound=0.5, num_mc_samples=0)
    row = report.as_row()
    assert row["satisfied"] is False
    assert row["mc_samples"] == "exact"
    assert row["condition"] == "iteration"


def test_monitor_on_exact_run(identity_problem):
    monitor = ConditionMonitor(num_mc=10)
    solver = AcceleratedGradient(
        identity_problem,
        ExactOracle(identity_problem),
        prox=ProxFunction(center=as_vector([1.0, -1.0])),
        mu=0.5,
        monitor=monitor,
    )
    solver.run(StoppingRule(max_iterations=10))
    assert len(monitor.reports) == 20
    assert [r.k for r in monitor.reports[::2]] == list(range(1, 11))
    assert not monitor.violations()


def test_monitor_logs_violations(identity_problem, caplog):
    monitor = ConditionMonitor(num_mc=20)
    solver = AcceleratedGradient(
        identity_problem,
        GaussianOracle(identity_problem, variance=1.0, rng=make_rng(5)),
        mu=0.5,
        monitor=monitor,
    )
    with caplog.at_level(logging.WARNING, logger="src.services.conditions"):
        solver.run(StoppingRule(max_iterations=5))
    assert monitor.violations("strong_growth")
    assert "condition violated" in caplog.text
