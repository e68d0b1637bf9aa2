"""Long reproduction runs over the bundled configs (run with `pytest -m slow`)."""

from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from src.config.experiment import ExperimentConfig, load_experiment_config
from src.config.settings import HarnessSettings
from src.core.geometry import EuclideanBall, ProxFunction, Unconstrained
from src.core.random_streams import make_rng
from src.core.vectors import zeros
from src.harness.csv_trace import read_trace_csv
from src.harness.reference import compute_reference_optimum
from src.harness.runner import run_experiment
from src.services.datasets import make_synthetic_classification
from src.services.oracles import ExactOracle
from src.services.problems import make_least_squares, make_logistic
from src.solvers.accelerated import run_accelerated
from src.solvers.trace import StoppingRule

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def settings(tmp_path):
    return HarnessSettings(output_dir=tmp_path)


def load(name: str) -> ExperimentConfig:
    return load_experiment_config(CONFIGS / f"{name}.json")


def run_rows(name, settings, **updates):
    config = load(name)
    if updates:
        config = ExperimentConfig.model_validate({**config.model_dump(by_alias=True), **updates})
    return read_trace_csv(run_experiment(config, settings).output)


def mean_at(rows, k):
    """Mean f_gap per group at iteration k, keyed by run-id prefix."""
    by_group = defaultdict(list)
    for row in rows:
        if row.k == k and not row.is_mean:
            by_group[row.run_id.rsplit("-seed", 1)[0]].append(row.f_gap)
    return {group: float(np.mean(gaps)) for group, gaps in by_group.items()}


def final_rows(rows):
    last = {}
    for row in rows:
        if not row.is_mean:
            last[row.run_id] = row
    return list(last.values())


def test_certificate_on_random_problems():
    for index in range(20):
        rng = make_rng(1000 + index)
        if index % 2 == 0:
            problem = make_least_squares(rng.standard_normal((12, 6)), rng.standard_normal(12))
        else:
            data = make_synthetic_classification(n_samples=30, dim=6, seed=index)
            problem = make_logistic(data, reg=0.1, num_components=1)
        dim = problem.dim
        feasible_set = EuclideanBall(zeros(dim), 0.5) if index % 4 < 2 else Unconstrained(dim)
        prox = ProxFunction(center=zeros(dim))
        reference = compute_reference_optimum(problem, feasible_set, prox=prox)
        phi_star = prox.value(reference.y_star)

        trace = run_accelerated(
            problem, ExactOracle(problem), feasible_set, prox, lam=1.0, stop=StoppingRule(max_iterations=5000)
        )
        for record in trace.records[1:]:
            bound = phi_star / record.A
            assert record.gap(reference.f_star) <= bound + 1e-9 * (1.0 + bound)


def test_exact_least_squares_ordering(settings):
    k = 10_000
    accel = mean_at(run_rows("ls_exact_accel", settings), k)
    nesterov = mean_at(run_rows("ls_exact_nesterov83", settings), k)
    gd = mean_at(run_rows("ls_exact_gd", settings), k)

    accel_gap = accel["accel-lam1-nu0"]
    assert accel_gap <= 1e-9
    assert accel_gap <= nesterov["nesterov83-lam1-nu0"] <= gd["gd-lam1-nu0"]


def test_noisy_least_squares_lambda_ordering(settings):
    gaps = mean_at(run_rows("ls_noisy_lambda_sweep", settings), 10_000)
    assert gaps["accel-lam0.01-nu1"] < gaps["accel-lam0.1-nu1"] < gaps["accel-lam1-nu1"]
    assert gaps["accel-lam0.01-nu0.5"] < gaps["accel-lam0.01-nu1"]


def test_saga_needs_fewer_component_gradients(settings):
    saga = final_rows(run_rows("logistic_saga", settings))
    full = final_rows(run_rows("logistic_full_gradient", settings))
    assert all(row.f_gap <= 1e-4 for row in saga + full)
    saga_evals = max(row.grad_evals for row in saga)
    assert saga_evals < min(row.grad_evals for row in full)

    minibatch = final_rows(
        run_rows(
            "logistic_full_gradient",
            settings,
            oracle={"kind": "minibatch", "batch_size": 100},
            solver={"algorithm": "accel", "lambda": 1.0, "budget": saga_evals},
        )
    )
    assert all(row.f_gap > 1e-4 for row in minibatch)


def test_compressed_clients_trade_iterations_for_bits(settings):
    compressed = final_rows(run_rows("logistic_federated_dither", settings))
    plain = final_rows(run_rows("logistic_federated_none", settings))
    assert all(row.f_gap <= 1e-6 for row in compressed + plain)
    (baseline,) = plain
    for row in compressed:
        assert row.k > baseline.k
        assert row.bits < baseline.bits
