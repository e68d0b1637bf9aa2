import logging
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.config.experiment import ExperimentConfig, load_experiment_config
from src.config.settings import HarnessSettings
from src.errors import ConfigurationError
from src.harness.csv_trace import HEADER, read_trace_csv
from src.harness.runner import (
    Cell,
    build_problem,
    check_trajectory,
    expand_cells,
    resolve_lambda,
    resolve_output,
    run_cell,
    run_experiment,
    run_trace,
)
from src.services.compression import strong_growth_lambda
from src.services.datasets import CATEGORICAL_CARDINALITIES
from src.services.oracles import saga_lambda_bound
from src.solvers.accelerated import default_mu

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def logistic_document(**sections):
    document = {
        "name": "tiny",
        "problem": {
            "kind": "logistic",
            "synthetic_samples": 40,
            "synthetic_dim": 4,
            "m": 4,
            "reg": 0.5,
            "seed": 3,
        },
        "oracle": {"kind": "exact"},
        "solver": {"lambda": 1.0, "max_k": 10},
        "output": "trace.csv",
    }
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(document.get(key), dict):
            document[key] = {**document[key], **value}
        else:
            document[key] = value
    return document


def config_of(**sections) -> ExperimentConfig:
    return ExperimentConfig.model_validate(logistic_document(**sections))


@pytest.fixture
def settings(tmp_path):
    return HarnessSettings(workers=1, output_dir=tmp_path / "out")


@pytest.mark.parametrize(
    "sections",
    [
        {"solver": {"lambda": 0.0}},
        {"solver": {"lambda": 1.5}},
        {"solver": {"lambda": 1.0, "max_k": None}},
        {"oracle": {"kind": "exact"}, "sweep": {"variances": [0.5]}},
        {"oracle": {"kind": "saga"}},
        {"oracle": {"kind": "minibatch", "batch_size": 5}},
        {"oracle": {"kind": "exact", "codec": "dither", "levels": 2}},
        {"oracle": {"kind": "federated", "codec": "sparsify"}},
        {"sweep": {"lambdas": []}},
        {"sweep": {"variances": [-1.0]}},
        {"unknown": 1},
    ],
)
def test_invalid_configs_are_rejected(sections):
    with pytest.raises(ValidationError):
        config_of(**sections)


def test_load_config_errors(tmp_path, write_config):
    with pytest.raises(ConfigurationError):
        load_experiment_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_experiment_config(broken)
    with pytest.raises(ConfigurationError):
        load_experiment_config(write_config(logistic_document(solver={"lambda": 2.0})))


def test_data_path_is_resolved_against_the_config_directory(tmp_path, write_config):
    (tmp_path / "data.svm").write_text("+1 1:0.5 2:1\n-1 1:-0.3 2:0.2\n", encoding="utf-8")
    path = write_config(logistic_document(problem={"path": "data.svm", "m": 2}))
    config = load_experiment_config(path)
    assert config.problem.path == tmp_path / "data.svm"


def test_cell_identifiers():
    cell = Cell(algorithm="accel", lam=0.25, variance=0.5, seed=3)
    assert cell.group == "accel-lam0.25-nu0.5"
    assert cell.run_id == "accel-lam0.25-nu0.5-seed3"


def test_single_seed_run_writes_one_row_per_iteration(settings):
    config = config_of(problem={"f_star": 0.0})
    result = run_experiment(config, settings)

    assert result.output == settings.output_dir / "trace.csv"
    assert result.rows_written == 10
    assert result.output.read_text(encoding="utf-8").splitlines()[0] == ",".join(HEADER)
    rows = read_trace_csv(result.output)
    assert [row.k for row in rows] == list(range(1, 11))
    assert {row.run_id for row in rows} == {"accel-lam1-nu0-seed0"}
    assert not any(row.is_mean for row in rows)
    assert [row.grad_evals for row in rows] == [4 * k for k in range(1, 11)]
    for before, after in zip(rows, rows[1:]):
        assert after.A_k > before.A_k


def test_gaps_are_nonnegative_against_the_reference(settings):
    result = run_experiment(config_of(), settings)
    assert result.f_star > 0.0
    for row in read_trace_csv(result.output):
        assert row.f_gap >= -1e-12


def test_several_seeds_add_a_mean_series(settings):
    config = config_of(
        problem={"f_star": 0.0},
        oracle={"kind": "gaussian"},
        sweep={"seeds": 3, "variances": [0.5]},
    )
    result = run_experiment(config, settings)
    assert result.rows_written == 40
    assert [cell.seed for cell in result.cells] == [0, 1, 2]

    rows = read_trace_csv(result.output)
    means = [row for row in rows if row.is_mean]
    assert {row.run_id for row in means} == {"accel-lam1-nu0.5_mean"}
    assert [row.k for row in means] == list(range(1, 11))
    last = [row for row in rows if row.k == 10 and not row.is_mean]
    assert len(last) == 3
    assert means[-1].f_gap == pytest.approx(sum(row.f_gap for row in last) / 3, rel=1e-12)


@pytest.mark.parametrize("algorithm", ["accel", "gd", "nesterov83"])
def test_cell_rows_stream_from_the_solver(settings, algorithm):
    oracle = {"kind": "gaussian" if algorithm == "accel" else "exact"}
    config = config_of(problem={"f_star": 0.0}, oracle=oracle, solver={"algorithm": algorithm})
    problem = build_problem(config.problem, settings)
    cell = Cell(algorithm=algorithm, lam=1.0, variance=0.5 if algorithm == "accel" else 0.0, seed=1)

    rows = run_cell(config, problem, 0.0, cell)
    full = run_trace(config, problem, 0.0, cell)
    assert [row.k for row in rows] == list(range(1, 11))
    for row, record in zip(rows, full.records[1:]):
        assert (row.k, row.f_gap, row.A_k, row.alpha_k, row.grad_evals, row.bits) == (
            record.k,
            record.f_value,
            record.A,
            record.alpha,
            record.grad_evals,
            record.bits,
        )

    lean = run_trace(config, problem, 0.0, cell, keep_records=False)
    assert len(lean) == 1
    assert lean.last.same_values(full.last)


def test_noisy_saturation_is_a_warning(settings, caplog):
    config = config_of(
        problem={"f_star": 0.0},
        oracle={"kind": "gaussian"},
        solver={"lambda": 1.0, "max_k": 5000},
        sweep={"variances": [0.01]},
    )
    with caplog.at_level(logging.INFO, logger="src.harness.runner"):
        rows = read_trace_csv(run_experiment(config, settings).output)
    assert rows[-1].k < 5000

    messages = [r for r in caplog.records if r.name == "src.harness.runner" and "stopped early" in r.getMessage()]
    (warning,) = messages
    assert warning.levelno == logging.WARNING
    assert f"final gap {rows[-1].f_gap:.3e}" in warning.getMessage()


def test_normal_stops_are_logged_at_info(settings, caplog):
    with caplog.at_level(logging.INFO, logger="src.harness.runner"):
        run_experiment(config_of(problem={"f_star": 0.0}), settings)
    (line,) = [r for r in caplog.records if "stopped by" in r.getMessage()]
    assert line.levelno == logging.INFO
    assert "stopped by max_iterations" in line.getMessage()


def test_reruns_are_byte_identical(settings, tmp_path):
    config = config_of(problem={"f_star": 0.0}, oracle={"kind": "gaussian"}, sweep={"seeds": 2, "variances": [0.1, 1.0]})
    first = run_experiment(config, settings, output=tmp_path / "first.csv")
    second = run_experiment(config, settings, output=tmp_path / "second.csv")
    assert first.output.read_bytes() == second.output.read_bytes()


def test_process_pool_matches_serial_run(tmp_path):
    config = config_of(problem={"f_star": 0.0}, oracle={"kind": "gaussian"}, sweep={"seeds": 2, "variances": [0.1, 1.0]})
    serial = run_experiment(config, HarnessSettings(workers=1), output=tmp_path / "serial.csv")
    pooled = run_experiment(config, HarnessSettings(workers=2), output=tmp_path / "pooled.csv")
    assert serial.output.read_bytes() == pooled.output.read_bytes()


def test_lambda_sweep_orders_cells(settings):
    config = config_of(problem={"f_star": 0.0}, sweep={"lambdas": [1.0, 0.5], "seeds": 2})
    problem = build_problem(config.problem, settings)
    cells = expand_cells(config, problem)
    assert [(cell.lam, cell.seed) for cell in cells] == [(1.0, 0), (1.0, 1), (0.5, 0), (0.5, 1)]


def test_auto_lambda_for_saga(settings):
    config = config_of(oracle={"kind": "saga", "batch_size": 2}, solver={"lambda": "auto"})
    problem = build_problem(config.problem, settings)
    expected = saga_lambda_bound(4, 2, problem.L, default_mu(problem)).recommended
    assert resolve_lambda(config, problem, "auto") == expected
    assert 0.0 < expected <= 1.0 / 5


def test_auto_lambda_for_codecs(settings):
    natural = config_of(
        problem={"m": 1}, oracle={"kind": "federated", "codec": "natural"}, solver={"lambda": "auto"}
    )
    single = build_problem(natural.problem, settings)
    assert resolve_lambda(natural, single, "auto") == pytest.approx(strong_growth_lambda(0.125))

    wide = config_of(
        problem={"m": 1}, oracle={"kind": "federated", "codec": "dither", "levels": 2}, solver={"lambda": "auto"}
    )
    with pytest.raises(ConfigurationError):
        resolve_lambda(wide, single, "auto")

    assert resolve_lambda(config_of(solver={"lambda": "auto"}), single, "auto") == 1.0
    assert resolve_lambda(natural, single, 0.3) == 0.3


@pytest.mark.parametrize("m, memory", [(4, False), (1, True), (4, True)])
def test_auto_lambda_needs_a_single_plain_client(settings, m, memory):
    config = config_of(
        problem={"m": m},
        oracle={"kind": "federated", "codec": "natural", "memory": memory},
        solver={"lambda": "auto"},
    )
    problem = build_problem(config.problem, settings)
    with pytest.raises(ConfigurationError, match="give lambda explicitly"):
        resolve_lambda(config, problem, "auto")
    assert resolve_lambda(config, problem, 0.5) == 0.5


def test_shift_memory_needs_the_federated_oracle():
    with pytest.raises(ValidationError):
        config_of(oracle={"kind": "exact", "memory": True})


def test_federated_bits_in_trace(settings):
    config = config_of(problem={"f_star": 0.0}, oracle={"kind": "federated", "codec": "natural"}, solver={"lambda": 0.5})
    rows = read_trace_csv(run_experiment(config, settings).output)
    assert [row.bits for row in rows] == [4 * 9 * 4 * row.k for row in rows]


def test_shift_memory_meters_the_first_round(settings):
    config = config_of(
        problem={"f_star": 0.0},
        oracle={"kind": "federated", "codec": "natural", "memory": True},
        solver={"lambda": 0.5},
    )
    rows = read_trace_csv(run_experiment(config, settings).output)
    assert [row.grad_evals for row in rows] == [4 + 4 * row.k for row in rows]
    assert [row.bits for row in rows] == [32 * 4 * 4 + 4 * 9 * 4 * row.k for row in rows]


def test_saga_trace_counts_the_initial_pass(settings):
    config = config_of(problem={"f_star": 0.0}, oracle={"kind": "saga", "batch_size": 2}, solver={"lambda": "auto"})
    rows = read_trace_csv(run_experiment(config, settings).output)
    assert [row.grad_evals for row in rows] == [4 + 2 * row.k for row in rows]


def test_component_budget_stops_the_run(settings):
    config = config_of(problem={"f_star": 0.0}, solver={"lambda": 1.0, "max_k": None, "budget": 20})
    rows = read_trace_csv(run_experiment(config, settings).output)
    assert rows[-1].k == 5
    assert rows[-1].grad_evals == 20


@pytest.mark.parametrize("algorithm", ["gd", "nesterov83"])
def test_baseline_algorithms_run(settings, algorithm):
    config = config_of(problem={"f_star": 0.0}, solver={"algorithm": algorithm, "max_k": 8})
    result = run_experiment(config, settings)
    rows = read_trace_csv(result.output)
    assert len(rows) == 8
    assert rows[0].run_id.startswith(f"{algorithm}-")


def test_nesterov83_rejects_constraints(settings):
    config = config_of(
        problem={"f_star": 0.0, "constraint": {"kind": "ball", "radius": 1.0}},
        solver={"algorithm": "nesterov83"},
    )
    with pytest.raises(ConfigurationError):
        run_experiment(config, settings)


def test_codec_wider_than_the_problem_is_rejected(settings):
    config = config_of(problem={"f_star": 0.0}, oracle={"kind": "federated", "codec": "sparsify", "keep": 5})
    with pytest.raises(ConfigurationError):
        run_experiment(config, settings)


def test_solver_mu_above_problem_mu_is_rejected(settings):
    config = config_of(problem={"f_star": 0.0}, solver={"lambda": 1.0, "mu": 100.0})
    with pytest.raises(ConfigurationError):
        run_experiment(config, settings)


def test_constrained_run_stays_in_box(settings):
    config = config_of(
        problem={"f_star": 0.0, "constraint": {"kind": "box", "lower": [-0.1] * 4, "upper": [0.1] * 4}}
    )
    assert run_experiment(config, settings).rows_written == 10


def test_output_resolution(settings, tmp_path):
    assert resolve_output(config_of(output="a/b.csv"), settings) == settings.output_dir / "a" / "b.csv"
    absolute = tmp_path / "abs.csv"
    assert resolve_output(config_of(output=str(absolute)), settings) == absolute


def test_default_settings_come_from_the_environment(tmp_path):
    result = run_experiment(config_of(problem={"f_star": 0.0}))
    assert result.output == tmp_path / "results" / "trace.csv"
    assert result.output.exists()


def test_check_trajectory_reports_both_conditions(settings):
    reports = check_trajectory(config_of(), iterations=5, settings=settings)
    assert len(reports) == 10
    assert {r.condition for r in reports} == {"iteration", "strong_growth"}
    assert all(r.satisfied for r in reports)


def test_check_trajectory_needs_the_accelerated_method(settings):
    with pytest.raises(ConfigurationError):
        check_trajectory(config_of(solver={"algorithm": "gd"}), iterations=3, settings=settings)


def test_categorical_synthetic_problem(settings):
    spec = config_of(problem={"synthetic": "categorical", "synthetic_samples": 200, "m": 200}).problem
    problem = build_problem(spec, settings)
    assert problem.dim == sum(CATEGORICAL_CARDINALITIES)
    assert problem.num_components == 200
    assert problem.L / problem.mu > 100.0


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda path: path.stem)
def test_bundled_configs_load(path):
    config = load_experiment_config(path)
    if config.oracle.kind == "saga":
        assert config.problem.synthetic == "categorical"
        assert config.solver.lam != "auto"
    if config.oracle.kind == "federated" and config.oracle.codec != "none":
        assert config.oracle.memory
