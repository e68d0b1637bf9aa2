"""
Experiment Runner

Turns an ExperimentConfig into solver runs:
1. Build the problem and feasible set, and compute (or read) f*
2. Expand the sweep into (λ, ν, seed) cells and validate them all
3. Run the cells on a process pool
4. Merge the per-cell rows in config order, add `_mean` series, write the CSV
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Optional, Union

from src.config.experiment import ExperimentConfig, LambdaValue, ProblemSpec
from src.config.settings import HarnessSettings, get_harness_settings
from src.core.geometry import Box, EuclideanBall, FeasibleSet, ProxFunction, Unconstrained
from src.core.random_streams import make_rng
from src.core.vectors import as_vector, zeros
from src.core.weights import validate_weight_parameters
from src.errors import ConfigurationError
from src.harness.csv_trace import TraceRow, mean_rows, write_trace_csv
from src.harness.reference import ReferenceOptimum, compute_reference_optimum
from src.services.compression import make_codec, strong_growth_lambda
from src.services.conditions import ConditionMonitor, ConditionReport
from src.services.datasets import (
    load_libsvm,
    make_synthetic_categorical,
    make_synthetic_classification,
    normalize_rows,
)
from src.services.federated import FederatedOracle
from src.services.oracles import (
    ExactOracle,
    GaussianOracle,
    MinibatchOracle,
    Oracle,
    SagaOracle,
    saga_lambda_bound,
)
from src.services.problems import Problem, make_logistic, make_random_least_squares
from src.solvers.accelerated import AcceleratedGradient, default_mu
from src.solvers.baselines import run_gradient_descent, run_nesterov83
from src.solvers.trace import StoppingRule, Trace, TraceRecord, TraceSink

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cell:
    """One (λ, ν, seed) run of the sweep."""
    algorithm: str
    lam: float
    variance: float
    seed: int

    @property
    def group(self) -> str:
        return f"{self.algorithm}-lam{self.lam:g}-nu{self.variance:g}"

    @property
    def run_id(self) -> str:
        return f"{self.group}-seed{self.seed}"


@dataclass
class ExperimentResult:
    output: Path
    rows_written: int
    f_star: float
    cells: list[Cell]


def build_problem(spec: ProblemSpec, settings: Optional[HarnessSettings] = None) -> Problem:
    """Random least squares, or logistic regression on a LIBSVM file / synthetic data."""
    settings = settings or get_harness_settings()
    eig = dict(eig_max_iterations=settings.eig_max_iterations, eig_rtol=settings.eig_rtol)

    if spec.kind == "least_squares":
        problem = make_random_least_squares(spec.n, spec.seed, num_components=spec.m, **eig)
    else:
        if spec.path is not None:
            dataset = load_libsvm(spec.path)
        elif spec.synthetic == "categorical":
            dataset = make_synthetic_categorical(spec.synthetic_samples, seed=spec.seed)
        else:
            dataset = make_synthetic_classification(
                spec.synthetic_samples, spec.synthetic_dim, seed=spec.seed
            )
        if spec.normalize:
            dataset = normalize_rows(dataset)
        problem = make_logistic(dataset, spec.reg, spec.m, **eig)

    logger.info("problem %s", problem.describe())
    return problem


def build_feasible_set(spec: ProblemSpec, dim: int) -> FeasibleSet:
    constraint = spec.constraint
    if constraint.kind == "ball":
        center = as_vector(constraint.center, dim) if constraint.center else zeros(dim)
        return EuclideanBall(center, constraint.radius)
    if constraint.kind == "box":
        return Box(as_vector(constraint.lower, dim), as_vector(constraint.upper, dim))
    return Unconstrained(dim)


def build_oracle(config: ExperimentConfig, problem: Problem, seed: int, variance: float) -> Oracle:
    spec = config.oracle
    rng = make_rng(seed)
    if spec.kind == "exact":
        return ExactOracle(problem, rng)
    if spec.kind == "gaussian":
        return GaussianOracle(problem, variance, rng)
    if spec.kind == "minibatch":
        return MinibatchOracle(problem, spec.batch_size, rng)
    if spec.kind == "saga":
        return SagaOracle(problem, spec.batch_size, rng)
    codec = make_codec(spec.codec, keep=spec.keep, levels=spec.levels)
    return FederatedOracle(problem, codec, seed, workers=spec.workers, memory=spec.memory)


def solver_mu(config: ExperimentConfig, problem: Problem) -> float:
    mu = config.solver.mu if config.solver.mu is not None else default_mu(problem)
    if mu > problem.mu:
        raise ConfigurationError(f"solver.mu={mu} exceeds the problem's constant {problem.mu}")
    return mu


def resolve_lambda(config: ExperimentConfig, problem: Problem, value: LambdaValue) -> float:
    """
    Numeric λ for a configured value.

    "auto" means: the SAGA recommendation for SAGA oracles, the codec's
    strong-growth λ for a single compressing client, and 1 otherwise.
    Several compressing clients share no strong-growth constant (their
    noise stays positive where ∇f = 0), so they need an explicit λ.
    """
    if value != "auto":
        return float(value)
    spec = config.oracle
    if spec.kind == "saga":
        bound = saga_lambda_bound(
            problem.num_components, spec.batch_size, problem.L, solver_mu(config, problem)
        )
        return bound.recommended
    if spec.kind == "federated" and spec.codec != "none":
        if problem.num_components > 1 or spec.memory:
            raise ConfigurationError(
                f"no automatic lambda for {problem.num_components} clients compressing with "
                f"{spec.codec!r}{' and shift memory' if spec.memory else ''}; give lambda explicitly"
            )
        codec = make_codec(spec.codec, keep=spec.keep, levels=spec.levels)
        lam = strong_growth_lambda(codec.omega(problem.dim))
        if lam is None:
            raise ConfigurationError(
                f"codec {spec.codec!r} has variance factor >= 1 at dim {problem.dim}; "
                "give lambda explicitly"
            )
        return lam
    return 1.0


def expand_cells(config: ExperimentConfig, problem: Problem) -> list[Cell]:
    """All cells in config order (λ outermost, then ν, then seed), validated."""
    algorithm = config.solver.algorithm
    cells = []
    for value in config.lambdas:
        lam = resolve_lambda(config, problem, value)
        if algorithm == "accel":
            validate_weight_parameters(problem.L, solver_mu(config, problem), config.solver.sigma, lam)
        for variance in config.sweep.variances:
            for seed in config.seeds:
                cells.append(Cell(algorithm=algorithm, lam=lam, variance=variance, seed=seed))

    if config.oracle.kind == "federated":
        make_codec(config.oracle.codec, keep=config.oracle.keep, levels=config.oracle.levels).validate(
            problem.dim
        )
    if algorithm == "nesterov83" and config.problem.constraint.kind != "unconstrained":
        raise ConfigurationError("nesterov83 supports unconstrained problems only")
    return cells


def stopping_rule(config: ExperimentConfig, f_star: float) -> StoppingRule:
    solver = config.solver
    return StoppingRule(
        max_iterations=solver.max_k,
        gap_target=solver.gap_target,
        f_star=f_star if solver.gap_target is not None else None,
        component_budget=solver.budget,
    )


def run_trace(
    config: ExperimentConfig,
    problem: Problem,
    f_star: float,
    cell: Cell,
    sink: Optional[TraceSink] = None,
    keep_records: bool = True,
) -> Trace:
    """Run one cell and return its Trace; records also stream to `sink`."""
    feasible_set = build_feasible_set(config.problem, problem.dim)
    stop = stopping_rule(config, f_star)

    if cell.algorithm == "gd":
        return run_gradient_descent(problem, feasible_set, stop=stop, sink=sink, keep_records=keep_records)
    if cell.algorithm == "nesterov83":
        return run_nesterov83(
            problem, feasible_set=feasible_set, stop=stop, sink=sink, keep_records=keep_records
        )

    monitor = None
    if config.oracle.log_conditions:
        monitor = ConditionMonitor(num_mc=config.oracle.mc_samples)
    solver = AcceleratedGradient(
        problem,
        build_oracle(config, problem, cell.seed, cell.variance),
        feasible_set=feasible_set,
        prox=ProxFunction(center=zeros(problem.dim), sigma=config.solver.sigma),
        lam=cell.lam,
        mu=solver_mu(config, problem),
        monitor=monitor,
    )
    return solver.run(stop, sink=sink, keep_records=keep_records)


def run_cell(config: ExperimentConfig, problem: Problem, f_star: float, cell: Cell) -> list[TraceRow]:
    """Rows k ≥ 1 of one cell's trace, built as the records stream in."""
    rows: list[TraceRow] = []

    def to_row(record: TraceRecord) -> None:
        if record.k >= 1:
            rows.append(
                TraceRow(
                    run_id=cell.run_id,
                    seed=cell.seed,
                    k=record.k,
                    f_gap=record.gap(f_star),
                    A_k=record.A,
                    alpha_k=record.alpha,
                    grad_evals=record.grad_evals,
                    bits=record.bits,
                )
            )

    trace = run_trace(config, problem, f_star, cell, sink=to_row, keep_records=False)
    gap = trace.last.gap(f_star)
    if trace.stop_reason == "weights_saturated" and not trace.exact_oracle:
        logger.warning(
            "%s: stopped early after %d iterations, weights saturated with a noisy oracle (final gap %.3e)",
            cell.run_id,
            trace.iterations,
            gap,
        )
    else:
        logger.info(
            "%s: %d iterations, final gap %.3e, stopped by %s",
            cell.run_id,
            trace.iterations,
            gap,
            trace.stop_reason,
        )
    return rows


def reference_optimum(
    config: ExperimentConfig, problem: Problem, settings: HarnessSettings
) -> ReferenceOptimum:
    return compute_reference_optimum(
        problem,
        build_feasible_set(config.problem, problem.dim),
        prox=ProxFunction(center=zeros(problem.dim), sigma=config.solver.sigma),
        max_iterations=settings.reference_max_iterations,
        window=settings.reference_window,
        rtol=settings.reference_rtol,
    )


def resolve_output(config: ExperimentConfig, settings: HarnessSettings) -> Path:
    """Relative output names land in the settings' output directory."""
    if config.output.is_absolute():
        return config.output
    return settings.output_dir / config.output


def run_experiment(
    config: ExperimentConfig,
    settings: Optional[HarnessSettings] = None,
    output: Optional[Union[str, Path]] = None,
) -> ExperimentResult:
    """
    Run every cell of the sweep and write the CSV trace.

    Args:
        config: Validated ExperimentConfig
        settings: HarnessSettings (work pool size, reference solver)
        output: CSV path overriding the config's output

    Returns:
        ExperimentResult with the output path and row count
    """
    settings = settings or get_harness_settings()
    problem = build_problem(config.problem, settings)
    cells = expand_cells(config, problem)

    if config.problem.f_star is not None:
        f_star = config.problem.f_star
    else:
        f_star = reference_optimum(config, problem, settings).f_star

    worker = partial(run_cell, config, problem, f_star)
    workers = min(settings.workers, len(cells))
    logger.info("running %d cells on %d worker(s)", len(cells), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(worker, cells))
    else:
        per_cell = [worker(cell) for cell in cells]

    rows: list[TraceRow] = []
    groups: dict[str, list[list[TraceRow]]] = {}
    for cell, cell_rows in zip(cells, per_cell):
        groups.setdefault(cell.group, []).append(cell_rows)
    for group, runs in groups.items():
        for run_rows in runs:
            rows.extend(run_rows)
        if config.sweep.seeds > 1:
            rows.extend(mean_rows(group, runs))

    path = Path(output) if output is not None else resolve_output(config, settings)
    written = write_trace_csv(rows, path)
    return ExperimentResult(output=path, rows_written=written, f_star=f_star, cells=cells)


def check_trajectory(
    config: ExperimentConfig,
    iterations: int,
    num_mc: Optional[int] = None,
    settings: Optional[HarnessSettings] = None,
) -> list[ConditionReport]:
    """
    Run the first cell for `iterations` steps and check both variance
    conditions before every oracle query.
    """
    if config.solver.algorithm != "accel":
        raise ConfigurationError("condition checks apply to the accelerated method only")
    settings = settings or get_harness_settings()
    problem = build_problem(config.problem, settings)
    cell = expand_cells(config, problem)[0]

    monitor = ConditionMonitor(num_mc=num_mc or config.oracle.mc_samples)
    solver = AcceleratedGradient(
        problem,
        build_oracle(config, problem, cell.seed, cell.variance),
        feasible_set=build_feasible_set(config.problem, problem.dim),
        prox=ProxFunction(center=zeros(problem.dim), sigma=config.solver.sigma),
        lam=cell.lam,
        mu=solver_mu(config, problem),
        monitor=monitor,
    )
    solver.run(StoppingRule(max_iterations=iterations))
    return monitor.reports
