"""
Accelerated method with stochastic first-order information.

Each iteration advances the weights, picks the search point x_k from
y_{k−1} and v_{k−1}, queries the oracle at x_k, accumulates the weighted
gradient into the dual sum s_k, maximizes the dual-averaging model to get
v_k, and takes y_k = (A_{k−1}/A_k)·y_{k−1} + (α_k/A_k)·v_k.

With an exact oracle, f(y_k) − f* ≤ φ(y*)/A_k at every k.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from src.core.geometry import (
    FeasibleSet,
    ProxAccumulator,
    ProxFunction,
    Unconstrained,
    solve_v,
)
from src.core.vectors import DenseVec, require_finite, zeros
from src.core.weights import WeightState, initial_weights, next_weight, validate_weight_parameters
from src.errors import ConfigurationError, NumericalError
from src.services.oracles import Oracle
from src.services.problems import Problem
from src.solvers.trace import StoppingRule, Trace, TraceRecord, TraceSink

logger = logging.getLogger(__name__)

WEIGHT_SATURATION = 1e100
COEFFICIENT_TOL = 1e-12
COINCIDING_RTOL = 1e-8

Monitor = Callable[[int, DenseVec, DenseVec, WeightState, Oracle], object]


@dataclass(frozen=True)
class SolverState:
    """Iterates and counters after k steps."""
    k: int
    weights: WeightState
    x: DenseVec
    y: DenseVec
    v: DenseVec
    s: DenseVec
    prox_acc: ProxAccumulator
    grad_evals: int = 0
    bits: int = 0
    noise_bound: float = 0.0
    g: Optional[DenseVec] = None


def default_mu(problem: Problem) -> float:
    """
    Strong-convexity constant handed to the weight recursion.

    The recursion needs L > μ; when the estimates coincide up to
    COINCIDING_RTOL (e.g. a multiple of the identity) half of μ is used,
    which is still a valid constant.
    """
    if problem.L - problem.mu > COINCIDING_RTOL * problem.L:
        return problem.mu
    return 0.5 * problem.mu


def select_x(weights: WeightState, y_prev: DenseVec, v_prev: DenseVec) -> DenseVec:
    """
    x_k = [(μA_k+σ)A_{k−1}·y_{k−1} + (μA_{k−1}+σ)α_k·v_{k−1}] / [μ(A_k−α_k)(A_k+α_k) + σA_k]

    For μ = 0 this is Nesterov's (A_{k−1}/A_k)y_{k−1} + (α_k/A_k)v_{k−1}; at
    k = 1 it returns v_0.
    """
    if weights.k < 1:
        raise ValueError("select_x needs weights advanced to k >= 1")
    mu, sigma = weights.mu, weights.sigma
    A, A_prev, alpha = weights.A, weights.A_prev, weights.alpha

    denom = mu * A_prev * (A + alpha) + sigma * A
    if not denom > 0.0:
        raise NumericalError("search-point denominator is not positive", iteration=weights.k)
    c_y = (mu * A + sigma) * A_prev / denom
    c_v = (mu * A_prev + sigma) * alpha / denom
    if abs(c_y + c_v - 1.0) > COEFFICIENT_TOL:
        raise NumericalError(
            f"search-point coefficients sum to {c_y + c_v!r}", iteration=weights.k
        )
    return c_y * y_prev + c_v * v_prev


class AcceleratedGradient:
    """
    Runs the accelerated method for one problem, oracle and feasible set.

    Args:
        problem: Objective with constants L and μ
        oracle: Gradient oracle owned by this run
        feasible_set: Closed convex set (unconstrained by default)
        prox: φ(u) = (σ/2)‖u − c‖²; centered at the origin by default
        lam: Robustness parameter λ ∈ (0, 1]
        mu: Strong-convexity constant to use, at most problem.mu
        record_iterates: Keep x, y, v and g on every trace record
        monitor: Called as monitor(k, x_k, x_{k−1}, weights, oracle) before each query
    """

    def __init__(
        self,
        problem: Problem,
        oracle: Oracle,
        feasible_set: Optional[FeasibleSet] = None,
        prox: Optional[ProxFunction] = None,
        lam: float = 1.0,
        mu: Optional[float] = None,
        record_iterates: bool = False,
        monitor: Optional[Monitor] = None,
    ):
        self.problem = problem
        self.oracle = oracle
        self.feasible_set = feasible_set or Unconstrained(problem.dim)
        self.prox = prox or ProxFunction(center=zeros(problem.dim))
        if self.feasible_set.dim != problem.dim or self.prox.dim != problem.dim:
            raise ConfigurationError("problem, feasible set and prox center must share a dimension")

        self.mu = problem.mu if mu is None else float(mu)
        if self.mu > problem.mu:
            raise ConfigurationError(
                f"mu override {self.mu} exceeds the problem's constant {problem.mu}"
            )
        validate_weight_parameters(problem.L, self.mu, self.prox.sigma, lam)
        self.lam = float(lam)
        self.record_iterates = record_iterates
        self.monitor = monitor

    def initial_state(self) -> SolverState:
        """y₀ = v₀ = argmin_C φ; SAGA-type oracles are initialized there."""
        v0 = self.prox.minimizer(self.feasible_set)
        setup = self.oracle.initialize(v0)
        return SolverState(
            k=0,
            weights=initial_weights(self.problem.L, self.mu, self.prox.sigma, self.lam),
            x=v0.copy(),
            y=v0.copy(),
            v=v0,
            s=zeros(self.problem.dim),
            prox_acc=ProxAccumulator.empty(self.problem.dim, self.mu),
            grad_evals=setup.component_evals if setup else 0,
            bits=setup.bits if setup else 0,
        )

    def select_x(self, state: SolverState, weights: WeightState) -> DenseVec:
        return select_x(weights, state.y, state.v)

    def step(self, state: SolverState) -> SolverState:
        """One iteration; raises NumericalError on non-finite values."""
        weights = next_weight(state.weights)
        k, alpha, A = weights.k, weights.alpha, weights.A

        x = self.select_x(state, weights)
        if self.monitor is not None:
            self.monitor(k, x, state.x, weights, self.oracle)

        output = self.oracle.query(x)
        g = require_finite(output.grad_estimate, "gradient estimate", iteration=k)

        s = state.s - alpha * g
        acc = state.prox_acc.add(alpha, x)
        v = solve_v(s, self.prox, acc, self.feasible_set)
        y = (weights.A_prev / A) * state.y + (alpha / A) * v
        require_finite(y, "y", iteration=k)

        noise_bound = state.noise_bound
        if output.noise_variance is not None:
            noise_bound += self.lam / self.problem.L * A * output.noise_variance

        return replace(
            state,
            k=k,
            weights=weights,
            x=x,
            y=y,
            v=v,
            s=s,
            prox_acc=acc,
            grad_evals=state.grad_evals + output.component_evals,
            bits=state.bits + output.bits,
            noise_bound=noise_bound,
            g=g,
        )

    def record(self, state: SolverState) -> TraceRecord:
        f_value = self.problem.value(state.y)
        if not np.isfinite(f_value):
            raise NumericalError("objective value is not finite", iteration=state.k)
        keep = self.record_iterates
        return TraceRecord(
            k=state.k,
            f_value=f_value,
            A=state.weights.A,
            alpha=state.weights.alpha,
            grad_evals=state.grad_evals,
            bits=state.bits,
            noise_bound=state.noise_bound,
            x=state.x if keep else None,
            y=state.y if keep else None,
            v=state.v if keep else None,
            g=state.g if keep else None,
        )

    def run(
        self,
        stop: StoppingRule,
        sink: Optional[TraceSink] = None,
        keep_records: bool = True,
    ) -> Trace:
        """
        Iterate until the stopping rule fires or the weights saturate.

        Args:
            stop: StoppingRule
            sink: Receives every record as it is produced
            keep_records: Store all records on the Trace (else only the last)

        Returns:
            Trace; `final` holds the last SolverState
        """
        trace = Trace()
        state = self.initial_state()

        record = self.record(state)
        trace.push(record, sink, keep_records)
        reason = stop.reason(record)
        while reason is None:
            state = self.step(state)
            record = self.record(state)
            trace.push(record, sink, keep_records)
            logger.debug("k=%d f=%.6e A=%.3e", state.k, record.f_value, state.weights.A)
            reason = stop.reason(record)
            if reason is None and state.weights.A > WEIGHT_SATURATION:
                reason = "weights_saturated"
                if not self.oracle.exact:
                    self._warn_saturated(state, record, stop)

        trace.stop_reason = reason
        trace.final = state
        trace.exact_oracle = self.oracle.exact
        logger.debug("stopped at k=%d (%s)", state.k, reason)
        return trace

    def _warn_saturated(self, state: SolverState, record: TraceRecord, stop: StoppingRule) -> None:
        # A_k no longer certifies anything once the estimates are noisy
        gap = "" if stop.f_star is None else f", gap {record.gap(stop.f_star):.3e}"
        logger.warning(
            "weights saturated at k=%d (A=%.3e) with a stochastic %s oracle: f(y)=%.6e%s",
            state.k,
            state.weights.A,
            self.oracle.name,
            record.f_value,
            gap,
        )


def run_accelerated(
    problem: Problem,
    oracle: Oracle,
    feasible_set: Optional[FeasibleSet],
    prox: Optional[ProxFunction],
    lam: float,
    stop: StoppingRule,
    mu: Optional[float] = None,
    monitor: Optional[Monitor] = None,
    record_iterates: bool = False,
    sink: Optional[TraceSink] = None,
) -> Trace:
    """Functional form of AcceleratedGradient(...).run(stop)."""
    solver = AcceleratedGradient(
        problem,
        oracle,
        feasible_set=feasible_set,
        prox=prox,
        lam=lam,
        mu=mu,
        record_iterates=record_iterates,
        monitor=monitor,
    )
    return solver.run(stop, sink=sink)
