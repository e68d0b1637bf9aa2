"""
Full-gradient baselines: projected gradient descent and Nesterov's 1983 method.

Both use the exact gradient with step 1/L. Their traces use the same
columns as the accelerated method; A_k is the weight each method's rate is
stated in (k/L for gradient descent, t_k²/L for Nesterov's method).
"""

import logging
import math
from typing import Optional

from src.core.geometry import FeasibleSet, Unconstrained
from src.core.vectors import DenseVec, require_finite, zeros
from src.errors import ConfigurationError
from src.services.oracles import uncompressed_bits
from src.services.problems import Problem
from src.solvers.trace import StoppingRule, Trace, TraceRecord, TraceSink

logger = logging.getLogger(__name__)


def _start(problem: Problem, feasible_set: FeasibleSet, x0: Optional[DenseVec]) -> DenseVec:
    start = zeros(problem.dim) if x0 is None else x0
    return feasible_set.project(start)


def _stop_rule(steps: int, stop: Optional[StoppingRule]) -> StoppingRule:
    return stop if stop is not None else StoppingRule(max_iterations=steps)


def run_gradient_descent(
    problem: Problem,
    feasible_set: Optional[FeasibleSet] = None,
    steps: int = 0,
    x0: Optional[DenseVec] = None,
    stop: Optional[StoppingRule] = None,
    sink: Optional[TraceSink] = None,
    keep_records: bool = True,
) -> Trace:
    """
    x_{k+1} = Π_C(x_k − ∇f(x_k)/L).

    Args:
        problem: Objective
        feasible_set: C (unconstrained by default)
        steps: Iteration count, used when no stopping rule is given
        x0: Starting point (projected onto C); the origin by default
        stop: Optional StoppingRule replacing `steps`
        sink: Receives every record as it is produced
        keep_records: Store all records on the Trace (else only the last)
    """
    feasible_set = feasible_set or Unconstrained(problem.dim)
    rule = _stop_rule(steps, stop)
    m = problem.num_components
    per_step_bits = uncompressed_bits(problem.dim, m)

    x = _start(problem, feasible_set, x0)
    trace = Trace()
    record = TraceRecord(k=0, f_value=problem.value(x), A=0.0, alpha=0.0, grad_evals=0, bits=0)
    trace.push(record, sink, keep_records)

    k = 0
    reason = rule.reason(record)
    while reason is None:
        k += 1
        grad = problem.gradient(x)
        x = require_finite(feasible_set.project(x - grad / problem.L), "x", iteration=k)
        record = TraceRecord(
            k=k,
            f_value=problem.value(x),
            A=k / problem.L,
            alpha=1.0 / problem.L,
            grad_evals=k * m,
            bits=k * per_step_bits,
        )
        trace.push(record, sink, keep_records)
        reason = rule.reason(record)

    trace.stop_reason = reason
    trace.final = x
    return trace


def run_nesterov83(
    problem: Problem,
    steps: int = 0,
    x0: Optional[DenseVec] = None,
    feasible_set: Optional[FeasibleSet] = None,
    stop: Optional[StoppingRule] = None,
    sink: Optional[TraceSink] = None,
    keep_records: bool = True,
) -> Trace:
    """
    y_k = x_k − ∇f(x_k)/L
    x_{k+1} = y_k + ((t_k − 1)/t_{k+1})(y_k − y_{k−1}),  t_{k+1} = (1 + √(1 + 4t_k²))/2, t_0 = 1

    Raises:
        ConfigurationError: If a constrained set is given
    """
    if feasible_set is not None and not feasible_set.is_unconstrained:
        raise ConfigurationError("nesterov83 supports unconstrained problems only")
    rule = _stop_rule(steps, stop)
    m = problem.num_components
    per_step_bits = uncompressed_bits(problem.dim, m)

    x = zeros(problem.dim) if x0 is None else x0.copy()
    y_prev = x.copy()
    t = 1.0
    trace = Trace()
    record = TraceRecord(k=0, f_value=problem.value(x), A=0.0, alpha=0.0, grad_evals=0, bits=0)
    trace.push(record, sink, keep_records)

    k = 0
    A_prev = 0.0
    reason = rule.reason(record)
    while reason is None:
        k += 1
        y = x - problem.gradient(x) / problem.L
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        x = require_finite(y + ((t - 1.0) / t_next) * (y - y_prev), "x", iteration=k)

        A = t * t / problem.L
        record = TraceRecord(
            k=k,
            f_value=problem.value(y),
            A=A,
            alpha=A - A_prev,
            grad_evals=k * m,
            bits=k * per_step_bits,
        )
        trace.push(record, sink, keep_records)
        y_prev, t, A_prev = y, t_next, A
        reason = rule.reason(record)

    trace.stop_reason = reason
    trace.final = y_prev
    return trace
