"""
Per-iteration traces and stopping rules shared by all solvers.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from src.core.vectors import DenseVec
from src.errors import ConfigurationError


@dataclass(frozen=True)
class TraceRecord:
    """Diagnostics of one iteration (k = 0 is the starting point)."""
    k: int
    f_value: float
    A: float
    alpha: float
    grad_evals: int
    bits: int
    noise_bound: float = 0.0
    x: Optional[DenseVec] = None
    y: Optional[DenseVec] = None
    v: Optional[DenseVec] = None
    g: Optional[DenseVec] = None

    def gap(self, f_star: float) -> float:
        return self.f_value - f_star

    def same_values(self, other: "TraceRecord") -> bool:
        """Equality of the scalar columns (iterates are ignored)."""
        return (
            self.k == other.k
            and self.f_value == other.f_value
            and self.A == other.A
            and self.alpha == other.alpha
            and self.grad_evals == other.grad_evals
            and self.bits == other.bits
        )


TraceSink = Callable[[TraceRecord], None]


@dataclass
class Trace:
    """Append-only list of records plus why the run stopped."""
    records: list[TraceRecord] = field(default_factory=list)
    stop_reason: str = ""
    final: Any = None
    exact_oracle: bool = True

    def append(self, record: TraceRecord) -> None:
        if self.records and record.k <= self.records[-1].k:
            raise ValueError("trace iterations must strictly increase")
        self.records.append(record)

    def push(self, record: TraceRecord, sink: Optional[TraceSink] = None, keep: bool = True) -> None:
        """Hand a record to the sink, then keep it (or only the latest one)."""
        if sink is not None:
            sink(record)
        if keep:
            self.append(record)
        else:
            self.records[:] = [record]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def last(self) -> TraceRecord:
        return self.records[-1]

    @property
    def iterations(self) -> int:
        return self.last.k if self.records else 0

    def f_values(self) -> list[float]:
        return [r.f_value for r in self.records]

    def gaps(self, f_star: float) -> list[float]:
        return [r.gap(f_star) for r in self.records]

    def same_values(self, other: "Trace") -> bool:
        return len(self) == len(other) and all(
            a.same_values(b) for a, b in zip(self.records, other.records)
        )


@dataclass(frozen=True)
class StoppingRule:
    """
    Stop on the first of: an iteration count, a target gap f(y_k) − f* ≤
    gap_target (needs f_star), or a cumulative component-gradient budget.
    """
    max_iterations: Optional[int] = None
    gap_target: Optional[float] = None
    f_star: Optional[float] = None
    component_budget: Optional[int] = None

    def __post_init__(self) -> None:
        if self.max_iterations is None and self.gap_target is None and self.component_budget is None:
            raise ConfigurationError("a stopping rule needs max_iterations, gap_target or a budget")
        if self.gap_target is not None and self.f_star is None:
            raise ConfigurationError("gap_target needs a reference f_star")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be nonnegative")

    def reason(self, record: TraceRecord) -> Optional[str]:
        """Why to stop after `record`, or None to continue."""
        if self.gap_target is not None and record.gap(self.f_star) <= self.gap_target:
            return "gap_target"
        if self.component_budget is not None and record.grad_evals >= self.component_budget:
            return "budget"
        if self.max_iterations is not None and record.k >= self.max_iterations:
            return "max_iterations"
        return None
