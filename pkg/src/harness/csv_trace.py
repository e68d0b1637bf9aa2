"""
CSV trace output.

Header `run_id,seed,k,f_gap,A_k,alpha_k,grad_evals,bits`; floats are written
with 17 significant digits so a trace re-reads to the same doubles. Rows of
the per-group `_mean` series leave the seed column empty.
"""

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

logger = logging.getLogger(__name__)

HEADER = ("run_id", "seed", "k", "f_gap", "A_k", "alpha_k", "grad_evals", "bits")
MEAN_SUFFIX = "_mean"


def format_float(value: float) -> str:
    return format(value, ".17g")


@dataclass(frozen=True)
class TraceRow:
    run_id: str
    seed: Optional[int]
    k: int
    f_gap: float
    A_k: float
    alpha_k: float
    grad_evals: int
    bits: int

    def as_fields(self) -> list[str]:
        return [
            self.run_id,
            "" if self.seed is None else str(self.seed),
            str(self.k),
            format_float(self.f_gap),
            format_float(self.A_k),
            format_float(self.alpha_k),
            str(self.grad_evals),
            str(self.bits),
        ]

    @property
    def is_mean(self) -> bool:
        return self.seed is None


def mean_rows(group: str, runs: Sequence[Sequence[TraceRow]]) -> list[TraceRow]:
    """
    Per-k arithmetic mean across the runs of one group.

    Only iterations reached by every run are averaged.
    """
    if not runs:
        return []
    by_k: dict[int, list[TraceRow]] = defaultdict(list)
    for rows in runs:
        for row in rows:
            by_k[row.k].append(row)

    result = []
    for k in sorted(by_k):
        rows = by_k[k]
        if len(rows) != len(runs):
            continue
        count = len(rows)
        result.append(
            TraceRow(
                run_id=group + MEAN_SUFFIX,
                seed=None,
                k=k,
                f_gap=math.fsum(r.f_gap for r in rows) / count,
                A_k=math.fsum(r.A_k for r in rows) / count,
                alpha_k=math.fsum(r.alpha_k for r in rows) / count,
                grad_evals=round(sum(r.grad_evals for r in rows) / count),
                bits=round(sum(r.bits for r in rows) / count),
            )
        )
    return result


def write_trace_csv(rows: Iterable[TraceRow], path: Path) -> int:
    """Write rows under the fixed header; returns the number of data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(HEADER)
        for row in rows:
            writer.writerow(row.as_fields())
            count += 1
    logger.info("wrote %d rows to %s", count, path)
    return count


def read_trace_csv(path: Path) -> list[TraceRow]:
    """Parse a trace written by write_trace_csv."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != HEADER:
            raise ValueError(f"unexpected trace header {header}")
        return [
            TraceRow(
                run_id=fields[0],
                seed=int(fields[1]) if fields[1] else None,
                k=int(fields[2]),
                f_gap=float(fields[3]),
                A_k=float(fields[4]),
                alpha_k=float(fields[5]),
                grad_evals=int(fields[6]),
                bits=int(fields[7]),
            )
            for fields in reader
        ]
