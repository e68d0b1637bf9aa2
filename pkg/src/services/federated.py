"""
Federated Service

Simulates m clients that each own one component f_l of the objective.
Every round each client computes ∇f_l(x) exactly, compresses it with its
own random stream, and the server sums the messages in client order.

With shift memory each client l keeps a vector h_l known to the server and
sends C(∇f_l(x) − h_l); the server's estimate is Σ_l (h_l + C(∇f_l(x) − h_l))
and both sides move h_l by C(∇f_l(x) − h_l)/(1 + ω) after the round. Plain
compression leaves noise Σ_l ω‖∇f_l(x*)‖² at the optimum; the shifts track
∇f_l(x*) so the noise vanishes there.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.core.random_streams import client_rng
from src.core.vectors import DenseVec, zeros
from src.services.compression import Codec
from src.services.oracles import (
    MAX_ENUMERATED_OUTCOMES,
    Oracle,
    OracleOutput,
    Outcomes,
    uncompressed_bits,
)
from src.services.problems import Problem

logger = logging.getLogger(__name__)


@dataclass
class FederatedRound:
    """One communication round."""
    k: int
    per_client_bits: list[int]
    aggregate_estimate: DenseVec
    exact_aggregate: DenseVec
    messages: Optional[list[DenseVec]] = None

    @property
    def bits(self) -> int:
        return sum(self.per_client_bits)


@dataclass
class ClientShifts:
    """Per-client shift vectors h_l (one row each) and their step 1/(1 + ω)."""
    shifts: np.ndarray
    rate: float

    @classmethod
    def zero(cls, problem: Problem, codec: Codec) -> "ClientShifts":
        return cls(
            shifts=np.zeros((problem.num_components, problem.dim)),
            rate=1.0 / (1.0 + codec.omega(problem.dim)),
        )

    @classmethod
    def at(cls, problem: Problem, codec: Codec, x0: DenseVec) -> "ClientShifts":
        """h_l = ∇f_l(x0) for every client (one uncompressed pass)."""
        shifts = np.vstack(problem.component_gradients(range(problem.num_components), x0))
        return cls(shifts=shifts, rate=1.0 / (1.0 + codec.omega(problem.dim)))

    def advance(self, messages: Sequence[DenseVec]) -> None:
        for l, message in enumerate(messages):
            self.shifts[l] = self.shifts[l] + self.rate * message


def _client_message(
    problem: Problem,
    codec: Codec,
    x: DenseVec,
    client: int,
    rng: np.random.Generator,
    shift: Optional[DenseVec] = None,
) -> tuple[DenseVec, DenseVec, int, DenseVec]:
    grad = problem.component_gradient(client, x)
    if shift is None:
        estimate, bits = codec.compress(grad, rng)
        return grad, estimate, bits, estimate
    message, bits = codec.compress(grad - shift, rng)
    return grad, shift + message, bits, message


def federated_round(
    problem: Problem,
    codec: Codec,
    x: DenseVec,
    client_rngs: Sequence[np.random.Generator],
    k: int = 0,
    workers: int = 1,
    shifts: Optional[ClientShifts] = None,
) -> FederatedRound:
    """
    Run one round over all m clients.

    Client compressions may run on a thread pool; the aggregate is always
    summed in client-index order. Given shifts, clients compress their
    difference to h_l; the shifts themselves are not modified.
    """
    m = problem.num_components
    if len(client_rngs) != m:
        raise ValueError(f"need one random stream per client ({m}), got {len(client_rngs)}")
    codec.validate(problem.dim)

    def message(l: int) -> tuple[DenseVec, DenseVec, int, DenseVec]:
        shift = None if shifts is None else shifts.shifts[l]
        return _client_message(problem, codec, x, l, client_rngs[l], shift)

    if workers > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=min(workers, m)) as pool:
            results = list(pool.map(message, range(m)))
    else:
        results = [message(l) for l in range(m)]

    aggregate = zeros(problem.dim)
    exact = zeros(problem.dim)
    for grad, estimate, _, _ in results:
        aggregate = aggregate + estimate
        exact = exact + grad
    return FederatedRound(
        k=k,
        per_client_bits=[bits for _, _, bits, _ in results],
        aggregate_estimate=aggregate,
        exact_aggregate=exact,
        messages=[sent for _, _, _, sent in results],
    )


def federated_oracle(
    problem: Problem,
    codec: Codec,
    x: DenseVec,
    client_rngs: Sequence[np.random.Generator],
) -> OracleOutput:
    """Aggregate of the m compressed client gradients; one full pass of component evaluations."""
    round_ = federated_round(problem, codec, x, client_rngs)
    return OracleOutput(
        grad_estimate=round_.aggregate_estimate,
        component_evals=problem.num_components,
        bits=round_.bits,
        noise_variance=0.0 if codec.is_identity else None,
    )


class FederatedOracle(Oracle):
    """
    Stateful federated oracle; keeps the last round and the total bits sent.

    Args:
        problem: Objective whose components are the clients
        codec: Compressor every client applies
        seed: Master seed for the per-client streams
        workers: Threads compressing client messages
        memory: Compress differences to per-client shifts (ignored by the
            identity codec). `initialize` sets h_l = ∇f_l(x0) at the cost of
            one uncompressed round; without it the shifts start at zero.
    """

    name = "federated"

    def __init__(self, problem: Problem, codec: Codec, seed: int, workers: int = 1, memory: bool = False):
        codec.validate(problem.dim)
        super().__init__(problem)
        self.codec = codec
        self.seed = seed
        self.workers = workers
        self.client_rngs = [client_rng(seed, l) for l in range(problem.num_components)]
        self.shifts = ClientShifts.zero(problem, codec) if memory and not codec.is_identity else None
        self.rounds = 0
        self.total_bits = 0
        self.last_round: Optional[FederatedRound] = None

    @property
    def exact(self) -> bool:
        return self.codec.is_identity

    def initialize(self, x0: DenseVec) -> Optional[OracleOutput]:
        if self.shifts is None:
            return None
        self.shifts = ClientShifts.at(self.problem, self.codec, x0)
        m = self.problem.num_components
        bits = uncompressed_bits(self.problem.dim, m)
        self.total_bits += bits
        logger.debug("client shifts set at x0: %d bits", bits)
        return OracleOutput(
            grad_estimate=self.shifts.shifts.sum(axis=0),
            component_evals=m,
            bits=bits,
            noise_variance=0.0,
        )

    def _round(self, x: DenseVec) -> FederatedRound:
        return federated_round(
            self.problem,
            self.codec,
            x,
            self.client_rngs,
            k=self.rounds + 1,
            workers=self.workers,
            shifts=self.shifts,
        )

    def draw(self, x: DenseVec) -> OracleOutput:
        return self._output(self._round(x))

    def query(self, x: DenseVec) -> OracleOutput:
        round_ = self._round(x)
        if self.shifts is not None:
            self.shifts.advance(round_.messages)
        self.rounds += 1
        self.total_bits += round_.bits
        self.last_round = round_
        logger.debug("round %d: %d bits", round_.k, round_.bits)
        return self._output(round_)

    def _output(self, round_: FederatedRound) -> OracleOutput:
        return OracleOutput(
            grad_estimate=round_.aggregate_estimate,
            component_evals=self.problem.num_components,
            bits=round_.bits,
            noise_variance=0.0 if self.codec.is_identity else None,
        )

    def outcomes(self, x: DenseVec) -> Optional[Outcomes]:
        per_client = []
        count = 1
        for l in range(self.problem.num_components):
            grad = self.problem.component_gradient(l, x)
            shift = None if self.shifts is None else self.shifts.shifts[l]
            options = self.codec.outcomes(grad if shift is None else grad - shift)
            if options is None:
                return None
            if shift is not None:
                options = [(p, shift + message) for p, message in options]
            count *= len(options)
            if count > MAX_ENUMERATED_OUTCOMES:
                return None
            per_client.append(options)

        results = []
        for combo in itertools.product(*per_client):
            total = zeros(self.problem.dim)
            for _, estimate in combo:
                total = total + estimate
            results.append((math.prod(p for p, _ in combo), total))
        return results
