"""
Compression Service

Unbiased gradient compressors for the federated simulator:
- random sparsification (keep k coordinates, rescale by n/k)
- random dithering onto s levels of the ℓ2 norm
- natural compression (stochastic rounding to powers of two)

Each codec reports the bits its message costs and its variance factor ω,
E‖C(g) − g‖² ≤ ω‖g‖².
"""

import itertools
import math
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from src.core.vectors import DenseVec, zeros
from src.errors import ConfigurationError
from src.services.oracles import FLOAT_BITS, MAX_ENUMERATED_OUTCOMES, OracleOutput, Outcomes

EXPONENT_BITS = 8


class Codec(ABC):
    """Base class for gradient compressors."""

    name: str = "codec"

    @abstractmethod
    def compress(self, grad: DenseVec, rng: np.random.Generator) -> tuple[DenseVec, int]:
        """Return the decoded estimate and the message size in bits."""

    @abstractmethod
    def bits(self, dim: int) -> int:
        """Bits per message for a vector of length dim."""

    @abstractmethod
    def omega(self, dim: int) -> float:
        """Variance factor ω at dimension dim."""

    def outcomes(self, grad: DenseVec) -> Optional[Outcomes]:
        """Every (probability, estimate) pair, when the codec has few enough."""
        return None

    def validate(self, dim: int) -> None:
        """Check codec parameters against a dimension."""

    @property
    def is_identity(self) -> bool:
        return False


class NoCompression(Codec):
    """Sends the raw float vector."""

    name = "none"

    def compress(self, grad: DenseVec, rng: np.random.Generator) -> tuple[DenseVec, int]:
        return grad, self.bits(grad.shape[0])

    def bits(self, dim: int) -> int:
        return FLOAT_BITS * dim

    def omega(self, dim: int) -> float:
        return 0.0

    def outcomes(self, grad: DenseVec) -> Optional[Outcomes]:
        return [(1.0, grad)]

    @property
    def is_identity(self) -> bool:
        return True


class RandomSparsifier(Codec):
    """Keep `keep` coordinates chosen uniformly without replacement, scaled by n/keep."""

    name = "sparsify"

    def __init__(self, keep: int):
        if keep < 1:
            raise ConfigurationError(f"sparsifier keep must be >= 1, got {keep}")
        self.keep = keep

    def validate(self, dim: int) -> None:
        if self.keep > dim:
            raise ConfigurationError(f"sparsifier keep must lie in [1, {dim}], got {self.keep}")

    def _scatter(self, grad: DenseVec, kept: np.ndarray) -> DenseVec:
        out = zeros(grad.shape[0])
        out[kept] = (grad.shape[0] / self.keep) * grad[kept]
        return out

    def compress(self, grad: DenseVec, rng: np.random.Generator) -> tuple[DenseVec, int]:
        n = grad.shape[0]
        self.validate(n)
        if self.keep == n:
            return grad.copy(), self.bits(n)
        kept = rng.choice(n, size=self.keep, replace=False)
        return self._scatter(grad, kept), self.bits(n)

    def bits(self, dim: int) -> int:
        # value plus a ceil(log2 n)-bit index per kept coordinate
        return self.keep * (FLOAT_BITS + (dim - 1).bit_length())

    def omega(self, dim: int) -> float:
        return dim / self.keep - 1.0

    def outcomes(self, grad: DenseVec) -> Optional[Outcomes]:
        n = grad.shape[0]
        self.validate(n)
        count = math.comb(n, self.keep)
        if count > MAX_ENUMERATED_OUTCOMES:
            return None
        return [
            (1.0 / count, self._scatter(grad, np.array(kept)))
            for kept in itertools.combinations(range(n), self.keep)
        ]


class RandomDithering(Codec):
    """
    QSGD-style dithering: ‖g‖₂·sign(gᵢ)·ζᵢ/s with ζᵢ the stochastic rounding
    of s|gᵢ|/‖g‖₂ to a neighbouring integer.
    """

    name = "dither"

    def __init__(self, levels: int):
        if levels < 1:
            raise ConfigurationError(f"dithering levels must be >= 1, got {levels}")
        self.levels = levels

    def compress(self, grad: DenseVec, rng: np.random.Generator) -> tuple[DenseVec, int]:
        n = grad.shape[0]
        scale = float(np.linalg.norm(grad))
        if scale == 0.0:
            return zeros(n), self.bits(n)
        ratio = self.levels * np.abs(grad) / scale
        lower = np.floor(ratio)
        zeta = lower + (rng.random(n) < (ratio - lower))
        return scale * np.sign(grad) * zeta / self.levels, self.bits(n)

    def bits(self, dim: int) -> int:
        # norm, then a sign bit and a ceil(log2(s+1))-bit level per coordinate
        return FLOAT_BITS + dim * (1 + self.levels.bit_length())

    def omega(self, dim: int) -> float:
        return min(dim / self.levels**2, math.sqrt(dim) / self.levels)


class NaturalCompression(Codec):
    """Round each |gᵢ| to 2^⌊log2|gᵢ|⌋ or twice that, unbiasedly; sign kept."""

    name = "natural"

    def compress(self, grad: DenseVec, rng: np.random.Generator) -> tuple[DenseVec, int]:
        n = grad.shape[0]
        magnitude = np.abs(grad)
        _, exponent = np.frexp(magnitude)
        lower = np.ldexp(1.0, exponent - 1)
        nonzero = magnitude > 0.0
        lower = np.where(nonzero, lower, 1.0)
        prob_up = np.where(nonzero, (magnitude - lower) / lower, 0.0)
        rounded = np.where(rng.random(n) < prob_up, 2.0 * lower, lower)
        return np.where(nonzero, np.sign(grad) * rounded, 0.0), self.bits(n)

    def bits(self, dim: int) -> int:
        return (1 + EXPONENT_BITS) * dim

    def omega(self, dim: int) -> float:
        return 0.125


def make_codec(kind: str, keep: Optional[int] = None, levels: Optional[int] = None) -> Codec:
    """
    Build a codec by name.

    Raises:
        ConfigurationError: For unknown kinds or missing parameters
    """
    if kind == "none":
        return NoCompression()
    if kind == "sparsify":
        if keep is None:
            raise ConfigurationError("codec 'sparsify' needs 'keep'")
        return RandomSparsifier(keep)
    if kind == "dither":
        if levels is None:
            raise ConfigurationError("codec 'dither' needs 'levels'")
        return RandomDithering(levels)
    if kind == "natural":
        return NaturalCompression()
    raise ConfigurationError(f"unknown codec {kind!r}")


def _compressed_output(estimate: DenseVec, bits: int) -> OracleOutput:
    return OracleOutput(grad_estimate=estimate, component_evals=0, bits=bits)


def sparsify_oracle(grad: DenseVec, keep: int, rng: np.random.Generator) -> OracleOutput:
    """Random sparsification of one vector; bits = keep·(32 + ceil(log2 n))."""
    return _compressed_output(*RandomSparsifier(keep).compress(grad, rng))


def dither_oracle(grad: DenseVec, levels: int, rng: np.random.Generator) -> OracleOutput:
    """Random dithering of one vector; bits = 32 + n·(1 + ceil(log2(s+1)))."""
    return _compressed_output(*RandomDithering(levels).compress(grad, rng))


def natural_oracle(grad: DenseVec, rng: np.random.Generator) -> OracleOutput:
    """Natural compression of one vector; bits = 9·n."""
    return _compressed_output(*NaturalCompression().compress(grad, rng))


def strong_growth_lambda(omega: float) -> Optional[float]:
    """
    Largest λ ∈ (0, 1] with (1 − λ)/(1 + λ) ≥ ω, or None when ω ≥ 1.

    A codec with variance factor ω satisfies the strong-growth condition for
    every λ up to this value.
    """
    if omega < 0.0:
        raise ValueError(f"omega must be nonnegative, got {omega}")
    if omega >= 1.0:
        return None
    return (1.0 - omega) / (1.0 + omega)
