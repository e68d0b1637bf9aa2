"""
Dataset Service

Handles labelled binary-classification data:
- LIBSVM text parsing and serialization
- Synthetic dataset generation
- Row normalization
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, TextIO

import numpy as np

from src.core.vectors import DenseVec
from src.errors import LibsvmParseError

logger = logging.getLogger(__name__)

DIM_HEADER = re.compile(r"dim\s+(\d+)")


@dataclass
class Dataset:
    """Dense binary-classification samples with labels in {-1, +1}."""
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be a matrix, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("one label per sample is required")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def samples(self) -> Iterator[tuple[DenseVec, float]]:
        """Iterate (features, label) pairs."""
        for row, label in zip(self.features, self.labels):
            yield row, float(label)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


def _parse_entry(token: str, line_number: int) -> tuple[int, float]:
    parts = token.split(":")
    if len(parts) != 2:
        raise LibsvmParseError(line_number, f"malformed feature token {token!r}")
    try:
        index = int(parts[0])
        value = float(parts[1])
    except ValueError:
        raise LibsvmParseError(line_number, f"malformed feature token {token!r}") from None
    if index < 1:
        raise LibsvmParseError(line_number, f"feature index must be >= 1, got {index}")
    if not np.isfinite(value):
        raise LibsvmParseError(line_number, f"non-finite feature value in {token!r}")
    return index, value


def parse_libsvm(stream: Iterable[str], dim: Optional[int] = None) -> Dataset:
    """
    Parse LIBSVM text: `<label> <idx>:<val> ...` with 1-based ascending indices.

    Blank lines and `#` comments are skipped, except that a whole-line
    `# dim N` comment raises the inferred dimension to at least N. Labels ≤ 0
    map to -1, others to +1.

    Args:
        stream: Text lines (an open file, a list of strings, ...)
        dim: Feature dimension to use; must cover every index seen

    Returns:
        Dataset with dim = max index observed (or the given dim)

    Raises:
        LibsvmParseError: On malformed tokens, index < 1 or non-ascending indices
    """
    rows: list[list[tuple[int, float]]] = []
    labels: list[float] = []
    max_index = 0
    header_dim = 0

    for line_number, raw in enumerate(stream, start=1):
        line, hash_mark, comment = raw.partition("#")
        line = line.strip()
        if not line:
            match = DIM_HEADER.fullmatch(comment.strip()) if hash_mark else None
            if match:
                header_dim = max(header_dim, int(match.group(1)))
            continue

        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmParseError(line_number, f"malformed label {tokens[0]!r}") from None
        if not np.isfinite(label):
            raise LibsvmParseError(line_number, f"non-finite label {tokens[0]!r}")

        entries = []
        previous = 0
        for token in tokens[1:]:
            index, value = _parse_entry(token, line_number)
            if index <= previous:
                raise LibsvmParseError(
                    line_number, f"feature indices must be strictly ascending ({previous} then {index})"
                )
            previous = index
            entries.append((index, value))

        max_index = max(max_index, previous)
        rows.append(entries)
        labels.append(1.0 if label > 0 else -1.0)

    if dim is None:
        dim = max(max_index, header_dim)
    elif dim < max_index:
        raise LibsvmParseError(0, f"requested dim {dim} is below the largest index {max_index}")

    features = np.zeros((len(rows), dim), dtype=np.float64)
    for i, entries in enumerate(rows):
        for index, value in entries:
            features[i, index - 1] = value

    logger.debug("parsed %d samples, dim %d", len(rows), dim)
    return Dataset(features=features, labels=np.array(labels, dtype=np.float64))


def load_libsvm(path: Path, dim: Optional[int] = None) -> Dataset:
    """Parse a LIBSVM file from disk."""
    with open(path, "r", encoding="utf-8") as handle:
        dataset = parse_libsvm(handle, dim=dim)
    logger.info("loaded %s: %d samples, dim %d", path, dataset.num_samples, dataset.dim)
    return dataset


def serialize_libsvm(dataset: Dataset, stream: TextIO) -> None:
    """
    Write a dataset in LIBSVM format.

    Only nonzero features are written, as shortest round-trip decimals. When
    no sample has a nonzero in the last column, the first line carries an
    explicit `dim:0` entry so that parsing recovers the same dimension. A
    dataset without samples is written as a single `# dim N` line.
    """
    dim = dataset.dim
    if dataset.num_samples == 0:
        if dim > 0:
            stream.write(f"# dim {dim}\n")
        return
    pin_dim = dim > 0 and not np.any(dataset.features[:, dim - 1])

    for i, (row, label) in enumerate(dataset.samples()):
        tokens = ["+1" if label > 0 else "-1"]
        for j in np.flatnonzero(row):
            tokens.append(f"{j + 1}:{float(row[j])!r}")
        if pin_dim and i == 0:
            tokens.append(f"{dim}:0.0")
        stream.write(" ".join(tokens) + "\n")


def save_libsvm(dataset: Dataset, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        serialize_libsvm(dataset, handle)


def normalize_rows(dataset: Dataset) -> Dataset:
    """Scale every nonzero feature row to unit ℓ2 norm."""
    norms = np.linalg.norm(dataset.features, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return Dataset(features=dataset.features / norms, labels=dataset.labels.copy())


def make_synthetic_classification(
    n_samples: int = 1000,
    dim: int = 20,
    seed: int = 20240501,
    flip_fraction: float = 0.1,
) -> Dataset:
    """
    Gaussian features with labels from a planted linear model.

    Features are N(0, 1/dim); labels are sign(⟨a, w⟩) with a fraction of
    them flipped so that the data are not separable.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    features = rng.standard_normal((n_samples, dim)) / np.sqrt(dim)
    planted = rng.standard_normal(dim)
    labels = np.where(features @ planted >= 0.0, 1.0, -1.0)
    flips = rng.random(n_samples) < flip_fraction
    labels[flips] *= -1.0
    return Dataset(features=features, labels=labels)


# Category counts of 22 nominal attributes (117 one-hot columns)
CATEGORICAL_CARDINALITIES = (6, 4, 10, 2, 9, 2, 2, 2, 12, 2, 5, 4, 4, 9, 9, 1, 4, 3, 5, 9, 6, 7)


def make_synthetic_categorical(
    n_samples: int = 8124,
    cardinalities: Sequence[int] = CATEGORICAL_CARDINALITIES,
    seed: int = 20240501,
    flip_fraction: float = 0.02,
) -> Dataset:
    """
    One-hot encoded nominal attributes with labels from a planted linear model.

    Each attribute draws its category from skewed Dirichlet frequencies, so
    every row holds exactly len(cardinalities) ones and the columns share a
    large common direction: unnormalized, L/μ is in the thousands for reg ≈ 1.
    A fraction of the labels is flipped.
    """
    if not cardinalities or min(cardinalities) < 1:
        raise ValueError("every attribute needs at least one category")
    rng = np.random.Generator(np.random.PCG64(seed))
    offsets = np.concatenate(([0], np.cumsum(cardinalities)))
    features = np.zeros((n_samples, int(offsets[-1])))
    rows = np.arange(n_samples)
    for offset, count in zip(offsets[:-1], cardinalities):
        frequencies = rng.dirichlet(np.full(count, 0.7))
        features[rows, offset + rng.choice(count, size=n_samples, p=frequencies)] = 1.0

    planted = rng.standard_normal(features.shape[1])
    scores = features @ planted
    labels = np.where(scores >= np.median(scores), 1.0, -1.0)
    flips = rng.random(n_samples) < flip_fraction
    labels[flips] *= -1.0
    return Dataset(features=features, labels=labels)
