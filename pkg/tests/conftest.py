"""Shared fixtures."""

import json
from pathlib import Path

import numpy as np
import pytest

from src.services.datasets import Dataset
from src.services.problems import make_least_squares, make_logistic


@pytest.fixture(autouse=True)
def harness_env(monkeypatch, tmp_path):
    """Keep harness settings independent of the developer's environment."""
    monkeypatch.setenv("ACCEL_WORKERS", "1")
    monkeypatch.setenv("ACCEL_OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.setenv("LOG_FORMAT", "plain")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def identity_problem():
    """½‖x‖² in R²: L = μ = 1."""
    return make_least_squares(np.eye(2), np.zeros(2))


@pytest.fixture
def small_least_squares(rng):
    """Tall 8×5 least squares split into 4 row shards."""
    A = rng.standard_normal((8, 5))
    b = rng.standard_normal(8)
    return make_least_squares(A, b, num_components=4)


@pytest.fixture
def tiny_dataset(rng):
    features = rng.standard_normal((12, 3))
    labels = np.where(rng.random(12) < 0.5, -1.0, 1.0)
    return Dataset(features=features, labels=labels)


@pytest.fixture
def tiny_logistic(tiny_dataset):
    """12 samples, dim 3, four components of three samples each."""
    return make_logistic(tiny_dataset, reg=0.5, num_components=4)


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict as JSON and return its path."""

    def _write(document: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return _write
