"""
Seeded random streams.

All randomness comes from numpy's PCG64 bit generator so traces are
reproducible across platforms. Per-client streams are keyed by
(seed, client index), independent of how many clients exist.
"""

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def client_rng(seed: int, client: int) -> np.random.Generator:
    """Stream for one client, derived from the master seed and the client index."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(client,))
    return np.random.Generator(np.random.PCG64(sequence))
