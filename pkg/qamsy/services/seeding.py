"""Seeded random generators.

All sampling in qamsy goes through numpy Generators built here, so any run is
reproducible from a single master seed.
"""

from typing import List, Union

import numpy as np

Seed = Union[int, np.random.Generator, np.random.SeedSequence]


def as_generator(seed: Seed) -> np.random.Generator:
    """A Generator from an integer seed, a SeedSequence, or an existing Generator."""

    if isinstance(seed, np.random.Generator):
        return seed

    return np.random.default_rng(seed)


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Split a master seed into `count` independent integer seeds.

    The split is positional: child k depends only on the master seed and k, so
    results never depend on how work is scheduled across threads.
    """

    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]
