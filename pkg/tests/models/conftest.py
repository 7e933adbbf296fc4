"""Shared model test fixtures."""

import numpy as np
import pytest

from qamsy.models.channel import KrausChannel
from qamsy.models.hilbert import SpaceLayout
from qamsy.services.hilbert import build_layout


@pytest.fixture
def mixed_layout() -> SpaceLayout:
    """Two orthogonal patterns (ranks 2 and 1) and a DFS block hosting two patterns."""

    return build_layout(stable=[(2, 1), (1, 2)], dfs=[(2, [1, 1])])


@pytest.fixture
def decay_channel() -> KrausChannel:
    """Single-qubit amplitude damping with probability 0.3, for testing."""

    q = 0.3
    k0 = np.array([[1, 0], [0, np.sqrt(1 - q)]])
    k1 = np.array([[0, np.sqrt(q)], [0, 0]])
    return KrausChannel([k0, k1])


@pytest.fixture
def rng() -> np.random.Generator:
    """A seeded generator, for testing."""

    return np.random.default_rng(1234)
