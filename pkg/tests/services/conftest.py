"""Shared service test fixtures."""

import numpy as np
import pytest

from qamsy.models.dynamics import Liouvillian
from qamsy.models.patterns import PatternSet
from qamsy.services.lindblad import build_liouvillian

LOWERING = np.array([[0, 1], [0, 0]])


@pytest.fixture
def decay_liouvillian() -> Liouvillian:
    """Spontaneous decay |1> -> |0> at unit rate, for testing."""

    return build_liouvillian(np.zeros((2, 2)), [(LOWERING, 1.0)])


@pytest.fixture
def metastable_liouvillian() -> Liouvillian:
    """Three levels: |2> decays quickly into |0> or |1>, which leak into each other slowly."""

    def jump(to: int, start: int) -> np.ndarray:
        op = np.zeros((3, 3))
        op[to, start] = 1.0
        return op

    jumps = [
        (jump(0, 2), 1.0),
        (jump(1, 2), 1.0),
        (jump(1, 0), 1e-3),
        (jump(0, 1), 1e-3),
        (jump(0, 0), 10.0),
    ]
    return build_liouvillian(np.zeros((3, 3)), jumps)


@pytest.fixture
def orthogonal_set() -> PatternSet:
    """A rank-2 pattern with two decaying states and a rank-1 pattern with one, for testing."""

    return PatternSet([(np.diag([0.7, 0.3]), 2), ([1.0], 1)])
