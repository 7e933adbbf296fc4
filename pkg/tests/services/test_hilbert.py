"""Hilbert-space layout service tests."""

import numpy as np
import pytest

from qamsy.errors import DimensionOverflow, LengthMismatch
from qamsy.services.hilbert import (
    basin_projector,
    build_layout,
    embed,
    embed_operator,
    exclusive_projector,
    extract,
    pattern_keys,
    projector_onto,
)


@pytest.fixture
def layout():
    """S1 (0, 1), S2 (2,), X1 (3, 4), D1 (5,), D2 (6, 7), X1/D1 (8,), X1/D2 (9,), for testing."""

    return build_layout(stable=[(2, 1), (1, 2)], dfs=[(2, [1, 1])])


def test_build_layout__canonical_order(layout):
    """Should place stable blocks, then DFS blocks, then decaying blocks by target."""

    assert layout.total_dim == 10
    assert layout.stable_labels == ["S1", "S2", "X1"]
    assert layout.decaying_labels == ["D1", "D2", "X1/D1", "X1/D2"]
    assert layout.indices("D2") == (6, 7)
    assert layout.indices("X1/D2") == (9,)


def test_build_layout__total_dim():
    """Should check the declaration against a known dimension."""

    with pytest.raises(DimensionOverflow) as excinfo:
        build_layout(stable=[(1, 1)], total_dim=3)

    assert str(excinfo.value) == "Blocks declare 2 dimensions but the space has 3"


def test_embed(layout):
    """Should place a local vector on the block's indices."""

    vector = embed([1, 2], "D2", layout)

    assert vector.shape == (10,)
    assert vector[6] == 1 and vector[7] == 2
    assert np.count_nonzero(vector) == 2
    assert np.array_equal(extract(vector, "D2", layout), [1, 2])


def test_embed__length_mismatch(layout):
    """Should reject a local vector of the wrong length."""

    with pytest.raises(LengthMismatch) as excinfo:
        embed([1, 0], "S2", layout)

    assert str(excinfo.value) == "Block 'S2' has dimension 1, got a vector of length 2"


def test_extract__length_mismatch(layout):
    """Should reject a global vector of the wrong length."""

    with pytest.raises(LengthMismatch) as excinfo:
        extract([1, 0], "S2", layout)

    assert str(excinfo.value) == "Layout has dimension 10, got a vector of length 2"


def test_embed_operator(layout):
    """Should place a local operator on the block's indices."""

    op = embed_operator([[1, 2], [3, 4]], "S1", layout)

    assert np.array_equal(op[:2, :2], [[1, 2], [3, 4]])
    assert np.count_nonzero(op) == 4


def test_projector_onto(layout):
    """Should project onto the union of blocks."""

    projector = projector_onto(["S2", "D2"], layout)

    assert np.array_equal(np.flatnonzero(np.diag(projector)), [2, 6, 7])


def test_basin_projector(layout):
    """Should cover S + D for irreducible blocks, and only D for DFS patterns."""

    assert np.flatnonzero(np.diag(basin_projector(layout, "S1"))).tolist() == [0, 1, 5]
    assert np.flatnonzero(np.diag(basin_projector(layout, "X1", 1))).tolist() == [9]


def test_pattern_keys(layout):
    """Should list every pattern in decaying-block order."""

    assert pattern_keys(layout) == (("S1", 0), ("S2", 0), ("X1", 0), ("X1", 1))


def test_exclusive_projector(layout):
    """Should drop the shared DFS block between patterns of the same block."""

    same_block = exclusive_projector(layout, ("X1", 0), ("X1", 1))
    other_block = exclusive_projector(layout, ("S1", 0), ("X1", 1))

    assert np.flatnonzero(np.diag(same_block)).tolist() == [9]
    assert np.flatnonzero(np.diag(other_block)).tolist() == [3, 4, 9]
