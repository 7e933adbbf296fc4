"""Density operator and POVM model tests."""

import numpy as np
import pytest

from qamsy.errors import InvalidPovm, InvalidState
from qamsy.models.states import DensityOperator, Povm


def test_density_operator__pure():
    """Should normalize the vector and build its projector."""

    rho = DensityOperator.pure([1, 1])

    assert np.allclose(rho.matrix, np.full((2, 2), 0.5))
    assert rho.purity() == pytest.approx(1.0)
    assert rho.overlap(np.array([1, 1]) / np.sqrt(2)) == pytest.approx(1.0)


def test_density_operator__read_only():
    """Should not allow the matrix of a state to be modified."""

    rho = DensityOperator.maximally_mixed(3)

    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


def test_density_operator__clamps_tiny_negative_eigenvalues():
    """Should clamp eigenvalues just below zero instead of rejecting the state."""

    rho = DensityOperator(np.diag([1 + 1e-12, -1e-12]))

    assert np.min(np.linalg.eigvalsh(rho.matrix)) >= 0.0
    assert np.trace(rho.matrix).real == pytest.approx(1.0)


def test_density_operator__not_square():
    """Should reject anything but a square matrix."""

    with pytest.raises(InvalidState) as excinfo:
        DensityOperator([1, 0])

    assert str(excinfo.value) == "A density operator must be a square matrix, got shape (2,)"


def test_density_operator__not_hermitian():
    """Should reject a non-Hermitian matrix."""

    with pytest.raises(InvalidState) as excinfo:
        DensityOperator([[0.5, 0.1], [0.0, 0.5]])

    assert str(excinfo.value) == "Density operator is not Hermitian"


def test_density_operator__trace():
    """Should reject a matrix without unit trace."""

    with pytest.raises(InvalidState) as excinfo:
        DensityOperator(np.eye(2))

    assert str(excinfo.value) == "Density operator has trace 2, expected 1"


def test_density_operator__negative():
    """Should reject a matrix with a clearly negative eigenvalue."""

    with pytest.raises(InvalidState) as excinfo:
        DensityOperator(np.diag([1.5, -0.5]))

    assert str(excinfo.value) == "Density operator has negative eigenvalue -5.000e-01"


def test_density_operator__zero_vector():
    """Should refuse to build a pure state from the zero vector."""

    with pytest.raises(InvalidState) as excinfo:
        DensityOperator.pure([0, 0])

    assert str(excinfo.value) == "Cannot build a pure state from the zero vector"


def test_density_operator__mixture():
    """Should build the convex combination of states."""

    rho = DensityOperator.mixture([DensityOperator.basis(2, 0), DensityOperator.basis(2, 1)], [0.25, 0.75])

    assert np.allclose(rho.matrix, np.diag([0.25, 0.75]))
    assert rho.expectation(np.diag([1, -1])) == pytest.approx(-0.5)


def test_povm__ok():
    """Should accept positive effects summing to the identity."""

    povm = Povm([np.diag([1, 0]), np.diag([0, 1])])

    assert len(povm) == 2
    assert povm.dim == 2
    assert povm.scale == 1.0


def test_povm__empty():
    """Should reject a POVM without effects."""

    with pytest.raises(InvalidPovm) as excinfo:
        Povm([])

    assert str(excinfo.value) == "A POVM needs at least one effect"


def test_povm__incomplete():
    """Should reject effects that do not sum to the identity."""

    with pytest.raises(InvalidPovm) as excinfo:
        Povm([0.5 * np.eye(2)])

    assert str(excinfo.value) == "Effects sum to the identity only within 5.000e-01"


def test_povm__negative_effect():
    """Should reject an effect with a negative eigenvalue."""

    with pytest.raises(InvalidPovm) as excinfo:
        Povm([np.diag([1.5, 0]), np.diag([-0.5, 1])])

    assert str(excinfo.value) == "Effect 1 has negative eigenvalue -5.000e-01"
