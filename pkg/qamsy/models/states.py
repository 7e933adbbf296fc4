"""Density operators and POVMs."""

from typing import Iterable, List, Sequence

import numpy as np

from ..errors import InvalidPovm, InvalidState

DEFAULT_TOLERANCE = 1e-9


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


class DensityOperator:
    """A valid quantum state: Hermitian, unit trace, positive semidefinite.

    Eigenvalues in (-tol, 0) are clamped to zero on construction; anything more
    negative is rejected.
    """

    dim: int

    def __init__(self, matrix: Sequence, tol: float = DEFAULT_TOLERANCE) -> None:
        m = np.array(matrix, dtype=complex)

        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InvalidState(f"A density operator must be a square matrix, got shape {m.shape}")

        if np.max(np.abs(m - m.conj().T)) > tol:
            raise InvalidState("Density operator is not Hermitian")

        m = (m + m.conj().T) / 2

        trace = np.trace(m).real
        if abs(trace - 1.0) > tol:
            raise InvalidState(f"Density operator has trace {trace:.12g}, expected 1")

        eigenvalues, eigenvectors = np.linalg.eigh(m)
        if eigenvalues[0] < -tol:
            raise InvalidState(f"Density operator has negative eigenvalue {eigenvalues[0]:.3e}")

        if eigenvalues[0] < 0:
            clamped = np.clip(eigenvalues, 0.0, None)
            clamped /= clamped.sum()
            m = (eigenvectors * clamped) @ eigenvectors.conj().T

        self.dim = m.shape[0]
        self._matrix = _frozen(m)

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim})"

    @property
    def matrix(self) -> np.ndarray:
        """Read-only matrix of the state."""
        return self._matrix

    @classmethod
    def pure(cls, vector: Sequence[complex]) -> "DensityOperator":
        """The projector onto a (normalized) pure state."""

        vec = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise InvalidState("Cannot build a pure state from the zero vector")

        vec = vec / norm
        return cls(np.outer(vec, vec.conj()))

    @classmethod
    def basis(cls, dim: int, index: int) -> "DensityOperator":
        """The basis projector |index><index|."""

        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def mixture(
        cls, states: Iterable["DensityOperator"], weights: Sequence[float]
    ) -> "DensityOperator":
        """Convex combination of states."""

        matrices = [state.matrix for state in states]
        return cls(sum(w * m for w, m in zip(weights, matrices)))

    def expectation(self, operator: np.ndarray) -> float:
        """Real part of tr(O rho)."""
        return float(np.real(np.trace(np.asarray(operator) @ self._matrix)))

    def overlap(self, vector: Sequence[complex]) -> float:
        """<psi|rho|psi> for a normalized pure state psi."""

        vec = np.asarray(vector, dtype=complex).reshape(-1)
        return float(np.real(vec.conj() @ self._matrix @ vec))

    def purity(self) -> float:
        return float(np.real(np.trace(self._matrix @ self._matrix)))


class Povm:
    """A positive operator-valued measure.

    `scale` records a uniform rescaling applied to the effects while completing
    the measurement (1.0 when none was needed).
    """

    effects: List[np.ndarray]
    scale: float

    def __init__(
        self, effects: Sequence[np.ndarray], tol: float = DEFAULT_TOLERANCE, scale: float = 1.0
    ) -> None:
        matrices = [np.array(e, dtype=complex) for e in effects]

        if not matrices:
            raise InvalidPovm("A POVM needs at least one effect")

        dim = matrices[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)

        for k, effect in enumerate(matrices):
            if effect.shape != (dim, dim):
                raise InvalidPovm(f"Effect {k} has shape {effect.shape}, expected {(dim, dim)}")

            if np.max(np.abs(effect - effect.conj().T)) > tol:
                raise InvalidPovm(f"Effect {k} is not Hermitian")

            lowest = np.linalg.eigvalsh(effect)[0]
            if lowest < -tol:
                raise InvalidPovm(f"Effect {k} has negative eigenvalue {lowest:.3e}")

            total += effect

        residual = np.max(np.abs(total - np.eye(dim)))
        if residual > tol:
            raise InvalidPovm(f"Effects sum to the identity only within {residual:.3e}")

        self.effects = [_frozen(e) for e in matrices]
        self.scale = float(scale)

    def __len__(self) -> int:
        return len(self.effects)

    def __repr__(self) -> str:
        return f"Povm(outcomes={len(self.effects)}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]
