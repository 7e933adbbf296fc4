"""Pattern sets, decay profiles and QAM validation reports."""

from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import InconsistentLayout, InvalidPatternSet, RateOutOfRange, ZeroBasin
from .channel import CptpReport
from .states import DEFAULT_TOLERANCE

DEFAULT_KAPPA = 0.5
MAX_DECAY_COEFFICIENTS = 2


class OrthogonalPattern(NamedTuple):
    """A full-rank density matrix on its own block S_mu, with its basin size d_mu."""

    state: np.ndarray
    decay_dim: int


class DfsGroup(NamedTuple):
    """Pure patterns sharing one decoherence-free block X_tau."""

    dim: int
    patterns: Tuple[np.ndarray, ...]
    decay_dims: Tuple[int, ...]


class DecayProfile:
    """Coefficients c_x of the decaying states on the stable-only Kraus operators.

    A decaying state keeps weight sum_a |c_x^a|^2 per step and transfers
    kappa_x = 1 - sum_a |c_x^a|^2 to its pattern. Blocks without explicit
    coefficients use the single coefficient sqrt(1 - kappa).
    """

    kappa: float

    def __init__(
        self,
        kappa: float = DEFAULT_KAPPA,
        coefficients: Optional[Mapping[str, Sequence[Sequence[complex]]]] = None,
    ) -> None:
        if not 0.0 < kappa <= 1.0:
            raise RateOutOfRange(f"Transfer rate {kappa} is outside (0, 1]")

        self.kappa = float(kappa)
        self._coefficients: Dict[str, np.ndarray] = {}

        for label, values in (coefficients or {}).items():
            c = np.array(values, dtype=complex)
            if c.ndim == 1:
                c = c.reshape(-1, 1)

            if c.ndim != 2 or not 1 <= c.shape[1] <= MAX_DECAY_COEFFICIENTS:
                raise InvalidPatternSet(
                    f"Decaying block {label!r} needs 1 or {MAX_DECAY_COEFFICIENTS} "
                    f"coefficients per state"
                )

            kept = np.sum(np.abs(c) ** 2, axis=1)
            if np.any(kept >= 1.0):
                raise RateOutOfRange(f"Decaying block {label!r} has a state that never transfers")

            c.setflags(write=False)
            self._coefficients[label] = c

    def __repr__(self) -> str:
        return f"DecayProfile(kappa={self.kappa}, overrides={sorted(self._coefficients)})"

    @classmethod
    def from_rates(
        cls,
        rates: Mapping[str, Union[Sequence[float], Sequence[Sequence[float]]]],
        kappa: float = DEFAULT_KAPPA,
        tol: float = DEFAULT_TOLERANCE,
    ) -> "DecayProfile":
        """Profile from transfer rates kappa_x per decaying block.

        A square matrix of rates kappa_xy is accepted only when it is diagonal.
        """

        coefficients = {}
        for label, values in rates.items():
            matrix = np.array(values, dtype=float)

            if matrix.ndim == 2:
                off_diagonal = matrix - np.diag(np.diag(matrix))
                if np.max(np.abs(off_diagonal)) > tol:
                    raise InvalidPatternSet(
                        f"Decaying block {label!r}: off-diagonal transfer rates are not supported"
                    )
                matrix = np.diag(matrix)

            if np.any(matrix <= 0.0) or np.any(matrix > 1.0):
                raise RateOutOfRange(f"Transfer rates of {label!r} must lie in (0, 1]")

            coefficients[label] = np.sqrt(1.0 - matrix).reshape(-1, 1)

        return cls(kappa, coefficients)

    def coefficients(self, label: str, dim: int) -> np.ndarray:
        """(dim, m) coefficient matrix of a decaying block."""

        if label not in self._coefficients:
            return np.full((dim, 1), np.sqrt(1.0 - self.kappa), dtype=complex)

        c = self._coefficients[label]
        if c.shape[0] != dim:
            raise InconsistentLayout(
                f"Decaying block {label!r} has dimension {dim} but {c.shape[0]} coefficient rows"
            )
        return c

    def rates(self, label: str, dim: int) -> np.ndarray:
        """kappa_x for every state of a decaying block."""
        return 1.0 - np.sum(np.abs(self.coefficients(label, dim)) ** 2, axis=1)

    def labels(self) -> List[str]:
        return sorted(self._coefficients)


def _pure_vector(pattern: Sequence, tol: float) -> np.ndarray:
    """A unit vector from a state vector or a rank-1 density matrix."""

    array = np.array(pattern, dtype=complex)

    if array.ndim == 2:
        eigenvalues, eigenvectors = np.linalg.eigh((array + array.conj().T) / 2)
        if eigenvalues[-2:-1].size and eigenvalues[-2] > tol:
            raise InvalidPatternSet(
                "Mixed DFS patterns are not supported: DFS patterns must be pure states"
            )
        array = eigenvectors[:, -1]

    if array.ndim != 1:
        raise InvalidPatternSet(f"DFS pattern must be a vector, got shape {array.shape}")

    if abs(np.linalg.norm(array) - 1.0) > tol:
        raise InvalidPatternSet(f"DFS pattern has norm {np.linalg.norm(array):.12g}, expected 1")

    array.setflags(write=False)
    return array


class PatternSet:
    """Declared memories: orthogonal patterns and DFS-resident pure patterns."""

    orthogonal: Tuple[OrthogonalPattern, ...]
    dfs: Tuple[DfsGroup, ...]
    decay_profile: DecayProfile

    def __init__(
        self,
        orthogonal: Sequence[Tuple[Sequence, int]] = (),
        dfs: Sequence[Tuple[int, Sequence[Sequence], Sequence[int]]] = (),
        decay_profile: Optional[DecayProfile] = None,
        tol: float = DEFAULT_TOLERANCE,
    ) -> None:
        self.orthogonal = tuple(self._check_orthogonal(state, d, tol) for state, d in orthogonal)
        self.dfs = tuple(self._check_dfs(dim, patterns, dims, tol) for dim, patterns, dims in dfs)
        self.decay_profile = decay_profile or DecayProfile()

        if not self.orthogonal and not self.dfs:
            raise InvalidPatternSet("A pattern set needs at least one pattern")

    def __repr__(self) -> str:
        return f"PatternSet(orthogonal={self.m_perp}, dfs={self.m_nonperp})"

    @property
    def m_perp(self) -> int:
        """M_perp, the number of orthogonal patterns."""
        return len(self.orthogonal)

    @property
    def m_nonperp(self) -> int:
        """M_nonperp, the number of DFS-resident patterns."""
        return sum(len(group.patterns) for group in self.dfs)

    @property
    def count(self) -> int:
        return self.m_perp + self.m_nonperp

    def layout_spec(self) -> Tuple[List[Tuple[int, int]], List[Tuple[int, List[int]]]]:
        """Block dimensions in the form `build_layout` takes them."""

        stable = [(p.state.shape[0], p.decay_dim) for p in self.orthogonal]
        dfs = [(g.dim, list(g.decay_dims)) for g in self.dfs]
        return stable, dfs

    @staticmethod
    def _check_orthogonal(state: Sequence, decay_dim: int, tol: float) -> OrthogonalPattern:
        matrix = np.array(state, dtype=complex)

        if matrix.ndim == 1:
            # A pure pattern on its own one-dimensional block
            matrix = np.outer(matrix, matrix.conj())

        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidPatternSet(f"Pattern must be a square matrix, got shape {matrix.shape}")

        if np.max(np.abs(matrix - matrix.conj().T)) > tol:
            raise InvalidPatternSet("Pattern is not Hermitian")

        if abs(np.trace(matrix).real - 1.0) > tol:
            raise InvalidPatternSet("Pattern does not have unit trace")

        lowest = np.linalg.eigvalsh(matrix)[0]
        if lowest <= tol:
            raise InvalidPatternSet(
                f"Pattern is not full rank on its block (smallest eigenvalue {lowest:.3e})"
            )

        if decay_dim < 1:
            raise ZeroBasin("Pattern declared with an empty decaying subspace")

        matrix.setflags(write=False)
        return OrthogonalPattern(matrix, int(decay_dim))

    @staticmethod
    def _check_dfs(
        dim: int, patterns: Sequence[Sequence], decay_dims: Sequence[int], tol: float
    ) -> DfsGroup:
        if dim < 1:
            raise InvalidPatternSet(f"DFS dimension must be positive, got {dim}")

        if not patterns:
            raise InvalidPatternSet("A DFS block must host at least one pattern")

        if len(patterns) != len(decay_dims):
            raise InvalidPatternSet(
                f"{len(patterns)} DFS patterns but {len(decay_dims)} decaying dimensions"
            )

        vectors = tuple(_pure_vector(p, tol) for p in patterns)
        for vector in vectors:
            if vector.shape[0] != dim:
                raise InvalidPatternSet(
                    f"DFS pattern has length {vector.shape[0]}, block has dimension {dim}"
                )

        if any(d < 1 for d in decay_dims):
            raise ZeroBasin("DFS pattern declared with an empty decaying subspace")

        return DfsGroup(int(dim), vectors, tuple(int(d) for d in decay_dims))


class StableAmplitudes:
    """Coefficients a^1, a^2 of the stable-only Kraus operators.

    One row per stable basis index of an irreducible block, one row per DFS block.
    """

    rows: Dict[str, np.ndarray]

    def __init__(self, rows: Mapping[str, np.ndarray]) -> None:
        self.rows = {label: np.array(values, dtype=float) for label, values in rows.items()}

    def __getitem__(self, label: str) -> np.ndarray:
        return self.rows[label]

    def normalization_residual(self) -> float:
        """max |sum_a |a|^2 - 1| over all rows."""

        stacked = np.vstack(list(self.rows.values()))
        return float(np.max(np.abs(np.sum(stacked ** 2, axis=1) - 1.0)))

    def max_overlap(self) -> float:
        """Largest |<a_i, a_j>| between distinct rows; below 1 iff all rows differ."""

        stacked = np.vstack(list(self.rows.values()))
        if stacked.shape[0] < 2:
            return 0.0

        gram = np.abs(stacked @ stacked.T)
        np.fill_diagonal(gram, 0.0)
        return float(gram.max())


class PatternValidation(NamedTuple):
    """Retrieval diagnostics of one pattern."""

    pattern: str
    fixed_point_residual: float
    convergence_residual: float
    leakage: float
    rate_residual: float
    max_iterations: int
    converged: bool


class QamReport(NamedTuple):
    """Outcome of checking a channel against the associative-memory conditions."""

    patterns: Tuple[PatternValidation, ...]
    spurious_residual: float
    cptp: CptpReport
    structure_violations: int
    tolerance: float

    @property
    def passed(self) -> bool:
        residuals = [self.spurious_residual]
        for entry in self.patterns:
            residuals += [
                entry.fixed_point_residual,
                entry.convergence_residual,
                entry.leakage,
                entry.rate_residual,
            ]

        return (
            self.cptp.passed
            and self.structure_violations == 0
            and all(p.converged for p in self.patterns)
            and max(residuals) < self.tolerance
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "spurious_mixture_residual": self.spurious_residual,
            "structure_violations": self.structure_violations,
            "cptp": {
                "completeness": self.cptp.completeness,
                "s_block": self.cptp.s_block,
                "sd_block": self.cptp.sd_block,
                "d_block": self.cptp.d_block,
                "lower_left": self.cptp.lower_left,
            },
            "patterns": [entry._asdict() for entry in self.patterns],
        }
