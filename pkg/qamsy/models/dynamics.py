"""Lindblad generators, spectra, metastable manifolds and trajectory records."""

import threading
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimMismatch, DynamicsError, NonHermitianH
from .channel import vec
from .states import DEFAULT_TOLERANCE, DensityOperator


class Liouvillian:
    """GKSL generator L(rho) = -i[H, rho] + sum_l g_l (F_l rho F_l^dag - {F_l^dag F_l, rho}/2).

    The N^2 x N^2 superoperator (column-stacking convention) is built on first use
    and cached.
    """

    hamiltonian: np.ndarray
    jump_ops: Tuple[Tuple[np.ndarray, float], ...]

    def __init__(
        self,
        hamiltonian: np.ndarray,
        jump_ops: Sequence[Tuple[np.ndarray, float]] = (),
        tol: float = DEFAULT_TOLERANCE,
    ) -> None:
        h = np.array(hamiltonian, dtype=complex)

        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DimMismatch(f"Hamiltonian must be square, got shape {h.shape}")

        if np.max(np.abs(h - h.conj().T), initial=0.0) > tol:
            raise NonHermitianH("Hamiltonian is not Hermitian")

        jumps = []
        for index, (op, rate) in enumerate(jump_ops):
            f = np.array(op, dtype=complex)
            if f.shape != h.shape:
                raise DimMismatch(f"Jump operator {index} has shape {f.shape}, expected {h.shape}")
            if rate < 0:
                raise DynamicsError(f"Jump operator {index} has negative rate {rate}")
            f.setflags(write=False)
            jumps.append((f, float(rate)))

        h.setflags(write=False)
        self.hamiltonian = h
        self.jump_ops = tuple(jumps)
        self._superop: Optional[np.ndarray] = None
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"Liouvillian(dim={self.dim}, jumps={len(self.jump_ops)})"

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def superop(self) -> np.ndarray:
        """Superoperator matrix acting on vec(rho)."""

        with self._lock:
            if self._superop is None:
                self._superop = self._build_superop()
                self._superop.setflags(write=False)
        return self._superop

    def _build_superop(self) -> np.ndarray:
        identity = np.eye(self.dim)
        h = self.hamiltonian
        superop = -1j * (np.kron(identity, h) - np.kron(h.T, identity))

        for f, rate in self.jump_ops:
            f_dag_f = f.conj().T @ f
            superop += rate * (
                np.kron(f.conj(), f)
                - 0.5 * np.kron(identity, f_dag_f)
                - 0.5 * np.kron(f_dag_f.T, identity)
            )

        return superop

    def action(self, rho: np.ndarray) -> np.ndarray:
        """L(rho) evaluated directly from H and the jump operators."""

        h = self.hamiltonian
        result = -1j * (h @ rho - rho @ h)
        for f, rate in self.jump_ops:
            f_dag_f = f.conj().T @ f
            result += rate * (f @ rho @ f.conj().T - 0.5 * (f_dag_f @ rho + rho @ f_dag_f))
        return result

    def adjoint_action(self, observable: np.ndarray) -> np.ndarray:
        """Heisenberg-picture generator acting on an observable."""

        h = self.hamiltonian
        result = 1j * (h @ observable - observable @ h)
        for f, rate in self.jump_ops:
            f_dag_f = f.conj().T @ f
            result += rate * (
                f.conj().T @ observable @ f - 0.5 * (f_dag_f @ observable + observable @ f_dag_f)
            )
        return result

    def effective_hamiltonian(self) -> np.ndarray:
        """Non-Hermitian H - (i/2) sum_l g_l F_l^dag F_l driving no-jump evolution."""

        h_eff = self.hamiltonian.astype(complex)
        for f, rate in self.jump_ops:
            h_eff = h_eff - 0.5j * rate * (f.conj().T @ f)
        return h_eff


class Spectrum:
    """The slowest eigenmodes of a Liouvillian.

    Eigenvalues are sorted by ascending |Re|, then |Im|. Left and right
    eigenmatrices are biorthonormal, tr(L_j^dag R_k) = delta_jk; right zero modes
    carry unit trace. A spectrum may also hold eigenvalues only.

    Modes of a non-diagonalizable eigenvalue are marked in `defective`; their left
    eigenmatrices are zero and they are left out of the biorthogonality residual.
    """

    eigenvalues: np.ndarray
    right: Optional[np.ndarray]
    left: Optional[np.ndarray]
    biorthogonality_residual: float
    total_modes: Optional[int]
    defective: np.ndarray

    def __init__(
        self,
        eigenvalues: Sequence[complex],
        right: Optional[np.ndarray] = None,
        left: Optional[np.ndarray] = None,
        biorthogonality_residual: float = 0.0,
        total_modes: Optional[int] = None,
        defective: Optional[Sequence[bool]] = None,
    ) -> None:
        self.eigenvalues = np.asarray(eigenvalues, dtype=complex)
        self.right = right
        self.left = left
        self.biorthogonality_residual = float(biorthogonality_residual)
        self.total_modes = total_modes
        if defective is None:
            defective = np.zeros(len(self.eigenvalues), dtype=bool)
        self.defective = np.asarray(defective, dtype=bool)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def __repr__(self) -> str:
        return f"Spectrum(modes={len(self)})"

    @property
    def rates(self) -> np.ndarray:
        """Decay rates -Re(lambda_k)."""
        return -self.eigenvalues.real

    @property
    def is_complete(self) -> bool:
        return self.right is not None and self.total_modes == len(self) and not self.defective.any()

    def coefficients(self, rho: np.ndarray) -> np.ndarray:
        """c_k = tr(L_k^dag rho)."""

        if self.left is None:
            raise DynamicsError("Spectrum holds no left eigenmatrices")
        return np.array([vec(left).conj() @ vec(rho) for left in self.left])

    def reconstruct(self, rho: np.ndarray, t: float) -> np.ndarray:
        """sum_k c_k e^{lambda_k t} R_k"""

        if self.right is None:
            raise DynamicsError("Spectrum holds no right eigenmatrices")

        weights = self.coefficients(rho) * np.exp(self.eigenvalues * t)
        return np.einsum("k,kij->ij", weights, self.right)


class MetastableManifold:
    """Slow modes below a spectral gap, with their metastable phases.

    The metastable regime starts at tau_s = -1/Re(lambda_{n+1}) and lasts until
    tau_f = -1/Re(lambda_n). `overlaps[mu, nu]` is tr(P_mu rho_nu); it equals the
    identity up to the classical corrections of the metastable decomposition.
    """

    n: int
    gap_ratio: float
    tau_s: float
    tau_f: float
    phases: Tuple[DensityOperator, ...]
    basin_observables: Tuple[np.ndarray, ...]
    overlaps: Optional[np.ndarray]
    identity_residual: Optional[float]

    def __init__(
        self,
        n: int,
        gap_ratio: float,
        tau_s: float,
        tau_f: float,
        phases: Sequence[DensityOperator] = (),
        basin_observables: Sequence[np.ndarray] = (),
    ) -> None:
        self.n = n
        self.gap_ratio = gap_ratio
        self.tau_s = tau_s
        self.tau_f = tau_f
        self.phases = tuple(phases)
        self.basin_observables = tuple(basin_observables)

        self.overlaps = None
        self.identity_residual = None
        if self.phases and self.basin_observables:
            self.overlaps = np.array(
                [[phase.expectation(p) for phase in self.phases] for p in self.basin_observables]
            )
            dim = self.phases[0].dim
            self.identity_residual = float(
                np.max(np.abs(sum(self.basin_observables) - np.eye(dim)))
            )

    def __repr__(self) -> str:
        return f"MetastableManifold(n={self.n}, gap_ratio={self.gap_ratio:.3g})"


class TrajectoryRecord(NamedTuple):
    """One quantum-jump trajectory.

    `states[k]` is the normalized state at `times[k]`; `jumps` lists
    (time, jump operator index) pairs.
    """

    times: np.ndarray
    states: List[np.ndarray]
    jumps: List[Tuple[float, int]]
    seed: int

    def expectation(self, observable: np.ndarray) -> np.ndarray:
        """<psi(t)|O|psi(t)> along the recorded times."""
        return np.array([np.real(psi.conj() @ observable @ psi) for psi in self.states])


class SymmetryReport(NamedTuple):
    hamiltonian_commutator: float
    jump_commutators: Tuple[float, ...]
    conservation_residual: float
    tolerance: float

    @property
    def is_strong(self) -> bool:
        return max((self.hamiltonian_commutator,) + self.jump_commutators) < self.tolerance

    @property
    def is_conserved(self) -> bool:
        return self.conservation_residual < self.tolerance


class ConservedProjectorReport(NamedTuple):
    """A projector is conserved by a channel iff it commutes with every Kraus operator."""

    commutator: float
    adjoint_residual: float
    tolerance: float

    @property
    def conserved(self) -> bool:
        return self.commutator < self.tolerance and self.adjoint_residual < self.tolerance

    @property
    def consistent(self) -> bool:
        return (self.commutator < self.tolerance) == (self.adjoint_residual < self.tolerance)


class EnsembleAverage(NamedTuple):
    """Observable curves averaged over independent trajectories.

    `means[j, k]` is the mean of observable j at `times[k]`.
    """

    times: np.ndarray
    means: np.ndarray
    standard_errors: np.ndarray
    jump_counts: np.ndarray
    seed: int
