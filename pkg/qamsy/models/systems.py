"""Parameter sets of the concrete associative-memory systems."""

from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..errors import DuplicatePatterns, ModelError, NotSpinVector, TruncationTooSmall

DEFAULT_FOCK_DIM = 40
# Largest energy rise along a Hopfield run taken as rounding, relative to max(1, |E|)
ENERGY_TOLERANCE = 1e-12


class WalkSpec:
    """Dissipative walk on the n-dimensional hypercube.

    Nodes are bit strings; the first character is qubit 1 and the node's basis
    index is the string read as a binary number.
    """

    n_qubits: int
    patterns: Tuple[str, ...]
    gamma: float
    eta: float
    kappa: float

    def __init__(
        self,
        n_qubits: int,
        patterns: Sequence[str],
        gamma: float = 1.0,
        eta: float = 0.1,
        kappa: float = 0.0,
    ) -> None:
        if n_qubits < 1:
            raise ModelError(f"A walk needs at least one qubit, got {n_qubits}")

        for pattern in patterns:
            if len(pattern) != n_qubits or set(pattern) - {"0", "1"}:
                raise ModelError(f"Pattern {pattern!r} is not a bit string of length {n_qubits}")

        if len(set(patterns)) != len(patterns):
            duplicates = sorted({p for p in patterns if list(patterns).count(p) > 1})
            raise DuplicatePatterns(f"Patterns declared more than once: {', '.join(duplicates)}")

        if not patterns:
            raise ModelError("A walk needs at least one pattern")

        for name, rate in (("gamma", gamma), ("eta", eta), ("kappa", kappa)):
            if rate < 0:
                raise ModelError(f"Rate {name} must be non-negative, got {rate}")

        self.n_qubits = int(n_qubits)
        self.patterns = tuple(patterns)
        self.gamma = float(gamma)
        self.eta = float(eta)
        self.kappa = float(kappa)

    def __repr__(self) -> str:
        return (
            f"WalkSpec(n={self.n_qubits}, patterns={list(self.patterns)}, "
            f"gamma={self.gamma}, eta={self.eta}, kappa={self.kappa})"
        )

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def node(self, bits: str) -> int:
        """Basis index of a bit string."""

        if len(bits) != self.n_qubits or set(bits) - {"0", "1"}:
            raise ModelError(f"{bits!r} is not a bit string of length {self.n_qubits}")
        return int(bits, 2)

    def bits(self, node: int) -> str:
        return format(node, f"0{self.n_qubits}b")

    def with_rates(self, **rates: float) -> "WalkSpec":
        """A copy with some of gamma, eta, kappa replaced."""

        values = {"gamma": self.gamma, "eta": self.eta, "kappa": self.kappa}
        values.update(rates)
        return WalkSpec(self.n_qubits, self.patterns, **values)


class ResonatorSpec:
    """Driven-dissipative resonator with n-photon drive and damping.

    The drive of strength eta and phase theta_0 balances the n-photon loss
    gamma_n on n lobes of radius r = (2 eta / gamma_n)^(1/n) at angles
    theta_j = 2 pi j / n + theta_0.
    """

    n: int
    detuning: float
    eta: float
    theta0: float
    gamma_1: float
    gamma_n: float
    fock_dim: int

    def __init__(
        self,
        n: int,
        detuning: float,
        eta: float,
        gamma_1: float,
        gamma_n: float,
        theta0: float = 0.0,
        fock_dim: int = DEFAULT_FOCK_DIM,
    ) -> None:
        if n < 2:
            raise ModelError(f"Drive order must be at least 2, got {n}")

        if gamma_1 < 0 or gamma_n < 0 or eta < 0:
            raise ModelError("Drive and damping rates must be non-negative")

        if eta > 0 and gamma_n == 0:
            raise ModelError("A driven resonator needs nonlinear damping gamma_n > 0")

        self.n = int(n)
        self.detuning = float(detuning)
        self.eta = float(eta)
        self.theta0 = float(theta0)
        self.gamma_1 = float(gamma_1)
        self.gamma_n = float(gamma_n)
        self.fock_dim = int(fock_dim)

        mean = self.radius ** 2
        if self.fock_dim <= mean + 6 * np.sqrt(mean):
            raise TruncationTooSmall(
                f"Fock truncation {self.fock_dim} is too small for mean photon number {mean:.3f}"
            )

    def __repr__(self) -> str:
        return (
            f"ResonatorSpec(n={self.n}, detuning={self.detuning}, eta={self.eta}, "
            f"gamma_1={self.gamma_1}, gamma_n={self.gamma_n}, fock_dim={self.fock_dim})"
        )

    @property
    def radius(self) -> float:
        """r with r^n = 2 eta / gamma_n."""

        if self.eta == 0:
            return 0.0
        return float((2 * self.eta / self.gamma_n) ** (1.0 / self.n))

    @property
    def lobe_angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n) / self.n + self.theta0

    def with_rates(self, **values: float) -> "ResonatorSpec":
        """A copy with some parameters replaced."""

        params: Dict[str, float] = {
            "n": self.n,
            "detuning": self.detuning,
            "eta": self.eta,
            "gamma_1": self.gamma_1,
            "gamma_n": self.gamma_n,
            "theta0": self.theta0,
            "fock_dim": self.fock_dim,
        }
        params.update(values)
        return ResonatorSpec(**params)  # type: ignore


def spin_array(values: Sequence[int], what: str = "State") -> np.ndarray:
    """A +1/-1 integer vector, or NotSpinVector."""

    array = np.asarray(values)
    if array.ndim != 1 or array.size == 0 or not np.all(np.isin(array, (-1, 1))):
        raise NotSpinVector(f"{what} must be a non-empty vector of +1 and -1 entries")
    return array.astype(int)


class HopfieldNet:
    """Classical Hopfield network with symmetric couplings and zero self-coupling."""

    couplings: np.ndarray
    patterns: Tuple[np.ndarray, ...]

    def __init__(self, couplings: np.ndarray, patterns: Sequence[Sequence[int]] = ()) -> None:
        j = np.array(couplings, dtype=float)

        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ModelError(f"Couplings must be a square matrix, got shape {j.shape}")

        if not np.allclose(j, j.T):
            raise ModelError("Couplings must be symmetric")

        if np.any(np.diag(j) != 0):
            raise ModelError("Couplings must have a zero diagonal")

        stored = tuple(spin_array(p, "Pattern") for p in patterns)
        for pattern in stored:
            if pattern.shape[0] != j.shape[0]:
                raise NotSpinVector(f"Pattern has {pattern.shape[0]} entries, network has {j.shape[0]}")

        j.setflags(write=False)
        self.couplings = j
        self.patterns = stored

    def __repr__(self) -> str:
        return f"HopfieldNet(n={self.n_neurons}, patterns={len(self.patterns)})"

    @property
    def n_neurons(self) -> int:
        return self.couplings.shape[0]

    @property
    def load(self) -> float:
        """alpha = M / n"""
        return len(self.patterns) / self.n_neurons


class WalkCurve(NamedTuple):
    """Expectation values of basis-state projectors along a time grid.

    `values[j, k]` is tr(P_j rho(t_k)) for the j-th of `labels`.
    """

    times: np.ndarray
    labels: Tuple[str, ...]
    values: np.ndarray

    def final(self) -> Dict[str, float]:
        return {label: float(v[-1]) for label, v in zip(self.labels, self.values)}


class LobeBasins(NamedTuple):
    """Phase-space basin projectors of the resonator lobes.

    `completeness_residual` is max |sum_mu P_mu - I| over Fock states with at most
    r^2 photons.
    """

    projectors: Tuple[np.ndarray, ...]
    completeness_residual: float

    def assign(self, rho: np.ndarray, delta: float = 0.5) -> Optional[int]:
        """Basin holding more than `delta` of the state, if any."""

        weights = [float(np.real(np.trace(p @ rho))) for p in self.projectors]
        best = int(np.argmax(weights))
        return best if weights[best] > delta else None


class ClassificationReport(NamedTuple):
    """Outcome of classifying noisy inputs with the unambiguous lobe measurement.

    `confusion[true, outcome]` counts inputs; the last outcome column is the
    inconclusive one. Accuracies count conclusive outcomes only; inconclusive
    ones make up `unclassified_fraction`.
    """

    n_inputs: int
    delta: float
    t_measure: float
    accuracy: float
    unclassified_fraction: float
    per_class_accuracy: Tuple[float, ...]
    confusion: np.ndarray
    povm_scale: float
    seed: int


class CatRecoveryRecord(NamedTuple):
    """Overlap with the cat pattern and its sector population along one trajectory."""

    times: np.ndarray
    overlap: np.ndarray
    parity: np.ndarray
    reset_time: float
    jumps: List[Tuple[float, int]]


class HopfieldRun(NamedTuple):
    """States and energies visited by asynchronous updates.

    `energies[k]` is the energy measured at `states[k]`.
    """

    states: List[np.ndarray]
    energies: List[float]
    flips: int
    sweeps: int
    converged: bool

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def energy_monotone(self) -> bool:
        """No step raises the energy by more than rounding."""

        scale = max(1.0, float(np.max(np.abs(self.energies))))
        return bool(np.all(np.diff(self.energies) <= ENERGY_TOLERANCE * scale))


class HopfieldTrials(NamedTuple):
    """Retrieval statistics of a Hebbian network over seeded corrupted inputs.

    A trial succeeds when the network settles exactly on the pattern it was
    started near.
    """

    n_neurons: int
    n_patterns: int
    flip_fraction: float
    trials: int
    successes: int
    mean_overlap: float
    energy_monotone: bool
    seed: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def load(self) -> float:
        return self.n_patterns / self.n_neurons
