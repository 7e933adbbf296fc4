"""Lindblad dynamics services: evolution, spectra, metastability and symmetries."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.cluster.vq import kmeans2
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import expm_multiply

from ..errors import DimMismatch, DynamicsError, EigensolverFailure, NoGapFound, NotAProjector, NotClassical
from ..models.channel import KrausChannel, unvec, vec
from ..models.dynamics import (
    ConservedProjectorReport,
    Liouvillian,
    MetastableManifold,
    Spectrum,
    SymmetryReport,
)
from ..models.states import DEFAULT_TOLERANCE, DensityOperator
from .seeding import Seed, as_generator

logger = logging.getLogger(__name__)

# Largest superoperator (dim^2) propagated with a dense matrix exponential
DENSE_EXPM_LIMIT = 4096
DEFAULT_GAP_THRESHOLD = 5.0
# Eigenvalues closer than this, relative to max(1, |lambda|), form one cluster
CLUSTER_TOLERANCE = 1e-6
# Smallest singular value of a cluster's Gram matrix L_c^dag R_c for a diagonalizable cluster
DEFECT_LIMIT = 1e-6
# Metastable phases closer than this in trace distance are not disjoint
DISJOINT_LIMIT = 0.5


def build_liouvillian(
    hamiltonian: np.ndarray,
    jumps: Sequence[Tuple[np.ndarray, float]] = (),
    tol: float = DEFAULT_TOLERANCE,
) -> Liouvillian:
    """GKSL generator from a Hamiltonian and (jump operator, rate) pairs."""

    liouvillian = Liouvillian(hamiltonian, jumps, tol=tol)
    logger.debug("Built %r", liouvillian)
    return liouvillian


def _check_dims(liouvillian: Liouvillian, state: DensityOperator) -> None:
    if state.dim != liouvillian.dim:
        raise DimMismatch(f"Liouvillian acts on dimension {liouvillian.dim}, state has {state.dim}")


def _propagate(
    liouvillian: Liouvillian, vectors: np.ndarray, t: float, spectrum: Optional[Spectrum] = None
) -> np.ndarray:
    """e^{tL} applied to vectorized states (one per column, or a single vector)."""

    size = liouvillian.dim ** 2

    if size <= DENSE_EXPM_LIMIT:
        return scipy.linalg.expm(t * liouvillian.superop) @ vectors

    complete = spectrum is not None and spectrum.is_complete
    if complete and spectrum.right is not None and spectrum.left is not None:
        right = np.column_stack([vec(m) for m in spectrum.right])
        left = np.column_stack([vec(m) for m in spectrum.left])

        factors = np.exp(spectrum.eigenvalues * t)
        weights = left.conj().T @ vectors
        if weights.ndim == 2:
            factors = factors[:, None]
        return right @ (factors * weights)

    return expm_multiply(t * csr_matrix(liouvillian.superop), vectors)


def evolve(
    liouvillian: Liouvillian,
    rho0: DensityOperator,
    t: float,
    spectrum: Optional[Spectrum] = None,
    tol: float = DEFAULT_TOLERANCE,
) -> DensityOperator:
    """rho(t) = e^{tL} rho0.

    Uses the dense Pade matrix exponential up to dim^2 = 4096, above that the
    spectral decomposition when a complete one is supplied, else a Krylov action.
    """

    _check_dims(liouvillian, rho0)

    if t < 0:
        raise DynamicsError(f"Cannot evolve backwards in time (t={t})")

    if t == 0:
        return rho0

    evolved = _propagate(liouvillian, vec(rho0.matrix), t, spectrum)
    return DensityOperator(unvec(evolved, liouvillian.dim), tol=tol)


def evolve_series(
    liouvillian: Liouvillian,
    rho0: DensityOperator,
    times: Sequence[float],
    tol: float = DEFAULT_TOLERANCE,
) -> List[DensityOperator]:
    """States along a non-decreasing time grid starting at t >= 0."""

    _check_dims(liouvillian, rho0)
    grid = np.asarray(times, dtype=float)

    if grid.size and (grid[0] < 0 or np.any(np.diff(grid) < 0)):
        raise DynamicsError("Time grid must be non-negative and non-decreasing")

    dense = liouvillian.dim ** 2 <= DENSE_EXPM_LIMIT
    steps: Dict[float, np.ndarray] = {}

    states = []
    current = vec(rho0.matrix)
    previous = 0.0

    for t in grid:
        dt = float(t - previous)
        if dt > 0:
            if dense:
                if dt not in steps:
                    steps[dt] = scipy.linalg.expm(dt * liouvillian.superop)
                current = steps[dt] @ current
            else:
                current = expm_multiply(dt * csr_matrix(liouvillian.superop), current)
        previous = float(t)
        states.append(DensityOperator(unvec(current, liouvillian.dim), tol=tol))

    return states


def steady_state(liouvillian: Liouvillian, tol: float = DEFAULT_TOLERANCE) -> DensityOperator:
    """The stationary state, assuming it is unique.

    Solves L vec(rho) = 0 with one equation replaced by the trace condition.
    """

    dim = liouvillian.dim
    system = np.array(liouvillian.superop)
    system[0, :] = vec(np.eye(dim))
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0

    try:
        solution = scipy.linalg.solve(system, rhs)
    except scipy.linalg.LinAlgError as error:
        raise EigensolverFailure(f"Steady state is not unique: {error}") from error

    rho = unvec(solution, dim)
    return DensityOperator(_clamp(rho), tol=tol)


def _biorthonormalize(
    eigenvalues: np.ndarray, left: np.ndarray, right: np.ndarray, dim: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Dual left eigenvectors, cluster by cluster of nearly equal eigenvalues.

    Within a cluster the left vectors are solved against the Gram matrix
    L_c^dag R_c, and the basis is rotated so that at most one right vector has a
    trace. Clusters with a singular Gram matrix are defective: their left vectors
    are zeroed. Returns (left, right, cluster centres, defective mask).
    """

    magnitude = np.maximum(1.0, np.abs(eigenvalues))
    distance = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
    close = distance <= CLUSTER_TOLERANCE * np.maximum(magnitude[:, None], magnitude[None, :])
    count, labels = connected_components(csr_matrix(close), directed=False)

    dual = np.zeros_like(left)
    rotated = right.copy()
    centres = np.zeros_like(eigenvalues)
    defective = np.zeros(len(eigenvalues), dtype=bool)
    diagonal = np.arange(dim) * (dim + 1)

    for cluster in range(count):
        members = np.flatnonzero(labels == cluster)
        centres[members] = eigenvalues[members].mean()
        gram = left[:, members].conj().T @ right[:, members]

        if np.linalg.svd(gram, compute_uv=False).min() < DEFECT_LIMIT:
            defective[members] = True
            continue

        l_c = left[:, members] @ np.linalg.inv(gram).conj().T
        r_c = right[:, members]

        traces = r_c[diagonal].sum(axis=0)
        if members.size > 1 and np.linalg.norm(traces) > 1e-8:
            unitary, _ = np.linalg.qr(traces.conj().reshape(-1, 1), mode="complete")
            l_c, r_c = l_c @ unitary, r_c @ unitary

        dual[:, members] = l_c
        rotated[:, members] = r_c

    # Clusters are biorthonormal on their own; remove the cross-cluster residue
    regular = ~defective
    if regular.any():
        overlap = dual[:, regular].conj().T @ rotated[:, regular]
        try:
            dual[:, regular] = dual[:, regular] @ np.linalg.inv(overlap).conj().T
        except np.linalg.LinAlgError as error:
            raise EigensolverFailure(f"Eigenmatrices are not linearly independent: {error}") from error

    return dual, rotated, centres, defective


def spectrum_of(liouvillian: Liouvillian, k: Optional[int] = None) -> Spectrum:
    """The k slowest eigenmodes (all of them by default) with biorthonormal eigenmatrices.

    Degenerate eigenvalues are handled cluster by cluster, so a repeated zero
    eigenvalue (several stationary states) is fine. Non-diagonalizable eigenvalues
    are reported as defective modes instead of failing.
    """

    dim = liouvillian.dim

    try:
        eigenvalues, left, right = scipy.linalg.eig(liouvillian.superop, left=True, right=True)
    except (scipy.linalg.LinAlgError, ValueError) as error:
        raise EigensolverFailure(f"Liouvillian diagonalization failed: {error}") from error

    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if np.max(eigenvalues.real) > 1e-8 * scale:
        raise EigensolverFailure(
            f"Liouvillian has an eigenvalue with positive real part {np.max(eigenvalues.real):.3e}"
        )

    left, right, centres, defective = _biorthonormalize(eigenvalues, left, right, dim)

    traced = np.abs(right[np.arange(dim) * (dim + 1)].sum(axis=0)) > 1e-8
    order = np.lexsort((~traced, np.abs(centres.imag), np.abs(centres.real)))
    if k is not None:
        order = order[:k]

    rights = []
    lefts = []
    for index in order:
        r_mat = unvec(right[:, index], dim)
        l_mat = unvec(left[:, index], dim)

        norm = np.trace(r_mat)
        if abs(norm) < 1e-8:
            norm = np.linalg.norm(r_mat)

        rights.append(r_mat / norm)
        lefts.append(l_mat * np.conj(norm))

    right_stack = np.array(rights)
    left_stack = np.array(lefts)

    regular = ~defective[order]
    residual = 0.0
    if regular.any():
        gram = np.einsum("jab,kab->jk", left_stack[regular].conj(), right_stack[regular])
        residual = float(np.max(np.abs(gram - np.eye(int(regular.sum())))))

    if residual > 1e-8:
        raise EigensolverFailure(f"Eigenmatrices lost biorthogonality (residual {residual:.3e})")

    if not regular.all():
        logger.warning(
            "%d of %d modes belong to non-diagonalizable eigenvalues", int((~regular).sum()), len(order)
        )

    logger.info("Diagonalized %r, slowest rates %s", liouvillian, -eigenvalues[order[:4]].real)
    return Spectrum(
        eigenvalues[order],
        right=right_stack,
        left=left_stack,
        biorthogonality_residual=residual,
        total_modes=dim * dim,
        defective=~regular,
    )


def _choose_manifold(rates: np.ndarray, threshold: float, tol: float) -> Tuple[int, float]:
    """Largest n whose gap ratio rate_{n+1} / rate_n exceeds the threshold.

    A manifold has at least two modes. Zero rates below a nonzero one count as an
    infinite ratio; a run of zero rates is no gap at all.
    """

    zero = tol * max(1.0, float(np.max(np.abs(rates))))
    chosen = None

    for n in range(2, len(rates)):
        slow, fast = rates[n - 1], rates[n]

        if slow <= zero:
            if fast <= zero:
                continue
            ratio = float("inf")
        else:
            ratio = fast / slow

        if ratio > threshold:
            chosen = (n, ratio)

    if chosen is None:
        raise NoGapFound(f"No gap ratio above {threshold} among {len(rates)} modes")

    return chosen


def _clamp(matrix: np.ndarray) -> np.ndarray:
    """Nearest unit-trace positive matrix by clipping eigenvalues."""

    hermitian = (matrix + matrix.conj().T) / 2
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian)
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    eigenvalues /= eigenvalues.sum()
    return (eigenvectors * eigenvalues) @ eigenvectors.conj().T


def detect_metastable_manifold(
    spectrum: Spectrum,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    liouvillian: Optional[Liouvillian] = None,
    probes: Sequence[Sequence[complex]] = (),
    seed: Seed = 0,
    tol: float = DEFAULT_TOLERANCE,
) -> MetastableManifold:
    """Find the metastable manifold below the largest qualifying spectral gap.

    With a Liouvillian, also extracts the metastable phases: probe states (every
    basis state plus the given pure `probes`) are evolved to 3 tau_s, clustered on
    their slow-mode coordinates, and each cluster's most extreme members are averaged
    into a phase. The basin observables P_mu are the dual basis of the phases within
    the span of the left eigenmatrices.

    A manifold that is not a mixture of n disjoint phases (e.g. one holding
    preserved coherences) is returned without phases.
    """

    rates = spectrum.rates
    n, ratio = _choose_manifold(rates, gap_threshold, tol)
    tau_s = 1.0 / rates[n]
    tau_f = 1.0 / rates[n - 1] if rates[n - 1] > 0 else float("inf")
    logger.info("Metastable manifold with n=%d (gap ratio %.3g)", n, ratio)

    if liouvillian is None or spectrum.left is None:
        return MetastableManifold(n, ratio, tau_s, tau_f)

    if spectrum.defective[:n].any():
        logger.warning("Slow modes are not diagonalizable, metastable phases are not extracted")
        return MetastableManifold(n, ratio, tau_s, tau_f)

    try:
        phases = _metastable_phases(liouvillian, spectrum, n, 3 * tau_s, probes, seed)
        observables = _basin_observables(spectrum, n, phases)
    except NotClassical as error:
        logger.warning("Metastable manifold with n=%d has no classical phases: %s", n, error)
        return MetastableManifold(n, ratio, tau_s, tau_f)

    manifold = MetastableManifold(
        n, ratio, tau_s, tau_f, [DensityOperator(p, tol=max(tol, 1e-8)) for p in phases], observables
    )

    if manifold.overlaps is not None:
        correction = np.max(np.abs(manifold.overlaps - np.eye(n)))
        if correction > 0.05:
            logger.warning("Metastable phases overlap their basins by up to %.3f", correction)

    return manifold


def _metastable_phases(
    liouvillian: Liouvillian,
    spectrum: Spectrum,
    n: int,
    t_probe: float,
    probes: Sequence[Sequence[complex]],
    seed: Seed,
) -> List[np.ndarray]:
    dim = liouvillian.dim

    initial = [np.eye(dim)[:, [k]] for k in range(dim)]
    for probe in probes:
        psi = np.asarray(probe, dtype=complex).reshape(-1, 1)
        initial.append(psi / np.linalg.norm(psi))

    start = np.column_stack([vec(psi @ psi.conj().T) for psi in initial])
    evolved = _propagate(liouvillian, start, t_probe)
    states = [unvec(evolved[:, p], dim) for p in range(evolved.shape[1])]

    coordinates = np.array([spectrum.coefficients(rho)[1:n] for rho in states])
    features = np.hstack([coordinates.real, coordinates.imag])

    rng = as_generator(seed)
    _, labels = kmeans2(features, n, minit="++", seed=rng)

    centre = features.mean(axis=0)
    distance = np.linalg.norm(features - centre, axis=1)

    phases = []
    for cluster in range(n):
        members = np.flatnonzero(labels == cluster)
        if members.size == 0:
            raise NotClassical("Probe states do not populate every metastable phase")

        extreme = members[distance[members] >= 0.9 * distance[members].max()]
        phases.append(_clamp(np.mean([states[p] for p in extreme], axis=0)))

    for mu in range(n):
        for nu in range(mu):
            separation = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(phases[mu] - phases[nu])))
            if separation < DISJOINT_LIMIT:
                raise NotClassical(f"Phases {nu} and {mu} are not disjoint (trace distance {separation:.3f})")

    return phases


def _basin_observables(spectrum: Spectrum, n: int, phases: List[np.ndarray]) -> List[np.ndarray]:
    """P_mu = sum_k D[mu, k] L_k^dag with D the inverse of C[k, nu] = tr(L_k^dag rho_nu)."""

    if spectrum.left is None:
        raise DynamicsError("Spectrum holds no left eigenmatrices")

    coordinates = np.column_stack([spectrum.coefficients(rho)[:n] for rho in phases])

    try:
        dual = np.linalg.inv(coordinates)
    except np.linalg.LinAlgError as error:
        raise NotClassical("Metastable phases are not linearly independent") from error

    observables = []
    for mu in range(n):
        p_mu = sum(dual[mu, k] * spectrum.left[k].conj().T for k in range(n))
        observables.append((p_mu + p_mu.conj().T) / 2)

    return observables


def assign_basin(manifold: MetastableManifold, state: DensityOperator) -> Optional[int]:
    """Index of the basin holding at least half of the state, or None if unassigned."""

    weights = [state.expectation(p) for p in manifold.basin_observables]
    if not weights:
        return None

    best = int(np.argmax(weights))
    return best if weights[best] >= 0.5 else None


def _random_states(dim: int, count: int, seed: Seed) -> List[np.ndarray]:
    rng = as_generator(seed)
    states = []
    for _ in range(count):
        ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = ginibre @ ginibre.conj().T
        states.append(rho / np.trace(rho).real)
    return states


def check_strong_symmetry(
    liouvillian: Liouvillian,
    symmetry: np.ndarray,
    tol: float = DEFAULT_TOLERANCE,
    samples: int = 8,
    seed: Seed = 0,
) -> SymmetryReport:
    """Does `symmetry` commute with H and with every jump operator?

    Also checks on seeded random states that tr(J rho) is conserved, i.e. that
    tr(J L(rho)) vanishes.
    """

    j = np.asarray(symmetry, dtype=complex)
    if j.shape != liouvillian.hamiltonian.shape:
        raise DimMismatch(f"Symmetry has shape {j.shape}, Liouvillian acts on {liouvillian.dim}")

    def commutator(op: np.ndarray) -> float:
        return float(np.max(np.abs(j @ op - op @ j)))

    hamiltonian = commutator(liouvillian.hamiltonian)
    jumps = tuple(commutator(f) for f, _ in liouvillian.jump_ops)

    conservation = max(
        abs(np.trace(j @ liouvillian.action(rho)))
        for rho in _random_states(liouvillian.dim, samples, seed)
    )

    return SymmetryReport(hamiltonian, jumps, float(conservation), tol)


def check_conserved_projector(
    channel: KrausChannel, projector: np.ndarray, tol: float = DEFAULT_TOLERANCE
) -> ConservedProjectorReport:
    """Is the projector conserved by the channel?

    Reports max ||[J, K_a]|| and ||Lambda^dag(J) - J||; a projector is conserved
    exactly when it commutes with every Kraus operator, so both residuals are small
    together or large together.
    """

    j = np.asarray(projector, dtype=complex)
    if j.shape != (channel.dim, channel.dim):
        raise DimMismatch(f"Projector has shape {j.shape}, channel acts on {channel.dim}")

    if np.max(np.abs(j - j.conj().T)) > tol or np.max(np.abs(j @ j - j)) > tol:
        raise NotAProjector("Operator is not a Hermitian idempotent")

    commutator = max(float(np.max(np.abs(j @ k - k @ j))) for k in channel.kraus_ops)
    adjoint = float(np.max(np.abs(channel.adjoint_action(j) - j)))

    report = ConservedProjectorReport(commutator, adjoint, tol)
    if not report.consistent:
        logger.warning(
            "Commutator %.3e and adjoint residual %.3e disagree at tolerance %.1e",
            commutator,
            adjoint,
            tol,
        )
    return report
