"""QAM learning rule: Kraus operators from declared patterns.

The minimal solution uses two stable-only operators K_1, K_2, diagonal in the
eigenbasis of every pattern, plus one mixing operator per (pattern eigenvector,
decaying basis state) pair that moves the decaying state onto the pattern.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from ..errors import InconsistentLayout, RateOutOfRange, TooManyPatterns
from ..models.channel import MIXING_TAG, STABLE_DECAYING_TAG, STABLE_TAG, KrausChannel
from ..models.hilbert import DecayingBlock, DfsBlock, IrreducibleBlock, SpaceLayout
from ..models.patterns import (
    DecayProfile,
    DfsGroup,
    OrthogonalPattern,
    PatternSet,
    PatternValidation,
    QamReport,
    StableAmplitudes,
)
from ..models.states import DEFAULT_TOLERANCE, DensityOperator
from .hilbert import build_layout, embed, embed_operator, exclusive_projector
from .hilbert import pattern_keys, projector_onto
from .quantum import check_cptp, check_fixed_point, iterate_to_fixed_point, trace_distance
from .seeding import Seed, as_generator

logger = logging.getLogger(__name__)

PAULI_Y = np.array([[0, -1j], [1j, 0]])


def canonical_eigh(matrix: np.ndarray, tol: float = DEFAULT_TOLERANCE) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with a deterministic basis.

    Eigenvalues descend. Each eigenvector is phased so its first significant
    component is real and positive; eigenvectors of a degenerate eigenvalue are
    ordered lexicographically on the magnitudes of their components (largest first).
    """

    eigenvalues, eigenvectors = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    eigenvalues = eigenvalues[::-1]
    eigenvectors = eigenvectors[:, ::-1]

    for j in range(eigenvectors.shape[1]):
        column = eigenvectors[:, j]
        pivot = np.flatnonzero(np.abs(column) > tol)[0]
        eigenvectors[:, j] = column * (abs(column[pivot]) / column[pivot])

    order = sorted(
        range(len(eigenvalues)),
        key=lambda j: (
            -round(eigenvalues[j] / tol),
            tuple(-np.round(np.abs(eigenvectors[:, j]), 12)),
        ),
    )
    return eigenvalues[order], eigenvectors[:, order]


def stable_amplitudes(layout: SpaceLayout) -> StableAmplitudes:
    """Deterministic a-vectors (cos theta, sin theta) for every stable index.

    Angles are k*pi/K for the K stable indices (every basis index of an irreducible
    block, one per DFS block), so no two vectors are parallel.
    """

    count = sum(b.dim for b in layout.stable_blocks) + len(layout.dfs_blocks)
    angles = iter(np.arange(count) * np.pi / max(count, 1))

    rows = {}
    for block in layout.stable_blocks:
        thetas = np.array([next(angles) for _ in range(block.dim)])
        rows[block.label] = np.column_stack([np.cos(thetas), np.sin(thetas)])

    for dfs_block in layout.dfs_blocks:
        theta = next(angles)
        rows[dfs_block.label] = np.array([[np.cos(theta), np.sin(theta)]])

    return StableAmplitudes(rows)


def default_layout(pattern_set: PatternSet) -> SpaceLayout:
    """Canonical contiguous layout for a pattern set."""

    stable, dfs = pattern_set.layout_spec()
    return build_layout(stable=stable, dfs=dfs)


def check_layout(
    orthogonal: Sequence[OrthogonalPattern],
    dfs: Sequence[DfsGroup],
    layout: SpaceLayout,
    allow_unassigned: bool = False,
) -> None:
    """Raise InconsistentLayout unless the layout has one matching block per declared pattern."""

    if layout.unassigned and not allow_unassigned:
        raise InconsistentLayout("A QAM layout cannot leave basis states unassigned")

    if len(orthogonal) != len(layout.stable_blocks) or len(dfs) != len(layout.dfs_blocks):
        raise InconsistentLayout(
            f"Pattern set declares {len(orthogonal)} orthogonal patterns and {len(dfs)} DFS "
            f"blocks, layout has {len(layout.stable_blocks)} and {len(layout.dfs_blocks)}"
        )

    for pattern, block in zip(orthogonal, layout.stable_blocks):
        decaying = layout.decaying_block_for(block.label)
        if pattern.state.shape[0] != block.dim or pattern.decay_dim != decaying.dim:
            raise InconsistentLayout(f"Pattern dimensions do not match block {block.label!r}")

    for group, dfs_block in zip(dfs, layout.dfs_blocks):
        if group.dim != dfs_block.dim or len(group.patterns) != dfs_block.pattern_count:
            raise InconsistentLayout(f"DFS patterns do not match block {dfs_block.label!r}")

        for ell, d_dim in enumerate(group.decay_dims):
            if layout.decaying_block_for(dfs_block.label, ell).dim != d_dim:
                raise InconsistentLayout(
                    f"Decaying dimension of pattern {ell} does not match block {dfs_block.label!r}"
                )


class _Assembly:
    """Accumulates the stable-only operators and the mixing operators."""

    def __init__(self, layout: SpaceLayout, profile: DecayProfile) -> None:
        self.layout = layout
        self.profile = profile
        self.k1 = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
        self.k2 = np.zeros_like(self.k1)
        self.mixing: List[np.ndarray] = []

    def stable(self, a: np.ndarray, operator: np.ndarray) -> None:
        self.k1 += a[0] * operator
        self.k2 += a[1] * operator

    def decaying(self, block: DecayingBlock) -> List[Tuple[int, float]]:
        """Writes the c coefficients onto K_1, K_2; returns (index, kappa) per state."""

        coefficients = self.profile.coefficients(block.label, block.dim)
        rates = 1.0 - np.sum(np.abs(coefficients) ** 2, axis=1)

        if np.any(rates <= 0.0) or np.any(rates > 1.0):
            raise RateOutOfRange(f"Transfer rates of {block.label!r} must lie in (0, 1]")

        indices = self.layout.indices(block.label)
        for x, index in enumerate(indices):
            self.k1[index, index] = coefficients[x, 0]
            if coefficients.shape[1] > 1:
                self.k2[index, index] = coefficients[x, 1]

        return list(zip(indices, rates))

    def mix(self, target: np.ndarray, index: int, weight: float) -> None:
        """Adds sqrt(weight) |target><omega_index|."""

        op = np.zeros_like(self.k1)
        op[:, index] = np.sqrt(weight) * target
        self.mixing.append(op)

    def channel(self) -> KrausChannel:
        second_tag = STABLE_TAG
        if np.any(np.diag(self.k2)[self.layout.decaying_indices()]):
            second_tag = STABLE_DECAYING_TAG

        tags = [STABLE_DECAYING_TAG, second_tag] + [MIXING_TAG] * len(self.mixing)
        return KrausChannel([self.k1, self.k2] + self.mixing, layout=self.layout, block_tags=tags)


def _assemble(
    orthogonal: Sequence[OrthogonalPattern],
    dfs: Sequence[DfsGroup],
    profile: DecayProfile,
    layout: SpaceLayout,
) -> KrausChannel:
    check_layout(orthogonal, dfs, layout)

    amplitudes = stable_amplitudes(layout)
    assembly = _Assembly(layout, profile)

    for pattern, block in zip(orthogonal, layout.stable_blocks):
        weights, vectors = canonical_eigh(pattern.state)
        kets = [embed(vectors[:, j], block.label, layout) for j in range(block.dim)]

        for j, ket in enumerate(kets):
            assembly.stable(amplitudes[block.label][j], np.outer(ket, ket.conj()))

        for index, kappa in assembly.decaying(layout.decaying_block_for(block.label)):
            for weight, ket in zip(weights, kets):
                assembly.mix(ket, index, kappa * weight)

    for group, dfs_block in zip(dfs, layout.dfs_blocks):
        assembly.stable(amplitudes[dfs_block.label][0], projector_onto(dfs_block.label, layout))

        for ell, psi in enumerate(group.patterns):
            ket = embed(psi, dfs_block.label, layout)
            for index, kappa in assembly.decaying(layout.decaying_block_for(dfs_block.label, ell)):
                assembly.mix(ket, index, kappa)

    channel = assembly.channel()
    logger.info("Built %r for %d patterns", channel, len(layout.decaying_blocks))
    return channel


def build_orthogonal(
    patterns: Sequence[OrthogonalPattern], decay_profile: DecayProfile, layout: SpaceLayout
) -> KrausChannel:
    """QAM channel for orthogonal patterns.

    The layout must contain only irreducible blocks, one per pattern in order.
    """

    if layout.dfs_blocks:
        raise InconsistentLayout("Orthogonal-pattern layouts cannot contain DFS blocks")

    return _assemble(patterns, (), decay_profile, layout)


def build_dfs(
    groups: Sequence[DfsGroup], decay_profile: DecayProfile, layout: SpaceLayout
) -> KrausChannel:
    """QAM channel for pure patterns stored in decoherence-free blocks.

    The stable-only operators are proportional to the identity on every DFS
    block, so all coherences inside a block are preserved.
    """

    if layout.stable_blocks:
        raise InconsistentLayout("DFS layouts cannot contain irreducible blocks")

    return _assemble((), groups, decay_profile, layout)


def build_qam(pattern_set: PatternSet, layout: Optional[SpaceLayout] = None) -> KrausChannel:
    """QAM channel for a mixed orthogonal + DFS pattern set.

    Optionally specify a `layout`; defaults to the canonical one.
    """

    layout = layout or default_layout(pattern_set)
    return _assemble(pattern_set.orthogonal, pattern_set.dfs, pattern_set.decay_profile, layout)


def gus_unitary(pattern_count: int) -> np.ndarray:
    """U = exp(-i 2 pi sigma_y / M), so that U^M = I."""
    return expm(-2j * np.pi * PAULI_Y / pattern_count)


def gus_patterns(pattern_count: int, seed_state: Sequence[complex]) -> List[np.ndarray]:
    """Geometrically uniform patterns, pattern l (1-based) being U^l |psi>.

    Pattern l attracts the decaying states x with x mod M = l mod M; pattern M is
    |psi> itself.
    """

    psi = np.asarray(seed_state, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    unitary = gus_unitary(pattern_count)

    return [np.linalg.matrix_power(unitary, ell) @ psi for ell in range(1, pattern_count + 1)]


def basis_pattern_set(
    bit_strings: Sequence[str], decay_profile: Optional[DecayProfile] = None
) -> Tuple[PatternSet, SpaceLayout]:
    """Computational basis states of n qubits as rank-1 orthogonal patterns.

    Every other string decays to its nearest pattern in Hamming distance; ties
    go to the pattern declared first.
    """

    if not bit_strings:
        raise InconsistentLayout("At least one bit string is needed")

    n_qubits = len(bit_strings[0])
    for bits in bit_strings:
        if len(bits) != n_qubits or set(bits) - {"0", "1"}:
            raise InconsistentLayout(f"{bits!r} is not a bit string of length {n_qubits}")

    nodes = [int(bits, 2) for bits in bit_strings]
    if len(set(nodes)) != len(nodes):
        raise InconsistentLayout("Bit strings must be distinct")

    members: Dict[int, List[int]] = {mu: [] for mu in range(len(nodes))}
    for node in range(2 ** n_qubits):
        if node not in nodes:
            distances = [bin(node ^ p).count("1") for p in nodes]
            members[int(np.argmin(distances))].append(node)

    stable = [IrreducibleBlock(f"S{mu + 1}", 1) for mu in range(len(nodes))]
    decaying = [DecayingBlock(f"D{mu + 1}", len(members[mu]), f"S{mu + 1}") for mu in range(len(nodes))]

    basis_map = {f"S{mu + 1}": (node,) for mu, node in enumerate(nodes)}
    basis_map.update({f"D{mu + 1}": tuple(members[mu]) for mu in range(len(nodes))})

    layout = SpaceLayout(2 ** n_qubits, stable, decaying_blocks=decaying, basis_map=basis_map)
    pattern_set = PatternSet([([1.0], len(members[mu])) for mu in range(len(nodes))], decay_profile=decay_profile)
    return pattern_set, layout


def gus_layout(n_qubits: int, pattern_count: int) -> SpaceLayout:
    """One 2-dimensional DFS (global indices 0, 1) and 2^n decaying states.

    Decaying state |x> sits at global index 2 + x and belongs to basin l with
    x mod M = l mod M.
    """

    decaying_count = 2 ** n_qubits
    if pattern_count > decaying_count:
        raise TooManyPatterns(
            f"{pattern_count} patterns need more than the {decaying_count} decaying states"
        )

    if pattern_count < 1:
        raise TooManyPatterns("A GUS memory needs at least one pattern")

    members = [
        [x for x in range(decaying_count) if x % pattern_count == ell % pattern_count]
        for ell in range(1, pattern_count + 1)
    ]

    dfs = DfsBlock("X1", 2, pattern_count)
    decaying = [
        DecayingBlock(f"X1/D{ell + 1}", len(xs), "X1", ell) for ell, xs in enumerate(members)
    ]
    basis_map = {"X1": (0, 1)}
    basis_map.update({block.label: tuple(2 + x for x in xs) for block, xs in zip(decaying, members)})

    return SpaceLayout(2 + decaying_count, dfs_blocks=[dfs], decaying_blocks=decaying, basis_map=basis_map)


def gus_pattern_set(
    n_qubits: int,
    pattern_count: int,
    seed_state: Sequence[complex] = (1, 0),
    decay_profile: Optional[DecayProfile] = None,
) -> Tuple[PatternSet, SpaceLayout]:
    """GUS patterns with their layout."""

    layout = gus_layout(n_qubits, pattern_count)
    patterns = gus_patterns(pattern_count, seed_state)
    decay_dims = [b.dim for b in layout.decaying_blocks]

    return PatternSet(dfs=[(2, patterns, decay_dims)], decay_profile=decay_profile), layout


def build_gus(
    n_qubits: int,
    pattern_count: int,
    seed_state: Sequence[complex] = (1, 0),
    decay_profile: Optional[DecayProfile] = None,
) -> KrausChannel:
    """GUS associative memory on n qubits plus a 2-dimensional DFS.

    Written out explicitly: K_1 = a_1 I_S + sum_x c_x |omega_x><omega_x|,
    K_2 = a_2 I_S, and one K_x = sqrt(kappa_x) |psi_l><omega_x| per decaying state,
    l being the basin of x.
    """

    pattern_set, layout = gus_pattern_set(n_qubits, pattern_count, seed_state, decay_profile)
    profile = pattern_set.decay_profile
    a = stable_amplitudes(layout)["X1"][0]
    dim = layout.total_dim

    identity_s = projector_onto("X1", layout)
    k1 = a[0] * identity_s
    k2 = a[1] * identity_s
    mixing = []

    for block, psi in zip(layout.decaying_blocks, pattern_set.dfs[0].patterns):
        coefficients = profile.coefficients(block.label, block.dim)
        target = embed(psi, "X1", layout)

        for x, index in enumerate(layout.indices(block.label)):
            k1[index, index] = coefficients[x, 0]
            if coefficients.shape[1] > 1:
                k2[index, index] = coefficients[x, 1]

            kappa = 1.0 - np.sum(np.abs(coefficients[x]) ** 2)
            op = np.zeros((dim, dim), dtype=complex)
            op[:, index] = np.sqrt(kappa) * target
            mixing.append(op)

    logger.info("Built GUS memory with n=%d, M=%d", n_qubits, pattern_count)
    tags = [STABLE_DECAYING_TAG, STABLE_TAG] + [MIXING_TAG] * len(mixing)
    return KrausChannel([k1, k2] + mixing, layout=layout, block_tags=tags)


def pattern_states(pattern_set: PatternSet, layout: SpaceLayout) -> Dict[Tuple[str, int], DensityOperator]:
    """Declared patterns as global density operators, keyed by (block, pattern index)."""

    states = {}
    for pattern, block in zip(pattern_set.orthogonal, layout.stable_blocks):
        states[(block.label, 0)] = DensityOperator(embed_operator(pattern.state, block.label, layout))

    for group, dfs_block in zip(pattern_set.dfs, layout.dfs_blocks):
        for ell, psi in enumerate(group.patterns):
            states[(dfs_block.label, ell)] = DensityOperator.pure(embed(psi, dfs_block.label, layout))

    return states


def structure_violations(channel: KrausChannel, tol: float = DEFAULT_TOLERANCE) -> int:
    """Number of Kraus operators carrying both a stable block and a stable-decaying block."""

    if channel.layout is None:
        return 0

    stable = channel.layout.stable_indices()
    decaying = channel.layout.decaying_indices()

    violations = 0
    for op in channel.kraus_ops:
        a_part = np.max(np.abs(op[np.ix_(stable, stable)]), initial=0.0)
        b_part = np.max(np.abs(op[np.ix_(stable, decaying)]), initial=0.0)
        if a_part > tol and b_part > tol:
            violations += 1

    return violations


def validate_qam(
    channel: KrausChannel,
    pattern_set: PatternSet,
    layout: SpaceLayout,
    tol: float = 1e-8,
    max_iters: int = 10_000,
) -> QamReport:
    """Check a channel against the associative-memory conditions.

    Per pattern: the fixed-point residual; the trace distance to the pattern reached
    from every decaying basis state of its basin; the largest weight leaking into any
    other basin; and the deviation of the one-step transferred weight from kappa_x.
    Also checks that the uniform mixture of all patterns is a fixed point.
    """

    states = pattern_states(pattern_set, layout)
    keys = pattern_keys(layout)
    stable_projector = projector_onto(layout.stable_labels, layout)
    dim = layout.total_dim

    entries = []
    for key in keys:
        target = states[key]
        decaying = layout.decaying_block_for(*key)
        rates = pattern_set.decay_profile.rates(decaying.label, decaying.dim)

        convergence = leakage = rate_residual = 0.0
        iterations = 0
        converged = True

        for x, index in enumerate(layout.indices(decaying.label)):
            start = DensityOperator.basis(dim, index)

            transferred = np.real(np.trace(stable_projector @ channel.action(start.matrix)))
            rate_residual = max(rate_residual, abs(transferred - rates[x]))

            result = iterate_to_fixed_point(channel, start, max_iters=max_iters, tol=tol * 1e-3)
            iterations = max(iterations, result.iterations)
            converged = converged and result.converged
            convergence = max(convergence, trace_distance(result.state, target))

            for other in keys:
                if other != key:
                    leaked = result.state.expectation(exclusive_projector(layout, key, other))
                    leakage = max(leakage, abs(leaked))

        entries.append(
            PatternValidation(
                pattern=pattern_label(key, layout),
                fixed_point_residual=check_fixed_point(channel, target).residual,
                convergence_residual=convergence,
                leakage=leakage,
                rate_residual=float(rate_residual),
                max_iterations=iterations,
                converged=converged,
            )
        )

    mixture = DensityOperator.mixture(states.values(), [1.0 / len(states)] * len(states))

    report = QamReport(
        patterns=tuple(entries),
        spurious_residual=check_fixed_point(channel, mixture).residual,
        cptp=check_cptp(channel),
        structure_violations=structure_violations(channel),
        tolerance=tol,
    )
    logger.info("QAM validation %s", "passed" if report.passed else "FAILED")
    return report


def pattern_label(key: Tuple[str, int], layout: SpaceLayout) -> str:
    target, pattern = key
    if isinstance(layout.block(target), DfsBlock):
        return f"{target}[{pattern + 1}]"
    return target


def _random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    matrix = ginibre @ ginibre.conj().T + 0.1 * np.eye(dim)
    return matrix / np.trace(matrix).real


def _random_pure(rng: np.random.Generator, dim: int) -> np.ndarray:
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return vector / np.linalg.norm(vector)


def random_pattern_set(seed: Seed, max_dim: int = 16) -> PatternSet:
    """Seeded random mix of orthogonal and DFS patterns fitting in `max_dim` dimensions."""

    rng = as_generator(seed)

    while True:
        orthogonal = []
        for _ in range(rng.integers(0, 4)):
            s_dim = int(rng.integers(1, 4))
            orthogonal.append((_random_density(rng, s_dim), int(rng.integers(1, 3))))

        dfs = []
        for _ in range(rng.integers(0, 3)):
            s_dim = int(rng.integers(1, 4))
            count = int(rng.integers(1, 4))
            patterns = [_random_pure(rng, s_dim) for _ in range(count)]
            dfs.append((s_dim, patterns, [int(d) for d in rng.integers(1, 3, size=count)]))

        total = sum(s.shape[0] + d for s, d in orthogonal)
        total += sum(s + sum(d) for s, _, d in dfs)

        if orthogonal or dfs:
            if total <= max_dim:
                kappa = float(rng.uniform(0.2, 1.0))
                return PatternSet(orthogonal, dfs, DecayProfile(kappa))
