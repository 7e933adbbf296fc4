"""Dissipative quantum walk on the hypercube.

Bit strings are the nodes. Jumps move the walker one bit flip closer to its
nearest pattern; a Hamiltonian couples neighbouring nodes coherently, with
strength eta inside a basin and kappa across basins.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ZeroBasin
from ..models.dynamics import Liouvillian
from ..models.hilbert import DecayingBlock, DfsBlock, SpaceLayout
from ..models.patterns import PatternSet
from ..models.states import DensityOperator
from ..models.systems import WalkCurve, WalkSpec
from ..services.lindblad import build_liouvillian, evolve_series

logger = logging.getLogger(__name__)


def hamming(first: int, second: int) -> int:
    return bin(first ^ second).count("1")


def _basins(spec: WalkSpec) -> Tuple[List[int], List[Optional[int]]]:
    """Distance to the nearest pattern and the index of that pattern (None on ties)."""

    nodes = [spec.node(p) for p in spec.patterns]
    nearest = []
    basin: List[Optional[int]] = []

    for node in range(spec.dim):
        distances = [hamming(node, p) for p in nodes]
        closest = min(distances)
        nearest.append(closest)
        winners = [mu for mu, d in enumerate(distances) if d == closest]
        basin.append(winners[0] if len(winners) == 1 else None)

    return nearest, basin


def walk_layout(spec: WalkSpec) -> SpaceLayout:
    """Patterns share one decoherence-free block; each basin is a decaying block.

    Nodes equidistant from two or more patterns are left unassigned.
    """

    _, basin = _basins(spec)
    patterns = [spec.node(p) for p in spec.patterns]
    pattern_nodes = set(patterns)

    members: Dict[int, List[int]] = {mu: [] for mu in range(len(patterns))}
    unassigned = []
    for node in range(spec.dim):
        if node in pattern_nodes:
            continue
        if basin[node] is None:
            unassigned.append(node)
        else:
            members[basin[node]].append(node)  # type: ignore

    for mu, nodes in members.items():
        if not nodes:
            raise ZeroBasin(f"Pattern {spec.patterns[mu]!r} has no decaying nodes")

    decaying = [
        DecayingBlock(f"X1/D{mu + 1}", len(nodes), "X1", mu) for mu, nodes in members.items()
    ]
    basis_map = {"X1": patterns}
    basis_map.update({block.label: members[block.pattern] for block in decaying})

    return SpaceLayout(
        spec.dim,
        dfs_blocks=[DfsBlock("X1", len(patterns), len(patterns))],
        decaying_blocks=decaying,
        basis_map=basis_map,
        unassigned=unassigned,
    )


def build_walk(spec: WalkSpec) -> Tuple[Liouvillian, SpaceLayout, PatternSet]:
    """Liouvillian, basin layout and pattern set of a hypercube walk.

    A jump |w'><w| at rate gamma exists for every non-pattern node w and neighbour
    w' strictly closer to the patterns. H couples neighbouring non-pattern nodes
    with eta inside a basin and kappa otherwise, and puts eta on the diagonal of
    non-pattern nodes that belong to a basin. Pattern rows and columns of H vanish.
    """

    nearest, basin = _basins(spec)
    pattern_nodes = {spec.node(p) for p in spec.patterns}
    layout = walk_layout(spec)

    hamiltonian = np.zeros((spec.dim, spec.dim), dtype=complex)
    jumps = []

    for node in range(spec.dim):
        if node in pattern_nodes:
            continue

        if basin[node] is not None:
            hamiltonian[node, node] = spec.eta

        for bit in range(spec.n_qubits):
            neighbour = node ^ (1 << bit)

            if nearest[neighbour] < nearest[node]:
                jump = np.zeros((spec.dim, spec.dim), dtype=complex)
                jump[neighbour, node] = 1.0
                jumps.append((jump, spec.gamma))

            if neighbour in pattern_nodes or neighbour < node:
                continue

            same_basin = basin[node] is not None and basin[node] == basin[neighbour]
            strength = spec.eta if same_basin else spec.kappa
            hamiltonian[node, neighbour] = hamiltonian[neighbour, node] = strength

    m = len(spec.patterns)
    pattern_set = PatternSet(
        dfs=[(m, list(np.eye(m)), [layout.decaying_block_for("X1", mu).dim for mu in range(m)])]
    )

    logger.info("Built %r with %d jump operators", spec, len(jumps))
    return build_liouvillian(hamiltonian, jumps), layout, pattern_set


def walk_retrieval_curve(
    spec: WalkSpec,
    initial: str,
    times: Sequence[float],
    observables: Optional[Sequence[str]] = None,
) -> WalkCurve:
    """Populations tr(P_x rho(t)) of the given nodes (default: the patterns)."""

    liouvillian, _, _ = build_walk(spec)
    labels = tuple(observables) if observables is not None else spec.patterns
    nodes = [spec.node(label) for label in labels]

    rho0 = DensityOperator.basis(spec.dim, spec.node(initial))
    states = evolve_series(liouvillian, rho0, times)

    values = np.array([[state.matrix[node, node].real for state in states] for node in nodes])
    return WalkCurve(np.asarray(times, dtype=float), labels, values)


def walk_symmetry_operator(spec: WalkSpec) -> np.ndarray:
    """sigma_z on qubit 1 (the first character)."""

    signs = [1.0 if spec.bits(node)[0] == "0" else -1.0 for node in range(spec.dim)]
    return np.diag(signs).astype(complex)


def walk_collective_spin(spec: WalkSpec) -> np.ndarray:
    """S = sum of sigma_z over qubits 2..n."""

    spins = [
        sum(1.0 if bit == "0" else -1.0 for bit in spec.bits(node)[1:]) for node in range(spec.dim)
    ]
    return np.diag(spins).astype(complex)


def walk_storage_ceiling_spec(
    n_qubits: int, gamma: float = 1.0, eta: float = 0.1, kappa: float = 0.0
) -> WalkSpec:
    """Half of all bit strings as patterns: every string whose qubit 1 is 0.

    Each remaining string is the only decaying node of the pattern it reaches by
    flipping qubit 1.
    """

    patterns = [format(node, f"0{n_qubits}b") for node in range(2 ** (n_qubits - 1))]
    return WalkSpec(n_qubits, patterns, gamma=gamma, eta=eta, kappa=kappa)


def walk_symmetry_drift(spec: WalkSpec, initial: str, times: Sequence[float]) -> float:
    """Largest change of <sigma_z^(1)> along the evolution from a basis state."""

    liouvillian, _, _ = build_walk(spec)
    symmetry = walk_symmetry_operator(spec)

    rho0 = DensityOperator.basis(spec.dim, spec.node(initial))
    values = [state.expectation(symmetry) for state in evolve_series(liouvillian, rho0, times)]
    return float(max(abs(v - values[0]) for v in values))
