"""Hilbert-space layout services."""

import logging
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import LengthMismatch
from ..models.hilbert import DecayingBlock, DfsBlock, IrreducibleBlock, SpaceLayout

logger = logging.getLogger(__name__)


def build_layout(
    stable: Sequence[Tuple[int, int]] = (),
    dfs: Sequence[Tuple[int, Sequence[int]]] = (),
    total_dim: Optional[int] = None,
) -> SpaceLayout:
    """Build the canonical contiguous layout for a set of declared patterns.

    `stable` lists one `(s_mu, d_mu)` pair per orthogonal pattern, `dfs` one
    `(s_tau, [d_1, d_2, ...])` pair per DFS block with one decaying dimension per
    hosted pattern. Stable blocks come first in declaration order, then DFS blocks,
    then the decaying blocks grouped by target.

    Optionally specify `total_dim` to check the declaration against a known N.
    """

    stable_blocks = []
    dfs_blocks = []
    decaying_blocks = []

    for mu, (s_dim, d_dim) in enumerate(stable, start=1):
        stable_blocks.append(IrreducibleBlock(f"S{mu}", int(s_dim)))
        decaying_blocks.append(DecayingBlock(f"D{mu}", int(d_dim), f"S{mu}"))

    for tau, (s_dim, d_dims) in enumerate(dfs, start=1):
        label = f"X{tau}"
        dfs_blocks.append(DfsBlock(label, int(s_dim), len(d_dims)))
        for ell, d_dim in enumerate(d_dims):
            decaying_blocks.append(DecayingBlock(f"{label}/D{ell + 1}", int(d_dim), label, ell))

    declared = sum(b.dim for b in stable_blocks + dfs_blocks + decaying_blocks)  # type: ignore
    if total_dim is None:
        total_dim = declared

    layout = SpaceLayout(total_dim, stable_blocks, dfs_blocks, decaying_blocks)
    logger.debug("Built %r", layout)
    return layout


def embed(local: Sequence[complex], label: str, layout: SpaceLayout) -> np.ndarray:
    """Place a block-local vector into the global space."""

    indices = layout.indices(label)
    local_vec = np.asarray(local, dtype=complex).reshape(-1)

    if local_vec.shape[0] != len(indices):
        raise LengthMismatch(
            f"Block {label!r} has dimension {len(indices)}, got a vector of length "
            f"{local_vec.shape[0]}"
        )

    vec = np.zeros(layout.total_dim, dtype=complex)
    vec[list(indices)] = local_vec
    return vec


def extract(vector: Sequence[complex], label: str, layout: SpaceLayout) -> np.ndarray:
    """Adjoint of `embed`: the block-local components of a global vector."""

    global_vec = np.asarray(vector, dtype=complex).reshape(-1)

    if global_vec.shape[0] != layout.total_dim:
        raise LengthMismatch(
            f"Layout has dimension {layout.total_dim}, got a vector of length "
            f"{global_vec.shape[0]}"
        )

    return global_vec[list(layout.indices(label))].copy()


def embed_operator(local: np.ndarray, label: str, layout: SpaceLayout) -> np.ndarray:
    """Place a block-local operator into the global space."""

    indices = list(layout.indices(label))
    local_op = np.asarray(local, dtype=complex)

    if local_op.shape != (len(indices), len(indices)):
        raise LengthMismatch(
            f"Block {label!r} has dimension {len(indices)}, got an operator of shape "
            f"{local_op.shape}"
        )

    op = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
    op[np.ix_(indices, indices)] = local_op
    return op


def projector_onto(blocks: Union[str, Iterable[str]], layout: SpaceLayout) -> np.ndarray:
    """Orthogonal projector onto the span of one block or a set of blocks."""

    labels = [blocks] if isinstance(blocks, str) else list(blocks)

    diagonal = np.zeros(layout.total_dim)
    for label in labels:
        diagonal[list(layout.indices(label))] = 1.0

    return np.diag(diagonal).astype(complex)


def basin_projector(layout: SpaceLayout, target: str, pattern: int = 0) -> np.ndarray:
    """Projector onto the basin of attraction of one pattern.

    For an irreducible block this is S_mu + D_mu; DFS patterns share their stable
    block, so their basin projector only covers the decaying block D_l.
    """

    decaying = layout.decaying_block_for(target, pattern)

    if isinstance(layout.block(target), DfsBlock):
        return projector_onto(decaying.label, layout)

    return projector_onto([target, decaying.label], layout)


def pattern_keys(layout: SpaceLayout) -> Tuple[Tuple[str, int], ...]:
    """(target, pattern) keys of every pattern, in decaying-block order."""
    return tuple((d.target, d.pattern) for d in layout.decaying_blocks)


def exclusive_projector(layout: SpaceLayout, key: Tuple[str, int], other: Tuple[str, int]) -> np.ndarray:
    """Projector onto the part of `other`'s basin that `key`'s basin never shares.

    Patterns of the same DFS block share its stable block, so only the decaying
    blocks tell them apart.
    """

    other_target, other_pattern = other
    labels = [layout.decaying_block_for(other_target, other_pattern).label]

    if other_target != key[0]:
        labels.append(other_target)

    return projector_onto(labels, layout)
