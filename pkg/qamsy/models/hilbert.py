"""Hilbert-space layout model.

A layout splits the N-dimensional space into stable blocks (irreducible blocks
S_mu and decoherence-free blocks X_tau) and decaying blocks, each decaying block
feeding exactly one pattern. Global basis indices of every block are explicit.
"""

from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from ..errors import DimensionOverflow, LayoutError, UnknownBlock, ZeroBasin


class IrreducibleBlock(NamedTuple):
    """Support S_mu of a single orthogonal pattern."""

    label: str
    dim: int


class DfsBlock(NamedTuple):
    """Decoherence-free block X_tau hosting one or more pure patterns."""

    label: str
    dim: int
    pattern_count: int


class DecayingBlock(NamedTuple):
    """Decaying subspace feeding one pattern.

    `target` is the label of the stable block the pattern lives in, `pattern` the
    pattern index inside a DFS block (always 0 for irreducible blocks).
    """

    label: str
    dim: int
    target: str
    pattern: int = 0


Block = Union[IrreducibleBlock, DfsBlock, DecayingBlock]


class SpaceLayout:
    """Decomposition of the Hilbert space into stable and decaying blocks."""

    total_dim: int
    stable_blocks: Tuple[IrreducibleBlock, ...]
    dfs_blocks: Tuple[DfsBlock, ...]
    decaying_blocks: Tuple[DecayingBlock, ...]
    basis_map: Mapping[str, Tuple[int, ...]]
    unassigned: Tuple[int, ...]

    def __init__(
        self,
        total_dim: int,
        stable_blocks: Sequence[IrreducibleBlock] = (),
        dfs_blocks: Sequence[DfsBlock] = (),
        decaying_blocks: Sequence[DecayingBlock] = (),
        basis_map: Optional[Mapping[str, Sequence[int]]] = None,
        unassigned: Iterable[int] = (),
    ) -> None:
        self.total_dim = int(total_dim)
        self.stable_blocks = tuple(stable_blocks)
        self.dfs_blocks = tuple(dfs_blocks)
        self.decaying_blocks = tuple(decaying_blocks)
        self.unassigned = tuple(sorted(int(i) for i in unassigned))

        self._blocks: Dict[str, Block] = {}
        for block in self.blocks:
            if block.label in self._blocks:
                raise LayoutError(f"Duplicate block label {block.label!r}")
            self._blocks[block.label] = block

        self._check_blocks()

        if basis_map is None:
            basis_map = self._contiguous_map()

        self.basis_map = MappingProxyType(
            {label: tuple(int(i) for i in indices) for label, indices in basis_map.items()}
        )
        self._check_basis_map()

    def __repr__(self) -> str:
        labels = ", ".join(f"{b.label}:{b.dim}" for b in self.blocks)
        return f"SpaceLayout(N={self.total_dim}, [{labels}])"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpaceLayout):
            return NotImplemented

        return (
            self.total_dim == other.total_dim
            and self.blocks == other.blocks
            and dict(self.basis_map) == dict(other.basis_map)
            and self.unassigned == other.unassigned
        )

    def __hash__(self) -> int:
        return hash((self.total_dim, self.blocks, tuple(sorted(self.basis_map.items()))))

    @property
    def blocks(self) -> Tuple[Block, ...]:
        """All blocks in canonical order: irreducible, DFS, then decaying."""
        return self.stable_blocks + self.dfs_blocks + self.decaying_blocks  # type: ignore

    @property
    def stable_dim(self) -> int:
        """N^S"""
        return sum(b.dim for b in self.stable_blocks) + sum(b.dim for b in self.dfs_blocks)

    @property
    def decaying_dim(self) -> int:
        """N^D"""
        return sum(b.dim for b in self.decaying_blocks)

    @property
    def stable_labels(self) -> List[str]:
        return [b.label for b in self.stable_blocks] + [b.label for b in self.dfs_blocks]

    @property
    def decaying_labels(self) -> List[str]:
        return [b.label for b in self.decaying_blocks]

    def block(self, label: str) -> Block:
        """Returns the block with the given label."""

        try:
            return self._blocks[label]
        except KeyError:
            raise UnknownBlock(f"Unknown block {label!r}") from None

    def indices(self, label: str) -> Tuple[int, ...]:
        """Global basis indices of a block, in local index order."""

        self.block(label)
        return self.basis_map[label]

    def decaying_block_for(self, target: str, pattern: int = 0) -> DecayingBlock:
        """Returns the decaying block feeding the given pattern."""

        for block in self.decaying_blocks:
            if block.target == target and block.pattern == pattern:
                return block

        raise UnknownBlock(f"No decaying block feeds pattern {pattern} of {target!r}")

    def stable_indices(self) -> List[int]:
        return [i for label in self.stable_labels for i in self.basis_map[label]]

    def decaying_indices(self) -> List[int]:
        return [i for label in self.decaying_labels for i in self.basis_map[label]]

    def _check_blocks(self) -> None:
        """Checks block dimensions and decaying-block targets."""

        if self.total_dim < 1:
            raise LayoutError(f"Total dimension must be positive, got {self.total_dim}")

        for block in self.stable_blocks + self.dfs_blocks:  # type: ignore
            if block.dim < 1:
                raise LayoutError(f"Block {block.label!r} must have positive dimension")

        for dfs in self.dfs_blocks:
            if dfs.pattern_count < 1:
                raise LayoutError(f"DFS block {dfs.label!r} must host at least one pattern")

        fed = set()
        for decaying in self.decaying_blocks:
            target = self._blocks.get(decaying.target)

            if not isinstance(target, (IrreducibleBlock, DfsBlock)):
                raise UnknownBlock(
                    f"Decaying block {decaying.label!r} targets unknown block {decaying.target!r}"
                )

            limit = target.pattern_count if isinstance(target, DfsBlock) else 1
            if not 0 <= decaying.pattern < limit:
                raise LayoutError(
                    f"Decaying block {decaying.label!r} targets missing pattern {decaying.pattern}"
                )

            key = (decaying.target, decaying.pattern)
            if key in fed:
                raise LayoutError(f"Pattern {decaying.pattern} of {decaying.target!r} is fed twice")
            fed.add(key)

            if decaying.dim < 1:
                raise ZeroBasin(_zero_basin_message(decaying.target, decaying.pattern, target))

        # Every pattern needs a decaying subspace
        for stable in self.stable_blocks:
            if (stable.label, 0) not in fed:
                raise ZeroBasin(_zero_basin_message(stable.label, 0, stable))

        for dfs in self.dfs_blocks:
            for pattern in range(dfs.pattern_count):
                if (dfs.label, pattern) not in fed:
                    raise ZeroBasin(_zero_basin_message(dfs.label, pattern, dfs))

        declared = sum(b.dim for b in self.blocks) + len(self.unassigned)
        if declared != self.total_dim:
            raise DimensionOverflow(
                f"Blocks declare {declared} dimensions but the space has {self.total_dim}"
            )

    def _contiguous_map(self) -> Dict[str, Tuple[int, ...]]:
        """Contiguous global ranges in canonical block order, skipping unassigned indices."""

        skip = set(self.unassigned)
        free = [i for i in range(self.total_dim) if i not in skip]
        basis_map = {}
        start = 0
        for block in self.blocks:
            basis_map[block.label] = tuple(free[start : start + block.dim])
            start += block.dim

        return basis_map

    def _check_basis_map(self) -> None:
        """Every block is mapped onto its own disjoint set of valid global indices."""

        if set(self.basis_map) != set(self._blocks):
            raise LayoutError("Basis map must list exactly the layout's blocks")

        seen = set(self.unassigned)
        if len(seen) != len(self.unassigned):
            raise LayoutError("Unassigned indices must be distinct")

        for block in self.blocks:
            indices = self.basis_map[block.label]

            if len(indices) != block.dim:
                raise LayoutError(
                    f"Block {block.label!r} has dimension {block.dim} "
                    f"but maps {len(indices)} indices"
                )

            for index in indices:
                if not 0 <= index < self.total_dim:
                    raise DimensionOverflow(
                        f"Index {index} of block {block.label!r} exceeds dimension {self.total_dim}"
                    )
                if index in seen:
                    raise LayoutError(f"Index {index} is claimed by more than one block")
                seen.add(index)


def _zero_basin_message(target: str, pattern: int, block: Block) -> str:
    if isinstance(block, DfsBlock):
        return f"Pattern {pattern} of DFS block {target!r} has an empty decaying subspace"
    return f"Pattern {target!r} has an empty decaying subspace"
