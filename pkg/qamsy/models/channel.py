"""Kraus channels and their Choi matrices.

Vectorization convention (used here and by every superoperator in the package):
column stacking, vec(X)[i + N*j] = X[i, j], so that vec(A X B) = (B^T kron A) vec(X).
"""

from typing import Dict, Iterator, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimMismatch
from .hilbert import SpaceLayout

STABLE_TAG = "S"
MIXING_TAG = "SD"
STABLE_DECAYING_TAG = "S+D"


def vec(matrix: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of `vec`."""
    return np.asarray(vector).reshape((dim, dim), order="F")


class CptpReport(NamedTuple):
    """Residuals of the completeness relation.

    Block residuals are only available when the channel carries a layout; they split
    sum K^dag K = I into its stable (S), stable-decaying (SD) and decaying (D) blocks.
    """

    completeness: float
    tolerance: float
    s_block: Optional[float] = None
    sd_block: Optional[float] = None
    d_block: Optional[float] = None
    lower_left: Optional[float] = None

    @property
    def passed(self) -> bool:
        residuals = [self.completeness, self.s_block, self.sd_block, self.d_block, self.lower_left]
        return all(r is None or r < self.tolerance for r in residuals)


class KrausChannel:
    """A channel rho -> sum_a K_a rho K_a^dag on an N-dimensional space.

    The completeness relation is not enforced on construction: a channel can be
    built, inspected and reported on before it is validated.
    """

    kraus_ops: Tuple[np.ndarray, ...]
    layout: Optional[SpaceLayout]
    block_tags: Optional[Tuple[str, ...]]

    def __init__(
        self,
        kraus_ops: Sequence[np.ndarray],
        layout: Optional[SpaceLayout] = None,
        block_tags: Optional[Sequence[str]] = None,
    ) -> None:
        ops = [np.array(k, dtype=complex) for k in kraus_ops]

        if not ops:
            raise DimMismatch("A channel needs at least one Kraus operator")

        dim = ops[0].shape[0]
        for alpha, op in enumerate(ops):
            if op.shape != (dim, dim):
                raise DimMismatch(f"Kraus operator {alpha} has shape {op.shape}, expected {(dim, dim)}")
            op.setflags(write=False)

        if layout is not None and layout.total_dim != dim:
            raise DimMismatch(f"Layout has dimension {layout.total_dim}, operators have {dim}")

        if block_tags is not None and len(block_tags) != len(ops):
            raise DimMismatch(f"{len(block_tags)} block tags for {len(ops)} Kraus operators")

        self.kraus_ops = tuple(ops)
        self.layout = layout
        self.block_tags = tuple(block_tags) if block_tags is not None else None
        self._stack = np.stack(ops)
        self._reports: Dict[float, CptpReport] = {}

    def __len__(self) -> int:
        return len(self.kraus_ops)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.kraus_ops)

    def __repr__(self) -> str:
        return f"KrausChannel(dim={self.dim}, operators={len(self)})"

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def action(self, matrix: np.ndarray) -> np.ndarray:
        """sum_a K_a X K_a^dag on a raw matrix."""
        return np.einsum("aij,jk,alk->il", self._stack, matrix, self._stack.conj())

    def adjoint_action(self, matrix: np.ndarray) -> np.ndarray:
        """sum_a K_a^dag X K_a (Heisenberg picture)."""
        return np.einsum("aji,jk,akl->il", self._stack.conj(), matrix, self._stack)

    def completeness(self) -> np.ndarray:
        """sum_a K_a^dag K_a"""
        return np.einsum("aji,ajk->ik", self._stack.conj(), self._stack)

    def superoperator(self) -> np.ndarray:
        """N^2 x N^2 matrix of the channel under column stacking."""
        return sum(np.kron(k.conj(), k) for k in self.kraus_ops)

    def cached_report(self, tol: float) -> Optional[CptpReport]:
        return self._reports.get(tol)

    def cache_report(self, report: CptpReport) -> None:
        self._reports[report.tolerance] = report


class ChoiMatrix:
    """Choi matrix J = sum_a |K_a>><<K_a| with |K>> = vec(K).

    Under column stacking J is ordered (input, output): J[(j, i), (l, k)] =
    sum_a K_a[i, j] conj(K_a[k, l]).
    """

    matrix: np.ndarray
    dim: int

    def __init__(self, matrix: np.ndarray) -> None:
        m = np.array(matrix, dtype=complex)
        size = m.shape[0]
        dim = int(round(np.sqrt(size)))

        if m.shape != (size, size) or dim * dim != size:
            raise DimMismatch(f"A Choi matrix must be N^2 x N^2, got shape {m.shape}")

        m.setflags(write=False)
        self.matrix = m
        self.dim = dim

    def __repr__(self) -> str:
        return f"ChoiMatrix(dim={self.dim})"

    def _tensor(self) -> np.ndarray:
        # Axes: (in, out, in', out')
        return self.matrix.reshape(self.dim, self.dim, self.dim, self.dim)

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        """Channel action reconstructed from J."""

        rho = np.asarray(matrix, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise DimMismatch(f"Choi matrix acts on dimension {self.dim}, got shape {rho.shape}")

        return np.einsum("jilk,jl->ik", self._tensor(), rho)

    def output_marginal(self) -> np.ndarray:
        """Partial trace over the output. Equals sum_a K_a^dag K_a."""
        return np.einsum("jili->jl", self._tensor()).T

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)
