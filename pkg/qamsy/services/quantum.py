"""State, channel and measurement services."""

import logging
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np

from ..errors import DimMismatch, InvalidPovm, NotCptp, SingularFrame
from ..models.channel import ChoiMatrix, CptpReport, KrausChannel, vec
from ..models.hilbert import SpaceLayout
from ..models.states import DEFAULT_TOLERANCE, DensityOperator, Povm
from .seeding import Seed, as_generator

logger = logging.getLogger(__name__)

StateLike = Union[DensityOperator, np.ndarray]


class IterationResult(NamedTuple):
    """Outcome of repeated channel application.

    `converged` is False when `max_iters` ran out first; unitary channels
    legitimately never converge, so this is a flag rather than an error.
    """

    state: DensityOperator
    iterations: int
    converged: bool
    residual: float


class FixedPointCheck(NamedTuple):
    is_fixed: bool
    residual: float


class MeasurementOutcome(NamedTuple):
    outcome: int
    probabilities: np.ndarray


def _matrix(state: StateLike) -> np.ndarray:
    if isinstance(state, DensityOperator):
        return state.matrix
    return np.asarray(state, dtype=complex)


def _max_abs(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def trace_distance(first: StateLike, second: StateLike) -> float:
    """Half the trace norm of the difference, from the eigenvalues of the Hermitian difference."""

    diff = _matrix(first) - _matrix(second)
    diff = (diff + diff.conj().T) / 2
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def fidelity(first: StateLike, second: StateLike) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2."""

    a = _matrix(first)
    eigenvalues, eigenvectors = np.linalg.eigh((a + a.conj().T) / 2)
    sqrt_a = (eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.conj().T

    inner = sqrt_a @ _matrix(second) @ sqrt_a
    roots = np.sqrt(np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None))
    return float(np.sum(roots) ** 2)


def check_cptp(channel: KrausChannel, tol: float = DEFAULT_TOLERANCE) -> CptpReport:
    """Report how far a channel is from satisfying sum_a K_a^dag K_a = I.

    If the channel carries a layout, the report also contains the residuals of the
    three block conditions and of the lower-left (decaying to stable) block, which
    must vanish so that nothing leaks out of the stable subspace.
    """

    cached = channel.cached_report(tol)
    if cached is not None:
        return cached

    completeness = _max_abs(channel.completeness() - np.eye(channel.dim))

    if channel.layout is None:
        report = CptpReport(completeness, tol)
    else:
        stable = channel.layout.stable_indices()
        stable_set = set(stable)
        decaying = [i for i in range(channel.dim) if i not in stable_set]

        ops = np.asarray(channel.kraus_ops)
        k_s = ops[:, stable][:, :, stable]
        k_sd = ops[:, stable][:, :, decaying]
        k_d = ops[:, decaying][:, :, decaying]
        k_ds = ops[:, decaying][:, :, stable]

        s_block = np.einsum("aji,ajk->ik", k_s.conj(), k_s) - np.eye(len(stable))
        sd_block = np.einsum("aji,ajk->ik", k_s.conj(), k_sd)
        d_block = (
            np.einsum("aji,ajk->ik", k_sd.conj(), k_sd)
            + np.einsum("aji,ajk->ik", k_d.conj(), k_d)
            - np.eye(len(decaying))
        )

        report = CptpReport(
            completeness,
            tol,
            s_block=_max_abs(s_block),
            sd_block=_max_abs(sd_block),
            d_block=_max_abs(d_block),
            lower_left=_max_abs(k_ds),
        )

    channel.cache_report(report)
    return report


def apply_channel(
    channel: KrausChannel, state: DensityOperator, tol: float = DEFAULT_TOLERANCE
) -> DensityOperator:
    """Apply a validated channel to a state."""

    if state.dim != channel.dim:
        raise DimMismatch(f"Channel acts on dimension {channel.dim}, state has {state.dim}")

    report = check_cptp(channel, tol)
    if not report.passed:
        worst = max(r for r in report[:1] + report[2:] if r is not None)
        raise NotCptp(f"Channel is not CPTP: residual {worst:.3e} exceeds {tol:.1e}")

    return DensityOperator(channel.action(state.matrix), tol=tol)


def iterate_to_fixed_point(
    channel: KrausChannel,
    state: DensityOperator,
    max_iters: int = 10_000,
    tol: float = 1e-10,
) -> IterationResult:
    """Apply the channel until successive iterates are closer than `tol` in trace distance.

    Returns the last iterate and the index of the step at which convergence was
    detected, so a fixed point converges at iteration 0.
    """

    current = state
    residual = float("inf")

    for iteration in range(max_iters):
        following = apply_channel(channel, current)
        residual = trace_distance(following, current)

        if residual < tol:
            logger.debug("Converged after %d iterations (residual %.3e)", iteration, residual)
            return IterationResult(following, iteration, True, residual)

        current = following

    logger.warning("No convergence within %d iterations (residual %.3e)", max_iters, residual)
    return IterationResult(current, max_iters, False, residual)


def check_fixed_point(
    channel: KrausChannel, state: DensityOperator, tol: float = DEFAULT_TOLERANCE
) -> FixedPointCheck:
    """Is `state` invariant under the channel? Residual is the trace distance."""

    if state.dim != channel.dim:
        raise DimMismatch(f"Channel acts on dimension {channel.dim}, state has {state.dim}")

    residual = trace_distance(channel.action(state.matrix), state.matrix)
    return FixedPointCheck(residual < tol, residual)


def choi_of(channel: KrausChannel) -> ChoiMatrix:
    """Choi matrix of the channel (column-stacking convention)."""

    vectors = np.array([vec(op) for op in channel.kraus_ops])
    return ChoiMatrix(vectors.T @ vectors.conj())


def stable_coherence_factors(
    channel: KrausChannel, layout: Optional[SpaceLayout] = None
) -> np.ndarray:
    """Coefficients 1 + gamma_{mu nu} of the Choi matrix on the stable diagonal.

    Entry (mu, nu) is the Choi element <<mu mu|J|nu nu>>, i.e. the factor that the
    coherence |mu><nu| picks up per application of a channel diagonal on the stable
    basis. Defaults to the whole basis when no layout is given.
    """

    layout = layout or channel.layout
    dim = channel.dim
    indices = layout.stable_indices() if layout is not None else list(range(dim))
    positions = [i * (dim + 1) for i in indices]

    return choi_of(channel).matrix[np.ix_(positions, positions)].copy()


def measure(povm: Povm, state: DensityOperator, seed: Seed) -> MeasurementOutcome:
    """Sample a measurement outcome with a seeded generator."""

    if povm.dim != state.dim:
        raise InvalidPovm(f"POVM acts on dimension {povm.dim}, state has {state.dim}")

    probabilities = np.array([state.expectation(effect) for effect in povm.effects])

    if probabilities.min() < -1e-12:
        raise InvalidPovm(f"Negative outcome probability {probabilities.min():.3e}")

    probabilities = np.clip(probabilities, 0.0, None)
    total = probabilities.sum()

    if abs(total - 1.0) > 1e-10:
        raise InvalidPovm(f"Outcome probabilities sum to {total:.12g}")

    probabilities = probabilities / total
    rng = as_generator(seed)
    outcome = int(rng.choice(len(probabilities), p=probabilities))

    return MeasurementOutcome(outcome, probabilities)


def _frame(states: Sequence[Sequence[complex]]) -> np.ndarray:
    vectors = np.array([np.asarray(s, dtype=complex).reshape(-1) for s in states])

    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise SingularFrame("Square-root measurement needs at least one state vector")

    return vectors


def _frame_inverse_sqrt(vectors: np.ndarray) -> np.ndarray:
    """Phi^{-1/2} on the span of the vectors, zero on its complement."""

    phi = vectors.T @ vectors.conj()
    eigenvalues, eigenvectors = np.linalg.eigh(phi)
    largest = eigenvalues.max()

    if largest <= 1e-12:
        raise SingularFrame("Frame operator vanishes")

    support = eigenvalues > 1e-12 * largest
    inv_sqrt = np.zeros_like(eigenvalues)
    inv_sqrt[support] = 1.0 / np.sqrt(eigenvalues[support])

    return (eigenvectors * inv_sqrt) @ eigenvectors.conj().T


def square_root_measurement(
    states: Sequence[Sequence[complex]], tol: float = DEFAULT_TOLERANCE
) -> Povm:
    """Square-root (pretty good) measurement for a list of pure states.

    Effects are Phi^{-1/2}|psi_k><psi_k|Phi^{-1/2}, completed with the projector
    onto the complement of the states' span when that span is not the whole space.
    """

    vectors = _frame(states)
    inv_sqrt = _frame_inverse_sqrt(vectors)

    effects = []
    for psi in vectors:
        phi_psi = inv_sqrt @ psi
        effects.append(np.outer(phi_psi, phi_psi.conj()))

    span = sum(effects)
    complement = np.eye(vectors.shape[1]) - span
    if np.trace(complement).real > tol:
        effects.append(complement)

    return Povm(effects, tol=tol)


def srm_success_probabilities(states: Sequence[Sequence[complex]]) -> List[float]:
    """<psi_k|E_k|psi_k> for the square-root measurement of normalized states."""

    vectors = _frame(states)
    inv_sqrt = _frame_inverse_sqrt(vectors)

    return [float(abs(psi.conj() @ inv_sqrt @ psi) ** 2) for psi in vectors]


def unambiguous_povm(
    projectors: Sequence[np.ndarray], tol: float = DEFAULT_TOLERANCE
) -> Povm:
    """Complete a set of detection operators with the inconclusive outcome I - sum Pi_mu.

    The inconclusive effect is the last one. When the detection operators overlap
    too much for it to be positive, they are uniformly rescaled by the largest factor
    that restores positivity; the factor is recorded as `Povm.scale`.
    """

    operators = [np.asarray(p, dtype=complex) for p in projectors]
    total = sum(operators)
    largest = np.linalg.eigvalsh((total + total.conj().T) / 2).max()

    scale = 1.0
    if largest > 1.0 + tol:
        scale = 1.0 / largest
        logger.warning("Detection operators overlap; rescaled by %.6f", scale)

    effects = [scale * op for op in operators]
    effects.append(np.eye(total.shape[0]) - scale * total)

    return Povm(effects, tol=tol, scale=scale)
