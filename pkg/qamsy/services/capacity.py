"""Storage capacity of a QAM: exact values, measurement-degraded values and bounds."""

import logging
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from ..errors import BadProbability, LayoutError
from ..models.capacity import CapacityReport, DimensionAttempt, DimensionAudit, Rational
from ..models.hilbert import SpaceLayout
from ..models.patterns import PatternSet
from .builder import check_layout
from .hilbert import build_layout

logger = logging.getLogger(__name__)


def _saturates(layout: SpaceLayout, pattern_set: PatternSet) -> bool:
    if pattern_set.m_nonperp or layout.unassigned:
        return False

    rank_one = all(block.dim == 1 for block in layout.stable_blocks + layout.decaying_blocks)  # type: ignore
    return rank_one and 2 * pattern_set.count == layout.total_dim


def capacity_of(layout: SpaceLayout, pattern_set: PatternSet, decay_constant: float = 1.0) -> CapacityReport:
    """alpha^Q = (M_perp + M_nonperp) / N as an exact fraction.

    The bound is saturated when every pattern is rank 1 with a single decaying
    state, which fills exactly N = 2M dimensions.
    """

    check_layout(pattern_set.orthogonal, pattern_set.dfs, layout, allow_unassigned=True)

    report = CapacityReport(
        m_perp=pattern_set.m_perp,
        m_nonperp=pattern_set.m_nonperp,
        n_stable=layout.stable_dim,
        n_decaying=layout.decaying_dim,
        total_dim=layout.total_dim,
        alpha_q=Fraction(pattern_set.count, layout.total_dim),
        saturates_bound=_saturates(layout, pattern_set),
        asymptotic_estimate=asymptotic_capacity(pattern_set.m_perp, pattern_set.m_nonperp, 1.0, decay_constant),
        decay_constant=decay_constant,
    )

    logger.debug("Capacity %s of %d patterns in N=%d", report.alpha_q, pattern_set.count, layout.total_dim)
    return report


def _probability(p_succ: Rational) -> Rational:
    if not 0 <= p_succ <= 1:
        raise BadProbability(f"Success probability {p_succ} is outside [0, 1]")

    if isinstance(p_succ, (Fraction, int)):
        return Fraction(p_succ)
    return float(p_succ)


def classical_capacity_of(
    layout: SpaceLayout,
    pattern_set: PatternSet,
    p_succ: Rational,
    decay_constant: float = 1.0,
) -> CapacityReport:
    """Capacity when the retrieved pattern has to be read out by a measurement.

    Orthogonal patterns are discriminated perfectly; the non-orthogonal ones
    count with the optimal success probability `p_succ`:
    alpha^QC = (M_perp + p_succ M_nonperp) / N.
    """

    p = _probability(p_succ)
    report = capacity_of(layout, pattern_set, decay_constant)

    alpha_qc = (report.m_perp + p * report.m_nonperp) / report.total_dim

    return report._replace(
        p_succ=p,
        alpha_qc=alpha_qc,
        asymptotic_estimate=asymptotic_capacity(report.m_perp, report.m_nonperp, float(p), decay_constant),
    )


def asymptotic_capacity(
    m_perp: int, m_nonperp: int, p_succ: float = 1.0, decay_constant: float = 1.0
) -> float:
    """Large-M estimate assuming rank-1 orthogonal patterns and N^D = c M.

    With c = 1 this is (M_perp + p M_nonperp) / (2 M_perp + M_nonperp); p = 1 gives
    the quantum-output capacity.
    """

    if decay_constant <= 0:
        raise LayoutError(f"Decay constant must be positive, got {decay_constant}")

    total = m_perp + m_nonperp
    if total == 0:
        return 0.0

    return float((m_perp + p_succ * m_nonperp) / (m_perp + decay_constant * total))


def _attempt(total_dim: int, ranks: Tuple[int, ...]) -> DimensionAttempt:
    available = total_dim - sum(ranks)
    decay_dims = [1 if j < available else 0 for j in range(len(ranks))]

    if available > len(ranks):
        decay_dims[-1] += available - len(ranks)

    try:
        build_layout(stable=list(zip(ranks, decay_dims)), total_dim=total_dim)
    except LayoutError as error:
        return DimensionAttempt(ranks, tuple(decay_dims), False, f"{type(error).__name__}: {error}")

    return DimensionAttempt(ranks, tuple(decay_dims), True, None)


def theorem1_dimension_audit(total_dim: int, ranks: Optional[Sequence[int]] = None) -> DimensionAudit:
    """Dimension counting behind the orthogonal-pattern bound alpha^Q <= 1/2.

    By default audits N/2 rank-1 patterns, which fill N exactly, against N/2 + 1,
    which leaves a pattern without a decaying state. Optionally specify the
    pattern `ranks` to audit a mixed-rank configuration instead; the overfull
    attempt always adds one rank-1 pattern.
    """

    if total_dim < 2:
        raise LayoutError(f"Dimension audit needs N >= 2, got {total_dim}")

    if ranks is None:
        if total_dim % 2:
            raise LayoutError(f"The default audit needs an even dimension, got {total_dim}")
        ranks = [1] * (total_dim // 2)

    declared = tuple(int(s) for s in ranks)
    if not declared or any(s < 1 for s in declared):
        raise LayoutError("Pattern ranks must be positive")

    fitting = _attempt(total_dim, declared)
    overfull = _attempt(total_dim, declared + (1,))
    alpha_q = Fraction(len(declared), total_dim) if fitting.accepted else None

    logger.info(
        "N=%d: %d patterns %s, %d patterns %s",
        total_dim,
        len(fitting.ranks),
        "fit" if fitting.accepted else "do not fit",
        len(overfull.ranks),
        "fit" if overfull.accepted else "do not fit",
    )
    return DimensionAudit(total_dim, fitting, overfull, alpha_q)
