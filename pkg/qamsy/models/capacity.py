"""Storage-capacity reports."""

from fractions import Fraction
from typing import Dict, NamedTuple, Optional, Tuple, Union

Rational = Union[Fraction, float]


def _render(value: Optional[Rational]) -> Optional[Dict[str, object]]:
    if value is None:
        return None

    if isinstance(value, Fraction):
        return {"exact": str(value), "value": float(value)}

    return {"exact": None, "value": float(value)}


class CapacityReport(NamedTuple):
    """Pattern counts, block dimensions and the capacities they give.

    `alpha_q` is exact. `alpha_qc` is exact when the success probability was given
    as a Fraction. `asymptotic_estimate` assumes a decaying dimension of
    `decay_constant` times the pattern count and is never used in place of the
    exact values.
    """

    m_perp: int
    m_nonperp: int
    n_stable: int
    n_decaying: int
    total_dim: int
    alpha_q: Fraction
    saturates_bound: bool
    p_succ: Optional[Rational] = None
    alpha_qc: Optional[Rational] = None
    asymptotic_estimate: Optional[float] = None
    decay_constant: float = 1.0

    @property
    def patterns(self) -> int:
        return self.m_perp + self.m_nonperp

    def to_dict(self) -> Dict[str, object]:
        return {
            "m_perp": self.m_perp,
            "m_nonperp": self.m_nonperp,
            "n_stable": self.n_stable,
            "n_decaying": self.n_decaying,
            "total_dim": self.total_dim,
            "alpha_q": _render(self.alpha_q),
            "saturates_bound": self.saturates_bound,
            "p_succ": None if self.p_succ is None else float(self.p_succ),
            "alpha_qc": _render(self.alpha_qc),
            "asymptotic_estimate": self.asymptotic_estimate,
            "decay_constant": self.decay_constant,
        }


class DimensionAttempt(NamedTuple):
    """One attempt to fit patterns of the given ranks into the space.

    Each pattern gets one decaying dimension while they last; the last pattern
    takes whatever remains.
    """

    ranks: Tuple[int, ...]
    decay_dims: Tuple[int, ...]
    accepted: bool
    error: Optional[str]


class DimensionAudit(NamedTuple):
    """Dimension counting for a set of pattern ranks and for one pattern more."""

    total_dim: int
    fitting: DimensionAttempt
    overfull: DimensionAttempt
    alpha_q: Optional[Fraction]

    @property
    def bound_is_tight(self) -> bool:
        """The declared patterns fit and one more rank-1 pattern does not."""
        return self.fitting.accepted and not self.overfull.accepted

    def to_dict(self) -> Dict[str, object]:
        return {
            "total_dim": self.total_dim,
            "fitting": self.fitting._asdict(),
            "overfull": self.overfull._asdict(),
            "alpha_q": _render(self.alpha_q),
            "bound_is_tight": self.bound_is_tight,
        }
