"""Local amplitude damping: the smallest associative-memory channel.

Each pattern |mu> has a single decaying partner |w_mu>; a damping step moves
population q_mu from |w_mu> to |mu> and shrinks the remaining coherences.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import RateOutOfRange
from ..models.channel import MIXING_TAG, STABLE_DECAYING_TAG, STABLE_TAG, KrausChannel
from ..models.hilbert import SpaceLayout
from ..services.builder import stable_amplitudes
from ..services.hilbert import build_layout

logger = logging.getLogger(__name__)


def local_amplitude_damping(
    q: Sequence[float], angles: Optional[Sequence[float]] = None
) -> Tuple[KrausChannel, SpaceLayout]:
    """Kraus operators K_0, K_1, K_2 of local amplitude damping on M patterns.

    K_0 = sum a^0_mu |mu><mu| + sqrt(1 - q_mu) |w_mu><w_mu|, K_1 = sum a^1_mu |mu><mu|
    and K_2 = sum sqrt(q_mu) |mu><w_mu|. Patterns take indices 0..M-1, their decaying
    partners M..2M-1. The pattern amplitudes are (cos theta_mu, sin theta_mu) with
    distinct angles, by default the builder's.
    """

    rates = np.asarray(q, dtype=float)
    if rates.ndim != 1 or rates.size == 0:
        raise RateOutOfRange("Damping needs one probability per pattern")

    if np.any(rates < 0) or np.any(rates > 1):
        raise RateOutOfRange(f"Damping probabilities must lie in [0, 1], got {rates.tolist()}")

    count = rates.size
    layout = build_layout(stable=[(1, 1)] * count)

    if angles is None:
        amplitudes = stable_amplitudes(layout)
        a = np.vstack([amplitudes[block.label] for block in layout.stable_blocks])
    else:
        thetas = np.asarray(angles, dtype=float)
        if thetas.shape != (count,):
            raise RateOutOfRange(f"Expected {count} angles, got {thetas.shape}")
        a = np.column_stack([np.cos(thetas), np.sin(thetas)])

    dim = 2 * count
    k0 = np.zeros((dim, dim), dtype=complex)
    k1 = np.zeros_like(k0)
    k2 = np.zeros_like(k0)

    for mu in range(count):
        omega = count + mu
        k0[mu, mu] = a[mu, 0]
        k0[omega, omega] = np.sqrt(1 - rates[mu])
        k1[mu, mu] = a[mu, 1]
        k2[mu, omega] = np.sqrt(rates[mu])

    logger.debug("Local amplitude damping with q=%s", rates.tolist())
    channel = KrausChannel(
        [k0, k1, k2], layout=layout, block_tags=[STABLE_DECAYING_TAG, STABLE_TAG, MIXING_TAG]
    )
    return channel, layout
