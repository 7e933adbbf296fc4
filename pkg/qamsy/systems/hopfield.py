"""Classical Hopfield network, the baseline the quantum memories are compared with."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import ModelError, NotSpinVector
from ..models.systems import HopfieldNet, HopfieldRun, HopfieldTrials, spin_array
from ..services.seeding import Seed, as_generator, spawn_seeds

logger = logging.getLogger(__name__)

DEFAULT_MAX_SWEEPS = 100


def hebbian_couplings(patterns: Sequence[Sequence[int]]) -> np.ndarray:
    """J_ij = (1/n) sum_mu xi_i xi_j, self-coupling removed."""

    if len(patterns) == 0:
        raise NotSpinVector("Hebbian learning needs at least one pattern")

    vectors = [spin_array(p, "Pattern") for p in patterns]
    if len({v.shape[0] for v in vectors}) != 1:
        raise NotSpinVector("Patterns must all have the same number of neurons")

    xi = np.array(vectors, dtype=float)
    couplings = xi.T @ xi / xi.shape[1]
    np.fill_diagonal(couplings, 0.0)
    return couplings


def hebbian_net(patterns: Sequence[Sequence[int]]) -> HopfieldNet:
    return HopfieldNet(hebbian_couplings(patterns), patterns)


def hopfield_energy(net: HopfieldNet, state: Sequence[int]) -> float:
    """E = -1/2 s^T J s"""

    s = _checked_state(net, state)
    return float(-0.5 * s @ net.couplings @ s)


def _checked_state(net: HopfieldNet, state: Sequence[int]) -> np.ndarray:
    s = spin_array(state)
    if s.shape[0] != net.n_neurons:
        raise NotSpinVector(f"State has {s.shape[0]} entries, network has {net.n_neurons}")
    return s


def hopfield_update(
    net: HopfieldNet, state: Sequence[int], seed: Seed, max_sweeps: int = DEFAULT_MAX_SWEEPS
) -> HopfieldRun:
    """Asynchronous single-neuron updates s_i <- sgn(sum_j J_ij s_j), with sgn(0) = +1.

    Each sweep visits every neuron once in a fresh seeded random order. The run
    stops after the first sweep without a flip, or after `max_sweeps`. A state is
    recorded after every flip together with its energy.
    """

    s = _checked_state(net, state).copy()
    rng = as_generator(seed)

    states = [s.copy()]
    energies = [hopfield_energy(net, s)]
    flips = 0

    for sweep in range(1, max_sweeps + 1):
        flipped = False

        for i in rng.permutation(net.n_neurons):
            field = float(net.couplings[i] @ s)
            target = 1 if field >= 0 else -1

            if target != s[i]:
                s[i] = target
                flips += 1
                flipped = True
                states.append(s.copy())
                energies.append(hopfield_energy(net, s))

        if not flipped:
            logger.debug("Converged after %d sweeps and %d flips", sweep, flips)
            return HopfieldRun(states, energies, flips, sweep, True)

    logger.warning("No fixed point within %d sweeps", max_sweeps)
    return HopfieldRun(states, energies, flips, max_sweeps, False)


def corrupt(pattern: Sequence[int], fraction: float, rng: Seed) -> np.ndarray:
    """Flip round(fraction * n) distinct, randomly chosen neurons."""

    if not 0.0 <= fraction <= 1.0:
        raise ModelError(f"Flip fraction {fraction} is outside [0, 1]")

    s = spin_array(pattern, "Pattern").copy()
    count = int(round(fraction * s.shape[0]))
    flipped = as_generator(rng).choice(s.shape[0], size=count, replace=False)
    s[flipped] *= -1
    return s


def random_patterns(n_neurons: int, n_patterns: int, rng: Seed) -> np.ndarray:
    """Independent unbiased +1/-1 patterns, one per row."""

    generator = as_generator(rng)
    return 2 * generator.integers(0, 2, size=(n_patterns, n_neurons)) - 1


def _trial(n_neurons: int, n_patterns: int, flip_fraction: float, seed: int) -> Tuple[bool, float, bool]:
    rng = as_generator(seed)
    patterns = random_patterns(n_neurons, n_patterns, rng)
    net = hebbian_net(patterns)

    target = patterns[int(rng.integers(n_patterns))]
    run = hopfield_update(net, corrupt(target, flip_fraction, rng), rng)

    overlap = float(run.final @ target) / n_neurons
    return bool(np.array_equal(run.final, target)), overlap, run.energy_monotone


def hopfield_success_rate(
    n_neurons: int,
    n_patterns: int,
    flip_fraction: float,
    trials: int,
    seed: int,
    threads: int = 1,
) -> HopfieldTrials:
    """Retrieve a random stored pattern from a corrupted copy, `trials` times.

    Every trial draws fresh patterns from its own seed split off `seed`, so the
    result does not depend on `threads`.
    """

    if trials < 1:
        raise ModelError("At least one trial is needed")

    if n_patterns < 1 or n_neurons < 1:
        raise ModelError(f"Invalid network size n={n_neurons}, M={n_patterns}")

    seeds = spawn_seeds(seed, trials)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results: List[Tuple[bool, float, bool]] = list(
            executor.map(lambda child: _trial(n_neurons, n_patterns, flip_fraction, child), seeds)
        )

    successes = sum(1 for success, _, _ in results if success)
    logger.info(
        "Hopfield n=%d M=%d: %d/%d retrievals", n_neurons, n_patterns, successes, trials
    )

    return HopfieldTrials(
        n_neurons=n_neurons,
        n_patterns=n_patterns,
        flip_fraction=flip_fraction,
        trials=trials,
        successes=successes,
        mean_overlap=float(np.mean([overlap for _, overlap, _ in results])),
        energy_monotone=all(monotone for _, _, monotone in results),
        seed=seed,
    )
