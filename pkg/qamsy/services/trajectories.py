"""Quantum-jump (Monte Carlo wavefunction) unraveling of Lindblad dynamics."""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ..errors import DimMismatch, DynamicsError, InvalidState, StepTooLarge
from ..models.dynamics import EnsembleAverage, Liouvillian, TrajectoryRecord
from .seeding import as_generator, spawn_seeds

logger = logging.getLogger(__name__)

MAX_JUMP_PROBABILITY = 0.1
MAX_NORM_DRIFT = 1e-3
MAX_HALVINGS = 20
MAX_CACHED_PROPAGATORS = 64

Reset = Tuple[float, Sequence[complex]]


class _Unraveling:
    """No-jump propagators and scaled jump operators of one Liouvillian.

    Propagators exp(-i H_eff dt) are cached per step size and shared by every
    trajectory of an ensemble.
    """

    def __init__(self, liouvillian: Liouvillian) -> None:
        self.h_eff = liouvillian.effective_hamiltonian()
        self.jumps = [
            (index, np.sqrt(rate) * f)
            for index, (f, rate) in enumerate(liouvillian.jump_ops)
            if rate > 0
        ]
        self._propagators: Dict[float, np.ndarray] = {}
        self._lock = threading.Lock()

    def propagator(self, dt: float) -> np.ndarray:
        with self._lock:
            cached = self._propagators.get(dt)

        if cached is not None:
            return cached

        propagator = scipy.linalg.expm(-1j * dt * self.h_eff)
        with self._lock:
            # Remainder steps before record times rarely repeat
            if len(self._propagators) < MAX_CACHED_PROPAGATORS:
                self._propagators[dt] = propagator
        return propagator

    def step(self, psi: np.ndarray, dt: float, rng: np.random.Generator) -> Tuple[np.ndarray, float, Optional[int]]:
        """One accepted step of at most `dt`: (new state, step taken, jump index or None)."""

        rates = np.array([np.vdot(c @ psi, c @ psi).real for _, c in self.jumps])
        total = float(rates.sum())

        for _ in range(MAX_HALVINGS + 1):
            phi = self.propagator(dt) @ psi
            dp = 1.0 - np.vdot(phi, phi).real

            if dp <= MAX_JUMP_PROBABILITY and abs(dp - dt * total) <= MAX_NORM_DRIFT:
                break

            logger.debug("Halving step %.3e (jump probability %.3e)", dt, dp)
            dt /= 2
        else:
            raise StepTooLarge(f"Norm drift stays above {MAX_NORM_DRIFT} after {MAX_HALVINGS} halvings")

        if total > 0 and rng.random() < dp:
            channel = int(rng.choice(len(self.jumps), p=rates / total))
            index, c = self.jumps[channel]
            jumped = c @ psi
            return jumped / np.linalg.norm(jumped), dt, index

        return phi / np.linalg.norm(phi), dt, None


def _unit_vector(psi: Sequence[complex], dim: int, what: str) -> np.ndarray:
    vector = np.array(psi, dtype=complex).reshape(-1)

    if vector.shape[0] != dim:
        raise DimMismatch(f"{what} has length {vector.shape[0]}, Liouvillian acts on {dim}")

    if abs(np.linalg.norm(vector) - 1.0) > 1e-8:
        raise InvalidState(f"{what} has norm {np.linalg.norm(vector):.12g}, expected 1")

    return vector


def _record_grid(t_final: float, dt: float, record_times: Optional[Sequence[float]]) -> np.ndarray:
    if record_times is None:
        steps = max(1, int(round(t_final / dt)))
        return np.linspace(0.0, t_final, steps + 1)

    grid = np.asarray(record_times, dtype=float)
    if grid.size == 0 or grid[0] < 0 or grid[-1] > t_final or np.any(np.diff(grid) < 0):
        raise DynamicsError(f"Record times must be non-decreasing and lie within [0, {t_final}]")
    return grid


def _run(
    unraveling: _Unraveling,
    psi0: np.ndarray,
    t_final: float,
    dt: float,
    seed: int,
    grid: np.ndarray,
    resets: Sequence[Tuple[float, np.ndarray]],
) -> TrajectoryRecord:
    rng = as_generator(seed)
    stops = sorted({0.0, float(t_final)} | {float(t) for t in grid} | {t for t, _ in resets})

    psi = psi0
    t = 0.0
    states: List[np.ndarray] = []
    jumps: List[Tuple[float, int]] = []
    record = 0

    for stop in stops:
        while stop - t > 1e-12 * max(1.0, stop):
            psi, taken, index = unraveling.step(psi, min(dt, stop - t), rng)
            t += taken
            if index is not None:
                jumps.append((t, index))
        t = stop

        # A reset at a record time is visible in that record
        for reset_time, state in resets:
            if reset_time == stop:
                psi = state

        while record < len(grid) and grid[record] == stop:
            states.append(psi.copy())
            record += 1

    return TrajectoryRecord(grid, states, jumps, seed)


def trajectory(
    liouvillian: Liouvillian,
    psi0: Sequence[complex],
    t_final: float,
    dt: float,
    seed: int,
    record_times: Optional[Sequence[float]] = None,
    resets: Sequence[Reset] = (),
) -> TrajectoryRecord:
    """A single quantum-jump trajectory.

    Between jumps the state follows the exact no-jump propagator of
    H_eff = H - (i/2) sum_l g_l F_l^dag F_l; a jump happens in a step with
    probability 1 - ||exp(-i H_eff dt) psi||^2. Steps are halved while that
    probability exceeds 0.1 or departs from its first-order estimate by more
    than 1e-3. `resets` replaces the state by a given one at scheduled times.
    States are recorded on `record_times` (default: every `dt`).
    """

    if t_final < 0 or dt <= 0:
        raise DynamicsError(f"Invalid time parameters t_final={t_final}, dt={dt}")

    psi = _unit_vector(psi0, liouvillian.dim, "Initial state")
    grid = _record_grid(t_final, dt, record_times)
    checked = [(float(t), _unit_vector(state, liouvillian.dim, "Reset state")) for t, state in resets]

    return _run(_Unraveling(liouvillian), psi, t_final, dt, seed, grid, checked)


def trajectory_ensemble(
    liouvillian: Liouvillian,
    psi0: Sequence[complex],
    t_final: float,
    dt: float,
    seed: int,
    n_trajectories: int,
    observables: Sequence[np.ndarray],
    record_times: Optional[Sequence[float]] = None,
    threads: int = 1,
    resets: Sequence[Reset] = (),
) -> EnsembleAverage:
    """Mean observable curves over `n_trajectories` independent trajectories.

    Trajectory k uses the k-th seed split from `seed`, and results are reduced in
    trajectory order, so the average does not depend on `threads`.
    """

    if n_trajectories < 1:
        raise DynamicsError("An ensemble needs at least one trajectory")

    if t_final < 0 or dt <= 0:
        raise DynamicsError(f"Invalid time parameters t_final={t_final}, dt={dt}")

    psi = _unit_vector(psi0, liouvillian.dim, "Initial state")
    grid = _record_grid(t_final, dt, record_times)
    checked = [(float(t), _unit_vector(state, liouvillian.dim, "Reset state")) for t, state in resets]
    operators = [np.asarray(o, dtype=complex) for o in observables]

    unraveling = _Unraveling(liouvillian)

    def run(child: int) -> Tuple[np.ndarray, int]:
        record = _run(unraveling, psi, t_final, dt, child, grid, checked)
        values = np.array([record.expectation(o) for o in operators]).reshape(len(operators), len(grid))
        return values, len(record.jumps)

    seeds = spawn_seeds(seed, n_trajectories)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results = list(executor.map(run, seeds))

    samples = np.stack([values for values, _ in results])
    means = samples.mean(axis=0)
    errors = samples.std(axis=0, ddof=1) / np.sqrt(n_trajectories) if n_trajectories > 1 else np.zeros_like(means)

    logger.info("Averaged %d trajectories on %d threads", n_trajectories, threads)
    return EnsembleAverage(grid, means, errors, np.array([count for _, count in results]), seed)
