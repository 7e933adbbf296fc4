"""Quantum-jump trajectory service tests."""

import numpy as np
import pytest

from qamsy.errors import DimMismatch, DynamicsError, InvalidState
from qamsy.services.trajectories import trajectory, trajectory_ensemble

EXCITED = [0, 1]
GROUND = [1, 0]
EXCITED_POPULATION = np.diag([0, 1])


def test_trajectory__records(decay_liouvillian):
    """Should record normalized states on the default grid."""

    record = trajectory(decay_liouvillian, EXCITED, 1.0, 0.1, seed=4)

    assert np.allclose(record.times, np.linspace(0, 1, 11))
    assert len(record.states) == 11
    assert all(np.linalg.norm(psi) == pytest.approx(1.0) for psi in record.states)
    assert record.seed == 4


def test_trajectory__single_jump(decay_liouvillian):
    """Should jump to the ground state at most once and stay there."""

    record = trajectory(decay_liouvillian, EXCITED, 20.0, 0.01, seed=8, record_times=[0.0, 20.0])
    populations = record.expectation(EXCITED_POPULATION)

    assert len(record.jumps) == 1
    assert record.jumps[0][1] == 0
    assert populations[0] == pytest.approx(1.0)
    assert populations[-1] == pytest.approx(0.0)


def test_trajectory__reproducible(decay_liouvillian):
    """Should repeat a trajectory exactly from the same seed."""

    first = trajectory(decay_liouvillian, EXCITED, 3.0, 0.01, seed=21)
    second = trajectory(decay_liouvillian, EXCITED, 3.0, 0.01, seed=21)

    assert first.jumps == second.jumps
    assert all(np.array_equal(a, b) for a, b in zip(first.states, second.states))


def test_trajectory__reset(decay_liouvillian):
    """Should replace the state at the reset time, visibly in that record."""

    record = trajectory(
        decay_liouvillian,
        [np.sqrt(0.5), np.sqrt(0.5)],
        2.0,
        0.01,
        seed=2,
        record_times=[0.5, 1.0, 2.0],
        resets=[(1.0, EXCITED)],
    )
    populations = record.expectation(EXCITED_POPULATION)

    assert populations[1] == pytest.approx(1.0)


def test_trajectory__wrong_length(decay_liouvillian):
    """Should reject an initial state of another dimension."""

    with pytest.raises(DimMismatch) as excinfo:
        trajectory(decay_liouvillian, [1, 0, 0], 1.0, 0.1, seed=0)

    assert str(excinfo.value) == "Initial state has length 3, Liouvillian acts on 2"


def test_trajectory__not_normalized(decay_liouvillian):
    """Should reject an initial state without unit norm."""

    with pytest.raises(InvalidState) as excinfo:
        trajectory(decay_liouvillian, [1, 1], 1.0, 0.1, seed=0)

    assert str(excinfo.value) == "Initial state has norm 1.41421356237, expected 1"


def test_trajectory__record_times(decay_liouvillian):
    """Should reject record times outside the run or out of order."""

    with pytest.raises(DynamicsError) as excinfo:
        trajectory(decay_liouvillian, EXCITED, 2.0, 0.1, seed=0, record_times=[1.0, 0.5])

    assert str(excinfo.value) == "Record times must be non-decreasing and lie within [0, 2.0]"


def test_trajectory__bad_step(decay_liouvillian):
    """Should reject a non-positive time step."""

    with pytest.raises(DynamicsError) as excinfo:
        trajectory(decay_liouvillian, EXCITED, 1.0, 0.0, seed=0)

    assert str(excinfo.value) == "Invalid time parameters t_final=1.0, dt=0.0"


def test_trajectory__halves_large_steps(decay_liouvillian):
    """Should stay accurate with a step far beyond the decay time."""

    average = trajectory_ensemble(
        decay_liouvillian, EXCITED, 1.0, 1.0, 3, 400, [EXCITED_POPULATION], record_times=[0.0, 1.0]
    )

    assert average.means[0, -1] == pytest.approx(np.exp(-1), abs=0.1)


def test_trajectory_ensemble__matches_evolution(decay_liouvillian):
    """Should average to the master-equation population."""

    average = trajectory_ensemble(
        decay_liouvillian, EXCITED, 2.0, 0.01, 11, 400, [EXCITED_POPULATION], record_times=[0.0, 1.0, 2.0]
    )

    assert average.means.shape == (1, 3)
    assert average.means[0, 0] == pytest.approx(1.0)
    assert average.means[0, 1] == pytest.approx(np.exp(-1), abs=0.1)
    assert average.means[0, 2] == pytest.approx(np.exp(-2), abs=0.1)
    assert np.all(average.jump_counts <= 1)


def test_trajectory_ensemble__thread_independent(decay_liouvillian):
    """Should give identical averages for any number of threads."""

    args = (decay_liouvillian, EXCITED, 1.0, 0.05, 99, 40, [EXCITED_POPULATION, np.diag([1, 0])])

    single = trajectory_ensemble(*args, threads=1)
    pooled = trajectory_ensemble(*args, threads=4)

    assert np.array_equal(single.means, pooled.means)
    assert np.array_equal(single.jump_counts, pooled.jump_counts)
    assert np.allclose(single.means.sum(axis=0), 1.0)


def test_trajectory_ensemble__empty(decay_liouvillian):
    """Should need at least one trajectory."""

    with pytest.raises(DynamicsError) as excinfo:
        trajectory_ensemble(decay_liouvillian, GROUND, 1.0, 0.1, 0, 0, [])

    assert str(excinfo.value) == "An ensemble needs at least one trajectory"
