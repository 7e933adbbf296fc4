"""State, channel and measurement service tests."""

import numpy as np
import pytest

from qamsy.errors import InvalidPovm, NotCptp, SingularFrame
from qamsy.models.channel import KrausChannel
from qamsy.models.states import DensityOperator, Povm
from qamsy.services.builder import build_qam, random_pattern_set
from qamsy.services.quantum import (
    apply_channel,
    check_cptp,
    check_fixed_point,
    choi_of,
    fidelity,
    iterate_to_fixed_point,
    measure,
    square_root_measurement,
    srm_success_probabilities,
    stable_coherence_factors,
    trace_distance,
    unambiguous_povm,
)

PLUS = np.array([1, 1]) / np.sqrt(2)
SIGMA_X = np.array([[0, 1], [1, 0]])


@pytest.fixture
def decay_channel() -> KrausChannel:
    """Single-qubit amplitude damping with probability 0.3, for testing."""

    q = 0.3
    return KrausChannel([np.array([[1, 0], [0, np.sqrt(1 - q)]]), np.array([[0, np.sqrt(q)], [0, 0]])])


def test_trace_distance():
    """Should be 1 for orthogonal states and 1/sqrt(2) between |0> and |+>."""

    zero = DensityOperator.basis(2, 0)

    assert trace_distance(zero, DensityOperator.basis(2, 1)) == pytest.approx(1.0)
    assert trace_distance(zero, DensityOperator.pure(PLUS)) == pytest.approx(1 / np.sqrt(2))
    assert trace_distance(zero, zero) == pytest.approx(0.0)


def test_fidelity():
    """Should be the squared overlap for pure states."""

    zero = DensityOperator.basis(2, 0)

    assert fidelity(zero, DensityOperator.pure(PLUS)) == pytest.approx(0.5)
    assert fidelity(zero, DensityOperator.maximally_mixed(2)) == pytest.approx(0.5)
    assert fidelity(zero, zero) == pytest.approx(1.0)


def test_check_cptp__passed(decay_channel):
    """Should pass a trace-preserving channel."""

    report = check_cptp(decay_channel)

    assert report.passed
    assert report.completeness < 1e-12
    assert report.s_block is None


def test_check_cptp__scaled():
    """Should report the completeness residual of a scaled Kraus set."""

    report = check_cptp(KrausChannel([0.9 * np.eye(2)]))

    assert not report.passed
    assert report.completeness == pytest.approx(0.19)


def test_apply_channel(decay_channel):
    """Should return the transformed density operator."""

    rho = apply_channel(decay_channel, DensityOperator.basis(2, 1))

    assert np.allclose(rho.matrix, np.diag([0.3, 0.7]))


def test_apply_channel__not_cptp():
    """Should refuse to apply a channel that is not trace preserving."""

    with pytest.raises(NotCptp) as excinfo:
        apply_channel(KrausChannel([0.5 * np.eye(2)]), DensityOperator.basis(2, 0))

    assert str(excinfo.value) == "Channel is not CPTP: residual 7.500e-01 exceeds 1.0e-09"
    assert excinfo.value.exit_code == 2


@pytest.mark.parametrize("seed", range(20))
def test_apply_channel__contractive(seed):
    """Should never increase the trace distance between two states."""

    channel = build_qam(random_pattern_set(seed))
    rng = np.random.default_rng(seed)

    def random_state() -> DensityOperator:
        shape = (channel.dim, channel.dim)
        ginibre = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        rho = ginibre @ ginibre.conj().T
        return DensityOperator((rho + rho.conj().T) / (2 * np.trace(rho).real))

    for _ in range(5):
        first, second = random_state(), random_state()
        before = trace_distance(first, second)
        after = trace_distance(apply_channel(channel, first), apply_channel(channel, second))

        assert after <= before + 1e-10


def test_iterate_to_fixed_point__identity():
    """Should detect a fixed point at iteration 0."""

    result = iterate_to_fixed_point(KrausChannel([np.eye(2)]), DensityOperator.pure(PLUS))

    assert result.converged
    assert result.iterations == 0
    assert result.residual == pytest.approx(0.0)


def test_iterate_to_fixed_point__decay(decay_channel):
    """Should converge to the ground state."""

    result = iterate_to_fixed_point(decay_channel, DensityOperator.basis(2, 1), tol=1e-12)

    assert result.converged
    assert trace_distance(result.state, DensityOperator.basis(2, 0)) < 1e-10


def test_iterate_to_fixed_point__unitary():
    """Should flag a unitary channel that never settles instead of raising."""

    result = iterate_to_fixed_point(KrausChannel([SIGMA_X]), DensityOperator.basis(2, 0), max_iters=5)

    assert not result.converged
    assert result.iterations == 5
    assert result.residual == pytest.approx(1.0)


def test_check_fixed_point(decay_channel):
    """Should accept the ground state and reject the excited one."""

    assert check_fixed_point(decay_channel, DensityOperator.basis(2, 0)).is_fixed
    assert check_fixed_point(decay_channel, DensityOperator.basis(2, 1)).residual == pytest.approx(0.3)


def test_choi_of(decay_channel):
    """Should reproduce the channel action and have trace N."""

    choi = choi_of(decay_channel)
    rho = np.array([[0.5, 0.2j], [-0.2j, 0.5]])

    assert np.trace(choi.matrix) == pytest.approx(2.0)
    assert np.allclose(choi.apply(rho), decay_channel.action(rho))


def test_stable_coherence_factors(decay_channel):
    """Should read the factors picked up by basis coherences off the Choi matrix."""

    factors = stable_coherence_factors(decay_channel)

    assert np.allclose(factors, [[1.0, np.sqrt(0.7)], [np.sqrt(0.7), 0.7]])


def test_measure__deterministic():
    """Should return the only possible outcome."""

    povm = Povm([np.diag([1, 0]), np.diag([0, 1])])
    outcome = measure(povm, DensityOperator.basis(2, 1), seed=3)

    assert outcome.outcome == 1
    assert np.allclose(outcome.probabilities, [0.0, 1.0])


def test_measure__seeded():
    """Should sample the same outcomes from the same seed."""

    povm = Povm([np.diag([1, 0]), np.diag([0, 1])])
    state = DensityOperator.pure(PLUS)

    first = [measure(povm, state, seed).outcome for seed in range(20)]
    second = [measure(povm, state, seed).outcome for seed in range(20)]

    assert first == second
    assert set(first) == {0, 1}


def test_measure__dimension_mismatch():
    """Should reject a POVM on another space."""

    with pytest.raises(InvalidPovm) as excinfo:
        measure(Povm([np.eye(2)]), DensityOperator.maximally_mixed(3), seed=0)

    assert str(excinfo.value) == "POVM acts on dimension 2, state has 3"


def test_square_root_measurement__orthogonal():
    """Should give the basis projectors for orthonormal states."""

    povm = square_root_measurement([[1, 0], [0, 1]])

    assert len(povm) == 2
    assert np.allclose(povm.effects[0], np.diag([1, 0]))
    assert np.allclose(povm.effects[1], np.diag([0, 1]))


def test_square_root_measurement__complement():
    """Should complete the POVM on the complement of the states' span."""

    povm = square_root_measurement([[1, 0, 0], [0, 1, 0]])

    assert len(povm) == 3
    assert np.allclose(povm.effects[2], np.diag([0, 0, 1]))


@pytest.mark.parametrize("count", [3, 4, 5, 8])
def test_srm_success_probabilities__uniform(count):
    """Should succeed with probability 2/M on M real qubit states spread evenly over the circle."""

    angles = 2 * np.pi * np.arange(1, count + 1) / count
    states = [[np.cos(theta), np.sin(theta)] for theta in angles]

    assert np.allclose(srm_success_probabilities(states), 2 / count)


def test_srm_success_probabilities__empty():
    """Should refuse an empty ensemble."""

    with pytest.raises(SingularFrame) as excinfo:
        srm_success_probabilities([])

    assert str(excinfo.value) == "Square-root measurement needs at least one state vector"


def test_unambiguous_povm__orthogonal():
    """Should keep orthogonal detection projectors unscaled."""

    povm = unambiguous_povm([np.diag([1, 0, 0]), np.diag([0, 1, 0])])

    assert povm.scale == 1.0
    assert np.allclose(povm.effects[-1], np.diag([0, 0, 1]))


def test_unambiguous_povm__overlapping():
    """Should rescale overlapping projectors until the inconclusive effect is positive."""

    povm = unambiguous_povm([np.diag([1, 0]), np.outer(PLUS, PLUS)])

    assert povm.scale == pytest.approx(1 / (1 + 1 / np.sqrt(2)))
    assert np.min(np.linalg.eigvalsh(povm.effects[-1])) > -1e-12
