"""Concrete-system parameter model tests."""

import numpy as np
import pytest

from qamsy.errors import DuplicatePatterns, ModelError, NotSpinVector, TruncationTooSmall
from qamsy.models.systems import HopfieldNet, HopfieldTrials, ResonatorSpec, WalkSpec, spin_array


@pytest.fixture
def resonator_spec() -> ResonatorSpec:
    """Three-photon resonator with linear damping, for testing."""

    return ResonatorSpec(n=3, detuning=0.4, eta=1.56, gamma_1=1.0, gamma_n=0.2)


def test_walk_spec__nodes():
    """Should read bit strings as binary numbers, qubit 1 first."""

    spec = WalkSpec(3, ["011", "111"])

    assert spec.dim == 8
    assert spec.node("011") == 3
    assert spec.bits(6) == "110"
    assert (spec.gamma, spec.eta, spec.kappa) == (1.0, 0.1, 0.0)


def test_walk_spec__with_rates():
    """Should copy the walk with new rates."""

    spec = WalkSpec(3, ["011", "111"]).with_rates(kappa=2.0)

    assert spec.kappa == 2.0
    assert spec.patterns == ("011", "111")


def test_walk_spec__duplicates():
    """Should reject a pattern declared twice."""

    with pytest.raises(DuplicatePatterns) as excinfo:
        WalkSpec(2, ["01", "10", "01"])

    assert str(excinfo.value) == "Patterns declared more than once: 01"


def test_walk_spec__bad_pattern():
    """Should reject a pattern of the wrong length."""

    with pytest.raises(ModelError) as excinfo:
        WalkSpec(3, ["01"])

    assert str(excinfo.value) == "Pattern '01' is not a bit string of length 3"


def test_walk_spec__negative_rate():
    """Should reject negative rates."""

    with pytest.raises(ModelError) as excinfo:
        WalkSpec(2, ["01"], eta=-0.1)

    assert str(excinfo.value) == "Rate eta must be non-negative, got -0.1"


def test_resonator_spec__radius(resonator_spec):
    """Should put the lobes at r = (2 eta / gamma_n)^(1/n), evenly spaced in angle."""

    assert resonator_spec.radius == pytest.approx(2.4986, abs=1e-4)
    assert resonator_spec.radius ** 3 == pytest.approx(15.6)
    assert np.allclose(resonator_spec.lobe_angles, [0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    assert resonator_spec.fock_dim == 40


def test_resonator_spec__truncation(resonator_spec):
    """Should reject a Fock space too small for the lobes."""

    with pytest.raises(TruncationTooSmall) as excinfo:
        resonator_spec.with_rates(fock_dim=10)

    assert str(excinfo.value) == "Fock truncation 10 is too small for mean photon number 6.243"


def test_resonator_spec__order():
    """Should need at least a two-photon drive."""

    with pytest.raises(ModelError) as excinfo:
        ResonatorSpec(n=1, detuning=0.0, eta=1.0, gamma_1=1.0, gamma_n=1.0)

    assert str(excinfo.value) == "Drive order must be at least 2, got 1"


def test_resonator_spec__undamped_drive():
    """Should need nonlinear damping to balance the drive."""

    with pytest.raises(ModelError) as excinfo:
        ResonatorSpec(n=2, detuning=0.0, eta=1.0, gamma_1=1.0, gamma_n=0.0)

    assert str(excinfo.value) == "A driven resonator needs nonlinear damping gamma_n > 0"


def test_spin_array__ok():
    """Should accept +1/-1 vectors."""

    assert spin_array([1, -1, 1]).tolist() == [1, -1, 1]


def test_spin_array__not_spins():
    """Should reject entries other than +1 and -1."""

    with pytest.raises(NotSpinVector) as excinfo:
        spin_array([1, 0, -1], "Pattern")

    assert str(excinfo.value) == "Pattern must be a non-empty vector of +1 and -1 entries"


def test_hopfield_net__self_coupling():
    """Should reject couplings with a nonzero diagonal."""

    with pytest.raises(ModelError) as excinfo:
        HopfieldNet(np.eye(2))

    assert str(excinfo.value) == "Couplings must have a zero diagonal"


def test_hopfield_net__asymmetric():
    """Should reject asymmetric couplings."""

    with pytest.raises(ModelError) as excinfo:
        HopfieldNet([[0.0, 1.0], [0.0, 0.0]])

    assert str(excinfo.value) == "Couplings must be symmetric"


def test_hopfield_net__load():
    """Should report the load M / n."""

    net = HopfieldNet(np.zeros((4, 4)), [[1, 1, -1, -1]])

    assert net.n_neurons == 4
    assert net.load == 0.25


def test_hopfield_trials__rates():
    """Should derive the success rate and load from the counts."""

    trials = HopfieldTrials(100, 10, 0.1, 200, 190, 0.98, True, 1)

    assert trials.success_rate == 0.95
    assert trials.load == 0.1
