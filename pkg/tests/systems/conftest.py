"""Shared concrete-system test fixtures."""

import pytest

from qamsy.models.systems import ResonatorSpec, WalkSpec


@pytest.fixture
def walk_spec() -> WalkSpec:
    """Three-qubit walk storing 011 and 111 without inter-basin coupling, for testing."""

    return WalkSpec(3, ["011", "111"], gamma=1.0, eta=0.1, kappa=0.0)


@pytest.fixture
def weak_resonator() -> ResonatorSpec:
    """Three-photon resonator with linear damping, for testing."""

    return ResonatorSpec(n=3, detuning=0.4, eta=1.56, gamma_1=1.0, gamma_n=0.2)


@pytest.fixture
def strong_resonator() -> ResonatorSpec:
    """Three-photon resonator without linear damping, for testing."""

    return ResonatorSpec(n=3, detuning=0.4, eta=1.56, gamma_1=0.0, gamma_n=0.2)
