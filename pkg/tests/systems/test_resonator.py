"""Driven-dissipative resonator tests."""

import numpy as np
import pytest

from qamsy.errors import GridTooCoarse, ModelError, TruncationTooSmall
from qamsy.models.systems import ResonatorSpec
from qamsy.services.lindblad import check_strong_symmetry
from qamsy.systems.resonator import (
    annihilation,
    build_resonator,
    cat_error_correction_run,
    cat_patterns,
    coherent_state,
    lobe_amplitudes,
    lobe_basin_projector,
    lobe_basin_projectors,
    lobe_classification_experiment,
    parity_projectors,
    resonator_manifold,
    steady_state_lobe_fidelity,
)


def test_annihilation():
    """Should lower the photon number by one."""

    a = annihilation(5)

    assert np.allclose(a @ np.eye(5)[3], np.sqrt(3) * np.eye(5)[2])
    assert np.allclose(np.diag(a.conj().T @ a).real, range(5))


def test_coherent_state():
    """Should be an eigenvector of a with Poissonian photon numbers."""

    alpha = 1.2 * np.exp(0.3j)
    psi = coherent_state(alpha, 30)

    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert np.allclose(annihilation(30)[:-1] @ psi, alpha * psi[:-1], atol=1e-10)
    assert abs(psi[0]) ** 2 == pytest.approx(np.exp(-(1.2 ** 2)))


def test_coherent_state__vacuum():
    """Should give the vacuum for alpha = 0."""

    assert np.allclose(coherent_state(0.0, 4), [1, 0, 0, 0])


def test_lobe_amplitudes(weak_resonator):
    """Should place n lobes on the circle of radius (2 eta / gamma_n)^(1/n)."""

    alphas = lobe_amplitudes(weak_resonator)

    assert np.allclose(np.abs(alphas), 2.4986, atol=1e-4)
    assert np.allclose(np.angle(alphas[1]), 2 * np.pi / 3)


def test_build_resonator(weak_resonator):
    """Should have the damping jumps at their rates."""

    liouvillian = build_resonator(weak_resonator)

    assert liouvillian.dim == 40
    assert [rate for _, rate in liouvillian.jump_ops] == [1.0, 0.2]


def test_build_resonator__truncation():
    """Should refuse a Fock space that cuts off the lobes."""

    spec = ResonatorSpec(3, 0.4, 1.56, 1.0, 0.2, fock_dim=22)

    with pytest.raises(TruncationTooSmall) as excinfo:
        build_resonator(spec)

    assert str(excinfo.value).startswith("Lobe population beyond Fock level 21 is ")


def test_parity_projectors(weak_resonator):
    """Should split the Fock space into n sectors."""

    projectors = parity_projectors(weak_resonator)

    assert np.allclose(sum(projectors), np.eye(40))
    assert np.diag(projectors[1]).real.tolist()[:6] == [0, 1, 0, 0, 1, 0]


def test_cat_patterns(strong_resonator):
    """Should give orthonormal cats, each inside its own sector."""

    cats = cat_patterns(strong_resonator)
    projectors = parity_projectors(strong_resonator)

    gram = np.array([[np.vdot(c1, c2) for c2 in cats] for c1 in cats])
    assert np.allclose(gram, np.eye(3), atol=1e-10)
    for cat, projector in zip(cats, projectors):
        assert np.vdot(cat, projector @ cat).real == pytest.approx(1.0)


def test_cat_patterns__undriven():
    """Should need a drive."""

    with pytest.raises(ModelError) as excinfo:
        cat_patterns(ResonatorSpec(3, 0.4, 0.0, 0.0, 0.2))

    assert str(excinfo.value) == "Cat states need a driven resonator (eta > 0)"


def test_strong_symmetry(strong_resonator):
    """Should conserve the sectors when only n-photon loss is present."""

    liouvillian = build_resonator(strong_resonator)
    report = check_strong_symmetry(liouvillian, parity_projectors(strong_resonator)[0], tol=1e-8)

    assert report.hamiltonian_commutator == pytest.approx(0.0, abs=1e-12)
    assert report.jump_commutators[1] == pytest.approx(0.0, abs=1e-12)
    assert report.is_conserved


def test_lobe_basin_projectors__vacuum(weak_resonator):
    """Should split the vacuum evenly between the lobes."""

    basins = lobe_basin_projectors(weak_resonator)

    weights = [projector[0, 0].real for projector in basins.projectors]
    assert np.allclose(weights, 1 / 3, atol=1e-6)
    assert basins.completeness_residual < 0.02


def test_lobe_basin_projector__coherent(weak_resonator):
    """Should hold a lobe's coherent state almost entirely in its basin."""

    alpha = lobe_amplitudes(weak_resonator)[2]
    psi = coherent_state(alpha, weak_resonator.fock_dim)

    projector = lobe_basin_projector(weak_resonator, 2)

    assert np.vdot(psi, projector @ psi).real > 0.95


def test_lobe_basin_projector__out_of_range(weak_resonator):
    """Should reject a lobe index beyond n."""

    with pytest.raises(ModelError) as excinfo:
        lobe_basin_projector(weak_resonator, 3)

    assert str(excinfo.value) == "Lobe index 3 out of range for n=3"


def test_lobe_basin_projectors__empty_grid(weak_resonator):
    """Should need at least one quadrature point per direction."""

    with pytest.raises(GridTooCoarse) as excinfo:
        lobe_basin_projectors(weak_resonator, radial_points=0)

    assert str(excinfo.value) == "Quadrature needs at least one radial and one angular point"


def test_lobe_classification_experiment__needs_damping(strong_resonator):
    """Should refuse the strong-symmetry regime."""

    with pytest.raises(ModelError) as excinfo:
        lobe_classification_experiment(strong_resonator, 10, 0.5, seed=1)

    assert str(excinfo.value) == "Lobe classification needs linear damping gamma_1 > 0"


def test_lobe_classification_experiment__delta(weak_resonator):
    """Should need a basin threshold in [0.5, 1)."""

    with pytest.raises(ModelError) as excinfo:
        lobe_classification_experiment(weak_resonator, 10, 0.4, seed=1)

    assert str(excinfo.value) == "Basin threshold delta must lie in [0.5, 1), got 0.4"


def test_cat_error_correction_run__needs_strong_symmetry(weak_resonator):
    """Should refuse a resonator with linear damping."""

    with pytest.raises(ModelError) as excinfo:
        cat_error_correction_run(weak_resonator, 1.0, 2.0, seed=1)

    assert str(excinfo.value) == "Cat error correction needs the strong-symmetry regime gamma_1 = 0"


def test_cat_error_correction_run__reset_time(strong_resonator):
    """Should need the reset inside the run."""

    with pytest.raises(ModelError) as excinfo:
        cat_error_correction_run(strong_resonator, 3.0, 2.0, seed=1)

    assert str(excinfo.value) == "Reset time 3.0 lies outside [0, 2.0]"


@pytest.mark.slow
def test_resonator_manifold(weak_resonator):
    """Should find one metastable phase per lobe, in lobe order."""

    _, manifold = resonator_manifold(weak_resonator)
    lobes = [coherent_state(alpha, 40) for alpha in lobe_amplitudes(weak_resonator)]

    assert manifold.n == 3
    for mu, phase in enumerate(manifold.phases):
        assert int(np.argmax([phase.overlap(lobe) for lobe in lobes])) == mu


@pytest.mark.slow
def test_steady_state_lobe_fidelity(weak_resonator):
    """Should settle in the uniform mixture of the lobes."""

    assert steady_state_lobe_fidelity(weak_resonator) > 0.95


@pytest.mark.slow
def test_lobe_classification_experiment(weak_resonator):
    """Should classify noisy inputs by their lobe."""

    report = lobe_classification_experiment(weak_resonator, 100, 0.5, seed=7, threads=4)

    assert report.accuracy >= 0.9
    assert report.confusion.sum() == 100


@pytest.mark.slow
def test_lobe_classification_experiment__strict_threshold(weak_resonator):
    """Should make no mistakes on inputs deep inside a basin."""

    report = lobe_classification_experiment(weak_resonator, 100, 0.8, seed=7, threads=4)

    assert report.accuracy == 1.0


@pytest.mark.slow
def test_cat_error_correction_run(strong_resonator):
    """Should recover the cat after a reset to vacuum without leaving its sector."""

    record = cat_error_correction_run(strong_resonator, reset_time=2.0, t_final=10.0, seed=11)

    after = record.times >= 2.0
    assert record.overlap[0] == pytest.approx(1.0)
    assert np.max(record.overlap[after]) > 0.99
    assert np.max(np.abs(record.parity - record.parity[0])) < 1e-6
