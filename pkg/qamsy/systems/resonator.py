"""Driven-dissipative resonator with n-photon drive and loss.

With linear loss (gamma_1 > 0) the n coherent lobes are metastable phases and
serve as classical patterns; without it a strong Z_n symmetry conserves the
photon-number sectors {na + mu} and the n-cat states are stable patterns.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from ..errors import GridTooCoarse, ModelError, TruncationTooSmall
from ..models.dynamics import Liouvillian, MetastableManifold, Spectrum
from ..models.states import DensityOperator
from ..models.systems import (
    CatRecoveryRecord,
    ClassificationReport,
    LobeBasins,
    ResonatorSpec,
)
from ..services.lindblad import (
    DEFAULT_GAP_THRESHOLD,
    build_liouvillian,
    detect_metastable_manifold,
    spectrum_of,
    steady_state,
)
from ..services.quantum import fidelity, measure, unambiguous_povm
from ..services.seeding import as_generator, spawn_seeds
from ..services.trajectories import trajectory

logger = logging.getLogger(__name__)

MAX_TAIL_POPULATION = 1e-8
MAX_COMPLETENESS_DEVIATION = 0.02


def annihilation(fock_dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, fock_dim)), k=1).astype(complex)


def coherent_state(alpha: complex, fock_dim: int) -> np.ndarray:
    """|alpha> on the truncated Fock space, renormalized after truncation."""

    psi = _coherent_amplitudes(np.array([alpha]), fock_dim)[:, 0]
    return psi / np.linalg.norm(psi)


def _coherent_amplitudes(alphas: np.ndarray, fock_dim: int) -> np.ndarray:
    """Unnormalized truncated coherent states, one column per amplitude."""

    k = np.arange(fock_dim)[:, None]
    magnitude = np.abs(alphas)[None, :]
    phase = np.angle(alphas)[None, :]

    # Zero amplitudes underflow to the vacuum
    log_magnitude = np.log(np.maximum(magnitude, 1e-300))
    log_weight = -(magnitude ** 2) / 2 + k * log_magnitude - gammaln(k + 1) / 2
    return np.exp(log_weight) * np.exp(1j * k * phase)


def _check_truncation(spec: ResonatorSpec) -> None:
    tail = poisson.sf(spec.fock_dim - 1, spec.radius ** 2)
    if tail > MAX_TAIL_POPULATION:
        raise TruncationTooSmall(
            f"Lobe population beyond Fock level {spec.fock_dim - 1} is {tail:.3e}"
        )


def lobe_amplitudes(spec: ResonatorSpec) -> np.ndarray:
    """alpha_j = r exp(i theta_j)."""
    return spec.radius * np.exp(1j * spec.lobe_angles)


def build_resonator(spec: ResonatorSpec) -> Liouvillian:
    """Liouvillian with jumps a (gamma_1) and a^n (gamma_n).

    H = Delta a^dag a + i eta [(a^dag)^n e^{i n theta_0} - a^n e^{-i n theta_0}]; with
    this drive sign the lobes of the -i[H, rho] evolution sit at theta_j.
    """

    _check_truncation(spec)

    a = annihilation(spec.fock_dim)
    a_n = np.linalg.matrix_power(a, spec.n)
    drive = a_n.conj().T * np.exp(1j * spec.n * spec.theta0)

    hamiltonian = spec.detuning * (a.conj().T @ a) + 1j * spec.eta * (drive - drive.conj().T)
    jumps = [(a, spec.gamma_1), (a_n, spec.gamma_n)]

    logger.info("Built %r, lobe radius %.4f", spec, spec.radius)
    return build_liouvillian(hamiltonian, jumps)


def parity_projectors(spec: ResonatorSpec) -> List[np.ndarray]:
    """P_mu = sum_a |na + mu><na + mu|, the Z_n symmetry sectors."""

    sectors = np.arange(spec.fock_dim) % spec.n
    return [np.diag((sectors == mu).astype(float)).astype(complex) for mu in range(spec.n)]


def cat_patterns(spec: ResonatorSpec) -> List[np.ndarray]:
    """Multimode cats |C_mu> proportional to sum_k exp(-i 2 pi mu k / n)|alpha_k>.

    The phase convention puts |C_mu> in the sector {na + mu}, so the cats are
    orthonormal on the truncated space.
    """

    _check_truncation(spec)

    if spec.radius == 0:
        raise ModelError("Cat states need a driven resonator (eta > 0)")

    lobes = [coherent_state(alpha, spec.fock_dim) for alpha in lobe_amplitudes(spec)]
    cats = []
    for mu in range(spec.n):
        phases = np.exp(-2j * np.pi * mu * np.arange(spec.n) / spec.n)
        psi = sum(p * lobe for p, lobe in zip(phases, lobes))
        cats.append(psi / np.linalg.norm(psi))

    gram = np.array([[np.vdot(c1, c2) for c2 in cats] for c1 in cats])
    logger.debug("Cat Gram residual %.3e", np.max(np.abs(gram - np.eye(spec.n))))
    return cats


def _sector_projector(
    spec: ResonatorSpec, start: float, width: float, radial_points: int, angular_points: int, r_max: float
) -> np.ndarray:
    """(1/pi) int dphi int dR R |R e^{i phi}><R e^{i phi}| over one angular sector."""

    nodes, weights = np.polynomial.legendre.leggauss(radial_points)
    radii = r_max * (nodes + 1) / 2
    radial_weights = weights * r_max / 2

    angles = start + width * (np.arange(angular_points) + 0.5) / angular_points
    angular_weight = width / angular_points

    grid_r, grid_phi = np.meshgrid(radii, angles, indexing="ij")
    grid_w = np.outer(radial_weights * radii, np.full(angular_points, angular_weight)) / np.pi

    states = _coherent_amplitudes((grid_r * np.exp(1j * grid_phi)).ravel(), spec.fock_dim)
    return (states * grid_w.ravel()) @ states.conj().T


def lobe_basin_projectors(
    spec: ResonatorSpec,
    radial_points: int = 60,
    angular_points: int = 60,
    r_max: Optional[float] = None,
) -> LobeBasins:
    """Basin projectors of every lobe by phase-space quadrature.

    The sector of lobe j spans theta_j +- pi/n in angle and [0, r_max] in radius
    (default r + 4). The quadrature must resolve the identity on Fock states with
    at most r^2 photons to within 0.02, else GridTooCoarse.
    """

    if radial_points < 1 or angular_points < 1:
        raise GridTooCoarse("Quadrature needs at least one radial and one angular point")

    radius_limit = spec.radius + 4.0 if r_max is None else float(r_max)
    width = 2 * np.pi / spec.n

    projectors = tuple(
        _sector_projector(spec, theta - width / 2, width, radial_points, angular_points, radius_limit)
        for theta in spec.lobe_angles
    )

    low = int(np.floor(spec.radius ** 2)) + 1
    deviation = sum(projectors)[:low, :low] - np.eye(low)
    residual = float(np.max(np.abs(deviation)))

    if residual > MAX_COMPLETENESS_DEVIATION:
        raise GridTooCoarse(
            f"Basin projectors resolve the identity only to {residual:.3f} "
            f"(limit {MAX_COMPLETENESS_DEVIATION})"
        )

    return LobeBasins(projectors, residual)


def lobe_basin_projector(
    spec: ResonatorSpec,
    lobe: int,
    radial_points: int = 60,
    angular_points: int = 60,
    r_max: Optional[float] = None,
) -> np.ndarray:
    """Basin projector of a single lobe. See `lobe_basin_projectors`."""

    if not 0 <= lobe < spec.n:
        raise ModelError(f"Lobe index {lobe} out of range for n={spec.n}")

    return lobe_basin_projectors(spec, radial_points, angular_points, r_max).projectors[lobe]


def resonator_manifold(
    spec: ResonatorSpec,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    seed: int = 0,
    probe_count: Optional[int] = None,
) -> Tuple[Spectrum, MetastableManifold]:
    """Spectrum and metastable manifold of the lobes.

    Only the n + 1 slowest modes are searched for the gap. Probes are coherent
    states on the lobe circle (6n angles by default); phases are returned in lobe
    order.
    """

    liouvillian = build_resonator(spec)
    spectrum = spectrum_of(liouvillian, k=spec.n + 1)

    count = 6 * spec.n if probe_count is None else probe_count
    angles = spec.theta0 + 2 * np.pi * np.arange(count) / count
    probes = [coherent_state(spec.radius * np.exp(1j * phi), spec.fock_dim) for phi in angles]

    manifold = detect_metastable_manifold(spectrum, gap_threshold, liouvillian, probes, seed)

    if manifold.phases and manifold.n == spec.n:
        lobes = [coherent_state(alpha, spec.fock_dim) for alpha in lobe_amplitudes(spec)]
        order = [
            int(np.argmax([phase.overlap(lobe) for phase in manifold.phases])) for lobe in lobes
        ]
        if sorted(order) == list(range(spec.n)):
            manifold = MetastableManifold(
                manifold.n,
                manifold.gap_ratio,
                manifold.tau_s,
                manifold.tau_f,
                [manifold.phases[k] for k in order],
                [manifold.basin_observables[k] for k in order],
            )
        else:
            logger.warning("Metastable phases do not match the lobes one to one")

    return spectrum, manifold


def steady_state_lobe_fidelity(spec: ResonatorSpec) -> float:
    """Fidelity of the steady state with the uniform mixture of the lobes."""

    rho = steady_state(build_resonator(spec), tol=1e-8)
    lobes = [coherent_state(alpha, spec.fock_dim) for alpha in lobe_amplitudes(spec)]
    mixture = sum(np.outer(psi, psi.conj()) for psi in lobes) / spec.n
    return fidelity(rho, mixture)


def _measurement_time(spec: ResonatorSpec, gap_threshold: float) -> float:
    spectrum = spectrum_of(build_resonator(spec), k=spec.n + 1)
    return 3 * detect_metastable_manifold(spectrum, gap_threshold).tau_s


def _sample_inputs(
    spec: ResonatorSpec, basins: LobeBasins, n_inputs: int, delta: float, rng: np.random.Generator
) -> List[Tuple[np.ndarray, int]]:
    """Coherent states in the disk of radius 1.5 r with a basin weight above delta."""

    inputs = []
    attempts = 0
    while len(inputs) < n_inputs:
        attempts += 1
        if attempts > 1000 * n_inputs:
            raise ModelError(f"Could not sample {n_inputs} inputs with basin weight above {delta}")

        radius = 1.5 * spec.radius * np.sqrt(rng.random())
        psi = coherent_state(radius * np.exp(2j * np.pi * rng.random()), spec.fock_dim)
        label = basins.assign(np.outer(psi, psi.conj()), delta)

        if label is not None:
            inputs.append((psi, label))

    return inputs


def lobe_classification_experiment(
    spec: ResonatorSpec,
    n_inputs: int,
    delta: float,
    seed: int,
    t_measure: Optional[float] = None,
    dt: float = 0.01,
    threads: int = 1,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
) -> ClassificationReport:
    """Classify noisy coherent inputs by their metastable lobe.

    Every input runs one trajectory up to `t_measure` (default 3 tau_s) and is then
    measured with the unambiguous POVM {|alpha_mu><alpha_mu|, inconclusive}. An
    input counts as correct when the outcome is the lobe whose basin holds more
    than `delta` of it; accuracies are taken over conclusive outcomes only.
    """

    if spec.gamma_1 <= 0:
        raise ModelError("Lobe classification needs linear damping gamma_1 > 0")

    if not 0.5 <= delta < 1:
        raise ModelError(f"Basin threshold delta must lie in [0.5, 1), got {delta}")

    if t_measure is None:
        t_measure = _measurement_time(spec, gap_threshold)

    liouvillian = build_resonator(spec)
    basins = lobe_basin_projectors(spec)
    lobes = [coherent_state(alpha, spec.fock_dim) for alpha in lobe_amplitudes(spec)]
    povm = unambiguous_povm([np.outer(psi, psi.conj()) for psi in lobes])

    rng = as_generator(seed)
    inputs = _sample_inputs(spec, basins, n_inputs, delta, rng)
    seeds = spawn_seeds(seed, 2 * n_inputs)

    def classify(k: int) -> int:
        psi, _ = inputs[k]
        record = trajectory(liouvillian, psi, t_measure, dt, seeds[k], record_times=[t_measure])
        final = DensityOperator.pure(record.states[-1])
        return measure(povm, final, seeds[n_inputs + k]).outcome

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        outcomes = list(executor.map(classify, range(n_inputs)))

    confusion = np.zeros((spec.n, spec.n + 1), dtype=int)
    for (_, label), outcome in zip(inputs, outcomes):
        confusion[label, outcome] += 1

    correct = int(np.trace(confusion[:, : spec.n]))
    classified = int(confusion[:, : spec.n].sum())
    per_class = tuple(
        float(confusion[mu, mu] / row_total) if row_total else 0.0
        for mu, row_total in enumerate(confusion[:, : spec.n].sum(axis=1))
    )

    report = ClassificationReport(
        n_inputs=n_inputs,
        delta=delta,
        t_measure=float(t_measure),
        accuracy=correct / classified if classified else 0.0,
        unclassified_fraction=float(confusion[:, spec.n].sum() / n_inputs),
        per_class_accuracy=per_class,
        confusion=confusion,
        povm_scale=povm.scale,
        seed=seed,
    )
    logger.info("Classified %d inputs at delta=%.2f: accuracy %.3f", n_inputs, delta, report.accuracy)
    return report


def cat_error_correction_run(
    spec: ResonatorSpec,
    reset_time: float,
    t_final: float,
    seed: int,
    dt: float = 0.01,
    record_times: Optional[Sequence[float]] = None,
) -> CatRecoveryRecord:
    """One trajectory from |C_0> with a reset to vacuum at `reset_time`.

    Records |<C_0|psi(t)>|^2 and the sector-0 population <P_0>.
    """

    if spec.gamma_1 != 0:
        raise ModelError("Cat error correction needs the strong-symmetry regime gamma_1 = 0")

    if not 0 <= reset_time <= t_final:
        raise ModelError(f"Reset time {reset_time} lies outside [0, {t_final}]")

    liouvillian = build_resonator(spec)
    cat = cat_patterns(spec)[0]
    parity = parity_projectors(spec)[0]

    vacuum = np.zeros(spec.fock_dim, dtype=complex)
    vacuum[0] = 1.0

    record = trajectory(
        liouvillian, cat, t_final, dt, seed, record_times=record_times, resets=[(reset_time, vacuum)]
    )

    overlap = np.array([abs(np.vdot(cat, psi)) ** 2 for psi in record.states])
    return CatRecoveryRecord(record.times, overlap, record.expectation(parity), reset_time, record.jumps)
