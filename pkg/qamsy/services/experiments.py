"""Experiment runner: builds the configured model and dispatches to the experiment."""

import logging
import time
from fractions import Fraction
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from .. import __version__
from ..errors import ConfigParse, ModelError
from ..models.channel import KrausChannel
from ..models.config import ExperimentConfig, ResultBundle, Table, complex_array
from ..models.hilbert import SpaceLayout
from ..models.patterns import DEFAULT_KAPPA, DecayProfile, PatternSet
from ..models.states import DEFAULT_TOLERANCE, DensityOperator
from ..models.systems import ResonatorSpec, WalkSpec
from ..systems import damping, hopfield, resonator, walk
from . import builder, capacity, lindblad, quantum, trajectories
from .hilbert import basin_projector, pattern_keys, projector_onto
from .seeding import spawn_seeds

logger = logging.getLogger(__name__)

QAM_MODELS = ("orthogonal", "dfs", "qam", "basis", "random", "gus", "example1")
DYNAMICS_MODELS = ("walk", "resonator")

SUPPORTED_MODELS = {
    "validate": QAM_MODELS,
    "retrieve": QAM_MODELS + ("walk",),
    "spectrum": DYNAMICS_MODELS,
    "metastable": DYNAMICS_MODELS,
    "classify": ("resonator",),
    "capacity": QAM_MODELS + ("walk",),
    "trajectory": DYNAMICS_MODELS,
    "hopfield": ("hopfield",),
}

DEFAULT_WALK_TIME = 50.0
DEFAULT_TIME_POINTS = 101


class Context(NamedTuple):
    """Run-wide settings taken from the command line."""

    threads: int = 1
    tolerance: float = DEFAULT_TOLERANCE


class Outcome(NamedTuple):
    metrics: Dict[str, Any]
    tables: Dict[str, Table] = {}
    matrices: Dict[str, np.ndarray] = {}
    passed: bool = True


class Memory(NamedTuple):
    """A QAM model: channel, declared patterns and their layout."""

    channel: KrausChannel
    pattern_set: PatternSet
    layout: SpaceLayout


# Models


def _decay_profile(params: Dict[str, Any]) -> DecayProfile:
    kappa = float(params.get("kappa", DEFAULT_KAPPA))
    if "rates" in params:
        return DecayProfile.from_rates(params["rates"], kappa=kappa)
    return DecayProfile(kappa)


def _int_list(params: Dict[str, Any], key: str) -> List[int]:
    values = params.get(key, [])
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in values):
        raise ConfigParse(f"[model] {key} must be a list of integers")
    return list(values)


def _orthogonal(params: Dict[str, Any], key: str, dims_key: str) -> List[Tuple[np.ndarray, int]]:
    states = [complex_array(p, 2, f"[model] {key}") for p in params.get(key, [])]
    dims = _int_list(params, dims_key)

    if len(dims) != len(states):
        raise ConfigParse(f"[model] {dims_key} needs one entry per pattern")
    return list(zip(states, dims))


def _dfs_group(patterns: List[Any], dims: List[int], key: str) -> Tuple[int, List[np.ndarray], List[int]]:
    vectors = [complex_array(p, 1, f"[model] {key}") for p in patterns]
    if not vectors:
        raise ConfigParse(f"[model] {key} needs at least one pattern")
    return vectors[0].shape[0], vectors, dims


def qam_memory(config: ExperimentConfig, tol: float = DEFAULT_TOLERANCE) -> Memory:
    """Channel, pattern set and layout of a QAM model."""

    params = config.model_params
    model = config.model

    if model == "example1":
        q = [float(v) for v in params.get("q", [0.5, 0.5])]
        channel, layout = damping.local_amplitude_damping(q, params.get("angles"))
        rates = {block.label: [rate] for block, rate in zip(layout.decaying_blocks, q)}
        pattern_set = PatternSet([([1.0], 1)] * len(q), decay_profile=DecayProfile.from_rates(rates))
        return Memory(channel, pattern_set, layout)

    if model == "gus":
        psi = complex_array(params.get("psi", [1, 0]), 1, "[model] psi")
        pattern_set, layout = builder.gus_pattern_set(
            int(params.get("n_qubits", 3)), int(params.get("patterns", 2)), psi, _decay_profile(params)
        )
        channel = builder.build_gus(
            int(params.get("n_qubits", 3)), int(params.get("patterns", 2)), psi, pattern_set.decay_profile
        )
        return Memory(channel, pattern_set, layout)

    if model == "random":
        if config.seed is None:
            raise ConfigParse("Model 'random' needs a seed")
        pattern_set = builder.random_pattern_set(config.seed, int(params.get("max_dim", 16)))
        layout = builder.default_layout(pattern_set)

    elif model == "basis":
        pattern_set, layout = builder.basis_pattern_set(params.get("patterns", []), _decay_profile(params))

    else:
        if model == "orthogonal":
            orthogonal, dfs = _orthogonal(params, "patterns", "decay_dims"), []
        elif model == "dfs":
            orthogonal = []
            dfs = [_dfs_group(params.get("patterns", []), _int_list(params, "decay_dims"), "patterns")]
        else:
            orthogonal = _orthogonal(params, "orthogonal", "orthogonal_decay_dims")
            groups = params.get("dfs", [])
            dims = params.get("dfs_decay_dims", [])
            if len(groups) != len(dims):
                raise ConfigParse("[model] dfs_decay_dims needs one list per DFS block")
            dfs = [_dfs_group(g, d, "dfs") for g, d in zip(groups, dims)]

        pattern_set = PatternSet(orthogonal, dfs, _decay_profile(params), tol=tol)
        layout = builder.default_layout(pattern_set)

    return Memory(builder.build_qam(pattern_set, layout), pattern_set, layout)


def walk_spec(config: ExperimentConfig) -> WalkSpec:
    params = config.model_params
    return WalkSpec(
        int(params.get("n_qubits", 3)),
        params.get("patterns", ["011", "111"]),
        gamma=params.get("gamma", 1.0),
        eta=params.get("eta", 0.1),
        kappa=params.get("kappa", 0.0),
    )


def resonator_spec(config: ExperimentConfig) -> ResonatorSpec:
    params = dict(config.model_params)
    return ResonatorSpec(
        n=params.pop("n", 3),
        detuning=params.pop("detuning", 0.4),
        eta=params.pop("eta", 1.56),
        gamma_1=params.pop("gamma_1", 1.0),
        gamma_n=params.pop("gamma_n", 0.2),
        **params,
    )


# Experiments


def _validate(config: ExperimentConfig, context: Context) -> Outcome:
    memory = qam_memory(config, context.tolerance)
    params = config.parameters

    report = builder.validate_qam(
        memory.channel,
        memory.pattern_set,
        memory.layout,
        tol=float(params.get("tolerance", 1e-8)),
        max_iters=int(params.get("max_iters", 10_000)),
    )

    matrices = {f"kraus_{k}": op for k, op in enumerate(memory.channel.kraus_ops)}
    return Outcome(report.to_dict(), matrices=matrices, passed=report.passed)


def _basin_labels(layout: SpaceLayout) -> List[Tuple[str, np.ndarray]]:
    return [
        (builder.pattern_label(key, layout), basin_projector(layout, *key)) for key in pattern_keys(layout)
    ]


def _retrieve_memory(config: ExperimentConfig, context: Context) -> Outcome:
    memory = qam_memory(config, context.tolerance)
    layout = memory.layout
    params = config.parameters

    label = params.get("initial", layout.decaying_labels[0])
    indices = layout.indices(label)
    projector = projector_onto(label, layout)
    state = DensityOperator(projector / len(indices))

    basins = _basin_labels(layout)
    iterations = int(params.get("iterations", 50))

    history = [state]
    for _ in range(iterations):
        history.append(quantum.apply_channel(memory.channel, history[-1], context.tolerance))

    steps = np.arange(iterations + 1)
    columns = [[rho.expectation(p) for rho in history] for _, p in basins]
    table = Table(["iteration [steps]"] + [f"P({name}) [probability]" for name, _ in basins], [steps] + columns)

    metrics = {
        "initial": label,
        "final_basin_populations": {name: values[-1] for (name, _), values in zip(basins, columns)},
    }
    return Outcome(metrics, tables={"populations": table})


def _retrieve_walk(config: ExperimentConfig, context: Context) -> Outcome:
    spec = walk_spec(config)
    params = config.parameters

    initial = params.get("initial", "0" * spec.n_qubits)
    default_times = np.linspace(0.0, DEFAULT_WALK_TIME / spec.gamma, DEFAULT_TIME_POINTS)
    times = [float(t) for t in params.get("times", default_times)]
    observables = params.get("observables")

    sweep = params.get("kappa_sweep", [spec.kappa])
    metrics: Dict[str, Any] = {"initial": initial, "final_populations": {}, "symmetry_drift": {}}
    tables = {}

    for kappa in sweep:
        swept = spec.with_rates(kappa=kappa)
        curve = walk.walk_retrieval_curve(swept, initial, times, observables)
        name = f"kappa_{kappa:g}"

        tables[name] = Table(
            ["time [1/gamma]"] + [f"P({label}) [probability]" for label in curve.labels],
            [curve.times] + list(curve.values),
        )
        metrics["final_populations"][name] = curve.final()
        metrics["symmetry_drift"][name] = walk.walk_symmetry_drift(swept, initial, times)

    return Outcome(metrics, tables=tables)


def _retrieve(config: ExperimentConfig, context: Context) -> Outcome:
    if config.model == "walk":
        return _retrieve_walk(config, context)
    return _retrieve_memory(config, context)


def _liouvillian(config: ExperimentConfig) -> Any:
    if config.model == "walk":
        return walk.build_walk(walk_spec(config))[0]
    return resonator.build_resonator(resonator_spec(config))


def _spectrum(config: ExperimentConfig, context: Context) -> Outcome:
    modes = config.parameters.get("modes")
    spectrum = lindblad.spectrum_of(_liouvillian(config), k=modes)

    table = Table(
        ["mode [index]", "re(lambda) [gamma]", "im(lambda) [gamma]"],
        [np.arange(len(spectrum)), spectrum.eigenvalues.real, spectrum.eigenvalues.imag],
    )
    metrics = {
        "eigenvalues": spectrum.eigenvalues,
        "modes": len(spectrum),
        "complete": spectrum.is_complete,
        "defective_modes": int(spectrum.defective.sum()),
        "biorthogonality_residual": spectrum.biorthogonality_residual,
    }
    return Outcome(metrics, tables={"spectrum": table})


def _manifold_metrics(manifold: Any) -> Dict[str, Any]:
    return {
        "n": manifold.n,
        "gap_ratio": manifold.gap_ratio,
        "tau_s": manifold.tau_s,
        "tau_f": manifold.tau_f,
        "identity_residual": manifold.identity_residual,
        "overlaps": manifold.overlaps,
    }


def _metastable(config: ExperimentConfig, context: Context) -> Outcome:
    params = config.parameters
    threshold = float(params.get("gap_threshold", lindblad.DEFAULT_GAP_THRESHOLD))
    seed = config.seed or 0

    if config.model == "resonator":
        spec = resonator_spec(config)
        _, manifold = resonator.resonator_manifold(spec, threshold, seed, params.get("probe_count"))
        metrics = _manifold_metrics(manifold)
        metrics["steady_state_lobe_fidelity"] = resonator.steady_state_lobe_fidelity(spec)
    else:
        liouvillian = _liouvillian(config)
        spectrum = lindblad.spectrum_of(liouvillian)
        manifold = lindblad.detect_metastable_manifold(spectrum, threshold, liouvillian, seed=seed)
        metrics = _manifold_metrics(manifold)

    matrices = {f"phase_{mu}": phase.matrix for mu, phase in enumerate(manifold.phases)}
    return Outcome(metrics, matrices=matrices)


def _classify(config: ExperimentConfig, context: Context) -> Outcome:
    params = config.parameters
    report = resonator.lobe_classification_experiment(
        resonator_spec(config),
        n_inputs=int(params.get("n_inputs", 100)),
        delta=float(params.get("delta", 0.5)),
        seed=config.seed,  # type: ignore
        t_measure=params.get("t_measure"),
        dt=float(params.get("dt", 0.01)),
        threads=context.threads,
        gap_threshold=float(params.get("gap_threshold", lindblad.DEFAULT_GAP_THRESHOLD)),
    )
    return Outcome(report._asdict())


def _capacity(config: ExperimentConfig, context: Context) -> Outcome:
    params = config.parameters
    decay_constant = float(params.get("decay_constant", 1.0))

    if config.model == "walk":
        _, layout, pattern_set = walk.build_walk(walk_spec(config))
    else:
        memory = qam_memory(config, context.tolerance)
        layout, pattern_set = memory.layout, memory.pattern_set

    p_succ: Optional[Any] = params.get("p_succ")
    if p_succ is None and config.model == "gus":
        # Square-root measurement on the GUS patterns
        success = quantum.srm_success_probabilities(pattern_set.dfs[0].patterns)
        p_succ = float(np.mean(success))

    if p_succ is None:
        report = capacity.capacity_of(layout, pattern_set, decay_constant)
    else:
        report = capacity.classical_capacity_of(layout, pattern_set, p_succ, decay_constant)

    metrics: Dict[str, Any] = {"capacity": report.to_dict()}

    audits = []
    for total_dim in params.get("audit_dims", []):
        audit = capacity.theorem1_dimension_audit(int(total_dim), params.get("ranks"))
        audits.append(audit.to_dict())
    if audits:
        metrics["dimension_audits"] = audits

    return Outcome(metrics)


def _initial_vector(config: ExperimentConfig, dim: int) -> np.ndarray:
    initial = config.parameters.get("initial")

    if config.model == "walk":
        spec = walk_spec(config)
        vector = np.zeros(dim, dtype=complex)
        vector[spec.node(initial or "0" * spec.n_qubits)] = 1.0
        return vector

    spec = resonator_spec(config)
    if initial in (None, "cat"):
        return resonator.cat_patterns(spec)[0]
    if initial == "vacuum":
        return resonator.coherent_state(0.0, spec.fock_dim)
    lobes = {f"lobe{mu}": alpha for mu, alpha in enumerate(resonator.lobe_amplitudes(spec))}
    if initial in lobes:
        return resonator.coherent_state(lobes[initial], spec.fock_dim)

    raise ConfigParse(f"[parameters] initial: unknown resonator state {initial!r}")


def _trajectory(config: ExperimentConfig, context: Context) -> Outcome:
    params = config.parameters
    t_final = float(params.get("t_final", 10.0))
    dt = float(params.get("dt", 0.01))
    seed: int = config.seed  # type: ignore

    if config.model == "resonator" and "reset_time" in params:
        spec = resonator_spec(config)
        record = resonator.cat_error_correction_run(spec, float(params["reset_time"]), t_final, seed, dt)
        table = Table(
            ["time [1/gamma_n]", "overlap [probability]", "P(sector 0) [probability]"],
            [record.times, record.overlap, record.parity],
        )
        after = record.times >= record.reset_time
        metrics = {
            "reset_time": record.reset_time,
            "final_overlap": float(record.overlap[-1]),
            "recovered_overlap": float(np.max(record.overlap[after])),
            "parity_drift": float(np.max(np.abs(record.parity - record.parity[0]))),
            "jumps": len(record.jumps),
        }
        return Outcome(metrics, tables={"recovery": table})

    if config.model == "walk":
        spec_walk = walk_spec(config)
        liouvillian, _, _ = walk.build_walk(spec_walk)
        labels = list(spec_walk.patterns)
        observables = [np.diag(np.eye(spec_walk.dim)[spec_walk.node(p)]) for p in labels]
        unit = "1/gamma"
    else:
        spec = resonator_spec(config)
        liouvillian = resonator.build_resonator(spec)
        basins = resonator.lobe_basin_projectors(spec)
        labels = [f"lobe {mu}" for mu in range(spec.n)]
        observables = list(basins.projectors)
        unit = "1/gamma_n"

    average = trajectories.trajectory_ensemble(
        liouvillian,
        _initial_vector(config, liouvillian.dim),
        t_final,
        dt,
        seed,
        int(params.get("n_trajectories", 1)),
        observables,
        threads=context.threads,
    )

    table = Table(
        [f"time [{unit}]"]
        + [f"P({label}) [probability]" for label in labels]
        + [f"stderr P({label}) [probability]" for label in labels],
        [average.times] + list(average.means) + list(average.standard_errors),
    )
    metrics = {
        "final_means": {label: float(v[-1]) for label, v in zip(labels, average.means)},
        "mean_jumps": float(np.mean(average.jump_counts)),
    }
    return Outcome(metrics, tables={"ensemble": table})


def _hopfield(config: ExperimentConfig, context: Context) -> Outcome:
    params = config.parameters
    model = config.model_params
    n_neurons = int(model.get("n_neurons", 100))
    counts = params.get("pattern_counts", [model.get("n_patterns", 10)])
    seed: int = config.seed  # type: ignore

    results = []
    for count, child in zip(counts, spawn_seeds(seed, len(counts))):
        results.append(
            hopfield.hopfield_success_rate(
                n_neurons,
                int(count),
                float(params.get("flip_fraction", 0.1)),
                int(params.get("trials", 200)),
                child,
                context.threads,
            )
        )

    table = Table(
        ["patterns [count]", "load [M/n]", "success_rate [fraction]", "mean_overlap [fraction]"],
        [
            [r.n_patterns for r in results],
            [r.load for r in results],
            [r.success_rate for r in results],
            [r.mean_overlap for r in results],
        ],
    )
    metrics = {
        "success_rates": {str(r.n_patterns): r.success_rate for r in results},
        "energy_monotone": all(r.energy_monotone for r in results),
    }
    return Outcome(metrics, tables={"success": table})


EXPERIMENTS: Dict[str, Callable[[ExperimentConfig, Context], Outcome]] = {
    "validate": _validate,
    "retrieve": _retrieve,
    "spectrum": _spectrum,
    "metastable": _metastable,
    "classify": _classify,
    "capacity": _capacity,
    "trajectory": _trajectory,
    "hopfield": _hopfield,
}


def _metric_value(value: Any) -> Any:
    if isinstance(value, Fraction):
        return {"exact": str(value), "value": float(value)}
    if isinstance(value, dict):
        return {str(k): _metric_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_metric_value(v) for v in value]
    return value


def run_experiment(config: ExperimentConfig, threads: int = 1, tolerance: float = DEFAULT_TOLERANCE) -> ResultBundle:
    """Run the configured experiment and collect its results."""

    if config.model not in SUPPORTED_MODELS[config.experiment]:
        raise ConfigParse(
            f"{config.source}: experiment {config.experiment!r} does not support model "
            f"{config.model!r}; use one of {', '.join(SUPPORTED_MODELS[config.experiment])}"
        )

    if threads < 1:
        raise ModelError(f"Thread count must be positive, got {threads}")

    logger.info("Running %r", config)
    started = time.perf_counter()

    outcome = EXPERIMENTS[config.experiment](config, Context(threads, tolerance))

    provenance = {"version": __version__, "seed": config.seed, "threads": threads, "tolerance": tolerance}
    return ResultBundle(
        config,
        _metric_value(outcome.metrics),
        tables=outcome.tables,
        matrices=outcome.matrices,
        provenance=provenance,
        wall_time=time.perf_counter() - started,
        passed=outcome.passed,
    )
