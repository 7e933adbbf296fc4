"""Experiment runner tests."""

import json

import numpy as np
import pytest

from qamsy.errors import ConfigParse, ModelError
from qamsy.models.config import ExperimentConfig
from qamsy.services.experiments import qam_memory, run_experiment
from qamsy.services.presets import load_config


@pytest.fixture
def damping_config() -> ExperimentConfig:
    """Validation of local amplitude damping on two patterns, for testing."""

    return ExperimentConfig("validate", "example1", {"q": [0.5, 0.5]}, matrices=True)


@pytest.fixture
def walk_model() -> dict:
    """Three-qubit walk storing 011 and 111 without inter-basin coupling, for testing."""

    return {"n_qubits": 3, "patterns": ["011", "111"], "eta": 0.1, "kappa": 0.0}


def test_qam_memory__example1(damping_config):
    """Should pair the damping channel with one rank-1 pattern per probability."""

    memory = qam_memory(damping_config)

    assert memory.pattern_set.m_perp == 2
    assert memory.layout.total_dim == 4
    assert len(memory.channel) == 3


def test_qam_memory__random_needs_seed():
    """Should refuse to draw a random pattern set without a seed."""

    config = ExperimentConfig("retrieve", "random")

    with pytest.raises(ConfigParse) as excinfo:
        qam_memory(config)

    assert str(excinfo.value) == "Model 'random' needs a seed"


def test_run_experiment__validate(damping_config):
    """Should pass validation and keep the Kraus operators when asked to."""

    bundle = run_experiment(damping_config)

    assert bundle.passed
    assert bundle.metrics["passed"]
    assert sorted(bundle.matrices) == ["kraus_0", "kraus_1", "kraus_2"]
    assert bundle.provenance["threads"] == 1


def test_run_experiment__retrieve():
    """Should keep the whole population inside the starting basin."""

    config = ExperimentConfig("retrieve", "example1", {"q": [0.5, 0.5]}, {"initial": "D2", "iterations": 60})
    bundle = run_experiment(config)

    populations = bundle.metrics["final_basin_populations"]
    assert populations["S2"] == pytest.approx(1.0)
    assert populations["S1"] == pytest.approx(0.0)
    assert len(bundle.tables["populations"].rows) == 61


def test_run_experiment__capacity_gus():
    """Should report the exact quantum capacity and the measured one."""

    bundle = run_experiment(load_config("gus-sec7c"))
    capacity = bundle.metrics["capacity"]

    assert capacity["alpha_q"] == {"exact": "4/5", "value": 0.8}
    assert capacity["p_succ"] == pytest.approx(0.25)
    assert capacity["alpha_qc"]["value"] == pytest.approx(0.2)
    assert all(audit["bound_is_tight"] for audit in bundle.metrics["dimension_audits"])


def test_run_experiment__capacity_walk():
    """Should store half of all strings on the hypercube."""

    bundle = run_experiment(load_config("walk-storage-ceiling"))

    assert bundle.metrics["capacity"]["alpha_q"]["exact"] == "1/2"
    assert bundle.metrics["capacity"]["m_nonperp"] == 8


def test_run_experiment__reproducible(damping_config):
    """Should produce identical result documents on a rerun."""

    first = run_experiment(damping_config).to_json()
    second = run_experiment(damping_config).to_json()

    assert first == second
    assert json.loads(first)["config"]["model"] == {"name": "example1", "q": [0.5, 0.5]}


def test_run_experiment__write(damping_config, tmp_path):
    """Should write the result document and its timing next to each other."""

    paths = run_experiment(damping_config).write(tmp_path)

    assert [path.name for path in paths] == ["validate.json", "validate.timing.json"]
    assert "wall_time_s" in json.loads(paths[1].read_text())


def test_run_experiment__unsupported_model():
    """Should refuse model and experiment combinations that make no sense."""

    config = ExperimentConfig("classify", "walk", seed=1)

    with pytest.raises(ConfigParse) as excinfo:
        run_experiment(config)

    assert str(excinfo.value) == (
        "<config>: experiment 'classify' does not support model 'walk'; use one of resonator"
    )


def test_run_experiment__threads(damping_config):
    """Should need at least one thread."""

    with pytest.raises(ModelError) as excinfo:
        run_experiment(damping_config, threads=0)

    assert str(excinfo.value) == "Thread count must be positive, got 0"


def test_run_experiment__spectrum_walk(walk_model):
    """Should find the stationary pattern populations and coherences of the walk."""

    bundle = run_experiment(ExperimentConfig("spectrum", "walk", walk_model))
    eigenvalues = np.asarray(bundle.metrics["eigenvalues"])

    assert bundle.metrics["modes"] == 64
    assert np.sum(np.abs(eigenvalues) < 1e-10) == 4
    assert bundle.metrics["biorthogonality_residual"] < 1e-8
    assert len(bundle.tables["spectrum"].rows) == 64


@pytest.mark.parametrize("kappa", [0.5, 2.0])
def test_run_experiment__spectrum_walk_coupled(walk_model, kappa):
    """Should diagonalize the walk with coupled basins."""

    walk_model["kappa"] = kappa

    bundle = run_experiment(ExperimentConfig("spectrum", "walk", walk_model, {"modes": 10}))

    assert bundle.metrics["modes"] == 10
    assert bundle.metrics["biorthogonality_residual"] < 1e-8
    assert np.abs(np.asarray(bundle.metrics["eigenvalues"])[0]) < 1e-10


def test_run_experiment__metastable_walk(walk_model):
    """Should report the four stationary modes without disjoint phases."""

    bundle = run_experiment(ExperimentConfig("metastable", "walk", walk_model))

    assert bundle.metrics["n"] == 4
    assert bundle.metrics["overlaps"] is None
    assert bundle.matrices == {}


def test_run_experiment__trajectory_reproducible(walk_model):
    """Should give byte-identical results on a seeded rerun, whatever the thread count."""

    config = ExperimentConfig(
        "trajectory",
        "walk",
        walk_model,
        {"t_final": 5.0, "dt": 0.05, "n_trajectories": 6, "initial": "000"},
        seed=4,
    )

    first = run_experiment(config, threads=3)
    second = run_experiment(config, threads=3)
    single = run_experiment(config, threads=1)

    assert first.to_json() == second.to_json()
    assert first.tables["ensemble"].rows == second.tables["ensemble"].rows
    assert json.loads(single.to_json())["metrics"] == json.loads(first.to_json())["metrics"]
    assert first.metrics["final_means"]["111"] == pytest.approx(0.0, abs=1e-12)


def test_run_experiment__hopfield():
    """Should retrieve a single stored pattern every time, reproducibly."""

    config = ExperimentConfig(
        "hopfield",
        "hopfield",
        {"n_neurons": 20},
        {"pattern_counts": [1, 2], "trials": 8, "flip_fraction": 0.1},
        seed=9,
    )

    bundle = run_experiment(config, threads=2)

    assert sorted(bundle.metrics["success_rates"]) == ["1", "2"]
    assert bundle.metrics["success_rates"]["1"] == 1.0
    assert bundle.metrics["energy_monotone"]
    assert bundle.to_json() == run_experiment(config, threads=2).to_json()


@pytest.mark.slow
def test_run_experiment__classify():
    """Should classify every sampled input of the resonator."""

    config = ExperimentConfig("classify", "resonator", parameters={"n_inputs": 20, "delta": 0.8}, seed=7)

    bundle = run_experiment(config, threads=4)

    assert bundle.metrics["n_inputs"] == 20
    assert np.sum(bundle.metrics["confusion"]) == 20
    assert 0.0 <= bundle.metrics["accuracy"] <= 1.0
