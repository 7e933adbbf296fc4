"""Command-line tests."""

import json

import pytest
from click.testing import CliRunner

from qamsy import __version__
from qamsy.cli import qamsy


@pytest.fixture
def runner() -> CliRunner:
    """A click runner, for testing."""

    return CliRunner()


def test_version(runner):
    """Should print the package version."""

    result = runner.invoke(qamsy, ["version"])

    assert result.exit_code == 0
    assert result.output == f"{__version__}\n"


def test_list_presets(runner):
    """Should list every preset with its description."""

    result = runner.invoke(qamsy, ["list-presets"])

    assert result.exit_code == 0
    assert result.output.startswith("example1-damping")
    assert "walk-storage-ceiling" in result.output
    assert len(result.output.splitlines()) == 7


def test_show_preset(runner):
    """Should print the preset file."""

    result = runner.invoke(qamsy, ["show-preset", "walk-fig4"])

    assert result.exit_code == 0
    assert "kappa_sweep = [0.0, 0.1, 0.5, 1.0, 2.0]" in result.output


def test_show_preset__unknown(runner):
    """Should exit with the configuration error code."""

    result = runner.invoke(qamsy, ["show-preset", "nope"])

    assert result.exit_code == 3
    assert result.output == "Error: No config file or preset named 'nope'\n"


def test_run(runner, tmp_path):
    """Should write the result files of a preset."""

    result = runner.invoke(qamsy, ["run", "example1-damping", "-o", str(tmp_path)])

    assert result.exit_code == 0
    assert f"Wrote {tmp_path / 'validate.json'}" in result.output
    assert json.loads((tmp_path / "validate.json").read_text())["metrics"]["passed"]


def test_run__output_dir_from_environment(runner, tmp_path):
    """Should take the output directory from QAMSY_OUTPUT_DIR."""

    result = runner.invoke(qamsy, ["run", "example1-damping"], env={"QAMSY_OUTPUT_DIR": str(tmp_path)})

    assert result.exit_code == 0
    assert (tmp_path / "validate.timing.json").is_file()


def test_run__seed_override(runner, tmp_path):
    """Should record the overriding seed."""

    result = runner.invoke(qamsy, ["run", "example1-damping", "-o", str(tmp_path), "--seed-override", "5"])

    assert result.exit_code == 0
    assert json.loads((tmp_path / "validate.json").read_text())["config"]["seed"] == 5


def test_run__missing_config(runner):
    """Should exit with the configuration error code."""

    result = runner.invoke(qamsy, ["run", "nope"])

    assert result.exit_code == 3
    assert result.output == "Error: No config file or preset named 'nope'\n"


def test_run__bad_config(runner, tmp_path):
    """Should reject unknown keys before running anything."""

    config = tmp_path / "bad.ini"
    config.write_text("[experiment]\nname = validate\n\n[model]\nname = example1\nq = [0.5]\nfoo = 1\n")

    result = runner.invoke(qamsy, ["run", str(config), "-o", str(tmp_path)])

    assert result.exit_code == 3
    assert result.output == "Error: bad.ini: [model]: unknown key 'foo'\n"


def test_run__validation_failed(runner, mocker, tmp_path):
    """Should exit with the validation error code when the checks fail."""

    bundle = mocker.Mock(passed=False)
    bundle.write.return_value = []
    mocker.patch("qamsy.services.experiments.run_experiment", return_value=bundle)

    result = runner.invoke(qamsy, ["run", "example1-damping", "-o", str(tmp_path)])

    assert result.exit_code == 2
    assert result.output == "Error: Experiment 'validate' did not pass its checks\n"
