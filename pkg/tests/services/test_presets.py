"""Preset lookup tests."""

import pytest

from qamsy.errors import ConfigParse
from qamsy.services.presets import find_preset, list_presets, load_config

PRESET_NAMES = [
    "example1-damping",
    "gus-sec7c",
    "hopfield-baseline",
    "resonator-fig5-strong",
    "resonator-fig5-weak",
    "walk-fig4",
    "walk-storage-ceiling",
]


def test_list_presets():
    """Should list every shipped preset by name with its description."""

    presets = list_presets()

    assert [preset.name for preset in presets] == PRESET_NAMES
    assert all(preset.description for preset in presets)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_load_config__presets(name):
    """Should load and validate every shipped preset."""

    config = load_config(name)

    assert config.source == f"{name}.ini"


def test_find_preset__unknown():
    """Should name the missing preset."""

    with pytest.raises(ConfigParse) as excinfo:
        find_preset("nope")

    assert str(excinfo.value) == "No config file or preset named 'nope'"


def test_load_config__path(tmp_path):
    """Should prefer an existing file over the presets."""

    path = tmp_path / "walk-fig4"
    path.write_text("[experiment]\nname = spectrum\n\n[model]\nname = walk\n")

    config = load_config(path)

    assert config.experiment == "spectrum"
    assert config.source == "walk-fig4"
