"""Shipped experiment presets."""

from pathlib import Path
from typing import List, NamedTuple, Union

from ..errors import ConfigParse
from ..models.config import ExperimentConfig

PRESETS_DIR = Path(__file__).resolve().parent.parent / "presets"


class Preset(NamedTuple):
    name: str
    description: str
    path: Path


def _description(path: Path) -> str:
    """The leading comment line of a preset file."""

    with path.open() as f:
        first = f.readline().strip()

    return first.lstrip("#; ").strip() if first[:1] in ("#", ";") else ""


def list_presets() -> List[Preset]:
    return [Preset(path.stem, _description(path), path) for path in sorted(PRESETS_DIR.glob("*.ini"))]


def find_preset(name: str) -> Preset:
    for preset in list_presets():
        if preset.name == name:
            return preset

    raise ConfigParse(f"No config file or preset named {name!r}")


def load_config(name_or_path: Union[Path, str]) -> ExperimentConfig:
    """Load a config file, or a shipped preset if no such file exists."""

    path = Path(name_or_path)
    if path.is_file():
        return ExperimentConfig.from_file(path)

    return ExperimentConfig.from_file(find_preset(str(name_or_path)).path)
