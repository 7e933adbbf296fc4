"""Experiment configuration files and result bundles."""

import csv
import json
import re
from configparser import ConfigParser
from configparser import Error as ConfigParserError
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigParse, UnknownExperiment

NUMBER = "number"
INTEGER = "integer"
BOOLEAN = "boolean"
STRING = "string"
ARRAY = "list"
MAPPING = "mapping"

_BARE_WORD = re.compile(r"[A-Za-z_][\w.\-]*")

EXPERIMENT_KEYS = {"name": STRING, "seed": INTEGER, "output": STRING, "matrices": BOOLEAN}

_DECAY_KEYS = {"kappa": NUMBER, "rates": MAPPING}

MODELS: Dict[str, Dict[str, str]] = {
    "orthogonal": {"patterns": ARRAY, "decay_dims": ARRAY, **_DECAY_KEYS},
    "dfs": {"patterns": ARRAY, "decay_dims": ARRAY, **_DECAY_KEYS},
    "qam": {
        "orthogonal": ARRAY,
        "orthogonal_decay_dims": ARRAY,
        "dfs": ARRAY,
        "dfs_decay_dims": ARRAY,
        **_DECAY_KEYS,
    },
    "basis": {"patterns": ARRAY, **_DECAY_KEYS},
    "random": {"max_dim": INTEGER},
    "gus": {"n_qubits": INTEGER, "patterns": INTEGER, "psi": ARRAY, **_DECAY_KEYS},
    "example1": {"q": ARRAY, "angles": ARRAY},
    "walk": {"n_qubits": INTEGER, "patterns": ARRAY, "gamma": NUMBER, "eta": NUMBER, "kappa": NUMBER},
    "resonator": {
        "n": INTEGER,
        "detuning": NUMBER,
        "eta": NUMBER,
        "gamma_1": NUMBER,
        "gamma_n": NUMBER,
        "theta0": NUMBER,
        "fock_dim": INTEGER,
    },
    "hopfield": {"n_neurons": INTEGER, "n_patterns": INTEGER},
}

EXPERIMENTS: Dict[str, Dict[str, str]] = {
    "validate": {"tolerance": NUMBER, "max_iters": INTEGER},
    "retrieve": {
        "initial": STRING,
        "times": ARRAY,
        "observables": ARRAY,
        "kappa_sweep": ARRAY,
        "iterations": INTEGER,
    },
    "spectrum": {"modes": INTEGER},
    "metastable": {"gap_threshold": NUMBER, "probe_count": INTEGER},
    "classify": {
        "n_inputs": INTEGER,
        "delta": NUMBER,
        "t_measure": NUMBER,
        "dt": NUMBER,
        "gap_threshold": NUMBER,
    },
    "capacity": {"p_succ": NUMBER, "decay_constant": NUMBER, "audit_dims": ARRAY, "ranks": ARRAY},
    "trajectory": {
        "t_final": NUMBER,
        "dt": NUMBER,
        "reset_time": NUMBER,
        "n_trajectories": INTEGER,
        "initial": STRING,
    },
    "hopfield": {
        "flip_fraction": NUMBER,
        "trials": INTEGER,
        "pattern_counts": ARRAY,
    },
}

STOCHASTIC_EXPERIMENTS = frozenset({"classify", "trajectory", "hopfield"})


def _matches(value: Any, kind: str) -> bool:
    if kind == BOOLEAN:
        return isinstance(value, bool)

    if isinstance(value, bool):
        return False

    return {
        NUMBER: isinstance(value, (int, float)),
        INTEGER: isinstance(value, int),
        STRING: isinstance(value, str),
        ARRAY: isinstance(value, list),
        MAPPING: isinstance(value, dict),
    }[kind]


def parse_value(raw: str, where: str) -> Any:
    """A JSON literal, or a bare word taken as a string."""

    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        if _BARE_WORD.fullmatch(raw.strip()):
            return raw.strip()
        raise ConfigParse(f"{where}: cannot parse value {raw!r}") from None


def complex_array(value: Any, ndim: int, what: str = "value") -> np.ndarray:
    """Nested lists whose entries are numbers or [re, im] pairs, as a complex array."""

    def entry(item: Any) -> complex:
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            return complex(item)
        if isinstance(item, list) and len(item) == 2 and all(_matches(x, NUMBER) for x in item):
            return complex(item[0], item[1])
        raise ConfigParse(f"{what}: {item!r} is neither a number nor an [re, im] pair")

    def walk(item: Any, depth: int) -> Any:
        if depth == ndim:
            return entry(item)
        if not isinstance(item, list):
            raise ConfigParse(f"{what}: expected a nested list of depth {ndim}")
        return [walk(element, depth + 1) for element in item]

    try:
        return np.array(walk(value, 0), dtype=complex)
    except ValueError:
        raise ConfigParse(f"{what}: rows have different lengths") from None


class ExperimentConfig:
    """A validated experiment configuration.

    INI sections `[experiment]`, `[model]` and `[parameters]`; every value is a
    JSON literal. Unknown sections or keys are rejected before anything runs.
    """

    source: str
    experiment: str
    model: str
    model_params: Dict[str, Any]
    parameters: Dict[str, Any]
    seed: Optional[int]
    output: str
    matrices: bool

    def __init__(
        self,
        experiment: str,
        model: str,
        model_params: Optional[Mapping[str, Any]] = None,
        parameters: Optional[Mapping[str, Any]] = None,
        seed: Optional[int] = None,
        output: Optional[str] = None,
        matrices: bool = False,
        source: str = "<config>",
    ) -> None:
        self.source = source
        self.experiment = experiment
        self.model = model
        self.model_params = dict(model_params or {})
        self.parameters = dict(parameters or {})
        self.seed = seed
        self.output = output or experiment
        self.matrices = matrices

        self._validate()

    def __repr__(self) -> str:
        return f"ExperimentConfig({self.experiment!r}, model={self.model!r}, seed={self.seed})"

    @classmethod
    def from_string(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        parser = ConfigParser(interpolation=None)
        parser.optionxform = str  # type: ignore

        try:
            parser.read_string(text, source=source)
        except ConfigParserError as error:
            raise ConfigParse(f"{source}: {error.message}") from None

        unknown = set(parser.sections()) - {"experiment", "model", "parameters"}
        if parser.defaults():
            unknown.add(parser.default_section)
        if unknown:
            raise ConfigParse(f"{source}: unknown section(s) {', '.join(sorted(unknown))}")

        sections = {
            name: {
                key: parse_value(raw, f"{source}: [{name}] {key}")
                for key, raw in (parser.items(name) if parser.has_section(name) else [])
            }
            for name in ("experiment", "model", "parameters")
        }

        experiment = dict(sections["experiment"])
        model = dict(sections["model"])

        for section, key in (("experiment", "name"), ("model", "name")):
            if key not in sections[section]:
                raise ConfigParse(f"{source}: [{section}] {key} is required")

        _check_keys(experiment, EXPERIMENT_KEYS, f"{source}: [experiment]")
        model_name = model.pop("name")

        return cls(
            experiment=experiment["name"],
            model=model_name,
            model_params=model,
            parameters=sections["parameters"],
            seed=experiment.get("seed"),
            output=experiment.get("output"),
            matrices=experiment.get("matrices", False),
            source=source,
        )

    @classmethod
    def from_file(cls, path: Union[Path, str]) -> "ExperimentConfig":
        config_path = Path(path)

        try:
            text = config_path.read_text()
        except OSError as error:
            raise ConfigParse(f"Cannot read config {config_path}: {error.strerror}") from None

        return cls.from_string(text, source=config_path.name)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(
            self.experiment,
            self.model,
            self.model_params,
            self.parameters,
            seed,
            self.output,
            self.matrices,
            self.source,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "model": dict(self.model_params, name=self.model),
            "parameters": self.parameters,
            "seed": self.seed,
            "output": self.output,
            "matrices": self.matrices,
        }

    def _validate(self) -> None:
        if not isinstance(self.experiment, str) or self.experiment not in EXPERIMENTS:
            raise UnknownExperiment(
                f"{self.source}: unknown experiment {self.experiment!r}; "
                f"expected one of {', '.join(sorted(EXPERIMENTS))}"
            )

        if not isinstance(self.model, str) or self.model not in MODELS:
            raise ConfigParse(
                f"{self.source}: unknown model {self.model!r}; "
                f"expected one of {', '.join(sorted(MODELS))}"
            )

        _check_keys(self.model_params, MODELS[self.model], f"{self.source}: [model]")
        _check_keys(self.parameters, EXPERIMENTS[self.experiment], f"{self.source}: [parameters]")

        if self.seed is not None and (not _matches(self.seed, INTEGER) or self.seed < 0):
            raise ConfigParse(f"{self.source}: seed must be a non-negative integer")

        if self.experiment in STOCHASTIC_EXPERIMENTS and self.seed is None:
            raise ConfigParse(f"{self.source}: experiment {self.experiment!r} needs a seed")

        if self.experiment == "validate" and self.model == "random" and self.seed is None:
            raise ConfigParse(f"{self.source}: model 'random' needs a seed")


def _check_keys(values: Mapping[str, Any], schema: Mapping[str, str], where: str) -> None:
    for key, value in values.items():
        if key not in schema:
            raise ConfigParse(f"{where}: unknown key {key!r}")

        if not _matches(value, schema[key]):
            raise ConfigParse(f"{where}: {key} must be a {schema[key]}, got {value!r}")


class Table:
    """A time-series table; headers carry units, e.g. `time [1/gamma]`."""

    columns: Tuple[str, ...]
    rows: List[Tuple[float, ...]]

    def __init__(self, columns: Sequence[str], data: Sequence[Sequence[float]]) -> None:
        self.columns = tuple(columns)

        arrays = [np.asarray(column, dtype=float) for column in data]
        if len(arrays) != len(self.columns) or len({a.shape for a in arrays}) > 1:
            raise ValueError("A table needs one equally long column per header")

        self.rows = [tuple(float(a[k]) for a in arrays) for k in range(arrays[0].shape[0])] if arrays else []

    def __repr__(self) -> str:
        return f"Table(columns={list(self.columns)}, rows={len(self.rows)})"


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return np.stack([value.real, value.imag], axis=-1).tolist()
        return value.tolist()

    if isinstance(value, np.generic):
        return value.item()

    if isinstance(value, complex):
        return [value.real, value.imag]

    if isinstance(value, tuple):
        return list(value)

    raise TypeError(f"Cannot serialize {type(value).__name__}")


class ResultBundle:
    """Everything one experiment run produced.

    `metrics` and `matrices` go into `<output>.json`, one CSV per table, and the
    wall time into `<output>.timing.json` so that reruns with the same seed give
    byte-identical result files.
    """

    config: ExperimentConfig
    metrics: Dict[str, Any]
    tables: Dict[str, Table]
    matrices: Dict[str, np.ndarray]
    provenance: Dict[str, Any]
    wall_time: float
    passed: bool

    def __init__(
        self,
        config: ExperimentConfig,
        metrics: Mapping[str, Any],
        tables: Optional[Mapping[str, Table]] = None,
        matrices: Optional[Mapping[str, np.ndarray]] = None,
        provenance: Optional[Mapping[str, Any]] = None,
        wall_time: float = 0.0,
        passed: bool = True,
    ) -> None:
        self.config = config
        self.metrics = dict(metrics)
        self.tables = dict(tables or {})
        self.matrices = dict(matrices or {}) if config.matrices else {}
        self.provenance = dict(provenance or {})
        self.wall_time = wall_time
        self.passed = passed

    def __repr__(self) -> str:
        return f"ResultBundle({self.config.experiment!r}, metrics={sorted(self.metrics)})"

    def to_json(self) -> str:
        payload = {
            "config": self.config.to_dict(),
            "metrics": self.metrics,
            "matrices": self.matrices,
            "provenance": self.provenance,
            "tables": {name: f"{self.config.output}_{name}.csv" for name in sorted(self.tables)},
        }
        return json.dumps(payload, default=_jsonable, sort_keys=True, indent=2) + "\n"

    def write(self, out_dir: Union[Path, str]) -> List[Path]:
        """Write the result files into `out_dir` and return their paths."""

        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        stem = self.config.output

        result_file = directory / f"{stem}.json"
        result_file.write_text(self.to_json())
        written = [result_file]

        for name in sorted(self.tables):
            table = self.tables[name]
            table_file = directory / f"{stem}_{name}.csv"

            with table_file.open("w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(table.columns)
                writer.writerows([repr(value) for value in row] for row in table.rows)

            written.append(table_file)

        timing_file = directory / f"{stem}.timing.json"
        timing_file.write_text(json.dumps({"wall_time_s": self.wall_time}, sort_keys=True) + "\n")
        written.append(timing_file)

        return written
