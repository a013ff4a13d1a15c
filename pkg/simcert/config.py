"""
Experiment configuration: nested dataclass schemas loaded from JSON.

Precedence, lowest first: dataclass defaults, the config file, SIMCERT_OUTPUT_DIR /
SIMCERT_WORKERS, then --set overrides and explicit CLI flags. Every layer is validated
against the schema; unknown keys and wrong types raise ConfigError before any work.
"""

import json
import os
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .active import ActiveConfig
from .envs import BiasedCoverageEnv, NarrowPassageEnv
from .games import GameConfig
from .utils import ConfigError, get_default_workers, stable_hash

SUITES = ('simulation', 'pinsker', 'online', 'duality', 'saddle', 'finite_time', 'coverage',
          'lipschitz', 'misspecification', 'gradients')

ENV_OUTPUT_DIR = 'SIMCERT_OUTPUT_DIR'
ENV_WORKERS = 'SIMCERT_WORKERS'
PASSAGE_MODELS = ('stochastic', 'deterministic')


@dataclass
class VerifyConfig:
    """Instance counts and sizes of the bound suites."""

    seed: int = 0
    suites: list = field(default_factory=lambda: list(SUITES))
    gamma: float = 0.8
    max_states: int = 6
    max_actions: int = 3
    simulation_instances: int = 100
    pinsker_pairs: int = 1000
    pinsker_instances: int = 100
    online_instances: int = 20
    online_rounds: int = 2000
    online_max_states: int = 4
    duality_instances: int = 100
    duality_max_states: int = 5
    effectiveness_threshold: int = 80
    saddle_lambda: float = 0.5
    saddle_rounds: int = 1000
    finite_time_runs: int = 50
    finite_time_rounds: int = 20
    coverage_instances: int = 50
    lipschitz_instances: int = 50
    noise_levels: int = 4
    sabotage: bool = False

    def __post_init__(self):
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s) {unknown}, expected a subset of {list(SUITES)}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"verify.gamma must lie in (0, 1), got {self.gamma}")
        if self.max_states < 2 or self.max_actions < 1 or self.online_max_states < 2 or self.duality_max_states < 2:
            raise ConfigError("verify instance sizes need at least 2 states and 1 action")
        for name in ('simulation_instances', 'pinsker_pairs', 'pinsker_instances', 'online_instances',
                     'online_rounds', 'duality_instances', 'saddle_rounds', 'finite_time_runs',
                     'finite_time_rounds', 'coverage_instances', 'lipschitz_instances'):
            if getattr(self, name) < 1:
                raise ConfigError(f"verify.{name} must be a positive integer, got {getattr(self, name)}")
        if self.saddle_lambda <= 0:
            raise ConfigError(f"verify.saddle_lambda must be positive, got {self.saddle_lambda}")
        if self.noise_levels < 1:
            raise ConfigError("verify.noise_levels must be at least 1")


@dataclass
class EnvConfig:
    """Environment knobs for the experiment subcommands."""

    wind_mode: str = 'approach'
    wall_mode: str = 'truncate'
    passage_noise_std: float = 0.1
    threshold: float = 0.6
    bias_factor: float = 4.0
    contact_noise_std: float = 0.01

    def __post_init__(self):
        try:
            self.narrow_passage()
            self.biased_coverage()
        except ValueError as e:
            raise ConfigError(f"env: {e}") from e
        if self.passage_noise_std < 0 or self.contact_noise_std < 0:
            raise ConfigError("env noise levels must be nonnegative")

    def narrow_passage(self) -> NarrowPassageEnv:
        return NarrowPassageEnv(wind_mode=self.wind_mode, wall_mode=self.wall_mode, noise_std=self.passage_noise_std)

    def biased_coverage(self, bias_factor: Optional[float] = None) -> BiasedCoverageEnv:
        factor = self.bias_factor if bias_factor is None else bias_factor
        return BiasedCoverageEnv(threshold=self.threshold, bias_factor=factor, noise_std=self.contact_noise_std)


@dataclass
class StudyConfig:
    """Sizes of the desk-scale experiments.

    The experiment thresholds (band mass, RMSE gains, std ordering) are asserted checks;
    `strict=false` reports them without failing the run, for reduced-size smoke runs.
    `passage_model` picks the narrow-passage dynamics model: a Gaussian with learned
    variance, or the point-mass variant.
    """

    n_train: int = 1024
    n_test: int = 2000
    hidden: list = field(default_factory=lambda: [64, 64])
    mle_rounds: int = 1500
    grid: int = 25
    eval_samples: int = 64
    w_max_stabilized: float = 3.0
    w_max_aggressive: float = 10.0
    band_mass_threshold: float = 0.6
    passage_model: str = 'stochastic'
    strict: bool = True

    def __post_init__(self):
        for name in ('n_train', 'n_test', 'mle_rounds', 'grid', 'eval_samples'):
            if getattr(self, name) < 1:
                raise ConfigError(f"study.{name} must be a positive integer, got {getattr(self, name)}")
        if not self.hidden or any(int(h) < 1 for h in self.hidden):
            raise ConfigError(f"study.hidden must list positive layer widths, got {self.hidden}")
        if self.w_max_stabilized < 1 or self.w_max_aggressive < 1:
            raise ConfigError("study w_max values must be at least 1")
        if self.passage_model not in PASSAGE_MODELS:
            raise ConfigError(f"study.passage_model must be one of {PASSAGE_MODELS}, got '{self.passage_model}'")


@dataclass
class ExperimentConfig:
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: str = 'simcert-runs'
    workers: int = field(default_factory=get_default_workers)
    game: GameConfig = field(default_factory=GameConfig)
    active: ActiveConfig = field(default_factory=ActiveConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    study: StudyConfig = field(default_factory=StudyConfig)

    def __post_init__(self):
        if not self.seeds or any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in self.seeds):
            raise ConfigError(f"seeds must be a nonempty list of nonnegative integers, got {self.seeds}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {self.seeds}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")

    @classmethod
    def from_dict(cls, data: Mapping) -> 'ExperimentConfig':
        return _build(cls, data, '')

    def to_dict(self) -> dict:
        return asdict(self)

    def hashed_dict(self) -> dict:
        """The config without the keys that cannot change results."""
        out = self.to_dict()
        out.pop('output_dir')
        out.pop('workers')
        return out

    def config_hash(self) -> str:
        return stable_hash(self.hashed_dict())

    def run_dir(self, command: str) -> Path:
        return Path(self.output_dir) / f"{command}-{self.config_hash()[:12]}"


def _default_of(f):
    if f.default is not MISSING:
        return f.default
    if f.default_factory is not MISSING:
        return f.default_factory()
    return None


def _coerce(value, default, key: str):
    if is_dataclass(default):
        return _build(type(default), value, key + '.')
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        return list(value)
    return value


def _build(cls, data, prefix: str):
    if isinstance(data, cls):
        return data
    if not isinstance(data, Mapping):
        raise ConfigError(f"{prefix.rstrip('.') or 'config'}: expected an object, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(prefix + k for k in unknown)}")
    kwargs = {name: _coerce(value, _default_of(known[name]), prefix + name) for name, value in data.items()}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{prefix.rstrip('.') or 'config'}: {e}") from e


def parse_override(text: str) -> tuple:
    """Split "a.b=value" into (["a", "b"], value); JSON values are decoded, the rest kept as strings."""
    key, sep, raw = text.partition('=')
    if not sep or not key.strip():
        raise ConfigError(f"override must look like key=value, got '{text}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split('.'), value


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    for text in overrides:
        path, value = parse_override(text)
        node = data
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"cannot set '{text}': '{part}' is not a section")
            node = child
        node[path[-1]] = value
    return data


def load_experiment_config(path: Optional[Union[str, Path]] = None, overrides: Sequence[str] = (),
                           environ: Optional[Mapping] = None) -> ExperimentConfig:
    """Build an ExperimentConfig from an optional JSON file, the environment and overrides."""
    data = {}
    if path is not None:
        try:
            with open(path) as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    environ = os.environ if environ is None else environ
    if environ.get(ENV_OUTPUT_DIR):
        data['output_dir'] = environ[ENV_OUTPUT_DIR]
    if environ.get(ENV_WORKERS):
        try:
            data['workers'] = int(environ[ENV_WORKERS])
        except ValueError as e:
            raise ConfigError(f"{ENV_WORKERS} must be an integer, got '{environ[ENV_WORKERS]}'") from e
    apply_overrides(data, overrides)
    return ExperimentConfig.from_dict(data)
