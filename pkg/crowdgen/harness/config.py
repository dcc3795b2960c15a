"""Experiment configuration: scale presets, strict JSON overrides and the model spec."""
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from ..domains import GeneratorConfig, RandomPairConfig
from ..domains.standard import DEFAULT_DENSITIES, StandardKind
from ..errors import ValidationError
from ..experts import OrcaParams, SocialForceParams
from ..guidance import GpHyperparameters, PlannerConfig
from ..learning import PAPER_HIDDEN, TrainConfig
from ..world import SimConfig

SCALES = ('desk', 'paper')
MODEL_IDS = ('BCA-X', 'BCA-G', 'BCA-R', 'RLA-X', 'RLA-G')
TEST_DOMAINS = ('X', 'G', 'real')

ALL_KINDS = tuple(kind.value for kind in StandardKind)
TEST_KINDS = ('Evacuation1', 'ConcentricCircles', 'HallwayTwoWay')
TRAIN_KINDS = ('Evacuation2', 'BottleneckSqueeze', 'HallwayFourWay')


@dataclass(frozen=True)
class DataScale:
    """How much data an experiment generates and how long it trains."""
    g_train: int = 200
    g_test: int = 20
    r_pairs: int = 50000
    x_train_kinds: Tuple[str, ...] = TRAIN_KINDS
    x_train_densities: Tuple[int, ...] = (10, 20)
    x_train_variations: int = 1
    x_test_kinds: Tuple[str, ...] = TEST_KINDS
    x_test_densities: Tuple[int, ...] = (10, 20)
    x_test_variations: int = 3
    gail_iterations_x: int = 2000
    gail_iterations_g: int = 2000
    # ingestion of real trajectories, in seconds
    window: float = 240.0
    stride: float = 120.0

    def __post_init__(self) -> None:
        for name in ('x_train_kinds', 'x_train_densities', 'x_test_kinds', 'x_test_densities'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for kind in self.x_train_kinds + self.x_test_kinds:
            if kind not in ALL_KINDS:
                raise ValidationError(f'unknown standard kind {kind!r}')
        if min(self.g_train, self.g_test, self.r_pairs, self.x_train_variations, self.x_test_variations) < 0:
            raise ValidationError('data counts must be non-negative')
        if self.window <= 0 or self.stride <= 0:
            raise ValidationError('ingestion window and stride must be positive')


@dataclass(frozen=True)
class ExperimentConfig:
    scale: str = 'desk'
    sim: SimConfig = SimConfig()
    social_force: SocialForceParams = SocialForceParams()
    orca: OrcaParams = OrcaParams()
    generator: GeneratorConfig = GeneratorConfig()
    random_pairs: RandomPairConfig = RandomPairConfig()
    gp: GpHyperparameters = GpHyperparameters()
    planner: PlannerConfig = PlannerConfig()
    train: TrainConfig = TrainConfig()
    data: DataScale = DataScale()
    agent_radius: float = 0.5

    def __post_init__(self) -> None:
        if self.scale not in SCALES:
            raise ValidationError(f'unknown scale {self.scale!r}, expected one of {SCALES}')
        if self.agent_radius <= 0:
            raise ValidationError('agent radius must be positive')

    @classmethod
    def for_scale(cls, scale: str = 'desk') -> 'ExperimentConfig':
        if scale == 'desk':
            return cls()
        if scale == 'paper':
            return cls(
                scale='paper',
                train=TrainConfig(hidden_sizes=PAPER_HIDDEN, bc_learning_rate=1e-4, gail_learning_rate=1e-2,
                                  exploration_std=0.5, entropy_weight=0.0, gail_iterations=10000),
                data=DataScale(g_train=4000, g_test=100, r_pairs=1600000,
                               x_train_kinds=ALL_KINDS, x_train_densities=DEFAULT_DENSITIES, x_train_variations=3,
                               x_test_kinds=ALL_KINDS, x_test_densities=DEFAULT_DENSITIES, x_test_variations=3,
                               gail_iterations_x=10000, gail_iterations_g=6000))
        raise ValidationError(f'unknown scale {scale!r}, expected one of {SCALES}')

    def gail_iterations(self, train_domain: str) -> int:
        return self.data.gail_iterations_x if train_domain == 'X' else self.data.gail_iterations_g

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def merge(self, overrides: Mapping[str, Any]) -> 'ExperimentConfig':
        return merge_config(self, overrides)

    @classmethod
    def load(cls, path: Union[str, Path, None] = None, scale: str = 'desk') -> 'ExperimentConfig':
        """The scale preset, overridden by the JSON file at `path` if given."""
        config = cls.for_scale(scale)
        if path is None:
            return config
        try:
            overrides = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f'{path}: invalid JSON: {exc}') from exc
        if 'scale' in overrides and overrides['scale'] != scale:
            config = cls.for_scale(overrides['scale'])
        return config.merge(overrides)


def merge_config(instance, overrides: Mapping[str, Any]):
    """Recursively replaces dataclass fields; unknown keys and mistyped values are errors."""
    if not isinstance(overrides, Mapping):
        raise ValidationError(f'expected an object for {type(instance).__name__}, got {overrides!r}')
    names = {f.name for f in dataclasses.fields(instance)}
    changes = {}
    for key, value in overrides.items():
        if key not in names:
            raise ValidationError(f'unknown configuration key {key!r} in {type(instance).__name__}')
        current = getattr(instance, key)
        if dataclasses.is_dataclass(current):
            value = merge_config(current, value)
        elif isinstance(current, tuple):
            if not isinstance(value, (list, tuple)):
                raise ValidationError(f'{key}: expected a list, got {value!r}')
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        elif isinstance(current, bool):
            if not isinstance(value, bool):
                raise ValidationError(f'{key}: expected true or false, got {value!r}')
        elif isinstance(current, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f'{key}: expected a number, got {value!r}')
            if isinstance(current, int) and not isinstance(value, int):
                raise ValidationError(f'{key}: expected an integer, got {value!r}')
            value = type(current)(value)
        elif isinstance(current, str) and not isinstance(value, str):
            raise ValidationError(f'{key}: expected a string, got {value!r}')
        changes[key] = value
    try:
        return dataclasses.replace(instance, **changes)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(',', ':'))


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(config.to_dict()).encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class ExperimentSpec:
    """One trained model evaluated on one test domain."""
    model_id: str
    test_domain: str
    seed: int = 0
    scale: str = 'desk'
    output_dir: str = 'results'
    # real-domain test input
    real_csv: Optional[str] = None
    real_layout: Optional[str] = None
    config_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.model_id not in MODEL_IDS:
            raise ValidationError(f'unknown model id {self.model_id!r}, expected one of {MODEL_IDS}')
        if self.paradigm == 'RLA' and self.train_domain == 'R':
            raise ValidationError('adversarial models cannot train on random egocentric pairs')
        if self.test_domain not in TEST_DOMAINS:
            raise ValidationError(f'unknown test domain {self.test_domain!r}, expected one of {TEST_DOMAINS}')
        if self.test_domain == 'real' and not (self.real_csv and self.real_layout):
            raise ValidationError('real-domain tests need a trajectory CSV and a layout file')
        if self.scale not in SCALES:
            raise ValidationError(f'unknown scale {self.scale!r}')

    @property
    def paradigm(self) -> str:
        return self.model_id.split('-')[0]

    @property
    def train_domain(self) -> str:
        return self.model_id.split('-')[1]

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)
