"""End-to-end experiments: data generation, training, evaluation and export with a manifest."""
import contextlib
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .. import __version__
from ..domains import (StandardKind, build_random_dataset, representative_split, sample_representative,
                       standard_suite)
from ..errors import StageError, ValidationError
from ..experts import expert_controller
from ..guidance import guidance_for
from ..learning import PolicyModel, TrainTrace, bc_train, expert_pairs, gail_train, rollout, save_policy
from ..metrics import MetricReport, evaluate_log, rank_models
from ..perception import FEATURE_SIZE
from ..utils import parallel_map
from ..world import Scenario, SimConfig, TrajectoryLog, run_simulation
from .config import ExperimentConfig, ExperimentSpec, config_hash
from .export import export_results
from .ingest import ingest_trajectories, window_steps

logger = logging.getLogger(__name__)

# test scenarios of the standard suite use seeds far from the training ones
TEST_SEED_OFFSET = 10000
MANIFEST_FILE = 'manifest.json'


@dataclass
class TrainingData:
    scenarios: List[Scenario] = field(default_factory=list)
    logs: List[TrajectoryLog] = field(default_factory=list)
    guidances: List[Any] = field(default_factory=list)
    features: np.ndarray = field(default_factory=lambda: np.zeros((0, FEATURE_SIZE)))
    actions: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))


@dataclass
class EvaluationCase:
    scenario: Scenario
    expert_log: TrajectoryLog
    guidance: Any
    group: str


def sim_config_for(scenario: Scenario, config: ExperimentConfig) -> SimConfig:
    if scenario.domain_tag == 'real' and 'window' in scenario.meta:
        return replace(config.sim, max_steps=window_steps(scenario.meta, config.sim.dt))
    return config.sim.for_domain(scenario.domain_tag)


def simulate_expert(scenario: Scenario, config: ExperimentConfig) -> TrajectoryLog:
    sim = sim_config_for(scenario, config)
    controller = expert_controller(scenario, sim, config.social_force, config.orca, config.planner)
    return run_simulation(scenario, controller, sim)


def scenario_guidance(scenario: Scenario, log: TrajectoryLog, config: ExperimentConfig):
    return guidance_for(scenario, config.sim.max_speed, config.sim.dt, [log], config.gp, config.planner)


def group_label(scenario: Scenario) -> str:
    if scenario.domain_tag == 'X':
        return f"{scenario.meta['kind']}-d{scenario.meta['density']}"
    return scenario.domain_tag


def _demonstration(scenario: Scenario, config: ExperimentConfig):
    log = simulate_expert(scenario, config)
    guidance = scenario_guidance(scenario, log, config)
    features, actions = expert_pairs(scenario, log, guidance, config.sim.max_speed)
    return log, guidance, features, actions


def standard_scenarios(kinds: Sequence[str], densities: Sequence[int], variations: int, seed: int) -> List[Scenario]:
    return list(standard_suite([StandardKind(k) for k in kinds], densities, variations, seed))


def representative_set(seeds: Sequence[int], config: ExperimentConfig) -> List[Scenario]:
    return parallel_map(partial(sample_representative, config=config.generator, planner=config.planner), seeds)


def prepare_training(train_domain: str, config: ExperimentConfig, seed: int) -> TrainingData:
    """Training scenarios with expert logs and featurised pairs, or random-domain pairs."""
    data = config.data
    if train_domain == 'R':
        features, actions = build_random_dataset(data.r_pairs, seed, config.random_pairs)
        return TrainingData(features=features, actions=actions)
    if train_domain == 'X':
        scenarios = standard_scenarios(data.x_train_kinds, data.x_train_densities, data.x_train_variations,
                                       seed)
    elif train_domain == 'G':
        scenarios = representative_set(representative_split(data.g_train, data.g_test, seed)[0], config)
    else:
        raise ValidationError(f'unknown training domain {train_domain!r}')
    if not scenarios:
        raise ValidationError(f'no training scenarios for domain {train_domain}')
    demos = parallel_map(partial(_demonstration, config=config), scenarios)
    logs, guidances, features, actions = (list(column) for column in zip(*demos))
    result = TrainingData(scenarios, logs, guidances, np.concatenate(features), np.concatenate(actions))
    logger.info('domain %s: %d training scenarios, %d expert pairs', train_domain, len(scenarios),
                len(result.features))
    return result


def _test_case(scenario: Scenario, config: ExperimentConfig) -> EvaluationCase:
    log = simulate_expert(scenario, config)
    return EvaluationCase(scenario, log, scenario_guidance(scenario, log, config), group_label(scenario))


def build_test_set(test_domain: str, config: ExperimentConfig, seed: int, real_csv: Optional[str] = None,
                   real_layout: Optional[str] = None) -> List[EvaluationCase]:
    data = config.data
    if test_domain == 'real':
        windows = ingest_trajectories(real_csv, real_layout, data.window, data.stride, config.sim.dt,
                                      config.agent_radius)
        return [EvaluationCase(s, log, scenario_guidance(s, log, config), 'real') for s, log in windows]
    if test_domain == 'X':
        scenarios = standard_scenarios(data.x_test_kinds, data.x_test_densities, data.x_test_variations,
                                       seed + TEST_SEED_OFFSET)
    elif test_domain == 'G':
        scenarios = representative_set(representative_split(data.g_train, data.g_test, seed)[1], config)
    else:
        raise ValidationError(f'unknown test domain {test_domain!r}')
    cases = parallel_map(partial(_test_case, config=config), scenarios)
    logger.info('domain %s: %d test scenarios', test_domain, len(cases))
    return cases


def train_model(model_id: str, data: TrainingData, config: ExperimentConfig, seed: int,
                progress: bool = False) -> Tuple[PolicyModel, TrainTrace]:
    paradigm, domain = model_id.split('-')
    train = replace(config.train, rng_seed=seed)
    if paradigm == 'BCA':
        return bc_train(data.features, data.actions, train, progress=progress)
    train = replace(train, gail_iterations=config.gail_iterations(domain))
    return gail_train(data.scenarios, data.logs, data.guidances, train, config.sim.for_domain(domain),
                      expert_data=(data.features, data.actions), progress=progress)


def _evaluate_case(case: EvaluationCase, policy: PolicyModel, model_id: str, config: ExperimentConfig) -> MetricReport:
    logs, _ = rollout([case.scenario], policy, case.guidance, sim_config_for(case.scenario, config))
    return evaluate_log(case.scenario, logs[0], case.expert_log, model_id, case.group)


def evaluate_policy(policy: PolicyModel, model_id: str, cases: Sequence[EvaluationCase],
                    config: ExperimentConfig) -> List[MetricReport]:
    policy = policy.as_deterministic()
    return parallel_map(partial(_evaluate_case, policy=policy, model_id=model_id, config=config), cases)


class Manifest(object):
    """Run record; timestamps appear nowhere else among the outputs."""

    def __init__(self, path: Union[str, Path], specs: Sequence[ExperimentSpec], config: ExperimentConfig,
                 seeds: Dict[str, int]) -> None:
        self.path = Path(path)
        self.data = {
            'specs': [spec.to_dict() for spec in specs],
            'config': config.to_dict(),
            'config_hash': config_hash(config),
            'seeds': seeds,
            'version': __version__,
            'stages': {},
            'artifacts': [],
            'started': self.now(),
            'finished': None,
        }

    @staticmethod
    def now() -> str:
        return datetime.now(timezone.utc).isoformat()

    def add_artifact(self, path: Union[str, Path]) -> None:
        self.data['artifacts'].append({'path': str(path), 'valid': True})
        self.write()

    def invalidate(self) -> None:
        for artifact in self.data['artifacts']:
            artifact['valid'] = False

    @contextlib.contextmanager
    def stage(self, name: str):
        self.data['stages'][name] = 'running'
        self.write()
        logger.info('stage %s', name)
        try:
            yield
        except Exception as exc:
            self.data['stages'][name] = 'failed'
            self.invalidate()
            self.data['finished'] = self.now()
            self.write()
            raise StageError(name, exc) from exc
        self.data['stages'][name] = 'done'
        self.write()

    def finish(self) -> None:
        self.data['finished'] = self.now()
        self.write()

    def write(self) -> None:
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + '\n')


def run_bidirectional(specs: Sequence[ExperimentSpec], config: Optional[ExperimentConfig] = None,
                      progress: bool = False) -> List[MetricReport]:
    """Trains every spec's model and ranks them jointly on one shared test set."""
    if not specs:
        raise ValidationError('no experiment specs given')
    first = specs[0]
    for spec in specs[1:]:
        if (spec.test_domain, spec.seed, spec.output_dir) != (first.test_domain, first.seed, first.output_dir):
            raise ValidationError('specs ranked together share test domain, seed and output directory')
    if len({spec.model_id for spec in specs}) != len(specs):
        raise ValidationError('model ids must be distinct')
    config = config or ExperimentConfig.load(first.config_path, first.scale)
    output_dir = Path(first.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(output_dir / MANIFEST_FILE, specs, config,
                        {'train': first.seed, 'test': first.seed + TEST_SEED_OFFSET})

    with manifest.stage('test-data'):
        cases = build_test_set(first.test_domain, config, first.seed, first.real_csv, first.real_layout)
        if not cases:
            raise ValidationError(f'no test scenarios for domain {first.test_domain}')

    training: Dict[str, TrainingData] = {}
    reports: List[MetricReport] = []
    for spec in specs:
        if spec.train_domain not in training:
            with manifest.stage(f'train-data-{spec.train_domain}'):
                training[spec.train_domain] = prepare_training(spec.train_domain, config, spec.seed)
        with manifest.stage(f'train-{spec.model_id}'):
            policy, trace = train_model(spec.model_id, training[spec.train_domain], config, spec.seed, progress)
            model_path = output_dir / f'model-{spec.model_id}.json'
            trace_path = output_dir / f'trace-{spec.model_id}.csv'
            save_policy(policy, model_path)
            trace.save_csv(trace_path)
            manifest.add_artifact(model_path)
            manifest.add_artifact(trace_path)
        with manifest.stage(f'evaluate-{spec.model_id}'):
            reports.extend(evaluate_policy(policy, spec.model_id, cases, config))

    with manifest.stage('export'):
        paths = export_results(reports, output_dir, rank_models(reports))
        for path in paths.values():
            manifest.add_artifact(path)
    manifest.finish()
    return reports


def run_experiment(spec: ExperimentSpec, config: Optional[ExperimentConfig] = None,
                   progress: bool = False) -> List[MetricReport]:
    return run_bidirectional([spec], config, progress)


def evaluate_saved(policy: PolicyModel, model_id: str, test_domain: str, config: ExperimentConfig, seed: int,
                   real_csv: Optional[str] = None, real_layout: Optional[str] = None) -> List[MetricReport]:
    """Evaluates an already trained policy on a freshly built test set."""
    return evaluate_policy(policy, model_id, build_test_set(test_domain, config, seed, real_csv, real_layout), config)
