"""Acceptance run: oracle checks on random cases, a bidirectional experiment and a determinism re-run.

The ``full`` suite uses the acceptance case counts and the desk-scale configuration; the
``reduced`` suite trims both so it finishes in minutes.
"""
import logging
from dataclasses import replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import torch

from ..domains import GeneratorConfig, StandardKind, build_standard
from ..errors import ValidationError
from ..experts import expert_controller
from ..geometry import ObstacleSet, Polygon, Segment, cross, point_seg_distance, point_segment_distances, \
    seg_intersect, swept_contacts
from ..learning import Discriminator, Mlp, PolicyModel, discriminator_objective, surrogate
from ..learning.networks import assign_parameters, parameter_vector
from ..metrics import count_aa, count_ao, dtw_min_match, rank_models
from ..world import AgentTask, AgentTrack, Scenario, SimConfig, TrajectoryLog, run_simulation
from .config import DataScale, ExperimentConfig, ExperimentSpec
from .experiment import run_bidirectional
from .export import METRICS_FILE, RANKS_FILE, write_csv

logger = logging.getLogger(__name__)

CHECKS_FILE = 'checks.csv'
CHECK_COLUMNS = ['check', 'cases', 'failures', 'soft']
COMPARED_FILES = (METRICS_FILE, RANKS_FILE)
DENSE_SAMPLES = 2001
# cases whose closest approach lies this close to contact are left to the exact solver
GRAZING = 1e-3
GRADIENT_TOLERANCE = 1e-4


def check_swept_contact(rng: np.random.Generator, cases: int) -> int:
    failures = 0
    s = np.linspace(0.0, 1.0, DENSE_SAMPLES)[:, None]
    for _ in range(cases):
        c0, c1, a, b = rng.uniform(-3, 3, size=(4, 2))
        radius = rng.uniform(0.1, 1.0)
        exact = bool(swept_contacts(c0[None], c1[None], radius, np.stack([a, b])[None])[0, 0])
        closest = point_segment_distances(c0 + s * (c1 - c0), a, b).min()
        if abs(closest - radius) > GRAZING and exact != (closest <= radius):
            failures += 1
    return failures


def check_segments(rng: np.random.Generator, cases: int) -> int:
    """Point-segment distance against a fine sampling, and intersections against orientation signs."""
    failures = 0
    fine = np.linspace(0.0, 1.0, 200001)[:, None]
    for _ in range(cases):
        p, a, b, c, d = rng.uniform(-3, 3, size=(5, 2))
        dense = np.linalg.norm(a + fine * (b - a) - p, axis=-1).min()
        if abs(point_seg_distance(p, Segment(a, b)) - dense) > 1e-4:
            failures += 1
            continue
        sides = np.array([cross(b - a, c - a), cross(b - a, d - a), cross(d - c, a - c), cross(d - c, b - c)])
        if np.abs(sides).min() < GRAZING:
            continue
        crossing = sides[0] * sides[1] < 0 and sides[2] * sides[3] < 0
        hit = seg_intersect(Segment(a, b), Segment(c, d))
        if (hit is not None) != crossing:
            failures += 1
        elif hit is not None:
            failures += max(point_seg_distance(hit, Segment(a, b)), point_seg_distance(hit, Segment(c, d))) > 1e-7
    return failures


def brute_force_dtw(model: np.ndarray, expert: np.ndarray) -> float:
    """Minimum over every monotone alignment path, enumerated recursively."""
    cost = np.linalg.norm(model[:, None] - expert[None], axis=-1)

    @lru_cache(maxsize=None)
    def best(i: int, j: int) -> float:
        if i == 0 and j == 0:
            return cost[0, 0]
        options = [best(p, q) for p, q in ((i - 1, j), (i, j - 1), (i - 1, j - 1)) if p >= 0 and q >= 0]
        return cost[i, j] + min(options)

    return float(best(len(model) - 1, len(expert) - 1) / len(expert))


def check_dtw(rng: np.random.Generator, cases: int) -> int:
    failures = 0
    for _ in range(cases):
        model = rng.normal(size=(rng.integers(1, 7), 2))
        expert = rng.normal(size=(rng.integers(1, 7), 2))
        if abs(dtw_min_match(model, expert) - brute_force_dtw(model, expert)) > 1e-9:
            failures += 1
        failures += dtw_min_match(model, model) != 0.0
    return failures


def check_agent_contacts(rng: np.random.Generator, cases: int) -> int:
    """One-step two-agent logs against dense time sampling of the pair distance."""
    failures = 0
    dt = 0.1
    s = np.linspace(0.0, 1.0, DENSE_SAMPLES)[:, None]
    radii = np.array([0.5, 0.5])
    for _ in range(cases):
        p = rng.uniform(-2, 2, size=(2, 2))
        v = rng.uniform(-15, 15, size=(2, 2))
        tracks = [AgentTrack(k, np.array([0, 1]), np.stack([p[k], p[k] + v[k] * dt]), np.stack([v[k], np.zeros(2)]))
                  for k in range(2)]
        gap = np.linalg.norm((p[1] - p[0]) + s * (v[1] - v[0]) * dt, axis=-1).min()
        if abs(gap - 1.0) > GRAZING and count_aa(TrajectoryLog('aa', dt, tracks), radii) != int(gap <= 1.0):
            failures += 1
    return failures


def walked(positions: Sequence, dt: float = 0.1) -> TrajectoryLog:
    """Single-agent log through `positions`, one step apart."""
    positions = np.asarray(positions, dtype=np.float64)
    velocities = np.zeros_like(positions)
    velocities[:-1] = np.diff(positions, axis=0) / dt
    return TrajectoryLog('ao', dt, [AgentTrack(0, np.arange(len(positions)), positions, velocities)])


def obstacle_cases() -> Dict[str, Sequence]:
    """Obstacle and path of the canonical single-episode contacts."""
    line = np.linspace(-3.0, 3.0, 13)
    return {
        'wall_crossing': (Polygon.rectangle(-0.1, -2.0, 0.1, 2.0), np.stack([line, np.zeros_like(line)], axis=-1)),
        'interior_sliding': (Polygon.rectangle(-5.0, -5.0, 5.0, 5.0),
                             np.stack([line / 2, np.zeros_like(line)], axis=-1)),
        # passes diagonally over the corner (2, 2), touching both edges that meet there
        'corner_clip': (Polygon.rectangle(0.0, 0.0, 2.0, 2.0), np.stack([2.0 + line, 2.0 - line], axis=-1)),
    }


def check_obstacle_contacts(rng: np.random.Generator, cases: int) -> int:
    """Every canonical contact is exactly one episode."""
    failures = 0
    for name, (polygon, path) in list(obstacle_cases().items())[:cases]:
        counted = count_ao(walked(path), ObstacleSet([polygon]), [0.5])
        if counted != 1:
            logger.warning('obstacle case %s: %d episodes', name, counted)
            failures += 1
    return failures


def check_orca_sparse(rng: np.random.Generator, cases: int) -> int:
    """ORCA crossings of two to four well separated agents stay collision-free."""
    failures = 0
    config = SimConfig(max_steps=300)
    for case in range(cases):
        count = int(rng.integers(2, 5))
        radius = rng.uniform(4.0, 6.0)
        angles = rng.uniform(0, 2 * np.pi) + np.arange(count) * 2 * np.pi / count
        starts = radius * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        tasks = tuple(AgentTask(start, -start) for start in starts)
        scenario = Scenario(f'orca-{case}', (-8.0, -8.0, 8.0, 8.0), (), tasks, 'X', expert='orca')
        log = run_simulation(scenario, expert_controller(scenario, config), config)
        failures += count_aa(log, scenario.radii) > 0
    return failures


def finite_difference_error(module: torch.nn.Module, objective: Callable[[], torch.Tensor],
                            step: float = 1e-6) -> float:
    """Relative gap between the autograd gradient and central differences over every parameter."""
    module.zero_grad()
    objective().backward()
    analytic = torch.cat([p.grad.reshape(-1) for p in module.parameters()])
    base = parameter_vector(module)
    numeric = torch.zeros_like(base)
    with torch.no_grad():
        for k in range(len(base)):
            shift = torch.zeros_like(base)
            shift[k] = step
            assign_parameters(module, base + shift)
            upper = float(objective())
            assign_parameters(module, base - shift)
            lower = float(objective())
            numeric[k] = (upper - lower) / (2 * step)
    assign_parameters(module, base)
    scale = max(float(analytic.norm()), float(numeric.norm()), 1e-12)
    return float((analytic - numeric).norm()) / scale


def gradient_errors(rng: np.random.Generator) -> Dict[str, float]:
    """Finite-difference errors of the network, discriminator and surrogate gradients on one small instance."""
    seed = int(rng.integers(2 ** 31))
    tensor = lambda *shape: torch.as_tensor(rng.normal(size=shape), dtype=torch.float64)
    mlp = Mlp([3, 4, 2], seed=seed)
    inputs, weights = tensor(5, 3), tensor(5, 2)
    discriminator = Discriminator(hidden=(4,), seed=seed, feature_size=3)
    policy_batch, expert_batch = (tensor(6, 3), tensor(6, 2)), (tensor(6, 3), tensor(6, 2))
    policy = PolicyModel.create((4,), sigma=0.5, seed=seed, feature_size=3)
    features, actions, adv = tensor(6, 3), tensor(6, 2), tensor(6)
    with torch.no_grad():
        old_log_prob = policy.log_prob(features, actions) + 0.3 * tensor(6)
    return {
        'mlp': finite_difference_error(mlp, lambda: (mlp(inputs) * weights).sum()),
        'discriminator': finite_difference_error(
            discriminator, lambda: discriminator_objective(discriminator, policy_batch, expert_batch)),
        'surrogate': finite_difference_error(
            policy, lambda: surrogate(policy, features, actions, old_log_prob, adv, clip=0.2, entropy_weight=0.01)),
    }


def check_gradients(rng: np.random.Generator, cases: int) -> int:
    failures = 0
    for _ in range(cases):
        errors = gradient_errors(rng)
        failures += sum(error > GRADIENT_TOLERANCE for error in errors.values())
    return failures


def paper_snapshot(config: ExperimentConfig) -> Dict[str, object]:
    """Settings pinned by the `paper` scale preset, read back from a configuration."""
    doorways = tuple(build_standard(kind, 1, radius=config.agent_radius).meta['doorway_width']
                     for kind in (StandardKind.Evacuation1, StandardKind.Evacuation2))
    return {
        'agent_radius': config.agent_radius,
        'doorway_widths': doorways,
        'bc_learning_rate': config.train.bc_learning_rate,
        'gail_learning_rate': config.train.gail_learning_rate,
        'exploration_std': config.train.exploration_std,
        'entropy_weight': config.train.entropy_weight,
        'gail_iterations': (config.gail_iterations('X'), config.gail_iterations('G')),
        'r_pairs': config.data.r_pairs,
        'g_split': (config.data.g_train, config.data.g_test),
    }


PAPER_SETTINGS = {
    'agent_radius': 0.5,
    'doorway_widths': (2.4, 1.4),
    'bc_learning_rate': 1e-4,
    'gail_learning_rate': 1e-2,
    'exploration_std': 0.5,
    'entropy_weight': 0.0,
    'gail_iterations': (10000, 6000),
    'r_pairs': 1600000,
    'g_split': (4000, 100),
}


def check_paper_settings(rng: np.random.Generator, cases: int) -> int:
    snapshot = paper_snapshot(ExperimentConfig.for_scale('paper'))
    wrong = [name for name, value in PAPER_SETTINGS.items() if snapshot[name] != value]
    for name in wrong:
        logger.warning('paper preset %s is %r, expected %r', name, snapshot[name], PAPER_SETTINGS[name])
    return len(wrong)


CHECKS: Dict[str, Callable[[np.random.Generator, int], int]] = {
    'swept_contact': check_swept_contact,
    'segments': check_segments,
    'agent_contacts': check_agent_contacts,
    'obstacle_contacts': check_obstacle_contacts,
    'dtw': check_dtw,
    'orca_sparse': check_orca_sparse,
    'gradients': check_gradients,
    'paper_settings': check_paper_settings,
}
SUITES: Dict[str, Dict[str, int]] = {
    'full': {'swept_contact': 1000, 'segments': 1000, 'agent_contacts': 500, 'obstacle_contacts': 3,
             'dtw': 200, 'orca_sparse': 100, 'gradients': 100, 'paper_settings': len(PAPER_SETTINGS)},
    'reduced': {'swept_contact': 200, 'segments': 200, 'agent_contacts': 200, 'obstacle_contacts': 3,
                'dtw': 50, 'orca_sparse': 20, 'gradients': 10, 'paper_settings': len(PAPER_SETTINGS)},
}
DIRECTION_METRICS = ('dtw', 'aa')


def tiny_config() -> ExperimentConfig:
    """Smallest configuration that still runs every stage of a bidirectional comparison."""
    base = ExperimentConfig.for_scale('desk')
    return replace(
        base,
        generator=GeneratorConfig(obstacle_count=(1, 2), agent_count=(2, 3), area_size=20.0),
        train=replace(base.train, hidden_sizes=(16, 16), bc_iterations=200, batch_size=64,
                      scenarios_per_iteration=2, log_interval=50),
        data=DataScale(g_train=3, g_test=1, r_pairs=0, x_train_variations=0,
                       x_test_kinds=('ConcentricCircles',), x_test_densities=(4,), x_test_variations=1,
                       gail_iterations_x=3, gail_iterations_g=3))


def bidirectional_run(output_dir: Path, seed: int, config: ExperimentConfig) -> pd.DataFrame:
    """BCA-G against RLA-G on standard test scenarios; returns the mean ranks."""
    specs = [ExperimentSpec(model_id, 'X', seed=seed, output_dir=str(output_dir)) for model_id in ('BCA-G', 'RLA-G')]
    return rank_models(run_bidirectional(specs, config))


def direction_rows(ranks: pd.DataFrame) -> List[Dict]:
    """Whether behavior cloning ranks ahead of the adversarial model; recorded, never enforced."""
    lookup = ranks.set_index(['model_id', 'metric'])['mean_rank']
    rows = []
    for metric in DIRECTION_METRICS:
        ahead = lookup[('BCA-G', metric)] < lookup[('RLA-G', metric)]
        logger.info('BCA-G %s ahead of RLA-G on %s', 'is' if ahead else 'is not', metric)
        rows.append({'check': f'bca_ahead_{metric}', 'cases': 1, 'failures': int(not ahead), 'soft': True})
    return rows


def check_determinism(output_dir: Path, seed: int) -> int:
    """Runs the tiny comparison twice; every compared file must match byte for byte."""
    first, second = output_dir / 'first', output_dir / 'second'
    for run_dir in (first, second):
        bidirectional_run(run_dir, seed, tiny_config())
    return sum((first / name).read_bytes() != (second / name).read_bytes() for name in COMPARED_FILES)


def repro(output_dir: Union[str, Path], seed: int = 0, config: Optional[ExperimentConfig] = None,
          suite: str = 'reduced') -> pd.DataFrame:
    """Runs the suite, writes ``checks.csv`` next to the experiment outputs and returns the check table.

    `config` replaces the suite's experiment configuration: the desk preset for ``full`` and
    :func:`tiny_config` for ``reduced``.
    """
    if suite not in SUITES:
        raise ValidationError(f'unknown suite {suite!r}, expected one of {sorted(SUITES)}')
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    rows: List[Dict] = []
    for name, check in CHECKS.items():
        cases = SUITES[suite][name]
        failures = check(np.random.default_rng([seed, len(rows)]), cases)
        rows.append({'check': name, 'cases': cases, 'failures': failures, 'soft': False})
        level = logging.WARNING if failures else logging.INFO
        logger.log(level, 'check %s: %d/%d failures', name, failures, cases)

    if config is None:
        config = ExperimentConfig.for_scale('desk') if suite == 'full' else tiny_config()
    ranks = bidirectional_run(output_dir / 'bidirectional', seed, config)
    rows.extend(direction_rows(ranks))
    mismatched = check_determinism(output_dir / 'determinism', seed)
    rows.append({'check': 'determinism', 'cases': len(COMPARED_FILES), 'failures': mismatched, 'soft': False})

    table = pd.DataFrame(rows, columns=CHECK_COLUMNS)
    write_csv(table, output_dir / CHECKS_FILE)
    return table


def hard_failures(table: pd.DataFrame) -> int:
    return int(table.loc[~table['soft'].astype(bool), 'failures'].sum())
