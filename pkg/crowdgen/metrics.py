"""Trajectory metrics: min-match DTW, episode-counted collisions and rank aggregation."""
import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import MissingReport, ValidationError
from .geometry import EPS, ObstacleSet, swept_contacts
from .world import Scenario, TrajectoryLog

logger = logging.getLogger(__name__)

METRICS = ('dtw', 'aa', 'ao')
REPORT_COLUMNS = ['scenario_id', 'model_id', 'dtw', 'aa', 'ao']
RANK_COLUMNS = ['model_id', 'metric', 'mean_rank']


@dataclass(frozen=True)
class MetricReport:
    scenario_id: str
    model_id: str
    dtw: float
    aa: int
    ao: int
    # grouping label such as "Evacuation1-d10" for grouped statistics
    group: Optional[str] = None

    def __post_init__(self) -> None:
        if self.dtw < 0 or self.aa < 0 or self.ao < 0:
            raise ValidationError(f'negative metric in report for {self.model_id} on {self.scenario_id}')

    def to_dict(self) -> Dict:
        return asdict(self)


def dtw_min_match(model: np.ndarray, expert: np.ndarray) -> float:
    """Dynamic time warping over Euclidean node distances, divided by the expert length.

    Every node of both sequences is matched at least once and the alignment is monotonic.
    """
    model = np.asarray(model, dtype=np.float64).reshape(-1, 2)
    expert = np.asarray(expert, dtype=np.float64).reshape(-1, 2)
    if not len(model) or not len(expert):
        raise ValidationError('DTW needs two non-empty sequences')
    cost = np.linalg.norm(model[:, None, :] - expert[None, :, :], axis=-1)
    row = np.cumsum(cost[0])
    for i in range(1, len(model)):
        # D[i, j] = C[i, j] + min(D[i-1, j], D[i-1, j-1], D[i, j-1]), solved for a whole row at once
        base = np.minimum(row, np.concatenate([[np.inf], row[:-1]]))
        partial = np.cumsum(cost[i])
        row = partial + np.minimum.accumulate(base - (partial - cost[i]))
    return float(row[-1] / len(expert))


def scenario_dtw(model_log: TrajectoryLog, expert_log: TrajectoryLog) -> float:
    """Mean DTW over agents present in both logs, paired by agent id."""
    values = []
    for track in model_log.tracks:
        try:
            reference = expert_log.track(track.agent_id)
        except KeyError:
            continue
        if len(track.positions) and len(reference.positions):
            values.append(dtw_min_match(track.positions, reference.positions))
    return float(np.mean(values)) if values else 0.0


def _dense(log: TrajectoryLog, num_agents: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Positions, velocities and a transition mask on a shared (agent, step) grid."""
    steps = [s for track in log.tracks for s in track.steps]
    if not steps:
        return np.zeros((num_agents, 0, 2)), np.zeros((num_agents, 0, 2)), np.zeros((num_agents, 0), bool), 0
    first, last = int(min(steps)), int(max(steps))
    length = last - first + 1
    positions = np.zeros((num_agents, length, 2))
    velocities = np.zeros((num_agents, length, 2))
    active = np.zeros((num_agents, length), dtype=bool)
    for track in log.tracks:
        if track.agent_id >= num_agents or track.num_transitions == 0:
            continue
        cols = track.steps[:-1] - first
        positions[track.agent_id, cols] = track.positions[:-1]
        velocities[track.agent_id, cols] = track.velocities[:-1] * np.diff(track.steps)[:, None]
        active[track.agent_id, cols] = True
    return positions, velocities, active, first


def _episodes(contact: np.ndarray) -> int:
    """Number of contact runs along the last axis; a run ends after one contact-free step."""
    rising = contact.copy()
    rising[..., 1:] &= ~contact[..., :-1]
    return int(np.count_nonzero(rising))


def count_aa(log: TrajectoryLog, radii: Sequence[float]) -> int:
    """Agent-agent contact episodes, exact under constant velocity within each step."""
    radii = np.asarray(radii, dtype=np.float64)
    n = len(radii)
    positions, velocities, active, _ = _dense(log, n)
    if n < 2 or positions.shape[1] == 0:
        return 0
    i, j = np.triu_indices(n, k=1)
    p = positions[j] - positions[i]
    v = (velocities[j] - velocities[i]) * log.dt
    both = active[i] & active[j]
    reach = (radii[i] + radii[j])[:, None]
    # |p + v t|^2 = R^2 for t in [0, 1]
    a = np.sum(v * v, axis=-1)
    b = 2 * np.sum(p * v, axis=-1)
    c = np.sum(p * p, axis=-1) - reach ** 2
    disc = b * b - 4 * a * c
    safe_a = np.where(a > 0, a, 1.0)
    first_root = (-b - np.sqrt(np.maximum(disc, 0.0))) / (2 * safe_a)
    # tangent paths graze without overlapping
    touching = (c <= 0) | ((a > 0) & (disc > EPS) & (first_root >= 0) & (first_root <= 1))
    return _episodes(touching & both)


def count_ao(log: TrajectoryLog, obstacles: ObstacleSet, radii: Sequence[float]) -> int:
    """Agent-obstacle contact episodes; touching any edge or lying inside counts as contact."""
    if not len(obstacles) or not len(log.tracks):
        return 0
    total = 0
    num_obstacles = len(obstacles)
    for track in log.tracks:
        if track.num_transitions == 0:
            continue
        radius = float(radii[track.agent_id])
        c0, c1 = track.positions[:-1], track.positions[1:]
        edge_contact = swept_contacts(c0, c1, radius, obstacles.edges)
        contact = np.zeros((len(c0), num_obstacles), dtype=bool)
        for k, polygon in enumerate(obstacles.polygons):
            inside = polygon.contains(c0) | polygon.contains(c1)
            contact[:, k] = edge_contact[:, obstacles.owner == k].any(axis=1) | inside
        # a gap in the step sequence ends any running episode
        gaps = np.concatenate([[False], np.diff(track.steps[:-1]) > 1])
        rising = contact.copy()
        rising[1:] &= ~contact[:-1]
        rising |= contact & gaps[:, None]
        total += int(np.count_nonzero(rising))
    return total


def evaluate_log(scenario: Scenario, model_log: TrajectoryLog, expert_log: TrajectoryLog,
                 model_id: str, group: Optional[str] = None) -> MetricReport:
    return MetricReport(
        scenario_id=scenario.id,
        model_id=model_id,
        dtw=scenario_dtw(model_log, expert_log),
        aa=count_aa(model_log, scenario.radii),
        ao=count_ao(model_log, scenario.obstacle_set, scenario.radii),
        group=group)


def reports_frame(reports: Sequence[MetricReport]) -> pd.DataFrame:
    frame = pd.DataFrame([r.to_dict() for r in reports], columns=REPORT_COLUMNS + ['group'])
    return frame.astype({'scenario_id': str, 'model_id': str})


def rank_models(reports: Sequence[MetricReport]) -> pd.DataFrame:
    """Mean rank per (model, metric); rank 1 is best and ties share their average position."""
    if not reports:
        raise MissingReport('no reports to rank')
    frame = reports_frame(reports)
    if frame.duplicated(['scenario_id', 'model_id']).any():
        raise ValidationError('more than one report for a (scenario, model) pair')
    models = sorted(frame['model_id'].unique())
    scenarios = sorted(frame['scenario_id'].unique())
    rows = []
    for metric in METRICS:
        table = frame.pivot(index='scenario_id', columns='model_id', values=metric).reindex(index=scenarios, columns=models)
        if table.isna().any().any():
            missing = table.isna().stack()
            scenario_id, model_id = missing[missing].index[0]
            raise MissingReport(f'model {model_id} has no report for scenario {scenario_id}')
        ranks = table.rank(axis=1, method='average', ascending=True).mean(axis=0)
        rows.extend((model, metric, float(ranks[model])) for model in models)
    return pd.DataFrame(rows, columns=RANK_COLUMNS)


def overall_ranks(ranks: pd.DataFrame) -> pd.DataFrame:
    """Grand mean of the per-metric mean ranks."""
    overall = ranks.groupby('model_id', sort=True)['mean_rank'].mean()
    return overall.reset_index()


def grouped_std(reports: Sequence[MetricReport]) -> pd.DataFrame:
    """Per (model, group) mean and standard deviation of every metric."""
    frame = reports_frame(reports)
    frame['group'] = frame['group'].fillna('all')
    grouped = frame.groupby(['model_id', 'group'], sort=True)[list(METRICS)]
    # population std, so a group with one report has std 0
    stats = pd.concat([grouped.mean().add_suffix('_mean'), grouped.std(ddof=0).add_suffix('_std')], axis=1)
    return stats[[f'{m}_{s}' for m in METRICS for s in ('mean', 'std')]].reset_index()
