"""Sliding-window ingestion of recorded pedestrian trajectories into real-domain scenarios."""
import json
import logging
import math
import re
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import MalformedRow, ValidationError
from ..geometry import ObstacleSet, Polygon, norm
from ..world import LOG_COLUMNS, AgentTask, AgentTrack, Bounds, Scenario, TrajectoryLog

logger = logging.getLogger(__name__)

WALL_CLOCK_COLUMNS = ['agent_id', 't', 'x', 'y']

Samples = Dict[int, np.ndarray]


def read_layout(path: Union[str, Path]) -> Tuple[Bounds, Tuple[Polygon, ...]]:
    """Bounds and obstacles of a scenario (or layout-only) JSON file."""
    try:
        data = json.loads(Path(path).read_text())
        bounds = tuple(float(b) for b in data['bounds'])
        obstacles = tuple(Polygon(np.asarray(vertices, dtype=np.float64)) for vertices in data.get('obstacles', []))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f'{path}: malformed layout: {exc!r}') from exc
    if len(bounds) != 4:
        raise ValidationError(f'{path}: bounds need four numbers')
    return bounds, obstacles


def _numeric_columns(frame: pd.DataFrame, integral: Tuple[str, ...], real: Tuple[str, ...]) -> pd.DataFrame:
    """Columns parsed as float64; the first unreadable cell is reported by its file line."""
    values = pd.DataFrame({name: pd.to_numeric(frame[name].str.strip(), errors='coerce')
                           for name in integral + real}, dtype=np.float64)
    bad = ~np.isfinite(values.to_numpy())
    for k, name in enumerate(values.columns):
        if name in integral:
            bad[:, k] |= np.mod(np.nan_to_num(values[name].to_numpy()), 1.0) != 0
    if bad.any():
        row, col = np.argwhere(bad)[0]
        name = values.columns[col]
        # the header is line 1
        raise MalformedRow(int(row) + 2, f'{name}: cannot read {frame[name].iloc[row]!r}')
    return values


def read_samples(path: Union[str, Path], dt: float = 0.1) -> Samples:
    """Per-agent rows (t, x, y) sorted by time.

    Accepts the wall-clock header ``agent_id,t,x,y`` or the trajectory-log header, whose time
    is ``step * dt``.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise MalformedRow(1, 'empty file')
    except pd.errors.ParserError as exc:
        found = re.search(r'line (\d+)', str(exc))
        raise MalformedRow(int(found.group(1)) if found else 0, str(exc)) from exc
    frame.columns = [str(name).strip() for name in frame.columns]
    header = list(frame.columns)
    if header == WALL_CLOCK_COLUMNS:
        values = _numeric_columns(frame, ('agent_id',), ('t', 'x', 'y'))
    elif header == LOG_COLUMNS:
        values = _numeric_columns(frame, ('agent_id', 'step'), ('x', 'y'))
        values['t'] = values['step'] * dt
    else:
        raise MalformedRow(1, f'unexpected header {header}')

    samples = {}
    values = values.sort_values(['agent_id', 't'], kind='stable')
    for agent, rows in values.groupby('agent_id', sort=True):
        array = rows[['t', 'x', 'y']].to_numpy(dtype=np.float64)
        if np.any(np.diff(array[:, 0]) <= 0):
            raise ValidationError(f'agent {int(agent)}: repeated timestamps')
        samples[int(agent)] = array
    return samples


def window_starts(first: float, last: float, window: float, stride: float) -> List[float]:
    """Start times ``first + k * stride`` of every window that fits inside [first, last]."""
    if window <= 0 or stride <= 0:
        raise ValidationError('window and stride must be positive')
    starts = []
    k = 0
    while first + k * stride + window <= last + 1e-9:
        starts.append(first + k * stride)
        k += 1
    return starts


def resample(samples: np.ndarray, start: float, end: float, dt: float) -> Tuple[int, np.ndarray]:
    """Positions on the grid ``start + k * dt`` covered by the samples within [start, end].

    Returns the first grid index and the interpolated positions (possibly empty).
    """
    inside = samples[(samples[:, 0] >= start - 1e-9) & (samples[:, 0] <= end + 1e-9)]
    if len(inside) < 2:
        return 0, np.zeros((0, 2))
    first = math.ceil((inside[0, 0] - start) / dt - 1e-9)
    last = math.floor((inside[-1, 0] - start) / dt + 1e-9)
    if last <= first:
        return first, np.zeros((0, 2))
    times = start + np.arange(first, last + 1) * dt
    positions = np.stack([np.interp(times, inside[:, 0], inside[:, 1]),
                          np.interp(times, inside[:, 0], inside[:, 2])], axis=-1)
    return first, positions


def window_scenario(name: str, index: int, start: float, window: float, samples: Samples, bounds: Bounds,
                    obstacles: Tuple[Polygon, ...], dt: float,
                    radius: float) -> Tuple[Optional[Scenario], Optional[TrajectoryLog]]:
    obstacle_set = ObstacleSet(obstacles)
    tasks: List[AgentTask] = []
    tracks: List[AgentTrack] = []
    source_ids: List[int] = []
    for agent, agent_samples in samples.items():
        spawn, positions = resample(agent_samples, start, start + window, dt)
        if not len(positions):
            continue
        if obstacle_set.inside(positions[0]) >= 0 or obstacle_set.inside(positions[-1]) >= 0:
            logger.debug('window %d: agent %d starts or ends inside an obstacle, dropped', index, agent)
            continue
        task = AgentTask(positions[0], positions[-1], radius, spawn)
        clash = any(t.spawn_step == spawn and norm(t.start - task.start) < t.radius + radius for t in tasks)
        if clash:
            logger.debug('window %d: agent %d spawns on top of another agent, dropped', index, agent)
            continue
        velocities = np.zeros_like(positions)
        velocities[:-1] = np.diff(positions, axis=0) / dt
        tracks.append(AgentTrack(len(tasks), np.arange(spawn, spawn + len(positions), dtype=np.int64),
                                 positions, velocities))
        tasks.append(task)
        source_ids.append(agent)
    if not tasks:
        return None, None
    scenario = Scenario(id=f'{name}-w{index}', bounds=bounds, obstacles=obstacles, tasks=tuple(tasks),
                        domain_tag='real', meta={'window_start': start, 'window': window, 'source_ids': source_ids})
    return scenario, TrajectoryLog(scenario.id, dt, tracks)


def ingest_trajectories(csv_path: Union[str, Path], layout_path: Union[str, Path], window: float, stride: float,
                        dt: float = 0.1, radius: float = 0.5,
                        log_dt: float = 0.1) -> List[Tuple[Scenario, TrajectoryLog]]:
    """Splits recorded trajectories into windowed scenarios with their expert logs.

    Every agent seen inside a window joins its scenario, also those who appear late or leave
    early; start and goal are the first and last in-window positions. Agents starting or ending
    inside an obstacle are dropped.
    """
    bounds, obstacles = read_layout(layout_path)
    samples = read_samples(csv_path, log_dt)
    if not samples:
        logger.warning('%s holds no trajectories', csv_path)
        return []
    first = min(s[0, 0] for s in samples.values())
    last = max(s[-1, 0] for s in samples.values())
    name = Path(csv_path).stem
    result = []
    for index, start in enumerate(window_starts(first, last, window, stride)):
        scenario, log = window_scenario(name, index, start, window, samples, bounds, obstacles, dt, radius)
        if scenario is None:
            logger.warning('window %d starting at %.1f s holds no usable agents, skipped', index, start)
            continue
        result.append((scenario, log))
    logger.info('ingested %d windows from %s', len(result), csv_path)
    return result


def export_windows(windows: List[Tuple[Scenario, TrajectoryLog]], output_dir: Union[str, Path]) -> List[Path]:
    """Writes ``<id>.json`` and ``<id>.csv`` per window."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for scenario, log in windows:
        scenario.save(output_dir / f'{scenario.id}.json')
        log.save_csv(output_dir / f'{scenario.id}.csv')
        paths.append(output_dir / f'{scenario.id}.json')
    return paths


def window_steps(meta: Mapping, dt: float) -> int:
    """Episode length that covers a window."""
    return int(round(meta['window'] / dt))
