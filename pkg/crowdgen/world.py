"""Scenario data model and the synchronous discrete-time simulation loop."""
import json
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import CrowdgenError, DecisionError, DimensionMismatch, ValidationError
from .geometry import EPS, ObstacleSet, Polygon, Vec2, clamp_norm, norm, vec2

logger = logging.getLogger(__name__)

DOMAIN_TAGS = ('X', 'G', 'R-derived', 'real')
EXPERTS = ('social_force', 'orca')
# Episode length per scenario domain; real-domain windows set their own.
DOMAIN_STEPS = {'X': 500, 'G': 300}

LOG_COLUMNS = ['scenario_id', 'agent_id', 'step', 'x', 'y', 'vx', 'vy']

Bounds = Tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class AgentTask:
    start: Vec2
    goal: Vec2
    radius: float = 0.5
    spawn_step: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'start', vec2(self.start))
        object.__setattr__(self, 'goal', vec2(self.goal))
        if not self.radius > 0:
            raise ValidationError(f'agent radius must be positive, got {self.radius}')
        if self.spawn_step < 0:
            raise ValidationError('spawn step must be non-negative')


@dataclass(frozen=True, eq=False)
class Scenario:
    id: str
    bounds: Bounds
    obstacles: Tuple[Polygon, ...]
    tasks: Tuple[AgentTask, ...]
    domain_tag: str
    expert: str = 'social_force'
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'bounds', tuple(float(b) for b in self.bounds))
        object.__setattr__(self, 'obstacles', tuple(self.obstacles))
        object.__setattr__(self, 'tasks', tuple(self.tasks))
        self.validate()

    @cached_property
    def obstacle_set(self) -> ObstacleSet:
        return ObstacleSet(self.obstacles)

    @property
    def num_agents(self) -> int:
        return len(self.tasks)

    @property
    def radii(self) -> np.ndarray:
        return np.array([task.radius for task in self.tasks])

    def validate(self) -> None:
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValidationError(f'scenario {self.id}: empty bounds {self.bounds}')
        if self.domain_tag not in DOMAIN_TAGS:
            raise ValidationError(f'scenario {self.id}: unknown domain tag {self.domain_tag!r}')
        if self.expert not in EXPERTS:
            raise ValidationError(f'scenario {self.id}: unknown expert {self.expert!r}')
        if not self.tasks:
            raise ValidationError(f'scenario {self.id}: no agent tasks')
        for polygon in self.obstacles:
            bx0, by0, bx1, by1 = polygon.bbox
            if bx0 < xmin - EPS or by0 < ymin - EPS or bx1 > xmax + EPS or by1 > ymax + EPS:
                raise ValidationError(f'scenario {self.id}: obstacle outside bounds')
        obstacles = ObstacleSet(self.obstacles)
        for k, task in enumerate(self.tasks):
            if obstacles.inside(task.start) >= 0 or obstacles.inside(task.goal) >= 0:
                raise ValidationError(f'scenario {self.id}: task {k} starts or ends inside an obstacle')
        for i in range(len(self.tasks)):
            for j in range(i + 1, len(self.tasks)):
                ti, tj = self.tasks[i], self.tasks[j]
                if ti.spawn_step == tj.spawn_step and norm(ti.start - tj.start) < ti.radius + tj.radius - EPS:
                    raise ValidationError(f'scenario {self.id}: start discs of agents {i} and {j} overlap')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'bounds': list(self.bounds),
            'obstacles': [polygon.vertices.tolist() for polygon in self.obstacles],
            'tasks': [
                {'start': task.start.tolist(), 'goal': task.goal.tolist(), 'radius': task.radius,
                 **({'spawn_step': task.spawn_step} if task.spawn_step else {})}
                for task in self.tasks
            ],
            'domain_tag': self.domain_tag,
            'expert': self.expert,
            'meta': dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Scenario':
        try:
            return cls(
                id=str(data['id']),
                bounds=tuple(data['bounds']),
                obstacles=tuple(Polygon(np.asarray(vertices, dtype=float)) for vertices in data['obstacles']),
                tasks=tuple(AgentTask(start=t['start'], goal=t['goal'], radius=float(t.get('radius', 0.5)),
                                      spawn_step=int(t.get('spawn_step', 0)))
                            for t in data['tasks']),
                domain_tag=data['domain_tag'],
                expert=data.get('expert', 'social_force'),
                meta=data.get('meta', {}),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f'malformed scenario description: {exc!r}') from exc

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n')

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'Scenario':
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class AgentState:
    position: Vec2
    velocity: Vec2
    arrived: bool = False
    arrival_step: Optional[int] = None


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    max_steps: int = 500
    max_speed: float = 1.5
    arrival_tolerance: float = 0.5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (self.dt > 0 and self.max_steps > 0 and self.max_speed > 0):
            raise ValidationError('dt, max_steps and max_speed must be positive')

    def for_domain(self, domain_tag: str) -> 'SimConfig':
        if domain_tag in DOMAIN_STEPS:
            return replace(self, max_steps=DOMAIN_STEPS[domain_tag])
        return self


@dataclass(frozen=True, eq=False)
class WorldSnapshot:
    """Everything an agent may observe at one step."""
    scenario: Scenario
    states: Tuple[AgentState, ...]
    step: int

    def is_active(self, index: int) -> bool:
        return self.step >= self.scenario.tasks[index].spawn_step and not self.states[index].arrived

    def active_indices(self) -> List[int]:
        return [i for i in range(len(self.states)) if self.is_active(i)]

    def neighbors(self, index: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Positions, velocities and radii of the other visible agents."""
        others = [j for j in self.active_indices() if j != index]
        if not others:
            return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0)
        return (np.array([self.states[j].position for j in others]),
                np.array([self.states[j].velocity for j in others]),
                np.array([self.scenario.tasks[j].radius for j in others]))


def agent_rng(seed: int, step: int, agent: int) -> np.random.Generator:
    """Generator keyed by (seed, step, agent), so draws never depend on evaluation order."""
    return np.random.default_rng([seed, step, agent])


class Controller(object):
    """Decision maker driving all agents of a simulation.

    `observe` is called for every active agent on the step-t snapshot before any `decide`, so
    decisions only ever see that snapshot.
    """

    def observe(self, snapshot: WorldSnapshot, index: int) -> Any:
        raise NotImplementedError()

    def decide(self, observation: Any, index: int, step: int, seed: int) -> Vec2:
        raise NotImplementedError()

    def decide_all(self, observations: Mapping[int, Any], step: int, seed: int) -> Dict[int, Vec2]:
        decisions = {}
        for index, observation in observations.items():
            try:
                decisions[index] = self.decide(observation, index, step, seed)
            except DecisionError:
                raise
            except Exception as exc:
                raise DecisionError(index, step, exc) from exc
        return decisions


@dataclass
class AgentTrack:
    """One agent's log rows: the position at `steps[k]` and the velocity applied from it."""
    agent_id: int
    steps: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    @property
    def num_transitions(self) -> int:
        return max(len(self.steps) - 1, 0)


@dataclass
class TrajectoryLog:
    scenario_id: str
    dt: float
    tracks: List[AgentTrack]

    @property
    def num_transitions(self) -> int:
        return sum(track.num_transitions for track in self.tracks)

    def track(self, agent_id: int) -> AgentTrack:
        for track in self.tracks:
            if track.agent_id == agent_id:
                return track
        raise KeyError(agent_id)

    def check_consistency(self, tol: float = 1e-9) -> None:
        for track in self.tracks:
            if len(track.steps) > 1 and np.any(np.diff(track.steps) <= 0):
                raise ValidationError(f'agent {track.agent_id}: steps not strictly increasing')
            expected = track.positions[:-1] + track.velocities[:-1] * self.dt * np.diff(track.steps)[:, None]
            if len(expected) and np.max(np.abs(expected - track.positions[1:])) > tol:
                raise ValidationError(f'agent {track.agent_id}: positions inconsistent with velocities')

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for track in self.tracks:
            for step, p, v in zip(track.steps, track.positions, track.velocities):
                rows.append((self.scenario_id, track.agent_id, int(step), p[0], p[1], v[0], v[1]))
        return pd.DataFrame(rows, columns=LOG_COLUMNS)

    def save_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format='%.6f', lineterminator='\n')

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, dt: float) -> 'TrajectoryLog':
        missing = set(LOG_COLUMNS) - set(frame.columns)
        if missing:
            raise ValidationError(f'trajectory log lacks columns {sorted(missing)}')
        scenario_ids = frame['scenario_id'].astype(str).unique()
        if len(scenario_ids) > 1:
            raise ValidationError('a trajectory log holds exactly one scenario')
        tracks = []
        for agent_id, rows in frame.sort_values(['agent_id', 'step']).groupby('agent_id', sort=True):
            tracks.append(AgentTrack(
                agent_id=int(agent_id),
                steps=rows['step'].to_numpy(dtype=np.int64),
                positions=rows[['x', 'y']].to_numpy(dtype=np.float64),
                velocities=rows[['vx', 'vy']].to_numpy(dtype=np.float64)))
        return cls(scenario_id=str(scenario_ids[0]) if len(scenario_ids) else '', dt=dt, tracks=tracks)

    @classmethod
    def load_csv(cls, path: Union[str, Path], dt: float) -> 'TrajectoryLog':
        return cls.from_frame(pd.read_csv(path, dtype={'scenario_id': str}), dt)


def initial_states(scenario: Scenario, config: SimConfig) -> Tuple[AgentState, ...]:
    states = []
    for task in scenario.tasks:
        arrived = task.spawn_step == 0 and norm(task.goal - task.start) <= config.arrival_tolerance
        states.append(AgentState(task.start, np.zeros(2), arrived, 0 if arrived else None))
    return tuple(states)


def step_world(scenario: Scenario, states: Sequence[AgentState], commands: Sequence[Optional[Vec2]],
               config: SimConfig, step: int = 0) -> Tuple[AgentState, ...]:
    """Advances every active agent by one step of its clamped commanded velocity.

    Collisions never alter motion; agents reaching their goal are marked arrived and frozen.
    """
    if len(states) != scenario.num_agents or len(commands) != len(states):
        raise DimensionMismatch(
            f'{len(states)} states and {len(commands)} commands for {scenario.num_agents} agents')
    snapshot = WorldSnapshot(scenario, tuple(states), step)
    result = []
    for i, (state, command) in enumerate(zip(states, commands)):
        task = scenario.tasks[i]
        if not snapshot.is_active(i):
            if task.spawn_step == step + 1 and norm(task.goal - state.position) <= config.arrival_tolerance:
                state = replace(state, arrived=True, arrival_step=step + 1)
            result.append(state)
            continue
        if command is None:
            raise DimensionMismatch(f'no command for active agent {i} at step {step}')
        velocity = clamp_norm(vec2(command), config.max_speed)
        position = state.position + velocity * config.dt
        if norm(task.goal - position) <= config.arrival_tolerance:
            result.append(AgentState(position, velocity, True, step + 1))
        else:
            result.append(AgentState(position, velocity))
    return tuple(result)


def run_simulation(scenario: Scenario, controller: Controller, config: SimConfig) -> TrajectoryLog:
    """Runs sense-all, decide-all, move-all steps until every agent arrived or T steps passed."""
    states = initial_states(scenario, config)
    rows: List[List[Tuple[int, Vec2, Vec2]]] = [[] for _ in scenario.tasks]
    last_spawn = max(task.spawn_step for task in scenario.tasks)
    step = 0
    for step in range(config.max_steps):
        snapshot = WorldSnapshot(scenario, states, step)
        active = snapshot.active_indices()
        if not active and step >= last_spawn:
            break
        observations = {}
        for i in active:
            try:
                observations[i] = controller.observe(snapshot, i)
            except CrowdgenError:
                raise
            except Exception as exc:
                raise DecisionError(i, step, exc) from exc
        decisions = controller.decide_all(observations, step, config.rng_seed)
        commands: List[Optional[Vec2]] = [None] * scenario.num_agents
        for i in active:
            commands[i] = clamp_norm(vec2(decisions[i]), config.max_speed)
            rows[i].append((step, states[i].position, commands[i]))
        states = step_world(scenario, states, commands, config, step)
    else:
        step = config.max_steps

    tracks = []
    for i, (task, state) in enumerate(zip(scenario.tasks, states)):
        agent_rows = rows[i]
        if agent_rows:
            final_step = state.arrival_step if state.arrived else step
            agent_rows.append((final_step, state.position, np.zeros(2)))
        elif task.spawn_step <= step:
            agent_rows.append((task.spawn_step, state.position, np.zeros(2)))
        tracks.append(AgentTrack(
            agent_id=i,
            steps=np.array([r[0] for r in agent_rows], dtype=np.int64),
            positions=np.array([r[1] for r in agent_rows]).reshape(-1, 2),
            velocities=np.array([r[2] for r in agent_rows]).reshape(-1, 2)))
    arrived = sum(state.arrived for state in states)
    logger.debug('scenario %s: %d/%d agents arrived after %d steps', scenario.id, arrived, len(states), step)
    return TrajectoryLog(scenario_id=scenario.id, dt=config.dt, tracks=tracks)


def log_snapshots(scenario: Scenario, log: TrajectoryLog) -> Iterator[Tuple[WorldSnapshot, Dict[int, Vec2]]]:
    """Replays a recorded log as (snapshot, commanded velocities of the active agents) per step.

    An agent is active at step t iff its track records a transition from t; its velocity state
    is the command it applied on the previous step.
    """
    if len(log.tracks) != scenario.num_agents:
        raise DimensionMismatch(f'log has {len(log.tracks)} tracks for {scenario.num_agents} agents')
    lookups = []
    for track in log.tracks:
        lookups.append({int(s): k for k, s in enumerate(track.steps)})
    transition_steps = sorted({int(s) for track in log.tracks for s in track.steps[:-1]})
    for step in transition_steps:
        states, actions = [], {}
        for i, (task, track, lookup) in enumerate(zip(scenario.tasks, log.tracks, lookups)):
            k = lookup.get(step)
            if k is None or k == len(track.steps) - 1:
                states.append(AgentState(task.goal, np.zeros(2), True, step))
                continue
            velocity = track.velocities[k - 1] if k > 0 else np.zeros(2)
            states.append(AgentState(track.positions[k], velocity))
            actions[i] = track.velocities[k]
        yield WorldSnapshot(scenario, tuple(states), step), actions
