import json

import numpy as np
import pandas as pd
import pytest

from crowdgen.errors import MalformedRow, ValidationError
from crowdgen.geometry import Polygon
from crowdgen.harness import export_windows, ingest_trajectories
from crowdgen.harness.ingest import read_layout, read_samples, resample, window_scenario, window_starts, window_steps
from crowdgen.world import Scenario, TrajectoryLog

BOUNDS = (-25.0, -10.0, 25.0, 10.0)


def write_layout(path, obstacles=()):
    path.write_text(json.dumps({'bounds': list(BOUNDS), 'obstacles': [o.vertices.tolist() for o in obstacles]}))
    return path


def walkers(times):
    rows = [(0, t, -20.0 + 0.5 * t, 0.0) for t in times] + [(1, t, 20.0 - 0.5 * t, 5.0) for t in times]
    return pd.DataFrame(rows, columns=['agent_id', 't', 'x', 'y'])


def write_tracks(path, frame):
    frame.to_csv(path, index=False)
    return path


def test_window_starts():
    assert window_starts(0.0, 600.0, 240.0, 120.0) == [0.0, 120.0, 240.0, 360.0]
    assert window_starts(0.0, 100.0, 240.0, 120.0) == []
    with pytest.raises(ValidationError):
        window_starts(0.0, 10.0, 0.0, 1.0)


def test_sliding_windows(tmp_path):
    csv_path = write_tracks(tmp_path / 'plaza.csv', walkers(np.arange(0.0, 61.0)))
    windows = ingest_trajectories(csv_path, write_layout(tmp_path / 'layout.json'), window=24.0, stride=12.0)
    assert [s.id for s, _ in windows] == ['plaza-w0', 'plaza-w1', 'plaza-w2', 'plaza-w3']
    scenario, log = windows[1]
    assert scenario.domain_tag == 'real'
    assert scenario.meta == {'window_start': 12.0, 'window': 24.0, 'source_ids': [0, 1]}
    np.testing.assert_allclose(scenario.tasks[0].start, [-14.0, 0.0])
    np.testing.assert_allclose(scenario.tasks[0].goal, [-2.0, 0.0])
    assert len(log.track(0).steps) == 241
    log.check_consistency()
    assert window_steps(scenario.meta, 0.1) == 240


def test_empty_windows_are_skipped(tmp_path):
    times = np.concatenate([np.arange(0.0, 11.0), np.arange(40.0, 61.0)])
    csv_path = write_tracks(tmp_path / 'gappy.csv', walkers(times))
    windows = ingest_trajectories(csv_path, write_layout(tmp_path / 'layout.json'), window=12.0, stride=12.0)
    assert [s.id for s, _ in windows] == ['gappy-w0', 'gappy-w3', 'gappy-w4']


def test_agents_inside_obstacles_are_dropped():
    samples = {0: np.array([[0.0, -5.0, 0.0], [10.0, 5.0, 0.0]]),
               1: np.array([[0.0, 0.0, 5.0], [10.0, 0.0, 5.2]])}
    pillar = Polygon.rectangle(-1.0, 4.0, 1.0, 6.0)
    scenario, log = window_scenario('w', 0, 0.0, 10.0, samples, BOUNDS, (pillar,), 0.1, 0.5)
    assert scenario.num_agents == 1
    assert scenario.meta['source_ids'] == [0]
    assert [track.agent_id for track in log.tracks] == [0]


def test_late_and_clashing_agents():
    samples = {0: np.array([[0.0, 0.0, 0.0], [10.0, 5.0, 0.0]]),
               1: np.array([[0.0, 0.3, 0.0], [10.0, 5.0, 3.0]]),
               2: np.array([[5.0, -5.0, -5.0], [10.0, -5.0, 0.0]])}
    scenario, log = window_scenario('w', 0, 0.0, 10.0, samples, BOUNDS, (), 0.1, 0.5)
    assert scenario.meta['source_ids'] == [0, 2]
    assert scenario.tasks[1].spawn_step == 50
    assert log.track(1).steps[0] == 50


def test_resample_inside_the_window():
    samples = np.array([[0.95, 0.0, 0.0], [2.05, 1.1, 0.0]])
    first, positions = resample(samples, 0.0, 10.0, 0.5)
    assert first == 2
    np.testing.assert_allclose(positions[:, 0], [0.05, 0.55, 1.05])
    assert resample(samples[:1], 0.0, 10.0, 0.5)[1].shape == (0, 2)


def test_trajectory_log_input(tmp_path):
    frame = pd.DataFrame([('s', 0, 0, 1.0, 2.0, 0.0, 0.0), ('s', 0, 3, 1.5, 2.0, 0.0, 0.0)],
                         columns=['scenario_id', 'agent_id', 'step', 'x', 'y', 'vx', 'vy'])
    path = write_tracks(tmp_path / 'log.csv', frame)
    samples = read_samples(path, dt=0.5)
    np.testing.assert_allclose(samples[0], [[0.0, 1.0, 2.0], [1.5, 1.5, 2.0]])


def test_malformed_rows_report_their_line(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('agent_id,t,x,y\n0,0.0,1.0,1.0\n0,1.0,abc,1.0\n')
    with pytest.raises(MalformedRow) as info:
        read_samples(path)
    assert info.value.line == 3
    path.write_text('id,time,x,y\n')
    with pytest.raises(MalformedRow) as info:
        read_samples(path)
    assert info.value.line == 1
    path.write_text('agent_id,t,x,y\n0,0.0,1.0\n')
    with pytest.raises(MalformedRow) as info:
        read_samples(path)
    assert info.value.line == 2


def test_field_count_and_integral_ids_are_checked(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('agent_id,t,x,y\n0,0.0,1.0,1.0\n0,1.0,1.0,1.0,7\n')
    with pytest.raises(MalformedRow) as info:
        read_samples(path)
    assert info.value.line == 3
    path.write_text('agent_id,t,x,y\n0,0.0,1.0,1.0\n1.5,1.0,1.0,1.0\n')
    with pytest.raises(MalformedRow) as info:
        read_samples(path)
    assert info.value.line == 3
    path.write_text('')
    with pytest.raises(MalformedRow) as info:
        read_samples(path)
    assert info.value.line == 1


def test_padded_cells_are_read(tmp_path):
    path = tmp_path / 'padded.csv'
    path.write_text('agent_id, t, x, y\n3, 0.5, 1.0, -1.0\n3, 0.0, 0.0, 0.0\n')
    samples = read_samples(path)
    assert list(samples) == [3]
    np.testing.assert_allclose(samples[3], [[0.0, 0.0, 0.0], [0.5, 1.0, -1.0]])


def test_repeated_timestamps(tmp_path):
    path = tmp_path / 'twice.csv'
    path.write_text('agent_id,t,x,y\n0,1.0,0.0,0.0\n0,1.0,1.0,0.0\n')
    with pytest.raises(ValidationError):
        read_samples(path)


def test_malformed_layout(tmp_path):
    path = tmp_path / 'layout.json'
    path.write_text(json.dumps({'obstacles': []}))
    with pytest.raises(ValidationError):
        read_layout(path)


def test_export_windows(tmp_path):
    csv_path = write_tracks(tmp_path / 'plaza.csv', walkers(np.arange(0.0, 25.0)))
    windows = ingest_trajectories(csv_path, write_layout(tmp_path / 'layout.json'), window=24.0, stride=12.0)
    paths = export_windows(windows, tmp_path / 'out')
    assert [p.name for p in paths] == ['plaza-w0.json']
    scenario = Scenario.load(paths[0])
    assert scenario.to_dict() == windows[0][0].to_dict()
    log = TrajectoryLog.load_csv(tmp_path / 'out' / 'plaza-w0.csv', 0.1)
    np.testing.assert_allclose(log.track(1).positions, windows[0][1].track(1).positions, atol=1e-6)
