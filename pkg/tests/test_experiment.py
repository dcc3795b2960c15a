import json

import numpy as np

import pandas as pd
import pytest

from crowdgen.errors import StageError, ValidationError
from crowdgen.harness import ExperimentConfig, ExperimentSpec, Manifest, repro, run_bidirectional
from crowdgen.harness.experiment import group_label, sim_config_for
from crowdgen.harness.repro import (CHECKS, DIRECTION_METRICS, PAPER_SETTINGS, SUITES, check_obstacle_contacts,
                                    check_paper_settings, check_segments, check_swept_contact, direction_rows,
                                    hard_failures, paper_snapshot, tiny_config)
from crowdgen.world import AgentTask, Scenario


def test_group_labels(open_scenario, wall_scenario):
    assert group_label(open_scenario) == 'Test-d2'
    assert group_label(wall_scenario) == 'G'


def test_real_windows_run_for_their_length():
    scenario = Scenario('w', (-5.0, -5.0, 5.0, 5.0), (), (AgentTask((0.0, 0.0), (1.0, 0.0)),), 'real',
                        meta={'window': 24.0})
    assert sim_config_for(scenario, ExperimentConfig()).max_steps == 240


def test_failed_stage_invalidates_artifacts(tmp_path):
    spec = ExperimentSpec('BCA-G', 'G', output_dir=str(tmp_path))
    manifest = Manifest(tmp_path / 'manifest.json', [spec], ExperimentConfig(), {'train': 0})
    with manifest.stage('train'):
        manifest.add_artifact(tmp_path / 'model.json')
    with pytest.raises(StageError) as info:
        with manifest.stage('evaluate'):
            raise ValidationError('broken')
    assert isinstance(info.value.cause, ValidationError)
    data = json.loads((tmp_path / 'manifest.json').read_text())
    assert data['stages'] == {'train': 'done', 'evaluate': 'failed'}
    assert data['artifacts'] == [{'path': str(tmp_path / 'model.json'), 'valid': False}]
    assert data['finished'] is not None
    assert len(data['config_hash']) == 64


def test_specs_ranked_together_must_agree(tmp_path):
    with pytest.raises(ValidationError):
        run_bidirectional([])
    with pytest.raises(ValidationError):
        run_bidirectional([ExperimentSpec('BCA-G', 'X', seed=0, output_dir=str(tmp_path)),
                           ExperimentSpec('RLA-G', 'X', seed=1, output_dir=str(tmp_path))])
    with pytest.raises(ValidationError):
        run_bidirectional([ExperimentSpec('BCA-G', 'X', output_dir=str(tmp_path))] * 2)


@pytest.mark.slow
def test_reduced_acceptance_run(tmp_path):
    table = repro(tmp_path, seed=0, config=tiny_config())
    assert list(table['check']) == list(CHECKS) + [f'bca_ahead_{m}' for m in DIRECTION_METRICS] + ['determinism']
    assert list(table['cases'][:len(CHECKS)]) == list(SUITES['reduced'].values())
    assert hard_failures(table) == 0
    assert table.loc[table['check'] == 'determinism', 'failures'].item() == 0
    written = pd.read_csv(tmp_path / 'checks.csv')
    assert list(written.columns) == ['check', 'cases', 'failures', 'soft']
    assert written['soft'].sum() == len(DIRECTION_METRICS)
    run_dir = tmp_path / 'bidirectional'
    ranks = pd.read_csv(run_dir / 'ranks.csv')
    assert sorted(ranks['model_id'].unique()) == ['BCA-G', 'RLA-G']
    metrics = pd.read_csv(run_dir / 'metrics.csv')
    assert len(metrics) == 2
    manifest = json.loads((run_dir / 'manifest.json').read_text())
    assert set(manifest['stages'].values()) == {'done'}
    assert all(artifact['valid'] for artifact in manifest['artifacts'])
    assert (run_dir / 'model-BCA-G.json').exists()


def test_suites_cover_every_check():
    assert all(list(counts) == list(CHECKS) for counts in SUITES.values())
    assert SUITES['full']['swept_contact'] == 1000
    assert SUITES['full']['agent_contacts'] == 500
    with pytest.raises(ValidationError):
        repro('unused', suite='huge')


def test_cheap_checks_pass():
    rng = np.random.default_rng(0)
    assert check_swept_contact(rng, 100) == 0
    assert check_segments(rng, 20) == 0
    assert check_obstacle_contacts(rng, 3) == 0
    assert check_paper_settings(rng, len(PAPER_SETTINGS)) == 0


def test_desk_preset_differs_from_the_published_settings():
    snapshot = paper_snapshot(ExperimentConfig.for_scale('desk'))
    assert snapshot['doorway_widths'] == (2.4, 1.4)
    assert snapshot['gail_iterations'] != PAPER_SETTINGS['gail_iterations']


def test_direction_rows_are_soft():
    ranks = pd.DataFrame([('BCA-G', 'dtw', 1.2), ('RLA-G', 'dtw', 1.8), ('BCA-G', 'aa', 1.6), ('RLA-G', 'aa', 1.4)],
                         columns=['model_id', 'metric', 'mean_rank'])
    rows = direction_rows(ranks)
    assert [(row['check'], row['failures']) for row in rows] == [('bca_ahead_dtw', 0), ('bca_ahead_aa', 1)]
    table = pd.DataFrame(rows + [{'check': 'dtw', 'cases': 10, 'failures': 2, 'soft': False}])
    assert hard_failures(table) == 2
