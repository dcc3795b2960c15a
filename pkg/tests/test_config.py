import json

import pytest

from crowdgen.errors import ValidationError
from crowdgen.harness import ExperimentConfig, ExperimentSpec, config_hash
from crowdgen.harness.config import ALL_KINDS, DataScale, canonical_json
from crowdgen.learning import PAPER_HIDDEN


def test_paper_scale_preset():
    config = ExperimentConfig.for_scale('paper')
    assert config.train.hidden_sizes == PAPER_HIDDEN == (100,) * 6
    assert config.train.bc_learning_rate == 1e-4
    assert config.train.gail_learning_rate == 1e-2
    assert config.train.exploration_std == 0.5
    assert config.train.entropy_weight == 0.0
    assert config.data.r_pairs == 1600000
    assert (config.data.g_train, config.data.g_test) == (4000, 100)
    assert config.data.x_test_kinds == ALL_KINDS
    assert config.data.x_test_densities == (10, 20, 30, 40, 50)
    assert config.gail_iterations('X') == 10000
    assert config.gail_iterations('G') == 6000


def test_desk_scale_is_the_default():
    assert ExperimentConfig.for_scale('desk') == ExperimentConfig()
    with pytest.raises(ValidationError):
        ExperimentConfig.for_scale('huge')


def test_hash_tracks_every_field():
    base = ExperimentConfig()
    assert config_hash(base) == config_hash(ExperimentConfig())
    assert len(config_hash(base)) == 64
    changed = base.merge({'train': {'bc_learning_rate': 5e-4}})
    assert changed.train.bc_learning_rate == 5e-4
    assert config_hash(changed) != config_hash(base)


def test_canonical_json_sorts_keys():
    assert canonical_json({'b': 1, 'a': [1, 2]}) == '{"a":[1,2],"b":1}'


@pytest.mark.parametrize('overrides', [
    {'learning_rate': 1.0},
    {'train': {'bogus': 1}},
    {'train': {'batch_size': 'large'}},
    {'train': {'batch_size': 2.5}},
    {'train': {'bc_warm_start': 1}},
    {'data': {'x_test_kinds': 'Evacuation1'}},
    {'data': {'x_test_kinds': ['Nowhere']}},
    {'sim': 3},
])
def test_merge_is_strict(overrides):
    with pytest.raises(ValidationError):
        ExperimentConfig().merge(overrides)


def test_merge_converts_lists_and_ints():
    config = ExperimentConfig().merge({'train': {'hidden_sizes': [8, 8], 'clip': 1},
                                       'generator': {'agent_count': [2, 3]}})
    assert config.train.hidden_sizes == (8, 8)
    assert config.train.clip == 1.0 and isinstance(config.train.clip, float)
    assert config.generator.agent_count == (2, 3)


def test_load_from_file(tmp_path):
    path = tmp_path / 'override.json'
    path.write_text(json.dumps({'data': {'g_train': 7}}))
    config = ExperimentConfig.load(path, 'paper')
    assert config.scale == 'paper'
    assert config.data.g_train == 7
    assert config.data.r_pairs == 1600000
    path.write_text('{not json')
    with pytest.raises(ValidationError):
        ExperimentConfig.load(path)


def test_data_scale_validation():
    with pytest.raises(ValidationError):
        DataScale(window=0.0)
    with pytest.raises(ValidationError):
        DataScale(g_train=-1)


@pytest.mark.parametrize('model_id, domain', [('BCA-X', 'G'), ('BCA-R', 'X'), ('RLA-G', 'X')])
def test_valid_specs(model_id, domain):
    spec = ExperimentSpec(model_id, domain)
    assert spec.paradigm + '-' + spec.train_domain == model_id


@pytest.mark.parametrize('kwargs', [
    {'model_id': 'RLA-R', 'test_domain': 'X'},
    {'model_id': 'BCA-Q', 'test_domain': 'X'},
    {'model_id': 'BCA-X', 'test_domain': 'R'},
    {'model_id': 'BCA-X', 'test_domain': 'real'},
    {'model_id': 'BCA-X', 'test_domain': 'real', 'real_csv': 'tracks.csv'},
    {'model_id': 'BCA-X', 'test_domain': 'X', 'scale': 'huge'},
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValidationError):
        ExperimentSpec(**kwargs)


def test_spec_serialises_only_its_inputs():
    spec = ExperimentSpec('BCA-G', 'X', seed=3)
    assert sorted(spec.to_dict()) == ['config_path', 'model_id', 'output_dir', 'real_csv', 'real_layout', 'scale',
                                      'seed', 'test_domain']
