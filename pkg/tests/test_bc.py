import numpy as np
import pytest
import torch

from crowdgen.errors import NonFiniteLoss, ValidationError
from crowdgen.learning import PolicyModel, TrainConfig, bc_train
from crowdgen.learning.bc import minibatches
from crowdgen.learning.networks import parameter_vector

CONFIG = TrainConfig(hidden_sizes=(16,), bc_learning_rate=1e-2, batch_size=64, log_interval=200)


def linear_target(count=512, seed=0):
    rng = np.random.default_rng(seed)
    features = rng.uniform(-1.0, 1.0, size=(count, 5))
    weights = rng.uniform(-0.5, 0.5, size=(5, 2))
    return features, features @ weights


def test_bc_fits_a_linear_map():
    features, actions = linear_target()
    policy, trace = bc_train(features, actions, CONFIG, iterations=1500)
    assert policy.deterministic
    assert len(trace.rows) == 1500
    assert np.mean(trace.values[-100:]) < 0.1 * np.mean(trace.values[:10])
    with torch.no_grad():
        prediction = policy(features).numpy()
    assert np.mean((prediction - actions) ** 2) < 0.01


def test_bc_is_seeded():
    features, actions = linear_target(64)
    a, _ = bc_train(features, actions, CONFIG, iterations=20)
    b, _ = bc_train(features, actions, CONFIG, iterations=20)
    assert torch.equal(parameter_vector(a), parameter_vector(b))


def test_bc_continues_from_a_given_policy():
    features, actions = linear_target(64)
    policy = PolicyModel.create((16,), feature_size=5)
    trained, _ = bc_train(features, actions, CONFIG, policy=policy, iterations=5)
    assert trained.mlp is policy.mlp


def test_bc_rejects_bad_datasets():
    with pytest.raises(ValidationError):
        bc_train(np.zeros((0, 5)), np.zeros((0, 2)), CONFIG, iterations=1)
    with pytest.raises(ValidationError):
        bc_train(np.zeros((4, 5)), np.zeros((3, 2)), CONFIG, iterations=1)


def test_bc_stops_on_non_finite_loss():
    features, actions = linear_target(16)
    actions[3] = np.nan
    with pytest.raises(NonFiniteLoss) as info:
        bc_train(features, actions, CONFIG, iterations=3)
    assert info.value.index == 0


def test_minibatches_cover_each_epoch():
    batches = list(minibatches(10, 4, 5, seed=0))
    assert [len(b) for b in batches] == [4, 4, 4, 4, 4]
    first_epoch = torch.cat(batches[:2])
    assert len(set(first_epoch.tolist())) == 8
    assert all(len(b) == 3 for b in minibatches(3, 8, 2, seed=0))
