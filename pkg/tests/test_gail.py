import numpy as np
import pytest
import torch

from crowdgen.errors import ValidationError
from crowdgen.experts import expert_controller
from crowdgen.guidance import GlobalGuidance
from crowdgen.harness.repro import GRADIENT_TOLERANCE, gradient_errors
from crowdgen.learning import (Discriminator, PolicyModel, RolloutBatch, TrainConfig, advantages, build_optimizer,
                               discounted_returns, discriminator_objective, expert_pairs, gail_discriminator_step,
                               gail_policy_step, gail_train, rollout, surrogate)
from crowdgen.perception import FEATURE_SIZE
from crowdgen.world import SimConfig, run_simulation

SMALL = TrainConfig(hidden_sizes=(8,), scenarios_per_iteration=1, log_interval=1)


def random_batch(count=40, episodes=2, seed=0):
    rng = np.random.default_rng(seed)
    return RolloutBatch(features=rng.uniform(-1, 1, size=(count, FEATURE_SIZE)),
                        actions=rng.normal(size=(count, 2)),
                        noise=np.zeros((count, 2)),
                        episode=np.arange(count) % episodes,
                        agent=np.zeros(count, dtype=np.int64),
                        step=np.arange(count) // episodes)


@pytest.mark.filterwarnings('error')
def test_discriminator_step_ascends():
    discriminator = Discriminator(hidden=(8,), feature_size=3)
    rng = np.random.default_rng(1)
    policy_batch = (rng.normal(1.0, 0.1, size=(32, 3)), rng.normal(1.0, 0.1, size=(32, 2)))
    expert_batch = (rng.normal(-1.0, 0.1, size=(32, 3)), rng.normal(-1.0, 0.1, size=(32, 2)))
    with torch.no_grad():
        before = float(discriminator_objective(discriminator, policy_batch, expert_batch))
    rule = build_optimizer(discriminator, 1e-2)
    after = [gail_discriminator_step(discriminator, policy_batch, expert_batch, rule) for _ in range(20)]
    assert after[-1] > before
    with torch.no_grad():
        assert float(discriminator(*policy_batch).mean()) > float(discriminator(*expert_batch).mean())


def test_discriminator_step_needs_data():
    discriminator = Discriminator(hidden=(4,), feature_size=3)
    empty = (np.zeros((0, 3)), np.zeros((0, 2)))
    full = (np.zeros((2, 3)), np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        gail_discriminator_step(discriminator, empty, full, build_optimizer(discriminator, 1e-2))


def test_discounted_returns_follow_each_trajectory():
    rewards = np.array([1.0, 10.0, 1.0, 10.0, 1.0])
    episode = np.zeros(5, dtype=np.int64)
    agent = np.array([0, 1, 0, 1, 0])
    # rows of agent 0 are out of step order
    step = np.array([2, 0, 0, 1, 1])
    returns = discounted_returns(rewards, episode, agent, step, 0.5)
    np.testing.assert_allclose(returns, [1.0, 15.0, 1.75, 10.0, 1.5])


def test_advantages_are_centred_per_episode():
    returns = np.array([1.0, 3.0, 11.0, 13.0])
    episode = np.array([0, 0, 1, 1])
    adv = advantages(returns, episode)
    np.testing.assert_allclose(adv, [-1.0, 1.0, -1.0, 1.0])
    np.testing.assert_allclose(advantages(np.ones(3), np.zeros(3)), 0.0)


def test_surrogate_at_the_old_policy_is_the_mean_advantage():
    policy = PolicyModel.create((4,), feature_size=3)
    features, actions = torch.randn(6, 3, dtype=torch.float64), torch.randn(6, 2, dtype=torch.float64)
    adv = torch.arange(6, dtype=torch.float64)
    with torch.no_grad():
        old = policy.log_prob(features, actions)
        value = surrogate(policy, features, actions, old, adv, clip=0.2)
        bonus = surrogate(policy, features, actions, old, adv, clip=0.2, entropy_weight=0.1)
    assert float(value) == pytest.approx(2.5)
    assert float(bonus - value) == pytest.approx(0.1 * float(policy.entropy()))


@pytest.mark.parametrize('seed', range(5))
def test_objective_gradients_match_finite_differences(seed):
    errors = gradient_errors(np.random.default_rng(seed))
    assert sorted(errors) == ['discriminator', 'mlp', 'surrogate']
    assert max(errors.values()) < GRADIENT_TOLERANCE


@pytest.mark.filterwarnings('error')
def test_policy_step_respects_the_kl_bound():
    batch = random_batch()
    policy = PolicyModel.create((8,), sigma=0.5, seed=3)
    discriminator = Discriminator(hidden=(8,))
    config = TrainConfig(clip=0.1)
    # an oversized learning rate forces backtracking
    diagnostics = gail_policy_step(policy, batch, discriminator, config, build_optimizer(policy, 1.0))
    assert diagnostics['kl'] <= config.max_kl + 1e-12
    assert diagnostics['backtracks'] >= 1


def test_policy_step_needs_a_batch():
    policy = PolicyModel.create((4,))
    with pytest.raises(ValidationError):
        gail_policy_step(policy, RolloutBatch.empty(), Discriminator((4,)), SMALL, build_optimizer(policy, 1e-2))


def test_expert_pairs_match_the_log(open_scenario):
    config = SimConfig(max_steps=20)
    log = run_simulation(open_scenario, expert_controller(open_scenario, config), config)
    features, actions = expert_pairs(open_scenario, log, GlobalGuidance())
    assert features.shape == (log.num_transitions, FEATURE_SIZE)
    expected = np.concatenate([track.velocities[:-1] for track in log.tracks])
    np.testing.assert_allclose(np.sort(actions, axis=0), np.sort(expected, axis=0))


def test_rollout_records_every_decision(open_scenario):
    policy = PolicyModel.create((8,), sigma=0.3)
    config = SimConfig(max_steps=5)
    _, batch = rollout([open_scenario], policy, GlobalGuidance(), config, seed=4)
    assert len(batch) == 10
    assert set(batch.agent) == {0, 1}
    assert np.any(batch.noise != 0)
    _, again = rollout([open_scenario], policy, GlobalGuidance(), config, seed=4)
    np.testing.assert_array_equal(batch.actions, again.actions)
    _, quiet = rollout([open_scenario], policy.as_deterministic(), GlobalGuidance(), config, seed=4)
    assert np.all(quiet.noise == 0)


def test_rollout_guidance_count_must_match(open_scenario):
    with pytest.raises(ValidationError):
        rollout([open_scenario], PolicyModel.create((4,)), [GlobalGuidance(), GlobalGuidance()])


def test_gail_train_runs(open_scenario):
    sim = SimConfig(max_steps=8)
    log = run_simulation(open_scenario, expert_controller(open_scenario, sim), sim)
    policy, trace = gail_train([open_scenario], [log], [GlobalGuidance()], SMALL, sim, iterations=2)
    assert policy.deterministic
    assert trace.column('iteration') == [0, 1]
    frame = trace.to_frame()
    assert list(frame.columns) == ['iteration', 'objective', 'mean_reward', 'kl', 'backtracks']
    assert np.all(np.isfinite(frame.to_numpy(dtype=np.float64)))


def test_gail_train_validates_inputs(open_scenario):
    with pytest.raises(ValidationError):
        gail_train([open_scenario], [], [GlobalGuidance()], SMALL, iterations=1)
