import math

import pytest
import torch
import torch.nn as nn

from crowdgen.errors import DegenerateKernel, ValidationError
from crowdgen.learning import KFAC, Mlp, TrainConfig, build_optimizer, compute_gradients
from crowdgen.learning.kfac import KroneckerFactor, PassRecorder
from crowdgen.learning.optim import KfacRule, RmsPropRule
from crowdgen.utils import cholesky_factor, compute_cov, compute_pi_adjusted_damping


def scalar_model(value=1.0):
    model = nn.Linear(1, 1, bias=False, dtype=torch.float64)
    with torch.no_grad():
        model.weight.fill_(value)
    return model


def test_rmsprop_single_step():
    model = scalar_model()
    rule = build_optimizer(model, 0.01)
    assert isinstance(rule, RmsPropRule)
    loss = compute_gradients(rule, lambda: 2.0 * model.weight.sum())
    assert not loss.requires_grad
    assert float(loss) == 2.0
    rule.step()
    # mean square 0.1 * 2^2, epsilon outside the square root
    expected = 1.0 - 0.01 * 2.0 / (math.sqrt(0.4) + 1e-8)
    assert float(model.weight) == pytest.approx(expected, rel=1e-12)


def test_zero_gradient_leaves_parameters():
    model = scalar_model(0.5)
    rule = build_optimizer(model, 0.01)
    compute_gradients(rule, lambda: 0.0 * model.weight.sum())
    rule.step()
    assert float(model.weight) == 0.5


def test_unknown_optimizer():
    with pytest.raises(ValidationError):
        TrainConfig(optimizer='adam')


def regression_problem(seed=0):
    generator = torch.Generator().manual_seed(seed)
    x = torch.randn(128, 3, generator=generator, dtype=torch.float64)
    target = x @ torch.tensor([[1.0, -2.0], [0.5, 0.0], [0.0, 1.5]], dtype=torch.float64)
    return x, target


def test_kfac_reduces_regression_loss():
    x, target = regression_problem()
    model = Mlp([3, 8, 2], seed=2)
    rule = build_optimizer(model, 0.1, TrainConfig(optimizer='kfac'))
    assert isinstance(rule, KfacRule)
    losses = []
    for _ in range(50):
        loss = compute_gradients(rule, lambda: ((model(x) - target) ** 2).mean())
        rule.step()
        losses.append(float(loss))
    assert losses[-1] < 0.8 * losses[0]
    assert rule.kfac.counter == 50


def test_kfac_ignores_untracked_passes():
    x, target = regression_problem(1)
    model = Mlp([3, 4, 2])
    kfac = KFAC(model, 0.1)
    loss = ((model(x) - target) ** 2).mean()
    loss.backward()
    kfac.step()
    # no statistics were recorded, so every block is still empty
    assert not any(block.is_ready for block in kfac.blocks)
    assert kfac.track_forward.recorded == 0


def one_kfac_step(norm_constraint):
    x, target = regression_problem(2)
    model = Mlp([3, 2], seed=4)
    kfac = KFAC(model, 1.0, momentum=0.0, norm_constraint=norm_constraint)
    before = torch.cat([p.detach().clone().reshape(-1) for p in model.parameters()])
    kfac.zero_grad()
    with kfac.track_forward():
        loss = ((model(x) - target) ** 2).mean()
    with kfac.track_backward():
        loss.backward()
    kfac.step()
    return torch.cat([p.detach().reshape(-1) for p in model.parameters()]) - before


def test_kfac_norm_constraint_shrinks_the_update():
    free, bounded = one_kfac_step(None), one_kfac_step(1e-6)
    ratio = float(bounded.norm() / free.norm())
    assert 0 < ratio < 1
    torch.testing.assert_close(bounded, ratio * free)


def test_kronecker_factor_decays_old_batches():
    factor = KroneckerFactor(1, torch.float64)
    assert not factor.ready
    factor.observe(torch.tensor([[2.0], [0.0]], dtype=torch.float64), decay=0.5)
    factor.observe(torch.tensor([[2.0], [2.0]], dtype=torch.float64), decay=0.5)
    # second moments 2 and 4: (0.5 * 2 + 4) / (0.5 + 1)
    assert float(factor.value) == pytest.approx(10.0 / 3.0)
    assert factor.batches == 2
    factor.reset()
    assert not factor.ready


def test_pass_recorder_is_not_reentrant():
    recorder = PassRecorder('forward')
    with recorder():
        assert recorder
        with pytest.raises(AssertionError):
            with recorder():
                pass
    assert not recorder
    assert recorder.recorded == 1


def test_cholesky_factor_rejects_indefinite_matrices():
    with pytest.raises(DegenerateKernel):
        cholesky_factor(torch.tensor([[1.0, 2.0], [2.0, 1.0]], dtype=torch.float64))
    factor = cholesky_factor(torch.eye(2, dtype=torch.float64), jitter=3.0)
    torch.testing.assert_close(factor, 2.0 * torch.eye(2, dtype=torch.float64))


def test_second_moment_and_damping_split():
    rows = torch.tensor([[1.0, 0.0], [1.0, 2.0]], dtype=torch.float64)
    torch.testing.assert_close(compute_cov(rows), torch.tensor([[1.0, 1.0], [1.0, 2.0]], dtype=torch.float64))
    left, right = torch.eye(2, dtype=torch.float64) * 4, torch.eye(3, dtype=torch.float64)
    a, b = compute_pi_adjusted_damping(left, right, torch.tensor(0.1, dtype=torch.float64))
    assert float(a * b) == pytest.approx(0.01)
    assert float(a / b) == pytest.approx(4.0)
