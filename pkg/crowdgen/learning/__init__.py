from .networks import (ACTION_SIZE, DESK_HIDDEN, PAPER_HIDDEN, Discriminator, Mlp, MlpParams, PolicyModel,
                       load_policy, mlp_forward, save_policy)
from .config import TrainConfig, TrainTrace
from .kfac import KFAC
from .optim import build_optimizer, compute_gradients
from .bc import bc_train
from .rollout import PolicyController, RolloutBatch, rollout
from .gail import (advantages, discounted_returns, discriminator_objective, expert_pairs, gail_discriminator_step,
                   gail_policy_step, gail_train, surrogate)
