"""Mutual-information skill discovery on tabular grid worlds.

Implements the OvA (VIC / DIAYN / tuned VIC) and all-pairs (average, min,
APART = min + ascending dropout) intrinsic-reward families on deterministic
10x10 grids, with a linear DQN and a linear discriminator trained from a
shared replay buffer.
"""

from .agent import Batch, QPolicy, ReplayBuffer, Transition, collect_rollout, disc_update, dqn_update, make_policy, select_action
from .discriminator import AP, OVA, CodeMatrix, DiscOutput, ap_class_scores, ap_loss_and_grad, ap_targets, build_code_matrix, ova_loss_and_grad, predict_class
from .grids import Action, GridEnv, ascii_art, build_env, encode_disc_obs, encode_rl_obs, step
from .harness import ExperimentConfig, PRESETS, echo_config, load_checkpoint, load_config, preset, run_experiment, run_single, save_checkpoint
from .metrics import EvalRecord, disc_accuracy_per_step, effective_skills, random_walk_baseline
from .nn import AdamState, LinearModel, adam_update, backward, forward, init_adam, init_linear, softmax_beta, tanh_vec
from .rewards import (ConfigError, RewardSpec, WeightFn, apply_dropout, ascending_weight,
                      compute_batch_rewards, reward_ap_average, reward_ap_min, reward_diayn,
                      reward_tuned_vic, reward_vic)

__version__ = "0.1.0"
