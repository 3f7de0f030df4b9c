"""Desk-scale group-relative policy optimization over the synthetic world.

The policy is tabular: one softmax row of action logits per skill, so the
clipped surrogate objective, its gradient, and the KL penalty against the
reference policy are all available in closed form.  The KL term is computed
exactly over the discrete action space rather than estimated from samples,
which removes estimator noise from gradient checks.

Rewards are the verifiable kind: the proxy policy cannot be malformed, so the
format component is always 1 and the total is ``2 * exact_match + 1`` under
the default weights.  That is an affine shift of the 0/1 match signal and
leaves group-normalized advantages unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, GroupTooSmall, SupportMismatch
from .mixtures import MixtureWeights
from .records import PerformanceRecord
from .rewards import RewardWeights, combined_reward
from .sampler import init as sampler_init
from .sampler import next_sample
from .world import SyntheticWorld, benchmark_scores

# Offset separating the trainer's action-sampling stream from the data
# sampler's stream for the same run seed.
ACTION_STREAM_OFFSET = 1


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 6
    clip_epsilon: float = 0.2
    kl_coeff: float = 0.04
    peak_learning_rate: float = 0.1
    warmup_fraction: float = 0.1
    steps: int = 500
    inner_epochs: int = 1
    reward_weights: RewardWeights = field(default_factory=RewardWeights)

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip_epsilon must lie in (0, 1)")
        if self.kl_coeff < 0.0:
            raise ValueError("kl_coeff must be >= 0")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must lie in [0, 1)")
        if self.inner_epochs < 1:
            raise ValueError("inner_epochs must be >= 1")


@dataclass(frozen=True)
class PolicyParams:
    """Tabular softmax policy: theta[skill] are the action logits for a skill."""

    theta: np.ndarray

    @classmethod
    def zeros(cls, k: int, n_actions: int) -> "PolicyParams":
        return cls(theta=np.zeros((k, n_actions)))

    @property
    def n_actions(self) -> int:
        return int(self.theta.shape[1])

    def action_dist(self, skill: int) -> np.ndarray:
        return softmax(self.theta[skill])


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def group_advantages(rewards: Sequence[float]) -> np.ndarray:
    """Group-normalized rewards: (r - mean) / population std; zeros at zero spread.

    The spread check is exact on the raw rewards: with all rewards equal the
    computed mean can land one ulp off and leave a spurious tiny std.
    """
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise GroupTooSmall(f"need a group of at least 2 rewards, got {r.size}")
    if r.max() == r.min():
        return np.zeros_like(r)
    mean = r.mean()
    std = math.sqrt(float(((r - mean) ** 2).mean()))
    if std == 0.0:  # spread too small for the variance to survive squaring
        return np.zeros_like(r)
    return (r - mean) / std


def clipped_term(ratio: float, advantage: float, epsilon: float) -> float:
    """min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)."""
    clipped = min(max(ratio, 1.0 - epsilon), 1.0 + epsilon)
    return min(ratio * advantage, clipped * advantage)


def categorical_kl(p: Sequence[float], q: Sequence[float]) -> float:
    """Exact KL(p || q) over a discrete action space."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise SupportMismatch(f"distributions differ in size: {p.shape} vs {q.shape}")
    mask = p > 0.0
    if (q[mask] <= 0.0).any():
        raise SupportMismatch("q has zero mass where p is positive")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


@dataclass(frozen=True)
class TrajectoryGroup:
    """G sampled actions for one task with everything the objective needs."""

    skill: int
    gold: int
    actions: np.ndarray
    rewards: np.ndarray
    advantages: np.ndarray
    logp_theta: np.ndarray
    logp_old: np.ndarray
    logp_ref: np.ndarray
    dist_theta: np.ndarray
    dist_old: np.ndarray
    dist_ref: np.ndarray

    @property
    def size(self) -> int:
        return int(self.actions.shape[0])


def build_group(
    policy: PolicyParams,
    old_policy: PolicyParams,
    ref_policy: PolicyParams,
    skill: int,
    gold: int,
    actions: np.ndarray,
    config: GrpoConfig,
) -> TrajectoryGroup:
    """Assemble a trajectory group for fixed sampled actions.

    Separating action sampling from group construction lets the objective be
    re-evaluated at perturbed parameters (finite-difference checks, inner
    epochs) without touching the sampled actions.
    """
    dist_theta = policy.action_dist(skill)
    dist_old = old_policy.action_dist(skill)
    dist_ref = ref_policy.action_dist(skill)
    rewards = np.array([
        combined_reward(1, accuracy=int(a == gold), weights=config.reward_weights).total
        for a in actions
    ])
    return TrajectoryGroup(
        skill=skill,
        gold=gold,
        actions=np.asarray(actions),
        rewards=rewards,
        advantages=group_advantages(rewards),
        logp_theta=np.log(dist_theta[actions]),
        logp_old=np.log(dist_old[actions]),
        logp_ref=np.log(dist_ref[actions]),
        dist_theta=dist_theta,
        dist_old=dist_old,
        dist_ref=dist_ref,
    )


def sample_actions(
    old_policy: PolicyParams,
    skill: int,
    config: GrpoConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    dist = old_policy.action_dist(skill)
    return rng.choice(old_policy.n_actions, size=config.group_size, p=dist)


def grpo_objective(group: TrajectoryGroup, config: GrpoConfig) -> float:
    """Mean clipped surrogate minus the KL penalty for one group."""
    ratios = np.exp(group.logp_theta - group.logp_old)
    surrogate = [
        clipped_term(float(r), float(a), config.clip_epsilon)
        for r, a in zip(ratios, group.advantages)
    ]
    kl = categorical_kl(group.dist_theta, group.dist_ref)
    return float(np.mean(surrogate)) - config.kl_coeff * kl


def objective_row_gradient(group: TrajectoryGroup, config: GrpoConfig) -> np.ndarray:
    """Analytic gradient of the objective w.r.t. the task skill's logit row.

    For the clipped surrogate, gradient flows through sample i only while the
    unclipped term attains the min; there
    d(ratio)/d(theta_b) = ratio * (onehot(a_i)_b - p_b).  For the exact KL,
    d(KL)/d(theta_b) = p_b * (log(p_b / q_b) - KL).  Rows of skills other
    than the task's have zero gradient.
    """
    p = group.dist_theta
    q = group.dist_ref
    ratios = np.exp(group.logp_theta - group.logp_old)
    grad = np.zeros_like(p)
    for i in range(group.size):
        ratio = float(ratios[i])
        advantage = float(group.advantages[i])
        clipped = min(max(ratio, 1.0 - config.clip_epsilon), 1.0 + config.clip_epsilon)
        if ratio * advantage <= clipped * advantage:
            onehot = np.zeros_like(p)
            onehot[group.actions[i]] = 1.0
            grad += advantage * ratio * (onehot - p)
    grad /= group.size
    if config.kl_coeff > 0.0:
        kl = categorical_kl(p, q)
        grad -= config.kl_coeff * p * (np.log(p / q) - kl)
    return grad


def learning_rate_at(step: int, config: GrpoConfig) -> float:
    """Linear warm-up to the peak over the first warmup fraction, then linear decay.

    The schedule spans ``config.steps`` planned steps; runs stopped early by
    pool exhaustion simply never reach the tail of the decay.
    """
    warmup = max(1, math.ceil(config.warmup_fraction * config.steps))
    if step < warmup:
        return config.peak_learning_rate * (step + 1) / warmup
    remaining = max(1, config.steps - warmup)
    return config.peak_learning_rate * (config.steps - step) / remaining


def grpo_step(
    policy: PolicyParams,
    task: tuple[int, int],
    config: GrpoConfig,
    rng: np.random.Generator,
    ref_policy: PolicyParams,
    step: int = 0,
) -> PolicyParams:
    """One update: sample a group from the step-start snapshot, ascend the gradient.

    The snapshot refreshes every step, so ratios start at 1; with
    ``inner_epochs > 1`` additional passes reuse the same group and exercise
    the clipping path as ratios drift.
    """
    skill, gold = task
    old_policy = policy
    actions = sample_actions(old_policy, skill, config, rng)
    lr = learning_rate_at(step, config)
    theta = policy.theta
    for _ in range(config.inner_epochs):
        group = build_group(PolicyParams(theta), old_policy, ref_policy, skill, gold, actions, config)
        gradient = objective_row_gradient(group, config)
        theta = theta.copy()
        theta[skill] += lr * gradient
    return PolicyParams(theta)


def train_with_mixture(
    world: SyntheticWorld,
    weights: MixtureWeights,
    config: GrpoConfig,
    seed: int,
    record_id: str | None = None,
) -> PerformanceRecord:
    """Run the sampler stream through GRPO updates and score the final policy.

    Deterministic per (world, weights, config, seed): the data sampler seeds
    with ``seed`` and action sampling with ``seed + ACTION_STREAM_OFFSET``.
    Training ends at the step budget or the first time a drawn domain's pool
    is exhausted, whichever comes first.
    """
    if weights.m != world.m:
        raise DimensionMismatch(f"{weights.m} weights for a world with {world.m} domains")
    state = sampler_init(world.catalog(), weights, seed=seed)
    rng = np.random.default_rng(seed + ACTION_STREAM_OFFSET)

    policy = PolicyParams.zeros(world.k, world.A)
    ref_policy = policy
    steps_taken = 0
    while steps_taken < config.steps:
        drawn = next_sample(state)
        if drawn is None:
            break
        domain, item = drawn
        task = world.task(domain, item)
        policy = grpo_step(policy, task, config, rng, ref_policy, step=steps_taken)
        steps_taken += 1

    scores = benchmark_scores(world, policy.theta)
    labels = weights.dataset_labels()
    if record_id is None:
        digits = "".join(str(label) for label in labels) or "none"
        record_id = f"mix{digits}-s{seed}"
    return PerformanceRecord(
        id=record_id,
        datasets=labels,
        weights=weights,
        scores=scores,
        step=steps_taken,
    )
