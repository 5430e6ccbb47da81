"""Fee function and the miner-side win probabilities and reward functions.

Two reward flavors: the naive reward ignores the adversary entirely and is
maximized by stuffing the block with the maximum transaction value; the
adversary-aware reward discounts the win probability by the chance that a
profitable double-spend voids the block's rewards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attack import (
    EconomicContext,
    RaceParams,
    attack_decision,
    attack_decision_smooth,
    success_probability,
)

__all__ = [
    "FeePolicy",
    "MinerAction",
    "fee",
    "win_prob_naive",
    "reward_naive",
    "win_prob_aware",
    "reward_aware",
]


@dataclass(frozen=True)
class FeePolicy:
    """Transaction fee as a function of the block's transaction value.

    kind="proportional": fee = rate * tx_value (rate is the fee fraction).
    kind="constant":     fee = flat_fee regardless of tx_value.
    """

    kind: str = "proportional"
    rate: float = 0.01
    flat_fee: float = 0.0

    def __post_init__(self):
        if self.kind not in ("proportional", "constant"):
            raise ValueError(f"fee kind must be 'proportional' or 'constant', got {self.kind!r}")
        if self.rate < 0:
            raise ValueError(f"fee rate must be >= 0, got {self.rate}")
        if self.flat_fee < 0:
            raise ValueError(f"flat_fee must be >= 0, got {self.flat_fee}")

    def __call__(self, tx_value):
        if self.kind == "proportional":
            return self.rate * tx_value
        # constant fee is independent of the transferred value
        if np.ndim(tx_value) == 0:
            return self.flat_fee
        return np.full(np.shape(tx_value), self.flat_fee)


@dataclass(frozen=True)
class MinerAction:
    """One miner's choice for a round: mining power and block transaction value."""

    alpha: float
    tx_value: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.tx_value < 0:
            raise ValueError(f"tx_value must be >= 0, got {self.tx_value}")


def fee(policy: FeePolicy, tx_value: float) -> float:
    """Fee paid by a block carrying tx_value under the given policy."""
    if tx_value < 0:
        raise ValueError(f"tx_value must be >= 0, got {tx_value}")
    return policy(tx_value)


def win_prob_naive(mean_alpha: float, num_miners: int, alpha: float) -> float:
    """Probability a miner playing alpha wins the round against the field."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    total = alpha + num_miners * mean_alpha
    if total <= 0:
        raise ValueError("alpha + num_miners * mean_alpha must be positive")
    return alpha / total


def reward_naive(
    mean_alpha: float,
    num_miners: int,
    action: MinerAction,
    block_reward: float,
    cost_per_power: float,
    policy: FeePolicy,
) -> float:
    """Expected round reward ignoring the adversary.

    Monotone non-decreasing in tx_value, so its argmax over transaction
    values is always the cap.
    """
    gamma = win_prob_naive(mean_alpha, num_miners, action.alpha)
    return gamma * (block_reward + fee(policy, action.tx_value)) - action.alpha * cost_per_power


def _adversary_context(
    mean_alpha, num_miners, action, block_reward, cost_per_power, policy
) -> EconomicContext:
    return EconomicContext(
        mean_alpha=mean_alpha,
        num_miners=num_miners,
        cost_per_power=cost_per_power,
        block_reward=block_reward,
        tx_value=action.tx_value,
        fee=fee(policy, action.tx_value),
    )


def win_prob_aware(
    mean_alpha: float,
    num_miners: int,
    action: MinerAction,
    race: RaceParams,
    block_reward: float,
    cost_per_power: float,
    policy: FeePolicy,
    decision: str = "hard",
    sharpness: float = 1.0,
) -> float:
    """Win probability discounted by the chance of a successful double-spend.

    decision="hard" uses the exact attack decision; decision="smooth" uses the
    sigmoid relaxation (the solver's choice).
    """
    gamma = win_prob_naive(mean_alpha, num_miners, action.alpha)
    ctx = _adversary_context(mean_alpha, num_miners, action, block_reward, cost_per_power, policy)
    if decision == "hard":
        a = float(attack_decision(race, ctx))
    elif decision == "smooth":
        a = attack_decision_smooth(race, ctx, sharpness)
    else:
        raise ValueError(f"decision must be 'hard' or 'smooth', got {decision!r}")
    return (1.0 - success_probability(race) * a) * gamma


def reward_aware(
    mean_alpha: float,
    num_miners: int,
    action: MinerAction,
    race: RaceParams,
    block_reward: float,
    cost_per_power: float,
    policy: FeePolicy,
    decision: str = "hard",
    sharpness: float = 1.0,
) -> float:
    """Expected round reward accounting for the double-spend threat.

    Unlike the naive reward this does not always grow with tx_value: past the
    adversary's break-even point the win probability collapses.
    """
    gamma = win_prob_aware(
        mean_alpha, num_miners, action, race, block_reward, cost_per_power, policy,
        decision=decision, sharpness=sharpness,
    )
    return gamma * (block_reward + fee(policy, action.tx_value)) - action.alpha * cost_per_power
