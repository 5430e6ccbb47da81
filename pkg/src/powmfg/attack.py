"""Double-spend race model and adversary attack economics.

The race is a 2-D Markov chain over (honest blocks, adversary blocks): each
step the adversary mines with probability beta and the honest network with
probability 1 - beta; whoever reaches k+1 blocks first wins.  All quantities
here are evaluated exactly by a forward pass over the chain's transient
states, O(k^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "RaceParams",
    "EconomicContext",
    "AttackProfile",
    "success_probability",
    "expected_attack_steps",
    "attack_cost",
    "adversary_reward",
    "attack_decision",
    "attack_decision_smooth",
    "attack_profile",
]


@dataclass(frozen=True)
class RaceParams:
    """Adversary hash-power fraction and confirmation depth of one race."""

    beta: float
    confirmations: int

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        if self.confirmations < 0 or int(self.confirmations) != self.confirmations:
            raise ValueError(
                f"confirmations must be a non-negative integer, got {self.confirmations}"
            )


@dataclass(frozen=True)
class EconomicContext:
    """Network economics the adversary faces when deciding to attack.

    mean_alpha:     average mining power per miner
    num_miners:     miner count; mean_alpha * num_miners is the total network power
    cost_per_power: currency paid per unit of mining power per time step
    block_reward:   currency minted per block
    tx_value:       transaction value carried by the attacked block
    fee:            transaction fees carried by the attacked block
    """

    mean_alpha: float
    num_miners: int
    cost_per_power: float
    block_reward: float
    tx_value: float
    fee: float = 0.0

    def __post_init__(self):
        if self.mean_alpha < 0:
            raise ValueError(f"mean_alpha must be >= 0, got {self.mean_alpha}")
        if self.num_miners < 1:
            raise ValueError(f"num_miners must be >= 1, got {self.num_miners}")
        if self.cost_per_power <= 0:
            raise ValueError(f"cost_per_power must be > 0, got {self.cost_per_power}")
        if self.block_reward < 0:
            raise ValueError(f"block_reward must be >= 0, got {self.block_reward}")
        if self.tx_value < 0:
            raise ValueError(f"tx_value must be >= 0, got {self.tx_value}")
        if self.fee < 0:
            raise ValueError(f"fee must be >= 0, got {self.fee}")

    @property
    def network_power_cost(self) -> float:
        """Total network mining cost per time step."""
        return self.num_miners * self.mean_alpha * self.cost_per_power


@dataclass(frozen=True)
class AttackProfile:
    """Derived attack quantities for one (beta, k, economics) point."""

    success_prob: float
    expected_steps: float
    expected_cost: float
    expected_profit: float


@lru_cache(maxsize=1024)
def _race_stats(beta: float, k: int) -> tuple[float, float, float]:
    """Forward pass over the race chain.

    Returns (success probability, expected steps under the convention that
    charges 2k+1 to every failed attack, exact expected steps).
    """
    # reach[h, a]: probability of visiting transient state (h honest, a adv)
    reach = np.zeros((k + 1, k + 1))
    reach[0, 0] = 1.0
    for h in range(k + 1):
        for a in range(k + 1):
            if h > 0:
                reach[h, a] += (1.0 - beta) * reach[h - 1, a]
            if a > 0:
                reach[h, a] += beta * reach[h, a - 1]
    p_win = 0.0
    steps_win = 0.0
    steps_lose = 0.0
    for h in range(k + 1):
        w = beta * reach[h, k]  # absorbed at (h, k+1)
        p_win += w
        steps_win += w * (k + 1 + h)
    for a in range(k + 1):
        lose = (1.0 - beta) * reach[k, a]  # absorbed at (k+1, a)
        steps_lose += lose * (k + 1 + a)
    charged = (2 * k + 1) * (1.0 - p_win) + steps_win
    exact = steps_win + steps_lose
    return p_win, charged, exact


def success_probability(race: RaceParams) -> float:
    """Probability the adversary mines k+1 blocks before the honest network."""
    p, _, _ = _race_stats(race.beta, race.confirmations)
    return p


def expected_attack_steps(race: RaceParams, charging: str = "charged") -> float:
    """Expected number of time steps one attack occupies.

    ``charging="charged"`` bills every failed attack the full 2k+1 steps;
    ``charging="exact"`` bills failures their true duration.
    """
    _, charged, exact = _race_stats(race.beta, race.confirmations)
    if charging == "charged":
        return charged
    if charging == "exact":
        return exact
    raise ValueError(f"charging must be 'charged' or 'exact', got {charging!r}")


def attack_cost(race: RaceParams, ctx: EconomicContext, charging: str = "charged") -> float:
    """Expected mining cost of one attack: the adversary's share of the
    network power cost paid for the expected attack duration."""
    return race.beta * ctx.network_power_cost * expected_attack_steps(race, charging)


def adversary_reward(race: RaceParams, ctx: EconomicContext, charging: str = "charged") -> float:
    """Expected profit of one attack; negative when attacking loses money."""
    k = race.confirmations
    p = success_probability(race)
    gain = (k + 1) * ctx.block_reward + ctx.tx_value + ctx.fee
    return p * gain - attack_cost(race, ctx, charging)


def attack_decision(race: RaceParams, ctx: EconomicContext) -> int:
    """1 if the attack has positive expected profit, else 0."""
    if race.beta == 0.0:
        return 0
    return 1 if adversary_reward(race, ctx) > 0.0 else 0


def sigmoid(z):
    """Numerically stable logistic function, vectorized."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def attack_decision_smooth(
    race: RaceParams, ctx: EconomicContext, sharpness: float = 1.0
) -> float:
    """Sigmoid relaxation of the attack decision.

    With sharpness -> inf this converges to the hard decision.  A powerless
    adversary (beta = 0) cannot attack and short-circuits to 0.
    """
    if sharpness <= 0:
        raise ValueError(f"sharpness must be > 0, got {sharpness}")
    if race.beta == 0.0:
        return 0.0
    return sigmoid(sharpness * adversary_reward(race, ctx))


def attack_profile(
    race: RaceParams, ctx: EconomicContext, charging: str = "charged"
) -> AttackProfile:
    """Bundle of all derived attack quantities for one parameter point."""
    return AttackProfile(
        success_prob=success_probability(race),
        expected_steps=expected_attack_steps(race, charging),
        expected_cost=attack_cost(race, ctx, charging),
        expected_profit=adversary_reward(race, ctx, charging),
    )
