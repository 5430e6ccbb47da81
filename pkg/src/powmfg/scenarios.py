"""Chain-level security analysis built on the attack model and the solver.

Given a snapshot of a chain's economics (block reward, fees, per-block
network mining cost, confirmation depth), computes the largest transaction
value per block at which the adversary's expected attack profit is zero, the
weakest adversary for whom the observed value throughput is already
profitable to attack, and the evolution of the safe value over time when
fees are a percentage of it and miners reinvest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .attack import _race_stats
from .rewards import FeePolicy
from .solver import GameParams, solve_equilibrium

__all__ = [
    "ChainSnapshot",
    "FeeEvolutionResult",
    "safe_value",
    "threshold_beta",
    "fee_evolution",
    "default_beta_grid",
]


@dataclass(frozen=True)
class ChainSnapshot:
    """Observed economics of one chain over some time window.

    network_mining_cost is the total mining cost per block (the product of
    miner count, mean power per miner and cost per power unit).
    """

    block_reward: float
    fee: FeePolicy
    network_mining_cost: float
    observed_value: float
    confirmations: int

    def __post_init__(self):
        if self.block_reward < 0:
            raise ValueError(f"block_reward must be >= 0, got {self.block_reward}")
        if self.network_mining_cost < 0:
            raise ValueError(
                f"network_mining_cost must be >= 0, got {self.network_mining_cost}"
            )
        if self.observed_value < 0:
            raise ValueError(f"observed_value must be >= 0, got {self.observed_value}")
        if self.confirmations < 0:
            raise ValueError(f"confirmations must be >= 0, got {self.confirmations}")


def default_beta_grid() -> np.ndarray:
    """1% resolution over [0.01, 0.49]."""
    return np.round(np.arange(1, 50) / 100.0, 2)


def safe_value(snapshot: ChainSnapshot, beta: float, network_mining_cost: float | None = None) -> float:
    """Largest transaction value with zero expected attack profit.

    Solves  value + fee(value) = cost/p - (k+1) * block_reward  for the given
    fee policy.  Negative solutions clamp to 0; a powerless adversary returns
    +inf (no finite value is attackable).
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must be in [0, 1), got {beta}")
    if beta == 0.0:
        return math.inf
    k = snapshot.confirmations
    cost_base = snapshot.network_mining_cost if network_mining_cost is None else network_mining_cost
    p_win, steps, _ = _race_stats(beta, k)
    cost = beta * cost_base * steps
    base = cost / p_win - (k + 1) * snapshot.block_reward
    if snapshot.fee.kind == "proportional":
        t_star = base / (1.0 + snapshot.fee.rate)
    else:
        t_star = base - snapshot.fee.flat_fee
    return max(0.0, t_star)


def threshold_beta(snapshot: ChainSnapshot, observed_value: float, beta_grid) -> float | None:
    """Smallest grid beta whose safe value is below the observed throughput,
    i.e. the weakest adversary already profiting from an attack; None when no
    grid point qualifies."""
    beta_grid = np.asarray(beta_grid, dtype=float)
    if len(beta_grid) == 0:
        raise ValueError("beta_grid must be non-empty")
    if (np.diff(beta_grid) <= 0).any():
        raise ValueError("beta_grid must be sorted strictly ascending")
    if beta_grid[0] <= 0 or beta_grid[-1] >= 1:
        raise ValueError("beta_grid values must lie in (0, 1)")
    for beta in beta_grid:
        if safe_value(snapshot, float(beta)) < observed_value:
            return float(beta)
    return None


@dataclass
class FeeEvolutionResult:
    """Safe-value time series per fee fraction."""

    lambdas: list[float]
    # safe value at the equilibrium mean power, per time step, per lambda
    t_star: dict[float, np.ndarray] = field(default_factory=dict)
    converged: dict[float, bool] = field(default_factory=dict)
    iterations: dict[float, int] = field(default_factory=dict)

    @property
    def all_converged(self) -> bool:
        return all(self.converged.values())


def fee_evolution(
    snapshot: ChainSnapshot,
    beta: float,
    lambda_values,
    horizon: int,
    params: GameParams,
) -> FeeEvolutionResult:
    """Safe-value trajectory under percentage fees and reinvestment.

    For each fee fraction, runs the equilibrium solver with the transaction
    value pinned to the zero-profit point at the current mean power (so the
    adversary never profits) and reports that zero-profit value per time
    step.  As fees accumulate into wealth and mining power, the safe value
    grows.  Non-convergence is flagged per lambda, not raised.
    """
    result = FeeEvolutionResult(lambdas=[float(l) for l in lambda_values])
    k = snapshot.confirmations
    p_win, steps, _ = _race_stats(beta, k)
    for lam in result.lambdas:
        run_params = GameParams(
            num_miners=params.num_miners,
            cost_per_power=params.cost_per_power,
            block_reward=snapshot.block_reward,
            beta=beta,
            confirmations=k,
            horizon=horizon,
            fee=FeePolicy(kind="proportional", rate=lam),
            max_tx_value=params.max_tx_value,
            initial_mean_alpha=params.initial_mean_alpha,
            initial_wealth=params.initial_wealth,
            max_wealth=params.max_wealth,
            momentum=params.momentum,
            wealth_points=params.wealth_points,
            alpha_points=params.alpha_points,
            tx_points=params.tx_points,
            max_alpha=params.max_alpha,
            decision_sharpness=params.decision_sharpness,
            reward_mode="aware",
            tx_mode="pinned_safe_value",
            win_transition=params.win_transition,
            momentum_mode=params.momentum_mode,
            tol=params.tol,
            max_iterations=params.max_iterations,
            threads=params.threads,
        )
        eq = solve_equilibrium(run_params)
        cost_per_block = (
            run_params.num_miners * eq.mean_alpha * run_params.cost_per_power
        )
        if p_win > 0:
            base = beta * cost_per_block * steps / p_win - (k + 1) * snapshot.block_reward
            series = np.maximum(0.0, base / (1.0 + lam))
        else:
            series = np.full_like(eq.mean_alpha, math.inf)
        result.t_star[lam] = series
        result.converged[lam] = eq.converged
        result.iterations[lam] = eq.iterations
    return result
