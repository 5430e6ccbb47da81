"""Mining mean-field game with a rational double-spending adversary.

Public surface: the attack-race economics, the miner reward functions, the
equilibrium solver, the Monte Carlo oracle, and the chain-level scenario
analyses.
"""

from .attack import (
    AttackProfile,
    EconomicContext,
    RaceParams,
    adversary_reward,
    attack_cost,
    attack_decision,
    attack_decision_smooth,
    attack_profile,
    expected_attack_steps,
    success_probability,
)
from .montecarlo import SimConfig, SimReport, simulate_game, simulate_race
from .rewards import (
    FeePolicy,
    MinerAction,
    fee,
    reward_aware,
    reward_naive,
    win_prob_aware,
    win_prob_naive,
)
from .scenarios import (
    ChainSnapshot,
    FeeEvolutionResult,
    default_beta_grid,
    fee_evolution,
    safe_value,
    threshold_beta,
)
from .solver import (
    EquilibriumResult,
    GameParams,
    PolicyTable,
    ValueTable,
    WealthDistribution,
    backward_induction,
    evaluate_policy,
    forward_wealth,
    solve_equilibrium,
    update_mean_field,
)

__version__ = "0.1.0"
