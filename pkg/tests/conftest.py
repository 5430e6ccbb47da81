"""Shared fixtures: the desk-scale game instances used across test modules.

The equilibrium solves are the expensive part of the suite, so they are
session-scoped and shared between the module tests and the acceptance run.
"""

import numpy as np
import pytest

import powmfg as p

# Desk-scale economy for the equilibrium properties: 4 miners, large block
# reward relative to fees so that defending (capping the block value at the
# adversary's break-even point) beats collecting extra fees, 6-block
# confirmation depth, 20 rounds.  The convergence tolerance sits at the
# action-grid resolution: a discrete argmax cannot pin the mean power finer
# than one grid step of the population's hops.
DESK = dict(
    num_miners=4,
    cost_per_power=1.0,
    block_reward=50.0,
    confirmations=6,
    horizon=20,
    fee=p.FeePolicy(kind="proportional", rate=0.01),
    max_tx_value=1200.0,
    initial_mean_alpha=9.9,
    initial_wealth=(170.0, 190.0),
    max_wealth=224.0,
    momentum=0.5,
    wealth_points=161,
    alpha_points=81,
    tx_points=81,
    max_alpha=20.0,
    decision_sharpness=1.0,
    tol=0.1,
    max_iterations=500,
    threads=4,
)

# Chain scenario for the fee-evolution runs: 12 miners starting wealthy
# enough that bankruptcy plays no role, realized win transitions so fee
# income actually accumulates, and heavier momentum because the interior
# best response of a 12-miner game is too steep for 0.5 damping.
FEE_EVO = dict(
    num_miners=12,
    cost_per_power=1.0,
    block_reward=6.25,
    beta=0.3,
    confirmations=6,
    horizon=25,
    fee=p.FeePolicy(kind="proportional", rate=0.01),
    max_tx_value=1500.0,
    initial_mean_alpha=6.41 / 12,
    initial_wealth=(60.0, 72.0),
    max_wealth=260.0,
    momentum=0.8,
    wealth_points=201,
    alpha_points=161,
    tx_points=11,
    max_alpha=4.0,
    win_transition="realized",
    tol=5e-3,
    max_iterations=500,
    threads=4,
)

BITCOIN = dict(
    block_reward=6.25,
    fee=p.FeePolicy(kind="constant", flat_fee=0.16),
    network_mining_cost=6.41,
    observed_value=774.84,
    confirmations=6,
)


def desk_params(beta, reward_mode, **overrides):
    kw = {**DESK, "beta": beta, "reward_mode": reward_mode, **overrides}
    return p.GameParams(**kw)


def fee_evo_params(**overrides):
    kw = {**FEE_EVO, **overrides}
    return p.GameParams(**kw)


@pytest.fixture(scope="session")
def bitcoin_snapshot():
    return p.ChainSnapshot(**BITCOIN)


@pytest.fixture(scope="session")
def naive_eq():
    params = desk_params(0.0, "naive")
    result = p.solve_equilibrium(params)
    assert result.converged
    return params, result


@pytest.fixture(scope="session")
def aware_eq_35():
    params = desk_params(0.35, "aware")
    result = p.solve_equilibrium(params)
    assert result.converged
    return params, result


@pytest.fixture(scope="session")
def aware_eq_45():
    params = desk_params(0.45, "aware")
    result = p.solve_equilibrium(params)
    assert result.converged
    return params, result


@pytest.fixture(scope="session")
def fee_evolution_run(bitcoin_snapshot):
    lambdas = [0.01, 0.0125, 0.015, 0.02]
    return lambdas, p.fee_evolution(
        bitcoin_snapshot, 0.3, lambdas, FEE_EVO["horizon"], fee_evo_params()
    )
