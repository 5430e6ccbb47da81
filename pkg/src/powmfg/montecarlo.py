"""Independent stochastic oracle for the race model and the solver.

Everything here samples; nothing reuses the dynamic-programming math beyond
the per-step win probabilities the game itself defines, so agreement between
these estimates and the closed-form/DP numbers is a real check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attack import RaceParams, _race_stats
from .solver import GameParams, PolicyTable

__all__ = ["SimConfig", "SimReport", "simulate_race", "simulate_game"]

_RACE_CHUNK = 1 << 19  # trials per derived RNG stream; fixed so results do
# not depend on how chunks are scheduled


@dataclass(frozen=True)
class SimConfig:
    """Trial count, seed and population size for a game simulation."""

    trials: int
    seed: int
    agents: int | None = None  # None: one agent per modeled miner

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.agents is not None and self.agents < 1:
            raise ValueError(f"agents must be >= 1, got {self.agents}")


@dataclass
class SimReport:
    """Empirical estimates with standard errors.

    Race runs fill the success/steps fields; game runs fill the per-step
    wealth and attack-frequency fields.
    """

    trials: int
    success_rate: float | None = None
    success_se: float | None = None
    mean_steps_actual: float | None = None
    mean_steps_charged: float | None = None
    mean_wealth: np.ndarray | None = None  # (horizon+2,)
    mean_wealth_se: np.ndarray | None = None
    attack_freq: np.ndarray | None = None  # (horizon+1,)


def _race_chunk(beta, k, seed, chunk_idx, size):
    """One chunk of race trials on its own derived stream.

    Steps are sampled one at a time across the whole chunk, with running
    block counters and early exit once every race in the chunk is decided.
    Returns (wins, total actual duration, total charged duration).  float32
    uniforms are enough: their 2^-24 quantization biases the Bernoulli rate
    far below the sampling noise of any feasible trial count.
    """
    n_steps = 2 * k + 1
    rng = np.random.default_rng([seed, chunk_idx])
    adv_blocks = np.zeros(size, dtype=np.int32)
    alive = np.ones(size, dtype=bool)
    won = np.zeros(size, dtype=bool)
    duration = np.full(size, n_steps, dtype=np.int32)
    for t in range(1, n_steps + 1):
        adv_blocks += rng.random(size, dtype=np.float32) < beta
        adv_done = alive & (adv_blocks == k + 1)
        hon_done = alive & (t - adv_blocks == k + 1)
        decided = adv_done | hon_done
        duration[decided] = t
        won |= adv_done
        alive &= ~decided
        if not alive.any():
            break
    wins = int(won.sum())
    actual = float(duration.sum(dtype=np.int64))
    charged = actual + float(n_steps) * (size - wins) - float(duration[~won].sum(dtype=np.int64))
    return wins, actual, charged


def simulate_race(race: RaceParams, trials: int, seed: int, threads: int = 1) -> SimReport:
    """Sample the per-step block race until one side reaches k+1 blocks.

    Reports the empirical success rate and mean durations under both the
    exact convention and the one charging failed attacks the full 2k+1 steps.
    Trials are split into fixed-size chunks, each driven by an independent
    stream derived from (seed, chunk index), and chunk results are reduced
    in chunk order, so aggregates are identical however chunks are scheduled.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    k = race.confirmations
    beta = race.beta
    n_steps = 2 * k + 1
    sizes = [_RACE_CHUNK] * (trials // _RACE_CHUNK)
    if trials % _RACE_CHUNK:
        sizes.append(trials % _RACE_CHUNK)
    if threads > 1 and len(sizes) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda ic: _race_chunk(beta, k, seed, ic[0], ic[1]), enumerate(sizes)
            ))
    else:
        parts = [_race_chunk(beta, k, seed, i, size) for i, size in enumerate(sizes)]
    wins = sum(part[0] for part in parts)
    steps_actual = sum(part[1] for part in parts)
    steps_charged = sum(part[2] for part in parts)
    rate = wins / trials
    if trials > 1:
        sample_var = rate * (1.0 - rate) * trials / (trials - 1)
        se = float(np.sqrt(sample_var / trials))
    else:
        se = float("nan")
    return SimReport(
        trials=trials,
        success_rate=rate,
        success_se=se,
        mean_steps_actual=steps_actual / trials,
        mean_steps_charged=steps_charged / trials,
    )


def simulate_game(
    policy: PolicyTable,
    mean_alpha: np.ndarray,
    params: GameParams,
    config: SimConfig,
    attack_mode: str = "present",
) -> SimReport:
    """Agent-level replay of the game under a fixed policy.

    Each trial simulates `agents` miners over the horizon.  Per round, each
    agent's action comes from the policy (linearly interpolated in wealth);
    at most one public winner is drawn, each agent winning with the game's
    own probability alpha / (alpha + total mean-field power); the adversary
    attacks when the hard decision at the realized mean power and the
    winner's block value is 1, voiding the win with the race success
    probability.  Wealth moves under the same transition convention the
    solver used.

    Rounds draw from streams derived from (seed, round), with one column per
    trial, so aggregates do not depend on trial scheduling.
    """
    if attack_mode not in ("present", "absent"):
        raise ValueError(f"attack_mode must be 'present' or 'absent', got {attack_mode!r}")
    n_agents = config.agents if config.agents is not None else params.num_miners
    tau = params.horizon
    grid = params.wealth_grid()
    p_win, steps, _ = _race_stats(params.beta, params.confirmations)
    k = params.confirmations
    m = params.num_miners
    c = params.cost_per_power

    # all trials start from an initial wealth draw with its own stream
    w0 = params.initial_distribution()
    rng0 = np.random.default_rng([config.seed, tau + 1])
    wealth = grid[rng0.choice(len(grid), size=(config.trials, n_agents), p=w0 / w0.sum())]

    wealth_hist = np.empty((tau + 2, config.trials))
    attacks = np.zeros(tau + 1)
    wealth_hist[0] = wealth.mean(axis=1)
    for t in range(tau + 1):
        rng = np.random.default_rng([config.seed, t])
        alpha = np.interp(wealth, grid, policy.alpha[t])
        tx = np.interp(wealth, grid, policy.tx[t])
        q = alpha / (alpha + m * mean_alpha[t])
        total_q = q.sum(axis=1)
        # mean-field slack can be exhausted if realized power outruns the
        # trajectory; renormalize those rare rounds to keep one winner
        over = total_q > 1.0
        if over.any():
            q[over] /= total_q[over, None]
        cum_q = np.cumsum(q, axis=1)
        u = rng.random(config.trials)
        winner = (u[:, None] >= cum_q).sum(axis=1)  # == n_agents: no block
        has_winner = winner < n_agents
        widx = np.where(has_winner, winner, 0)
        rows = np.arange(config.trials)

        tx_w = tx[rows, widx]
        fee_w = params.fee(tx_w)
        if attack_mode == "present" and params.beta > 0.0:
            abar_real = alpha.mean(axis=1)
            cost = params.beta * m * abar_real * c * steps
            r_adv = p_win * ((k + 1) * params.block_reward + tx_w + fee_w) - cost
            attack = has_winner & (r_adv > 0.0)
        else:
            attack = np.zeros(config.trials, dtype=bool)
        voided = attack & (rng.random(config.trials) < p_win)
        attacks[t] += float(attack.sum())

        gain = params.block_reward + fee_w
        alpha_w = alpha[rows, widx]
        if params.win_transition == "expected":
            gamma_w = (1.0 - p_win * attack.astype(float)) * q[rows, widx]
            r_dep = gamma_w * gain - alpha_w * c
        else:
            r_dep = gain - alpha_w * c
        # everyone pays the mining bill; the surviving winner banks the win
        # branch instead, from their pre-round wealth
        new_wealth = wealth - alpha * c
        bank = has_winner & ~voided
        new_wealth[rows[bank], widx[bank]] = wealth[rows[bank], widx[bank]] + r_dep[bank]
        wealth = np.clip(new_wealth, 0.0, params.max_wealth)
        wealth_hist[t + 1] = wealth.mean(axis=1)

    mean_wealth = wealth_hist.mean(axis=1)
    if config.trials > 1:
        se = wealth_hist.std(axis=1, ddof=1) / np.sqrt(config.trials)
    else:
        se = np.full(tau + 2, np.nan)
    return SimReport(
        trials=config.trials,
        mean_wealth=mean_wealth,
        mean_wealth_se=se,
        attack_freq=attacks / config.trials,
    )
