"""Mean-field equilibrium solver for the mining game.

Outer fixed-point loop: backward induction over a wealth grid gives each
miner's best (mining power, transaction value) response to the current
mean-power trajectory; pushing the wealth distribution forward under that
policy and averaging the played powers gives the next trajectory, damped by a
momentum factor.  Convergence means the trajectory reproduces itself.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .attack import _race_stats, sigmoid
from .rewards import FeePolicy

__all__ = [
    "GameParams",
    "PolicyTable",
    "ValueTable",
    "WealthDistribution",
    "EquilibriumResult",
    "backward_induction",
    "forward_wealth",
    "update_mean_field",
    "solve_equilibrium",
    "evaluate_policy",
]

TIE_TOL = 1e-12  # objective values within this of the max count as ties


@dataclass
class GameParams:
    """Everything one solver run needs.

    Wealth lives on a uniform grid over [0, max_wealth]; candidate mining
    powers on a uniform grid over [0, max_alpha] masked per wealth level by
    the budget alpha * cost_per_power <= wealth; candidate transaction values
    on a uniform grid over [0, max_tx_value].
    """

    num_miners: int
    cost_per_power: float
    block_reward: float
    beta: float
    confirmations: int
    horizon: int
    fee: FeePolicy
    max_tx_value: float
    initial_mean_alpha: float
    initial_wealth: object  # scalar, (low, high) band, or per-grid-point masses
    max_wealth: float
    momentum: float = 0.5
    wealth_points: int = 201
    alpha_points: int = 101
    tx_points: int = 101
    max_alpha: float | None = None
    decision_sharpness: float = 1.0
    reward_mode: str = "aware"  # "aware" | "naive"
    tx_mode: str = "argmax"  # "argmax" | "pinned_safe_value"
    win_transition: str = "expected"  # "expected" | "realized"
    momentum_mode: str = "damped"  # "damped" | "literal"
    tol: float | None = None
    max_iterations: int = 500
    threads: int = 1

    def validate(self):
        if self.num_miners < 1:
            raise ValueError(f"num_miners must be >= 1, got {self.num_miners}")
        if self.cost_per_power <= 0:
            raise ValueError(f"cost_per_power must be > 0, got {self.cost_per_power}")
        if self.block_reward < 0:
            raise ValueError(f"block_reward must be >= 0, got {self.block_reward}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        if self.confirmations < 0:
            raise ValueError(f"confirmations must be >= 0, got {self.confirmations}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if self.max_tx_value < 0:
            raise ValueError(f"max_tx_value must be >= 0, got {self.max_tx_value}")
        if self.initial_mean_alpha < 0:
            raise ValueError(f"initial_mean_alpha must be >= 0, got {self.initial_mean_alpha}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.max_wealth <= 0:
            raise ValueError(f"max_wealth must be > 0, got {self.max_wealth}")
        for name in ("wealth_points", "alpha_points", "tx_points"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2, got {getattr(self, name)}")
        if self.max_alpha is not None and self.max_alpha <= 0:
            raise ValueError(f"max_alpha must be > 0, got {self.max_alpha}")
        if self.decision_sharpness <= 0:
            raise ValueError(f"decision_sharpness must be > 0, got {self.decision_sharpness}")
        if self.reward_mode not in ("aware", "naive"):
            raise ValueError(f"reward_mode must be 'aware' or 'naive', got {self.reward_mode!r}")
        if self.tx_mode not in ("argmax", "pinned_safe_value"):
            raise ValueError(
                f"tx_mode must be 'argmax' or 'pinned_safe_value', got {self.tx_mode!r}"
            )
        if self.win_transition not in ("expected", "realized"):
            raise ValueError(
                f"win_transition must be 'expected' or 'realized', got {self.win_transition!r}"
            )
        if self.momentum_mode not in ("damped", "literal"):
            raise ValueError(
                f"momentum_mode must be 'damped' or 'literal', got {self.momentum_mode!r}"
            )
        if self.tol is not None and self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        w0 = self.initial_distribution()
        if abs(float(w0.sum()) - 1.0) > 1e-9:
            raise ValueError("initial wealth distribution must sum to 1")
        if (w0 < 0).any():
            raise ValueError("initial wealth distribution must be non-negative")
        return self

    # --- grids -----------------------------------------------------------

    def wealth_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.max_wealth, self.wealth_points)

    def alpha_grid(self) -> np.ndarray:
        top = self.max_alpha if self.max_alpha is not None else self.max_wealth / self.cost_per_power
        return np.linspace(0.0, top, self.alpha_points)

    def tx_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.max_tx_value, self.tx_points)

    def effective_tol(self) -> float:
        if self.tol is not None:
            return self.tol
        return 1e-6 * max(self.initial_mean_alpha, 1e-300)

    def initial_distribution(self) -> np.ndarray:
        """Initial wealth masses on the grid.

        A scalar deposits a point mass (split between bracketing grid points);
        a (low, high) pair spreads mass uniformly over the grid points inside
        the band; an array of length wealth_points is used as-is.
        """
        x = self.wealth_grid()
        w0 = np.zeros_like(x)
        given = self.initial_wealth
        if np.ndim(given) == 0:
            deposit(w0, np.array([float(given)]), np.array([1.0]), self.max_wealth, self.wealth_points)
        elif isinstance(given, (tuple, list)) and len(given) == 2 and np.ndim(given[0]) == 0:
            lo, hi = float(given[0]), float(given[1])
            if not 0 <= lo <= hi <= self.max_wealth:
                raise ValueError("initial wealth band must satisfy 0 <= low <= high <= max_wealth")
            inside = (x >= lo) & (x <= hi)
            if not inside.any():
                raise ValueError("initial wealth band contains no grid point")
            w0[inside] = 1.0 / inside.sum()
        else:
            arr = np.asarray(given, dtype=float)
            if arr.shape != x.shape:
                raise ValueError(
                    f"explicit initial wealth distribution must have {self.wealth_points} entries"
                )
            w0 = arr.copy()
        return w0


@dataclass
class PolicyTable:
    """Chosen actions per (time step, wealth grid point), plus the win
    probability and expected reward realized at those actions (cached so the
    forward pass reuses bit-identical values)."""

    alpha: np.ndarray  # (horizon+1, wealth_points)
    tx: np.ndarray
    win_prob: np.ndarray
    reward: np.ndarray


@dataclass
class ValueTable:
    """Expected cumulative future reward; values[horizon+1] is identically 0."""

    values: np.ndarray  # (horizon+2, wealth_points)


@dataclass
class WealthDistribution:
    """Probability mass over the wealth grid per time step."""

    masses: np.ndarray  # (horizon+2, wealth_points)

    def mean_wealth(self, grid: np.ndarray) -> np.ndarray:
        return self.masses @ grid


@dataclass
class EquilibriumResult:
    """Converged (or best-effort) equilibrium.

    mean_alpha is the trajectory the returned policy best-responds to, so
    policy, values and wealth are mutually consistent.
    """

    params: GameParams
    mean_alpha: np.ndarray  # (horizon+1,)
    policy: PolicyTable
    values: ValueTable
    wealth: WealthDistribution
    converged: bool
    iterations: int
    residuals: list[float] = field(default_factory=list)


# --- shared numerics ------------------------------------------------------


def deposit(target, destinations, masses, max_wealth, n_points):
    """Mass-conserving linear deposition of point masses onto the grid.

    Destinations below 0 deposit at 0; above max_wealth at the top point.
    Accumulation order is fixed (array order) for determinism.
    """
    dx = max_wealth / (n_points - 1)
    pos = np.clip(destinations, 0.0, max_wealth) / dx
    lo = np.minimum(pos.astype(np.int64), n_points - 2)
    frac = pos - lo
    np.add.at(target, lo, masses * (1.0 - frac))
    np.add.at(target, lo + 1, masses * frac)


def _naive_win_prob(alpha, field_power):
    """alpha / (alpha + field_power) with the 0/0 corner pinned to 0."""
    denom = alpha + field_power
    return np.divide(alpha, denom, out=np.zeros_like(alpha), where=denom > 0)


def _interp_wealth(x, values, max_wealth):
    """Linear interpolation of a non-decreasing wealth-indexed table.

    The grid is uniform, so cells are indexed directly; arguments clamp to
    [0, max_wealth].  Each result is clipped to its cell's value interval,
    which removes rounding overshoot so that interpolating a monotone table
    is exactly monotone in the argument.
    """
    n = len(values)
    scale = (n - 1) / max_wealth
    pos = x * scale
    np.clip(pos, 0.0, n - 1.0, out=pos)
    idx = pos.astype(np.int64)
    np.minimum(idx, n - 2, out=idx)
    np.subtract(pos, idx, out=pos)  # pos is now the in-cell fraction
    lo = values[idx]
    np.add(idx, 1, out=idx)
    hi = values[idx]
    out = np.subtract(hi, lo)
    np.multiply(out, pos, out=out)
    np.add(out, lo, out=out)
    np.minimum(out, hi, out=out)
    np.maximum(out, lo, out=out)
    return out


def _pinned_tx(params, p_win, steps, mean_alpha_t):
    """Zero-profit transaction value at the current mean power, clamped to
    the action range (the reported series is left unclamped elsewhere)."""
    if p_win == 0.0:
        return params.max_tx_value
    cost = params.beta * params.num_miners * mean_alpha_t * params.cost_per_power * steps
    base = cost / p_win - (params.confirmations + 1) * params.block_reward
    if params.fee.kind == "proportional":
        t_star = base / (1.0 + params.fee.rate)
    else:
        t_star = base - params.fee.flat_fee
    return float(np.clip(t_star, 0.0, params.max_tx_value))


class _StageContext:
    """Per-time-step precomputation shared by every wealth slice."""

    def __init__(self, params, mean_alpha_t, p_win, steps, alpha, tx, alpha_cost):
        m_abar = params.num_miners * mean_alpha_t
        self.alpha_cost = alpha_cost  # (n_alpha,)
        self.gamma_naive = _naive_win_prob(alpha, m_abar)  # (n_alpha,)
        fee_vec = params.fee(tx)
        gain = params.block_reward + fee_vec  # (n_tx,)
        if params.reward_mode == "aware" and params.tx_mode == "argmax":
            k = params.confirmations
            cost = params.beta * m_abar * params.cost_per_power * steps
            r_adv = p_win * ((k + 1) * params.block_reward + tx + fee_vec) - cost
            if params.beta == 0.0:
                a_smooth = np.zeros_like(tx)
            else:
                a_smooth = sigmoid(params.decision_sharpness * r_adv)
            factor = 1.0 - p_win * a_smooth  # (n_tx,)
        else:
            # naive rewards, or transaction value pinned at the zero-profit
            # point where the hard decision is 0 by construction
            factor = np.ones_like(tx)
        self.gamma = self.gamma_naive[:, None] * factor[None, :]  # (n_alpha, n_tx)
        self.reward = self.gamma * gain[None, :] - alpha_cost[:, None]
        if params.win_transition == "expected":
            self.win_delta = self.reward  # (n_alpha, n_tx)
        else:
            self.win_delta = gain[None, :] - alpha_cost[:, None]


def _solve_slice(ctx, x_slice, feasible, v_next, max_wealth):
    """Argmax over feasible (alpha, tx) for a contiguous slice of wealth
    points.  Ties within TIE_TOL resolve to the smallest alpha (cheapest
    action), then the largest tx (ties in tx only arise where the reward is
    flat in it, and the naive regime's dominant choice there is the cap).
    Returns the chosen action indices and the exact maximum objective, which
    is the value function entry."""
    x_col = x_slice[:, None, None]
    v_win = _interp_wealth(x_col + ctx.win_delta[None, :, :], v_next, max_wealth)
    v_lose = _interp_wealth(x_slice[:, None] - ctx.alpha_cost[None, :], v_next, max_wealth)
    obj = ctx.reward[None, :, :] + ctx.gamma[None, :, :] * v_win
    obj += (1.0 - ctx.gamma)[None, :, :] * v_lose[:, :, None]
    obj[~feasible] = -np.inf
    n_tx = obj.shape[2]
    best = obj.max(axis=(1, 2))
    # scan tx descending so argmax picks smallest alpha, then largest tx
    flat = (obj[:, :, ::-1] >= (best - TIE_TOL)[:, None, None]).reshape(len(x_slice), -1)
    idx = flat.argmax(axis=1)
    ai, ti = np.divmod(idx, n_tx)
    return ai, n_tx - 1 - ti, best


def backward_induction(params: GameParams, mean_alpha: np.ndarray):
    """Dynamic program from the terminal round back to 0.

    At each time step and wealth level, maximizes expected reward plus the
    value of the next wealth (win branch moves by the win transition, lose
    branch pays the mining bill) over the feasible action grid.
    """
    tau = params.horizon
    if len(mean_alpha) != tau + 1:
        raise ValueError(f"mean_alpha must have horizon+1 = {tau + 1} entries")
    if not np.isfinite(mean_alpha).all():
        raise ValueError("mean_alpha trajectory must be finite")
    grid = params.wealth_grid()
    alpha = params.alpha_grid()
    tx_grid = params.tx_grid()
    alpha_cost = alpha * params.cost_per_power
    feasible = alpha_cost[None, :] <= grid[:, None]  # (n_x, n_alpha), nested in x
    p_win, steps, _ = _race_stats(params.beta, params.confirmations)

    n_x = params.wealth_points
    values = np.zeros((tau + 2, n_x))
    pol_alpha = np.zeros((tau + 1, n_x))
    pol_tx = np.zeros((tau + 1, n_x))
    pol_gamma = np.zeros((tau + 1, n_x))
    pol_reward = np.zeros((tau + 1, n_x))

    slices = np.array_split(np.arange(n_x), params.threads)
    pool = ThreadPoolExecutor(max_workers=params.threads) if params.threads > 1 else None
    try:
        for t in range(tau, -1, -1):
            if params.tx_mode == "pinned_safe_value":
                tx_t = np.array([_pinned_tx(params, p_win, steps, mean_alpha[t])])
            else:
                tx_t = tx_grid
            ctx = _StageContext(params, mean_alpha[t], p_win, steps, alpha, tx_t, alpha_cost)
            v_next = values[t + 1]

            def run(rows, ctx=ctx, v_next=v_next):
                return rows, _solve_slice(ctx, grid[rows], feasible[rows], v_next, params.max_wealth)

            parts = pool.map(run, slices) if pool is not None else map(run, slices)
            for rows, (ai, ti, v) in parts:
                if not np.isfinite(v).all():
                    raise RuntimeError(
                        f"non-finite objective at t={t}; check grids and parameters"
                    )
                values[t, rows] = v
                pol_alpha[t, rows] = alpha[ai]
                pol_tx[t, rows] = tx_t[ti]
                pol_gamma[t, rows] = ctx.gamma[ai, ti]
                pol_reward[t, rows] = ctx.reward[ai, ti]
    finally:
        if pool is not None:
            pool.shutdown()

    policy = PolicyTable(alpha=pol_alpha, tx=pol_tx, win_prob=pol_gamma, reward=pol_reward)
    return policy, ValueTable(values=values)


def forward_wealth(
    params: GameParams,
    policy: PolicyTable,
    mean_alpha: np.ndarray,
    w0: np.ndarray | None = None,
) -> WealthDistribution:
    """Push the wealth distribution forward under the given policy.

    Each mass point splits into a win branch (wealth moved by the win
    transition) with the policy's win probability and a lose branch (wealth
    minus the mining bill) with the complement; destinations deposit linearly
    onto the grid.
    """
    tau = params.horizon
    grid = params.wealth_grid()
    if w0 is None:
        w0 = params.initial_distribution()
    masses = np.zeros((tau + 2, params.wealth_points))
    masses[0] = w0
    for t in range(tau + 1):
        gamma = policy.win_prob[t]
        if params.win_transition == "expected":
            x_win = grid + policy.reward[t]
        else:
            x_win = grid + (params.block_reward + params.fee(policy.tx[t])) \
                - policy.alpha[t] * params.cost_per_power
        x_lose = grid - policy.alpha[t] * params.cost_per_power
        nxt = masses[t + 1]
        deposit(nxt, x_win, masses[t] * gamma, params.max_wealth, params.wealth_points)
        deposit(nxt, x_lose, masses[t] * (1.0 - gamma), params.max_wealth, params.wealth_points)
    return WealthDistribution(masses=masses)


def update_mean_field(
    params: GameParams,
    policy: PolicyTable,
    wealth: WealthDistribution,
    mean_alpha: np.ndarray,
) -> np.ndarray:
    """Next mean-power trajectory.

    Default ("damped") rule is the convex combination
    momentum * old + (1 - momentum) * policy-weighted mean power at the same
    time index.  The "literal" mode applies the update with the time shift
    and without the complementary factor, leaving entry 0 unchanged; it is a
    fidelity switch, not the default, because it is not a fixed-point update.
    """
    tau = params.horizon
    weighted = np.array([policy.alpha[t] @ wealth.masses[t] for t in range(tau + 1)])
    g = params.momentum
    if params.momentum_mode == "damped":
        return g * mean_alpha + (1.0 - g) * weighted
    out = mean_alpha.copy()
    out[1:] = g * mean_alpha[:-1] + weighted[:-1]
    return out


def solve_equilibrium(params: GameParams) -> EquilibriumResult:
    """Iterate best response / forward wealth / mean-field update to a fixed
    point.  Non-convergence is reported, not raised."""
    params.validate()
    tol = params.effective_tol()
    w0 = params.initial_distribution()
    traj = np.full(params.horizon + 1, float(params.initial_mean_alpha))
    residuals = []
    policy = values = wealth = None
    policy_traj = traj
    converged = False
    iterations = 0
    for _ in range(params.max_iterations):
        iterations += 1
        policy_traj = traj
        policy, values = backward_induction(params, traj)
        wealth = forward_wealth(params, policy, traj, w0)
        new_traj = update_mean_field(params, policy, wealth, traj)
        residual = float(np.max(np.abs(new_traj - traj))) if len(traj) else 0.0
        residuals.append(residual)
        if residual <= tol:
            converged = True
            break
        traj = new_traj
    return EquilibriumResult(
        params=params,
        mean_alpha=policy_traj,
        policy=policy,
        values=values,
        wealth=wealth,
        converged=converged,
        iterations=iterations,
        residuals=residuals,
    )


def evaluate_policy(
    params: GameParams,
    policy: PolicyTable,
    mean_alpha: np.ndarray,
    reward_mode: str = "aware",
    attack_mode: str = "present",
    w0: np.ndarray | None = None,
) -> np.ndarray:
    """Mean wealth per time step of a population playing `policy` while the
    world behaves per the stated modes.

    attack_mode="present": the adversary attacks whenever the hard decision
    at the realized (mean power, block value) is 1, voiding the winner's
    gains with the race success probability.  attack_mode="absent": nobody
    attacks.  reward_mode picks the reward deposited on the win branch:
    "naive" credits the adversary-blind expectation, "aware" the effective
    one.
    """
    if reward_mode not in ("aware", "naive"):
        raise ValueError(f"reward_mode must be 'aware' or 'naive', got {reward_mode!r}")
    if attack_mode not in ("present", "absent"):
        raise ValueError(f"attack_mode must be 'present' or 'absent', got {attack_mode!r}")
    tau = params.horizon
    grid = params.wealth_grid()
    p_win, steps, _ = _race_stats(params.beta, params.confirmations)
    k = params.confirmations
    if w0 is None:
        w0 = params.initial_distribution()
    masses = np.zeros((tau + 2, params.wealth_points))
    masses[0] = w0
    for t in range(tau + 1):
        alpha_t = policy.alpha[t]
        tx_t = policy.tx[t]
        fee_t = params.fee(tx_t)
        gain = params.block_reward + fee_t
        gamma_naive = _naive_win_prob(alpha_t, params.num_miners * mean_alpha[t])
        if attack_mode == "present" and params.beta > 0.0:
            cost = (
                params.beta * params.num_miners * mean_alpha[t] * params.cost_per_power * steps
            )
            r_adv = p_win * ((k + 1) * params.block_reward + tx_t + fee_t) - cost
            decision = (r_adv > 0.0).astype(float)
        else:
            decision = np.zeros_like(alpha_t)
        gamma_eff = (1.0 - p_win * decision) * gamma_naive
        if reward_mode == "aware":
            r_dep = gamma_eff * gain - alpha_t * params.cost_per_power
        else:
            r_dep = gamma_naive * gain - alpha_t * params.cost_per_power
        if params.win_transition == "expected":
            x_win = grid + r_dep
        else:
            x_win = grid + gain - alpha_t * params.cost_per_power
        x_lose = grid - alpha_t * params.cost_per_power
        nxt = masses[t + 1]
        deposit(nxt, x_win, masses[t] * gamma_eff, params.max_wealth, params.wealth_points)
        deposit(nxt, x_lose, masses[t] * (1.0 - gamma_eff), params.max_wealth, params.wealth_points)
    return masses @ grid
