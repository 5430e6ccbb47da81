"""Serialization of run results: fixed-schema CSV files plus a resolved
configuration dump for reproducibility.

Schemas (column names and order are part of the contract):
  mean_alpha.csv     t, alpha_bar
  wealth.csv         t, x, mass
  policy.csv         t, x, alpha, T
  attack.csv         t, attack_prob
  safe_value.csv     beta, t_star
  fee_evolution.csv  lambda, t, t_star
  attack_profile.csv beta, k, success_prob, expected_steps, expected_cost,
                     expected_profit, decision, decision_smooth
  sim_wealth.csv     t, mean_wealth, stderr
  sim_attack.csv     t, attack_freq
  race.csv           beta, k, trials, success_rate, success_se,
                     mean_steps_actual, mean_steps_charged
Floats are written with 17 significant digits.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .attack import _race_stats, sigmoid

__all__ = [
    "fmt",
    "write_csv",
    "write_run_json",
    "write_diagnostics",
    "emit_equilibrium",
    "emit_sim_report",
    "emit_safe_value",
    "emit_fee_evolution",
    "emit_attack_profiles",
]


def fmt(value) -> str:
    """One CSV cell: floats at 17 significant digits, ints verbatim."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_run_json(directory, resolved_config):
    """Resolved configuration, itself a valid config document."""
    path = os.path.join(directory, "run.json")
    with open(path, "w") as fh:
        json.dump(resolved_config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_diagnostics(directory, diagnostics):
    path = os.path.join(directory, "diagnostics.json")
    with open(path, "w") as fh:
        json.dump(diagnostics, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def emit_equilibrium(result, directory):
    """mean_alpha.csv, wealth.csv, policy.csv, attack.csv for one solve."""
    params = result.params
    grid = params.wealth_grid()
    tau = params.horizon

    write_csv(
        os.path.join(directory, "mean_alpha.csv"),
        ["t", "alpha_bar"],
        ((t, result.mean_alpha[t]) for t in range(tau + 1)),
    )
    write_csv(
        os.path.join(directory, "wealth.csv"),
        ["t", "x", "mass"],
        (
            (t, grid[i], result.wealth.masses[t, i])
            for t in range(tau + 2)
            for i in range(len(grid))
        ),
    )
    write_csv(
        os.path.join(directory, "policy.csv"),
        ["t", "x", "alpha", "T"],
        (
            (t, grid[i], result.policy.alpha[t, i], result.policy.tx[t, i])
            for t in range(tau + 1)
            for i in range(len(grid))
        ),
    )
    # mass-weighted smooth attack probability against the equilibrium blocks
    p_win, steps, _ = _race_stats(params.beta, params.confirmations)
    k = params.confirmations
    rows = []
    for t in range(tau + 1):
        if params.beta == 0.0:
            prob = 0.0
        else:
            cost = params.beta * params.num_miners * result.mean_alpha[t] * params.cost_per_power * steps
            fee_t = params.fee(result.policy.tx[t])
            r_adv = p_win * ((k + 1) * params.block_reward + result.policy.tx[t] + fee_t) - cost
            smooth = sigmoid(params.decision_sharpness * r_adv)
            prob = float(smooth @ result.wealth.masses[t])
        rows.append((t, prob))
    write_csv(os.path.join(directory, "attack.csv"), ["t", "attack_prob"], rows)


def emit_sim_report(report, directory, race=None):
    if report.success_rate is not None:
        write_csv(
            os.path.join(directory, "race.csv"),
            ["beta", "k", "trials", "success_rate", "success_se",
             "mean_steps_actual", "mean_steps_charged"],
            [(race.beta, race.confirmations, report.trials, report.success_rate,
              report.success_se, report.mean_steps_actual, report.mean_steps_charged)],
        )
    if report.mean_wealth is not None:
        write_csv(
            os.path.join(directory, "sim_wealth.csv"),
            ["t", "mean_wealth", "stderr"],
            ((t, report.mean_wealth[t], report.mean_wealth_se[t])
             for t in range(len(report.mean_wealth))),
        )
    if report.attack_freq is not None:
        write_csv(
            os.path.join(directory, "sim_attack.csv"),
            ["t", "attack_freq"],
            ((t, report.attack_freq[t]) for t in range(len(report.attack_freq))),
        )


def emit_safe_value(betas, t_stars, directory):
    write_csv(
        os.path.join(directory, "safe_value.csv"),
        ["beta", "t_star"],
        zip(betas, t_stars),
    )


def emit_fee_evolution(result, directory):
    rows = []
    for lam in result.lambdas:
        series = result.t_star[lam]
        rows.extend((lam, t, series[t]) for t in range(len(series)))
    write_csv(os.path.join(directory, "fee_evolution.csv"), ["lambda", "t", "t_star"], rows)


def emit_attack_profiles(rows, directory):
    write_csv(
        os.path.join(directory, "attack_profile.csv"),
        ["beta", "k", "success_prob", "expected_steps", "expected_cost",
         "expected_profit", "decision", "decision_smooth"],
        rows,
    )
