"""Command-line entry point.

    powmfg <command> --config <path> [--out <dir>] [--format csv]

Commands: attack-model, solve, simulate, bitcoin-sweep, fee-evolution.
Exit codes: 0 success, 1 validation/parse error, 2 flagged non-convergence,
3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .attack import (
    EconomicContext,
    RaceParams,
    attack_decision,
    attack_decision_smooth,
    attack_profile,
)
from .config import COMMANDS, ConfigError, parse_config
from .montecarlo import simulate_game, simulate_race
from .output import (
    emit_attack_profiles,
    emit_equilibrium,
    emit_fee_evolution,
    emit_safe_value,
    emit_sim_report,
    write_diagnostics,
    write_run_json,
)
from .rewards import FeePolicy, fee
from .scenarios import fee_evolution, safe_value, threshold_beta
from .solver import solve_equilibrium

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_IO = 3


def _run_attack_model(cfg, out_dir):
    atk = cfg.attack
    policy_fee = FeePolicy(**atk["fee"])
    rows = []
    for beta in atk["betas"]:
        for k in atk["ks"]:
            race = RaceParams(beta=float(beta), confirmations=int(k))
            ctx = EconomicContext(
                mean_alpha=atk["mean_alpha"],
                num_miners=atk["num_miners"],
                cost_per_power=atk["cost_per_power"],
                block_reward=atk["block_reward"],
                tx_value=atk["tx_value"],
                fee=fee(policy_fee, atk["tx_value"]),
            )
            prof = attack_profile(race, ctx, charging=atk["charging"])
            rows.append(
                (beta, k, prof.success_prob, prof.expected_steps, prof.expected_cost,
                 prof.expected_profit, attack_decision(race, ctx),
                 attack_decision_smooth(race, ctx))
            )
    emit_attack_profiles(rows, out_dir)
    return EXIT_OK, {}


def _run_solve(cfg, out_dir):
    result = solve_equilibrium(cfg.game)
    emit_equilibrium(result, out_dir)
    diag = {
        "converged": result.converged,
        "iterations": result.iterations,
        "residuals": result.residuals,
    }
    return (EXIT_OK if result.converged else EXIT_NOT_CONVERGED), diag


def _run_simulate(cfg, out_dir):
    game = cfg.game
    if cfg.sim_kind == "race":
        race = RaceParams(beta=game.beta, confirmations=game.confirmations)
        report = simulate_race(race, cfg.sim.trials, cfg.sim.seed)
        emit_sim_report(report, out_dir, race=race)
        return EXIT_OK, {"trials": report.trials}
    result = solve_equilibrium(game)
    report = simulate_game(
        result.policy, result.mean_alpha, game, cfg.sim, attack_mode=cfg.sim_attack_mode
    )
    emit_equilibrium(result, out_dir)
    emit_sim_report(report, out_dir)
    diag = {
        "converged": result.converged,
        "iterations": result.iterations,
        "trials": report.trials,
    }
    return (EXIT_OK if result.converged else EXIT_NOT_CONVERGED), diag


def _run_bitcoin_sweep(cfg, out_dir):
    sweep = cfg.sweep
    n = int(round((sweep["beta_stop"] - sweep["beta_start"]) / sweep["beta_step"])) + 1
    betas = np.round(sweep["beta_start"] + sweep["beta_step"] * np.arange(n), 10)
    betas = betas[(betas > 0) & (betas < 1)]
    t_stars = [safe_value(cfg.snapshot, float(b)) for b in betas]
    emit_safe_value(betas, t_stars, out_dir)
    thr = threshold_beta(cfg.snapshot, cfg.snapshot.observed_value, betas)
    return EXIT_OK, {"threshold_beta": thr, "observed_value": cfg.snapshot.observed_value}


def _run_fee_evolution(cfg, out_dir):
    fe = cfg.fee_evolution
    result = fee_evolution(cfg.snapshot, fe["beta"], fe["lambdas"], fe["horizon"], cfg.game)
    emit_fee_evolution(result, out_dir)
    diag = {
        "converged": {str(k): v for k, v in result.converged.items()},
        "iterations": {str(k): v for k, v in result.iterations.items()},
    }
    return (EXIT_OK if result.all_converged else EXIT_NOT_CONVERGED), diag


RUNNERS = {
    "attack-model": _run_attack_model,
    "solve": _run_solve,
    "simulate": _run_simulate,
    "bitcoin-sweep": _run_bitcoin_sweep,
    "fee-evolution": _run_fee_evolution,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="powmfg", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--format", default="csv", choices=["csv"], help="output format")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        cfg = parse_config(text, command=args.command)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        os.makedirs(args.out, exist_ok=True)
        write_run_json(args.out, cfg.resolved)
        code, diag = RUNNERS[args.command](cfg, args.out)
        write_diagnostics(args.out, diag)
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    if code == EXIT_NOT_CONVERGED:
        print("warning: solver did not converge; results flagged", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
