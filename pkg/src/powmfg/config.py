"""Run configuration: JSON parsing, validation, defaulting.

A run is described by one JSON document with a command name and the blocks
that command needs.  Parsing applies every documented default and returns
both the structured objects and a fully resolved dictionary that can be
re-emitted and re-parsed to the identical resolution (the reproducibility
round-trip).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .montecarlo import SimConfig
from .rewards import FeePolicy
from .scenarios import ChainSnapshot
from .solver import GameParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "resolved_dict"]

COMMANDS = ("attack-model", "solve", "simulate", "bitcoin-sweep", "fee-evolution")

GAME_DEFAULTS = {
    "num_miners": 4,
    "cost_per_power": 1.0,
    "block_reward": 6.25,
    "beta": 0.0,
    "confirmations": 6,
    "horizon": 25,
    "fee": {"kind": "proportional", "rate": 0.01, "flat_fee": 0.0},
    "max_tx_value": 1000.0,
    "initial_mean_alpha": 1.0,
    "initial_wealth": 20.0,
    "max_wealth": 50.0,
    "momentum": 0.5,
    "wealth_points": 201,
    "alpha_points": 101,
    "tx_points": 101,
    "max_alpha": None,
    "decision_sharpness": 1.0,
    "reward_mode": "aware",
    "tx_mode": "argmax",
    "win_transition": "expected",
    "momentum_mode": "damped",
    "tol": None,
    "max_iterations": 500,
    "threads": 1,
}

SNAPSHOT_DEFAULTS = {
    # break-even bound: per-block mining cost equals per-block rewards
    "block_reward": 6.25,
    "fee": {"kind": "constant", "rate": 0.0, "flat_fee": 0.16},
    "network_mining_cost": 6.41,
    "observed_value": 774.84,
    "confirmations": 6,
}

SIM_DEFAULTS = {
    "kind": "game",  # "race" | "game"
    "trials": 1000,
    "seed": None,  # required: no silent nondeterminism
    "agents": None,
    "attack_mode": "present",
}

SWEEP_DEFAULTS = {
    "beta_start": 0.01,
    "beta_stop": 0.49,
    "beta_step": 0.01,
}

FEE_EVOLUTION_DEFAULTS = {
    "beta": 0.3,
    "lambdas": [0.01, 0.0125, 0.015, 0.02],
    "horizon": 50,
}

ATTACK_DEFAULTS = {
    "betas": [0.1, 0.2, 0.3, 0.4],
    "ks": [6],
    "mean_alpha": 1.0,
    "num_miners": 4,
    "cost_per_power": 1.0,
    "block_reward": 6.25,
    "tx_value": 0.0,
    "fee": {"kind": "proportional", "rate": 0.01, "flat_fee": 0.0},
    "charging": "charged",
}


class ConfigError(ValueError):
    """Configuration parse or validation failure."""


@dataclass
class RunConfig:
    """Validated configuration for one command invocation."""

    command: str
    resolved: dict  # JSON-serializable, fully defaulted
    game: GameParams | None = None
    snapshot: ChainSnapshot | None = None
    sim: SimConfig | None = None
    sim_kind: str = "game"
    sim_attack_mode: str = "present"
    attack: dict | None = None
    sweep: dict | None = None
    fee_evolution: dict | None = None


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _merge_defaults(block, defaults, path):
    if block is None:
        block = {}
    _require(isinstance(block, dict), f"{path}: must be an object")
    for key in block:
        if key not in defaults:
            raise ConfigError(f"{path}.{key}: unknown field")
    out = {}
    for key, default in defaults.items():
        value = block.get(key, default)
        if isinstance(default, dict) and isinstance(value, dict) and key == "fee":
            value = {**default, **value}
            for sub in value:
                _require(sub in default, f"{path}.fee.{sub}: unknown field")
        out[key] = value
    return out


def _fee_policy(block, path):
    try:
        return FeePolicy(kind=block["kind"], rate=block["rate"], flat_fee=block["flat_fee"])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _game_params(block):
    fee = _fee_policy(block["fee"], "game.fee")
    iw = block["initial_wealth"]
    if isinstance(iw, list) and len(iw) == 2 and all(np.ndim(v) == 0 for v in iw):
        initial_wealth = (float(iw[0]), float(iw[1]))
    elif isinstance(iw, list):
        initial_wealth = np.asarray(iw, dtype=float)
    else:
        initial_wealth = float(iw)
    kwargs = {k: v for k, v in block.items() if k not in ("fee", "initial_wealth")}
    params = GameParams(fee=fee, initial_wealth=initial_wealth, **kwargs)
    try:
        params.validate()
    except ValueError as exc:
        raise ConfigError(f"game: {exc}") from exc
    return params


def _chain_snapshot(block):
    fee = _fee_policy(block["fee"], "snapshot.fee")
    try:
        return ChainSnapshot(
            block_reward=block["block_reward"],
            fee=fee,
            network_mining_cost=block["network_mining_cost"],
            observed_value=block["observed_value"],
            confirmations=block["confirmations"],
        )
    except ValueError as exc:
        raise ConfigError(f"snapshot: {exc}") from exc


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Parse and validate a configuration document.

    `command` (e.g. from the command line) overrides the document's own
    command field; one of the two must be present.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    _require(isinstance(doc, dict), "top level: must be a JSON object")
    known = {"command", "game", "snapshot", "sim", "sweep", "fee_evolution", "attack"}
    for key in doc:
        _require(key in known, f"{key}: unknown top-level field")

    cmd = command or doc.get("command")
    _require(cmd is not None, "command: missing (pass one on the command line or in the config)")
    _require(cmd in COMMANDS, f"command: must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    if command is not None and "command" in doc:
        _require(
            doc["command"] == command,
            f"command: config says {doc['command']!r} but {command!r} was requested",
        )

    resolved: dict = {"command": cmd}
    cfg = RunConfig(command=cmd, resolved=resolved)

    if cmd in ("solve", "simulate", "fee-evolution"):
        game_block = _merge_defaults(doc.get("game"), GAME_DEFAULTS, "game")
        cfg.game = _game_params(game_block)
        resolved["game"] = game_block
    if cmd in ("bitcoin-sweep", "fee-evolution"):
        snap_block = _merge_defaults(doc.get("snapshot"), SNAPSHOT_DEFAULTS, "snapshot")
        cfg.snapshot = _chain_snapshot(snap_block)
        resolved["snapshot"] = snap_block
    if cmd == "bitcoin-sweep":
        sweep = _merge_defaults(doc.get("sweep"), SWEEP_DEFAULTS, "sweep")
        _require(0 < sweep["beta_start"] <= sweep["beta_stop"] < 1,
                 "sweep: requires 0 < beta_start <= beta_stop < 1")
        _require(sweep["beta_step"] > 0, "sweep.beta_step: must be > 0")
        cfg.sweep = sweep
        resolved["sweep"] = sweep
    if cmd == "fee-evolution":
        fe = _merge_defaults(doc.get("fee_evolution"), FEE_EVOLUTION_DEFAULTS, "fee_evolution")
        _require(0 < fe["beta"] < 1, "fee_evolution.beta: must be in (0, 1)")
        _require(len(fe["lambdas"]) > 0, "fee_evolution.lambdas: must be non-empty")
        _require(all(lam >= 0 for lam in fe["lambdas"]), "fee_evolution.lambdas: must be >= 0")
        _require(fe["horizon"] >= 0, "fee_evolution.horizon: must be >= 0")
        cfg.fee_evolution = fe
        resolved["fee_evolution"] = fe
    if cmd == "simulate":
        sim = _merge_defaults(doc.get("sim"), SIM_DEFAULTS, "sim")
        _require(sim["kind"] in ("race", "game"), "sim.kind: must be 'race' or 'game'")
        _require(sim["seed"] is not None, "sim.seed: required for simulate (no silent nondeterminism)")
        _require(sim["attack_mode"] in ("present", "absent"),
                 "sim.attack_mode: must be 'present' or 'absent'")
        try:
            cfg.sim = SimConfig(trials=sim["trials"], seed=int(sim["seed"]), agents=sim["agents"])
        except ValueError as exc:
            raise ConfigError(f"sim: {exc}") from exc
        cfg.sim_kind = sim["kind"]
        cfg.sim_attack_mode = sim["attack_mode"]
        resolved["sim"] = sim
    if cmd == "attack-model":
        atk = _merge_defaults(doc.get("attack"), ATTACK_DEFAULTS, "attack")
        _require(len(atk["betas"]) > 0, "attack.betas: must be non-empty")
        _require(all(0 <= b < 1 for b in atk["betas"]), "attack.betas: must be in [0, 1)")
        _require(all(int(k) == k and k >= 0 for k in atk["ks"]), "attack.ks: must be non-negative integers")
        _require(atk["charging"] in ("charged", "exact"),
                 "attack.charging: must be 'charged' or 'exact'")
        _fee_policy(atk["fee"], "attack.fee")
        cfg.attack = atk
        resolved["attack"] = atk

    return cfg


def resolved_dict(cfg: RunConfig) -> dict:
    """The fully defaulted, JSON-serializable configuration."""
    return cfg.resolved
