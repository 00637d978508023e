"""Run configuration files: strict JSON with unit-suffixed keys.

A config is a JSON object with a required integer ``schema_version``
(currently 1) and optional sections.  Unknown keys anywhere are
rejected, so typos fail loudly instead of silently using defaults.
Physical quantities carry their unit in the key name (``omega_hz``,
``total_time_s``) or are explicit ratios (``delta_max_over_omega``).

``fingerprint`` hashes the canonical form of the parsed config; output
files carry it so results can be traced back to their exact inputs.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .dynamics import OMEGA_DEFAULT
from .measurement import DetectorModel
from .ppo import PpoHyperparams, TrainSchedule
from .rl_env import EnvConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """A config file is malformed or inconsistent."""


_ENV_KEYS = {"n_steps", "total_time_s", "omega_hz", "delta_max_over_omega",
             "error_halfwidths", "t2_s", "success_threshold",
             "terminal_bonus", "substeps_per_step"}
_PPO_KEYS = {"learning_rate", "clip_epsilon", "discount", "gae_lambda",
             "update_epochs", "value_coef", "entropy_coef"}
_SCHEDULE_KEYS = {"pretrain_episodes", "finetune_episodes", "batch_episodes",
                  "eval_interval", "threshold_stages"}
_DETECTOR_KEYS = {"lambda_dark", "lambda_bright", "threshold", "prep_error"}
_TOP_KEYS = {"schema_version", "env", "ppo", "schedule", "detector", "seed"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError("%s must be an object" % where)
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError("unknown key(s) in %s: %s"
                          % (where, ", ".join(sorted(unknown))))


def load_config(path) -> dict:
    """Parse and structurally validate a config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("invalid JSON in %s: %s" % (path, exc)) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    _check_keys(raw, _TOP_KEYS, "config")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version must be %d, got %r"
                          % (SCHEMA_VERSION, version))
    _check_keys(raw.get("env", {}), _ENV_KEYS, "env")
    _check_keys(raw.get("ppo", {}), _PPO_KEYS, "ppo")
    _check_keys(raw.get("schedule", {}), _SCHEDULE_KEYS, "schedule")
    _check_keys(raw.get("detector", {}), _DETECTOR_KEYS, "detector")
    return raw


def fingerprint(config: dict) -> str:
    """Short sha256 of the canonical config encoding."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def default_config() -> dict:
    """Complete config template spelling out the library defaults.

    Built from the dataclass defaults themselves so the template cannot
    drift; dump it with json.dumps, edit, and feed to the CLI.
    """
    env = EnvConfig()
    hp = PpoHyperparams()
    sched = TrainSchedule()
    det = DetectorModel()
    return {
        "schema_version": SCHEMA_VERSION,
        "env": {
            "n_steps": env.n_steps,
            "total_time_s": env.total_time,
            "omega_hz": env.omega / (2.0 * np.pi),
            "delta_max_over_omega": env.delta_max / env.omega,
            "error_halfwidths": list(env.error_halfwidths),
            "t2_s": env.t2,
            "success_threshold": env.success_threshold,
            "terminal_bonus": env.terminal_bonus,
            "substeps_per_step": env.substeps_per_step,
        },
        "ppo": {
            "learning_rate": hp.learning_rate,
            "clip_epsilon": hp.clip_epsilon,
            "discount": hp.discount,
            "gae_lambda": hp.gae_lambda,
            "update_epochs": hp.update_epochs,
            "value_coef": hp.value_coef,
            "entropy_coef": hp.entropy_coef,
        },
        "schedule": {
            "pretrain_episodes": sched.pretrain_episodes,
            "finetune_episodes": sched.finetune_episodes,
            "batch_episodes": sched.batch_episodes,
            "eval_interval": sched.eval_interval,
            "threshold_stages": [list(p) for p in sched.threshold_stages],
        },
        "detector": {
            "lambda_dark": det.lambda_dark,
            "lambda_bright": det.lambda_bright,
            "threshold": det.threshold,
            "prep_error": det.prep_error,
        },
        "seed": 0,
    }


def env_config(config: dict) -> EnvConfig:
    """Build the environment layout from the ``env`` section."""
    sec = config.get("env", {})
    kwargs = {}
    if "n_steps" in sec:
        kwargs["n_steps"] = int(sec["n_steps"])
    if "total_time_s" in sec:
        kwargs["total_time"] = float(sec["total_time_s"])
    omega = 2.0 * np.pi * float(sec["omega_hz"]) if "omega_hz" in sec else OMEGA_DEFAULT
    kwargs["omega"] = omega
    kwargs["delta_max"] = float(sec.get("delta_max_over_omega", 2.0)) * omega
    if "error_halfwidths" in sec:
        kwargs["error_halfwidths"] = tuple(sec["error_halfwidths"])
    if "t2_s" in sec and sec["t2_s"] is not None:
        kwargs["t2"] = float(sec["t2_s"])
    if "success_threshold" in sec:
        kwargs["success_threshold"] = float(sec["success_threshold"])
    if "terminal_bonus" in sec:
        kwargs["terminal_bonus"] = float(sec["terminal_bonus"])
    if "substeps_per_step" in sec:
        kwargs["substeps_per_step"] = int(sec["substeps_per_step"])
    try:
        return EnvConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError("bad env section: %s" % exc) from exc


def hyperparams(config: dict) -> PpoHyperparams:
    try:
        return PpoHyperparams(**config.get("ppo", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad ppo section: %s" % exc) from exc


def schedule(config: dict) -> TrainSchedule:
    sec = dict(config.get("schedule", {}))
    if "threshold_stages" in sec:
        sec["threshold_stages"] = tuple(tuple(p) for p in sec["threshold_stages"])
    try:
        return TrainSchedule(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad schedule section: %s" % exc) from exc


def detector(config: dict) -> DetectorModel:
    try:
        return DetectorModel(**config.get("detector", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad detector section: %s" % exc) from exc
