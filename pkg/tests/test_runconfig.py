import json

import numpy as np
import pytest

from qflip.ppo import PpoHyperparams, TrainSchedule
from qflip.measurement import DetectorModel
from qflip.rl_env import EnvConfig
from qflip.runconfig import (
    ConfigError,
    default_config,
    detector,
    env_config,
    fingerprint,
    hyperparams,
    load_config,
    schedule,
)


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def base_config():
    return {
        "schema_version": 1,
        "env": {"n_steps": 20, "total_time_s": 300e-6, "omega_hz": 3300.0,
                "delta_max_over_omega": 2.0},
        "ppo": {"learning_rate": 1e-4},
        "schedule": {"pretrain_episodes": 64, "finetune_episodes": 64},
        "detector": {"lambda_bright": 10.0},
        "seed": 0,
    }


def test_load_config_round_trip(tmp_path):
    path = write_config(tmp_path, base_config())
    cfg = load_config(path)
    assert cfg["env"]["n_steps"] == 20
    assert cfg["seed"] == 0


def test_load_config_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_config_rejects_unknown_keys(tmp_path):
    cfg = base_config()
    cfg["bogus_key"] = 1
    with pytest.raises(ConfigError, match="bogus_key"):
        load_config(write_config(tmp_path, cfg))
    cfg = base_config()
    cfg["env"]["omega"] = 1.0  # must be omega_hz
    with pytest.raises(ConfigError, match="omega"):
        load_config(write_config(tmp_path, cfg))


def test_load_config_requires_schema_version(tmp_path):
    cfg = base_config()
    cfg["schema_version"] = 2
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(write_config(tmp_path, cfg))
    cfg = base_config()
    del cfg["schema_version"]
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(write_config(tmp_path, cfg))


def test_fingerprint_stable_and_sensitive():
    cfg = base_config()
    fp1 = fingerprint(cfg)
    fp2 = fingerprint(json.loads(json.dumps(cfg)))
    assert fp1 == fp2
    assert len(fp1) == 12
    cfg["seed"] = 1
    assert fingerprint(cfg) != fp1


def test_env_config_unit_conversion():
    cfg = base_config()
    env = env_config(cfg)
    assert env.omega == pytest.approx(2.0 * np.pi * 3300.0)
    assert env.delta_max == pytest.approx(2.0 * env.omega)
    assert env.n_steps == 20
    assert env.total_time == pytest.approx(300e-6)
    assert env.t2 is None
    cfg["env"]["t2_s"] = 0.2
    assert env_config(cfg).t2 == pytest.approx(0.2)


def test_env_config_defaults_and_errors():
    env = env_config({"schema_version": 1})
    assert env.n_steps == 20
    assert env.delta_max == pytest.approx(2.0 * env.omega)
    with pytest.raises(ConfigError):
        env_config({"schema_version": 1, "env": {"n_steps": 0}})


def test_default_config_is_loadable_and_matches_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path, default_config()))
    assert hyperparams(cfg) == PpoHyperparams()
    assert schedule(cfg) == TrainSchedule()
    assert detector(cfg) == DetectorModel()
    env = env_config(cfg)
    want = EnvConfig()
    assert env.omega == pytest.approx(want.omega, rel=1e-12)
    assert env.delta_max == pytest.approx(want.delta_max, rel=1e-12)
    assert (env.n_steps, env.total_time, env.error_halfwidths, env.t2,
            env.success_threshold, env.terminal_bonus,
            env.substeps_per_step) == (
        want.n_steps, want.total_time, want.error_halfwidths, want.t2,
        want.success_threshold, want.terminal_bonus, want.substeps_per_step)


def test_section_builders():
    cfg = base_config()
    hp = hyperparams(cfg)
    assert hp.learning_rate == pytest.approx(1e-4)
    sched = schedule(cfg)
    assert sched.pretrain_episodes == 64
    det = detector(cfg)
    assert det.lambda_bright == pytest.approx(10.0)
    cfg["schedule"]["threshold_stages"] = [[0.9, 0.5], [0.95, 0.5]]
    assert schedule(cfg).threshold_stages == ((0.9, 0.5), (0.95, 0.5))
    cfg["ppo"]["clip_epsilon"] = 2.0
    with pytest.raises(ConfigError):
        hyperparams(cfg)
    cfg2 = base_config()
    cfg2["schedule"]["threshold_stages"] = [[0.9, 0.4]]
    with pytest.raises(ConfigError):
        schedule(cfg2)
    cfg3 = base_config()
    cfg3["detector"]["lambda_bright"] = -1.0
    with pytest.raises(ConfigError):
        detector(cfg3)
