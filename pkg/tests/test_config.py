import json

import pytest

from ssm_diffusion.config import config_digest, load_config, validate_config
from ssm_diffusion.errors import ConfigurationError


def minimal_raw(**overrides):
    raw = {
        "env": {"width": 3, "height": 3, "horizon": 4},
        "training": {"steps": 10, "seed": 0},
    }
    for section, vals in overrides.items():
        raw.setdefault(section, {}).update(vals)
    return raw


def test_defaults_applied():
    cfg = validate_config(minimal_raw())
    assert cfg.diffusion["K"] == 32
    assert cfg.training["batch_size"] == 128
    assert cfg.training["condition_on"] == "current"
    assert cfg.env["p_move"] == 0.8


def test_missing_required_key_named():
    raw = minimal_raw()
    del raw["training"]["seed"]
    with pytest.raises(ConfigurationError, match="training.seed"):
        validate_config(raw)


def test_unknown_key_rejected():
    raw = minimal_raw()
    raw["training"]["warmup"] = 10
    with pytest.raises(ConfigurationError, match="warmup"):
        validate_config(raw)
    with pytest.raises(ConfigurationError, match="extra"):
        validate_config({**minimal_raw(), "extra": {}})


def test_range_checks():
    with pytest.raises(ConfigurationError):
        validate_config(minimal_raw(env={"p_move": 0.0}))
    with pytest.raises(ConfigurationError):
        validate_config(minimal_raw(diffusion={"beta_max": 1.0}))
    with pytest.raises(ConfigurationError):
        validate_config(minimal_raw(training={"condition_on": "previous"}))
    with pytest.raises(ConfigurationError):
        validate_config(minimal_raw(env={"reward": {"kind": "goal",
                                                    "cell": [9, 0]}}))
    with pytest.raises(ConfigurationError):
        validate_config(minimal_raw(eval={"eval_n": [0]}))


def test_policy_spec_validation():
    cfg = validate_config(minimal_raw(
        env={"policy": {"kind": "fixed_action", "action": 2}}))
    assert cfg.env["policy"]["action"] == 2
    with pytest.raises(ConfigurationError):
        validate_config(minimal_raw(
            env={"policy": {"kind": "fixed_action", "action": 7}}))
    with pytest.raises(ConfigurationError):
        validate_config(minimal_raw(
            env={"policy": {"kind": "table", "table": [0, 1]}}))


def test_digest_stable_and_sensitive():
    a = config_digest(validate_config(minimal_raw()))
    b = config_digest(validate_config(minimal_raw()))
    assert a == b
    c = config_digest(validate_config(minimal_raw(training={"lr": 0.01})))
    assert c != a


def test_load_config_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(minimal_raw()))
    cfg = load_config(path)
    assert cfg.env["width"] == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(bad)
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")
