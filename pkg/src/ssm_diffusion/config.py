"""Experiment configuration: a single JSON file with sections mirroring the
modules. Every field is validated up front and unknown keys are rejected;
the normalized config (defaults applied) is hashed into a digest carried by
every output file.
"""

import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigurationError


@dataclass
class ExperimentConfig:
    env: dict
    diffusion: dict
    model: dict
    training: dict
    eval: dict


_REQUIRED = object()

_SECTIONS = {
    "env": {
        "type": ("grid", str),
        "width": (_REQUIRED, int),
        "height": (_REQUIRED, int),
        "p_move": (0.8, float),
        "horizon": (_REQUIRED, int),
        # reward/policy default to the bottom-right corner of the grid
        "reward": (None, dict),
        "start": ("uniform", None),
        "policy": (None, dict),
    },
    "diffusion": {
        "K": (32, int),
        "beta_min": (1e-4, float),
        "beta_max": (0.2, float),
        "spacing": ("linear", str),
        "eta_mode": ("simple", str),
        "sigma_mode": ("beta", str),
    },
    "model": {
        "hidden_sizes": ([128, 128], list),
        "activation": ("relu", str),
        "step_embed_dim": (8, int),
        "horizon_encoding": ("onehot", str),
    },
    "training": {
        "steps": (_REQUIRED, int),
        "batch_size": (128, int),
        "lr": (1e-3, float),
        "optimizer": ("adam", str),
        "sync_mode": ("hard", str),
        "sync_period": (500, int),
        "tau": (0.005, float),
        "condition_on": ("current", str),
        "seed": (_REQUIRED, int),
        "buffer_capacity": (1000, int),
        "initial_trajectories": (500, int),
        "collect_every": (10, int),
        "log_every": (100, int),
    },
    "eval": {
        "num_samples": (10000, int),
        "eval_n": (None, None),   # None -> {1, horizon/2, horizon}
        "seed": (0, int),
    },
}


def _validate_section(name, raw):
    spec = _SECTIONS[name]
    unknown = set(raw) - set(spec)
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) in section '{name}': {sorted(unknown)}")
    out = {}
    for key, (default, typ) in spec.items():
        if key not in raw and default is _REQUIRED:
            raise ConfigurationError(f"missing required key '{name}.{key}'")
        val = raw.get(key, default)
        if typ is int and isinstance(val, bool):
            raise ConfigurationError(f"{name}.{key}: expected int, got bool")
        if typ is int and isinstance(val, float) and val.is_integer():
            val = int(val)
        if typ is float and isinstance(val, int):
            val = float(val)
        if typ is not None and val is not None and not isinstance(val, typ):
            raise ConfigurationError(
                f"{name}.{key}: expected {typ.__name__}, got {type(val).__name__}")
        out[key] = val
    return out


def _validate_cellspec(env, key, kinds):
    spec = env[key]
    kind = spec.get("kind")
    if kind not in kinds:
        raise ConfigurationError(
            f"env.{key}.kind must be one of {'|'.join(kinds)}, got {spec}")
    n_states = env["width"] * env["height"]
    if kind in ("goal", "toward_goal"):
        cell = spec.get("cell")
        if (not isinstance(cell, list) or len(cell) != 2
                or not 0 <= cell[0] < env["width"]
                or not 0 <= cell[1] < env["height"]):
            raise ConfigurationError(f"env.{key}.cell invalid: {cell}")
    elif kind == "fixed_action":
        if not isinstance(spec.get("action"), int) or not 0 <= spec["action"] < 4:
            raise ConfigurationError(f"env.{key}.action invalid: {spec}")
    elif kind == "values":
        vals = spec.get("values")
        if not isinstance(vals, list) or len(vals) != n_states:
            raise ConfigurationError(
                f"env.{key}.values must be a list of length {n_states}")
    elif kind == "table":
        table = spec.get("table")
        if not isinstance(table, list) or len(table) != n_states:
            raise ConfigurationError(
                f"env.{key}.table must be a list of length {n_states}")


def validate_config(raw):
    """Apply defaults and check types/ranges; returns an ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigurationError(f"unknown section(s): {sorted(unknown)}")
    sections = {name: _validate_section(name, raw.get(name, {}))
                for name in _SECTIONS}
    env, dif, mdl, trn, evl = (sections[k] for k in
                               ("env", "diffusion", "model", "training", "eval"))
    if env["type"] != "grid":
        raise ConfigurationError(f"env.type: unsupported environment {env['type']!r}")
    if env["width"] < 1 or env["height"] < 1:
        raise ConfigurationError("env.width/env.height must be >= 1")
    if not 0.0 < env["p_move"] <= 1.0:
        raise ConfigurationError(f"env.p_move must be in (0, 1], got {env['p_move']}")
    if env["horizon"] < 1:
        raise ConfigurationError("env.horizon must be >= 1")
    corner = [env["width"] - 1, env["height"] - 1]
    if env["reward"] is None:
        env["reward"] = {"kind": "goal", "cell": corner}
    if env["policy"] is None:
        env["policy"] = {"kind": "toward_goal", "cell": corner}
    _validate_cellspec(env, "reward", ("zero", "goal", "values"))
    _validate_cellspec(env, "policy", ("toward_goal", "fixed_action", "table"))
    if dif["K"] < 1:
        raise ConfigurationError("diffusion.K must be >= 1")
    if not 0.0 < dif["beta_min"] <= dif["beta_max"] < 1.0:
        raise ConfigurationError("diffusion: need 0 < beta_min <= beta_max < 1")
    if dif["eta_mode"] not in ("simple", "paper"):
        raise ConfigurationError(f"diffusion.eta_mode: {dif['eta_mode']!r}")
    if dif["sigma_mode"] not in ("posterior", "beta"):
        raise ConfigurationError(f"diffusion.sigma_mode: {dif['sigma_mode']!r}")
    if mdl["horizon_encoding"] not in ("scalar", "onehot"):
        raise ConfigurationError(
            f"model.horizon_encoding: {mdl['horizon_encoding']!r}")
    if mdl["activation"] not in ("relu", "tanh"):
        raise ConfigurationError(f"model.activation: {mdl['activation']!r}")
    if not mdl["hidden_sizes"] or any(int(h) < 1 for h in mdl["hidden_sizes"]):
        raise ConfigurationError("model.hidden_sizes must be positive ints")
    if trn["condition_on"] not in ("current", "next"):
        raise ConfigurationError(f"training.condition_on: {trn['condition_on']!r}")
    if trn["optimizer"] not in ("sgd", "adam"):
        raise ConfigurationError(f"training.optimizer: {trn['optimizer']!r}")
    if trn["sync_mode"] not in ("hard", "polyak"):
        raise ConfigurationError(f"training.sync_mode: {trn['sync_mode']!r}")
    if trn["steps"] < 0:
        raise ConfigurationError("training.steps must be >= 0")
    if trn["batch_size"] < 1 or trn["buffer_capacity"] < 1:
        raise ConfigurationError("training.batch_size/buffer_capacity must be >= 1")
    if trn["initial_trajectories"] < 1:
        raise ConfigurationError("training.initial_trajectories must be >= 1")
    if evl["num_samples"] < 1:
        raise ConfigurationError("eval.num_samples must be >= 1")
    if evl["eval_n"] is not None:
        ns = evl["eval_n"]
        if (not isinstance(ns, list) or not ns
                or any(not isinstance(n, int) or not 1 <= n <= env["horizon"]
                       for n in ns)):
            raise ConfigurationError(
                f"eval.eval_n must be ints in [1, horizon], got {ns}")
    return ExperimentConfig(env=env, diffusion=dif, model=mdl, training=trn,
                            eval=evl)


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(raw)


def config_digest(cfg):
    """Stable sha256 over the normalized config."""
    payload = {"env": cfg.env, "diffusion": cfg.diffusion, "model": cfg.model,
               "training": cfg.training, "eval": cfg.eval}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
