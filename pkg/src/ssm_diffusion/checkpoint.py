"""Checkpoint persistence: a text key-value header followed by binary
little-endian float64 parameter blocks and int64 replay-buffer blocks.

The checkpoint captures everything training touches (networks, optimizer
moments, rng state, buffer contents), so a resumed run reproduces an
uninterrupted one bit-exactly.
"""

import json
from dataclasses import dataclass

import numpy as np

from .approximator import MlpParams, OptState
from .errors import FormatError
from .mdp import Trajectory

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config_digest: str
    sched_meta: dict        # K, beta_min, beta_max, eta_mode
    model_meta: dict        # layer_sizes, activation
    trainer_meta: dict      # condition_on, sync_mode, sync_period, tau,
                            # step_count, n_max, step_dim, x_dim, eta_mode
    opt_meta: dict          # optimizer, lr, beta1, beta2, eps, step_count
    rng_state: dict
    online: MlpParams
    target: MlpParams
    opt_m: list             # [(mW, mb), ...] or []
    opt_v: list
    trajectories: list      # of Trajectory


def _param_blocks(params):
    return ([w for w in params.weights] + [b for b in params.biases])


def _moment_blocks(moments):
    out = []
    for mw, mb in moments:
        out.append(mw)
        out.append(mb)
    return out


def save_checkpoint(path, ck):
    f64_blocks = (_param_blocks(ck.online) + _param_blocks(ck.target)
                  + _moment_blocks(ck.opt_m) + _moment_blocks(ck.opt_v))
    f64_bytes = b"".join(a.astype("<f8").tobytes() for a in f64_blocks)
    horizon = ck.trajectories[0].horizon if ck.trajectories else 0
    ints = []
    for traj in ck.trajectories:
        ints.append(np.asarray(traj.states, dtype="<i8"))
        ints.append(np.asarray(traj.actions, dtype="<i8"))
        ints.append(np.array([traj.episode_id], dtype="<i8"))
    i64_bytes = b"".join(a.tobytes() for a in ints)
    header = {
        "config_digest": ck.config_digest,
        "sched": ck.sched_meta,
        "model": ck.model_meta,
        "trainer": ck.trainer_meta,
        "opt": ck.opt_meta,
        "rng": ck.rng_state,
        "n_trajectories": len(ck.trajectories),
        "horizon": horizon,
        "f64_bytes": len(f64_bytes),
        "i64_bytes": len(i64_bytes),
    }
    head = (f"ssm-diffusion-checkpoint v{FORMAT_VERSION}\n"
            + json.dumps(header, sort_keys=True) + "\nEND\n").encode()
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(f64_bytes)
        fh.write(i64_bytes)


def _take_f64(buf, offset, shape):
    count = int(np.prod(shape))
    nbytes = count * 8
    if offset + nbytes > len(buf):
        raise FormatError(f"truncated checkpoint at offset {offset}")
    arr = np.frombuffer(buf, dtype="<f8", count=count, offset=offset)
    return arr.reshape(shape).copy(), offset + nbytes


def _take_i64(buf, offset, count):
    nbytes = count * 8
    if offset + nbytes > len(buf):
        raise FormatError(f"truncated checkpoint at offset {offset}")
    arr = np.frombuffer(buf, dtype="<i8", count=count, offset=offset)
    return arr.astype(int), offset + nbytes


def _read_params(buf, offset, sizes, activation):
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w, offset = _take_f64(buf, offset, (fan_out, fan_in))
        weights.append(w)
    for fan_out in sizes[1:]:
        b, offset = _take_f64(buf, offset, (fan_out,))
        biases.append(b)
    return MlpParams(layer_sizes=list(sizes), weights=weights, biases=biases,
                     activation=activation), offset


def _read_moments(buf, offset, sizes):
    out = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        mw, offset = _take_f64(buf, offset, (fan_out, fan_in))
        mb, offset = _take_f64(buf, offset, (fan_out,))
        out.append((mw, mb))
    return out, offset


def load_checkpoint(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    end = buf.find(b"\nEND\n")
    if end < 0:
        raise FormatError("missing END marker in checkpoint header")
    lines = buf[:end].decode().split("\n", 1)
    if lines[0] != f"ssm-diffusion-checkpoint v{FORMAT_VERSION}":
        raise FormatError(f"unsupported checkpoint version line {lines[0]!r}")
    header = json.loads(lines[1])
    offset = end + 5
    expected = offset + header["f64_bytes"] + header["i64_bytes"]
    if len(buf) < expected:
        raise FormatError(
            f"truncated checkpoint: {len(buf)} bytes, expected {expected}")
    sizes = header["model"]["layer_sizes"]
    activation = header["model"]["activation"]
    online, offset = _read_params(buf, offset, sizes, activation)
    target, offset = _read_params(buf, offset, sizes, activation)
    if header["opt"]["optimizer"] == "adam":
        opt_m, offset = _read_moments(buf, offset, sizes)
        opt_v, offset = _read_moments(buf, offset, sizes)
    else:
        opt_m, opt_v = [], []
    trajectories = []
    H = header["horizon"]
    for _ in range(header["n_trajectories"]):
        states, offset = _take_i64(buf, offset, H + 1)
        actions, offset = _take_i64(buf, offset, H)
        eid, offset = _take_i64(buf, offset, 1)
        trajectories.append(Trajectory(states=states, actions=actions,
                                       episode_id=int(eid[0])))
    return Checkpoint(config_digest=header["config_digest"],
                      sched_meta=header["sched"], model_meta=header["model"],
                      trainer_meta=header["trainer"], opt_meta=header["opt"],
                      rng_state=header["rng"], online=online, target=target,
                      opt_m=opt_m, opt_v=opt_v, trajectories=trajectories)


def opt_state_from_checkpoint(ck):
    meta = ck.opt_meta
    return OptState(optimizer=meta["optimizer"], lr=meta["lr"],
                    beta1=meta["beta1"], beta2=meta["beta2"], eps=meta["eps"],
                    step_count=meta["step_count"], m=ck.opt_m, v=ck.opt_v)
