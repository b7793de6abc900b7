"""Finite-horizon tabular gridworld, fixed deterministic policies, and
trajectory collection.

States are cells indexed s = cy * width + cx. Actions: 0=up, 1=down,
2=left, 3=right ("down" increases cy). A move succeeds with probability
p_move, otherwise the agent stays; moving into a wall also stays.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericError

N_ACTIONS = 4
ACTION_DELTAS = ((0, -1), (0, 1), (-1, 0), (1, 0))  # up, down, left, right


@dataclass
class TabularMdp:
    width: int
    height: int
    n_states: int
    n_actions: int
    transition: np.ndarray  # (S, A, S)
    reward: np.ndarray      # (S,)
    horizon: int
    p_move: float
    start: object = "uniform"  # "uniform" or a fixed state index


@dataclass
class Policy:
    kind: str               # "tabular_deterministic"
    table: np.ndarray       # action index per state


@dataclass
class Trajectory:
    states: np.ndarray      # s_0 .. s_H
    actions: np.ndarray     # a_0 .. a_{H-1}
    episode_id: int = 0

    @property
    def horizon(self):
        return len(self.actions)


def gridworld_new(width, height, p_move=1.0, horizon=8, reward=None,
                  start="uniform"):
    if width < 1 or height < 1:
        raise ConfigurationError(f"grid dims must be >= 1, got {width}x{height}")
    if not 0.0 < p_move <= 1.0:
        raise ConfigurationError(f"p_move must be in (0, 1], got {p_move}")
    if horizon < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {horizon}")
    n_states = width * height
    T = np.zeros((n_states, N_ACTIONS, n_states))
    for s in range(n_states):
        cx, cy = s % width, s // width
        for a, (dx, dy) in enumerate(ACTION_DELTAS):
            nx, ny = cx + dx, cy + dy
            if 0 <= nx < width and 0 <= ny < height:
                s2 = ny * width + nx
            else:
                s2 = s  # blocked by wall
            T[s, a, s2] += p_move
            T[s, a, s] += 1.0 - p_move
    if reward is None:
        reward = np.zeros(n_states)
    reward = np.asarray(reward, dtype=float)
    if reward.shape != (n_states,) or not np.all(np.isfinite(reward)):
        raise ConfigurationError("reward must be a finite vector of length S")
    if start != "uniform" and not 0 <= int(start) < n_states:
        raise ConfigurationError(f"start state {start} out of range")
    return TabularMdp(width=width, height=height, n_states=n_states,
                      n_actions=N_ACTIONS, transition=T, reward=reward,
                      horizon=horizon, p_move=p_move, start=start)


def goal_reward(width, height, goal_cell):
    """Indicator reward at one cell, as a length-S vector."""
    gx, gy = goal_cell
    r = np.zeros(width * height)
    r[gy * width + gx] = 1.0
    return r


def policy_fixed_action(mdp, action):
    if not 0 <= action < mdp.n_actions:
        raise ConfigurationError(f"action {action} out of range")
    return Policy(kind="tabular_deterministic",
                  table=np.full(mdp.n_states, action, dtype=int))


def policy_toward_goal(mdp, goal_cell):
    """Move horizontally toward the goal column first, then vertically."""
    gx, gy = goal_cell
    table = np.zeros(mdp.n_states, dtype=int)
    for s in range(mdp.n_states):
        cx, cy = s % mdp.width, s // mdp.width
        if cx < gx:
            table[s] = 3
        elif cx > gx:
            table[s] = 2
        elif cy < gy:
            table[s] = 1
        else:
            table[s] = 0
    return Policy(kind="tabular_deterministic", table=table)


def step(mdp, s, a, rng):
    """Draw s' from T(.|s, a)."""
    if not 0 <= s < mdp.n_states:
        raise IndexError(f"state {s} out of range")
    if not 0 <= a < mdp.n_actions:
        raise IndexError(f"action {a} out of range")
    row = mdp.transition[s, a]
    return int(np.searchsorted(np.cumsum(row), rng.random(), side="right"))


def rollout(mdp, policy, rng, start=None, episode_id=0):
    """One full-horizon episode following the policy."""
    if start is None:
        start = mdp.start
    if start == "uniform":
        s = int(rng.integers(mdp.n_states))
    else:
        s = int(start)
    states = [s]
    actions = []
    for _ in range(mdp.horizon):
        a = int(policy.table[s])
        actions.append(a)
        s = step(mdp, s, a, rng)
        states.append(s)
    return Trajectory(states=np.array(states, dtype=int),
                      actions=np.array(actions, dtype=int),
                      episode_id=episode_id)


def encode_state(mdp, s):
    """Cell center in [-1, 1]^2 (a degenerate axis maps to 0)."""
    if not 0 <= s < mdp.n_states:
        raise IndexError(f"state {s} out of range")
    cx, cy = s % mdp.width, s // mdp.width
    vx = -1.0 + 2.0 * cx / (mdp.width - 1) if mdp.width > 1 else 0.0
    vy = -1.0 + 2.0 * cy / (mdp.height - 1) if mdp.height > 1 else 0.0
    return np.array([vx, vy])


def decode_state(mdp, v):
    """Nearest cell center, clamped to the grid."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NumericError(f"non-finite state vector {v}")
    cx = int(np.clip(round((v[0] + 1.0) * (mdp.width - 1) / 2.0),
                     0, mdp.width - 1)) if mdp.width > 1 else 0
    cy = int(np.clip(round((v[1] + 1.0) * (mdp.height - 1) / 2.0),
                     0, mdp.height - 1)) if mdp.height > 1 else 0
    return cy * mdp.width + cx


def decode_states(mdp, vs):
    """Vectorized decode for a (batch, 2) array of samples."""
    vs = np.asarray(vs, dtype=float)
    if not np.all(np.isfinite(vs)):
        raise NumericError("non-finite sample values")
    if mdp.width > 1:
        cx = np.clip(np.rint((vs[:, 0] + 1.0) * (mdp.width - 1) / 2.0),
                     0, mdp.width - 1).astype(int)
    else:
        cx = np.zeros(len(vs), dtype=int)
    if mdp.height > 1:
        cy = np.clip(np.rint((vs[:, 1] + 1.0) * (mdp.height - 1) / 2.0),
                     0, mdp.height - 1).astype(int)
    else:
        cy = np.zeros(len(vs), dtype=int)
    return cy * mdp.width + cx


def encode_action(mdp, a):
    if not 0 <= a < mdp.n_actions:
        raise IndexError(f"action {a} out of range")
    v = np.zeros(mdp.n_actions)
    v[a] = 1.0
    return v
