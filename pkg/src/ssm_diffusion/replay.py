"""Trajectory store emitting training tuples with the 1/n branch statistics
the two-term loss decomposition requires.

A tuple fixes a remaining-horizon n (uniform over {1..H}), a time index t
with at least n steps left (uniform over {0..H-n}), then draws the future
state x at a uniform offset in {1..n}. The immediate-successor branch
(x == s') therefore fires with probability exactly 1/n. Sampling n first
rather than tying it to the time index (n = H - t) keeps every horizon
value trained on the full visitation distribution: the measure being
learned does not depend on where in the episode the transition occurred,
but with n = H - t the small-n conditions would only ever see late-episode
states.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .mdp import encode_action, encode_state


@dataclass
class TrainTuple:
    s: int
    a: int
    s_next: int
    x: int
    n: int
    is_l1: bool
    s_enc: np.ndarray
    a_enc: np.ndarray
    s_next_enc: np.ndarray
    a_next_enc: np.ndarray  # encoding of policy(s_next)
    x_enc: np.ndarray


class ReplayBuffer:
    """Bounded FIFO of trajectories over one environment/policy pair."""

    def __init__(self, mdp, policy, capacity):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.mdp = mdp
        self.policy = policy
        self.capacity = capacity
        self.trajectories = deque(maxlen=capacity)

    def __len__(self):
        return len(self.trajectories)

    def push_trajectory(self, traj):
        self.trajectories.append(traj)

    def _make_tuple(self, traj, t, n, k):
        s = int(traj.states[t])
        a = int(traj.actions[t])
        s_next = int(traj.states[t + 1])
        x = int(traj.states[t + k])
        a_next = int(self.policy.table[s_next])
        return TrainTuple(
            s=s, a=a, s_next=s_next, x=x, n=n, is_l1=(k == 1),
            s_enc=encode_state(self.mdp, s),
            a_enc=encode_action(self.mdp, a),
            s_next_enc=encode_state(self.mdp, s_next),
            a_next_enc=encode_action(self.mdp, a_next),
            x_enc=encode_state(self.mdp, x))

    def sample_tuple(self, rng):
        """Uniform trajectory, uniform remaining horizon, uniform time index
        among those with enough steps left, uniform future offset."""
        if not self.trajectories:
            raise RuntimeError("cannot sample from an empty replay buffer")
        traj = self.trajectories[int(rng.integers(len(self.trajectories)))]
        n = int(rng.integers(1, traj.horizon + 1))
        t = int(rng.integers(traj.horizon - n + 1))
        k = int(rng.integers(1, n + 1))
        return self._make_tuple(traj, t, n, k)

    def sample_tuple_discounted(self, gamma, rng):
        """Geometric(1 - gamma) future offset truncated to {1..n}; an
        extension mirroring the discounted flow constraint (default off)."""
        if not self.trajectories:
            raise RuntimeError("cannot sample from an empty replay buffer")
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {gamma}")
        traj = self.trajectories[int(rng.integers(len(self.trajectories)))]
        n = int(rng.integers(1, traj.horizon + 1))
        t = int(rng.integers(traj.horizon - n + 1))
        # inverse-CDF draw from Geometric(1-gamma) truncated to {1..n}
        u = rng.random()
        if gamma == 0.0:
            k = 1
        else:
            mass = 1.0 - gamma ** n
            k = int(np.ceil(np.log1p(-u * mass) / np.log(gamma)))
            k = min(max(k, 1), n)
        return self._make_tuple(traj, t, n, k)
