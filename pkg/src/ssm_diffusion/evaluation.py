"""Comparison of the learned conditional sampler against the exact table:
total variation on decoded cells and Monte Carlo Q-estimates."""

from dataclasses import dataclass

import numpy as np

from . import diffusion as df
from .bellman_loss import conditioning
from .errors import ShapeError
from .mdp import decode_states, encode_action, encode_state


@dataclass
class MetricsReport:
    rows: list          # dicts with s, a, n, tv, q_est, q_exact, q_abs_err
    mean_tv: float
    max_tv: float
    mean_q_err: float
    max_q_err: float
    num_samples: int
    seed: int
    config_digest: str = ""


def empirical_pmf(samples, mdp):
    """Decode each sample vector to its nearest cell and normalize counts."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    cells = decode_states(mdp, samples)
    counts = np.bincount(cells, minlength=mdp.n_states)
    return counts / len(samples)


def tv_distance(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ShapeError(f"pmf shapes differ: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def default_eval_set(mdp, policy, n_max):
    """All (s, pi(s)) pairs at n in {1, n_max/2, n_max} (deduplicated)."""
    ns = sorted({1, max(1, n_max // 2), n_max})
    return [(s, int(policy.table[s]), n)
            for n in ns for s in range(mdp.n_states)]


def sample_condition(trainer, mdp, s, a, n, num_samples, rng):
    """Draw decoded-space samples from the learned model at (s, a, n)."""
    cond = conditioning(trainer, encode_state(mdp, s), encode_action(mdp, a), n)
    return df.sample(trainer.sched, trainer.online, cond, num_samples, rng)


def q_estimate(trainer, mdp, s, a, n, num_samples, rng):
    """Monte Carlo mean of R over decoded samples; returns (mean, stderr)."""
    samples = sample_condition(trainer, mdp, s, a, n, num_samples, rng)
    rewards = mdp.reward[decode_states(mdp, samples)]
    stderr = float(rewards.std(ddof=1) / np.sqrt(num_samples)) \
        if num_samples > 1 else float("inf")
    return float(rewards.mean()), stderr


def eval_model(trainer, mdp, oracle_table, eval_set, num_samples, rng,
               seed=0, config_digest=""):
    if not eval_set:
        raise ValueError("eval_set must be non-empty")
    rows = []
    for s, a, n in eval_set:
        samples = sample_condition(trainer, mdp, s, a, n, num_samples, rng)
        pmf = empirical_pmf(samples, mdp)
        oracle_pmf = oracle_table.d[s, a, n - 1]
        q_est = float(pmf @ mdp.reward)
        q_exact = float(oracle_pmf @ mdp.reward)
        rows.append({
            "s": int(s), "a": int(a), "n": int(n),
            "tv": tv_distance(pmf, oracle_pmf),
            "q_est": q_est, "q_exact": q_exact,
            "q_abs_err": abs(q_est - q_exact),
            "pmf": pmf.tolist(),
        })
    tvs = np.array([r["tv"] for r in rows])
    qerrs = np.array([r["q_abs_err"] for r in rows])
    return MetricsReport(rows=rows, mean_tv=float(tvs.mean()),
                         max_tv=float(tvs.max()), mean_q_err=float(qerrs.mean()),
                         max_q_err=float(qerrs.max()), num_samples=num_samples,
                         seed=seed, config_digest=config_digest)
