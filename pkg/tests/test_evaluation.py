import numpy as np
import pytest

from ssm_diffusion import bellman_loss as bl
from ssm_diffusion import diffusion as df
from ssm_diffusion import evaluation as ev
from ssm_diffusion import mdp as m
from ssm_diffusion import oracle as orc
from ssm_diffusion.errors import NumericError, ShapeError


def sample_from_pmf(pmf, mdp, count, rng):
    """Inverse-CDF draw of cells, returned as encoded cell centers."""
    cells = rng.choice(mdp.n_states, size=count, p=pmf)
    return np.array([m.encode_state(mdp, s) for s in cells])


def test_empirical_pmf_point_mass():
    g = m.gridworld_new(3, 3, horizon=2)
    samples = np.tile(m.encode_state(g, 4), (50, 1))
    pmf = ev.empirical_pmf(samples, g)
    assert pmf[4] == 1.0 and pmf.sum() == pytest.approx(1.0)


def test_empirical_pmf_normalized():
    g = m.gridworld_new(4, 4, horizon=2)
    samples = np.random.default_rng(0).uniform(-1, 1, size=(1000, 2))
    pmf = ev.empirical_pmf(samples, g)
    assert pmf.sum() == pytest.approx(1.0)
    assert np.all(pmf >= 0.0)


def test_empirical_pmf_rejects_nonfinite():
    g = m.gridworld_new(3, 3, horizon=2)
    with pytest.raises(NumericError):
        ev.empirical_pmf(np.array([[np.inf, 0.0]]), g)


def test_empirical_pmf_roundtrip_from_oracle():
    g = m.gridworld_new(4, 4, p_move=0.8, horizon=4)
    pol = m.policy_toward_goal(g, (3, 3))
    table = orc.exact_ssm(g, pol, 4)
    target = table.d[0, pol.table[0], 3]
    samples = sample_from_pmf(target, g, 10_000, np.random.default_rng(1))
    pmf = ev.empirical_pmf(samples, g)
    assert ev.tv_distance(pmf, target) < 0.02


def test_tv_distance_values():
    assert ev.tv_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert ev.tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert ev.tv_distance([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.5)


def test_tv_distance_shape_error():
    with pytest.raises(ShapeError):
        ev.tv_distance([1.0], [0.5, 0.5])


def test_default_eval_set():
    g = m.gridworld_new(3, 3, horizon=8)
    pol = m.policy_toward_goal(g, (2, 2))
    es = ev.default_eval_set(g, pol, 8)
    assert len(es) == 3 * g.n_states
    assert {n for _, _, n in es} == {1, 4, 8}
    assert all(a == pol.table[s] for s, a, _ in es)


def make_untrained(horizon=4):
    g = m.gridworld_new(4, 4, p_move=0.8, horizon=horizon,
                        reward=m.goal_reward(4, 4, (3, 3)))
    pol = m.policy_toward_goal(g, (3, 3))
    sched = df.make_schedule(8, 0.01, 0.2)
    trainer = bl.make_trainer(sched, n_max=horizon, hidden_sizes=(16,), seed=0)
    table = orc.exact_ssm(g, pol, horizon)
    return trainer, g, pol, table


def test_eval_model_report_structure():
    trainer, g, pol, table = make_untrained()
    es = ev.default_eval_set(g, pol, 4)[:6]
    report = ev.eval_model(trainer, g, table, es, 200,
                           np.random.default_rng(0), seed=0)
    assert len(report.rows) == 6
    assert 0.0 <= report.mean_tv <= report.max_tv <= 1.0
    for row in report.rows:
        assert 0.0 <= row["tv"] <= 1.0
        assert row["q_abs_err"] == pytest.approx(
            abs(row["q_est"] - row["q_exact"]))


def test_eval_model_requires_nonempty_set():
    trainer, g, pol, table = make_untrained()
    with pytest.raises(ValueError):
        ev.eval_model(trainer, g, table, [], 10, np.random.default_rng(0))


def test_untrained_model_has_large_tv():
    trainer, g, pol, table = make_untrained()
    es = ev.default_eval_set(g, pol, 4)
    report = ev.eval_model(trainer, g, table, es, 500,
                           np.random.default_rng(0))
    assert report.mean_tv > 0.3


def test_q_estimate_constant_reward():
    trainer, g, pol, table = make_untrained()
    g.reward = np.full(g.n_states, 3.0)
    est, stderr = ev.q_estimate(trainer, g, 0, pol.table[0], 2, 200,
                                np.random.default_rng(0))
    assert est == pytest.approx(3.0)
    assert stderr == pytest.approx(0.0)


def test_q_from_oracle_samples_matches_exact_q():
    # harness self-test: oracle-distributed samples reproduce exact Q
    trainer, g, pol, table = make_untrained()
    q = orc.exact_q(table, g)
    rng = np.random.default_rng(2)
    s, a, n = 0, int(pol.table[0]), 4
    samples = sample_from_pmf(table.d[s, a, n - 1], g, 10_000, rng)
    pmf = ev.empirical_pmf(samples, g)
    q_hat = float(pmf @ g.reward)
    p = q[s, a, n - 1]
    se = np.sqrt(max(p * (1 - p), 1e-12) / 10_000)
    assert abs(q_hat - p) < 3 * se + 1e-9


def test_q_estimate_variance_shrinks():
    trainer, g, pol, table = make_untrained()
    rng = np.random.default_rng(3)
    _, se_small = ev.q_estimate(trainer, g, 0, pol.table[0], 2, 100, rng)
    _, se_big = ev.q_estimate(trainer, g, 0, pol.table[0], 2, 10_000, rng)
    assert se_big < se_small


def test_eval_deterministic_given_seed():
    trainer, g, pol, table = make_untrained()
    es = ev.default_eval_set(g, pol, 4)[:4]
    r1 = ev.eval_model(trainer, g, table, es, 100, np.random.default_rng(5))
    r2 = ev.eval_model(trainer, g, table, es, 100, np.random.default_rng(5))
    assert r1.rows == r2.rows
    assert r1.mean_tv == r2.mean_tv
