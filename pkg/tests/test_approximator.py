import numpy as np
import pytest

from ssm_diffusion import approximator as ap
from ssm_diffusion.errors import ConfigurationError, NumericError, ShapeError


def quadratic_loss(target):
    def fn(out):
        resid = out - target
        return float(resid @ resid), 2.0 * resid
    return fn


def test_init_deterministic():
    p1 = ap.mlp_init([2, 1], seed=7)
    p2 = ap.mlp_init([2, 1], seed=7)
    for a, b in zip(p1.weights + p1.biases, p2.weights + p2.biases):
        assert np.array_equal(a, b)


def test_init_shapes():
    p = ap.mlp_init([3, 4, 2], seed=0)
    assert p.weights[0].shape == (4, 3)
    assert p.weights[1].shape == (2, 4)
    assert p.biases[0].shape == (4,)
    assert p.biases[1].shape == (2,)


def test_init_rejects_bad_sizes():
    with pytest.raises(ConfigurationError):
        ap.mlp_init([2], seed=0)
    with pytest.raises(ConfigurationError):
        ap.mlp_init([2, 0, 1], seed=0)


def test_init_scale_follows_fan_in():
    p = ap.mlp_init([100, 50], seed=3)
    assert np.max(np.abs(p.weights[0])) <= 1.0 / np.sqrt(100)
    assert np.all(p.biases[0] == 0.0)


def test_forward_zero_params_zero_output():
    p = ap.mlp_init([3, 5, 2], seed=0)
    for w in p.weights:
        w[:] = 0.0
    out, _ = ap.mlp_forward(p, np.array([1.0, -2.0, 3.0]))
    assert np.array_equal(out, np.zeros(2))


def test_forward_affine_1layer():
    p = ap.MlpParams(layer_sizes=[1, 1], weights=[np.array([[2.0]])],
                     biases=[np.array([1.0])], activation="relu")
    out, _ = ap.mlp_forward(p, np.array([3.0]))
    assert out[0] == pytest.approx(7.0)


def test_forward_tanh_odd_symmetry():
    # zero biases + tanh: f(-x) = -f(x)
    p = ap.mlp_init([3, 6, 2], activation="tanh", seed=11)
    x = np.array([0.4, -0.7, 1.1])
    out_pos, _ = ap.mlp_forward(p, x)
    out_neg, _ = ap.mlp_forward(p, -x)
    np.testing.assert_allclose(out_neg, -out_pos, atol=1e-12)


def test_forward_dim_mismatch():
    p = ap.mlp_init([3, 2], seed=0)
    with pytest.raises(ShapeError):
        ap.mlp_forward(p, np.zeros(4))


def test_forward_batched_matches_rows():
    p = ap.mlp_init([3, 8, 2], seed=5)
    xs = np.random.default_rng(0).normal(size=(4, 3))
    batch_out, _ = ap.mlp_forward(p, xs)
    for r in range(4):
        row_out, _ = ap.mlp_forward(p, xs[r])
        np.testing.assert_allclose(batch_out[r], row_out, rtol=1e-14)


def test_backward_zero_grad():
    p = ap.mlp_init([2, 4, 3], seed=1)
    _, cache = ap.mlp_forward(p, np.array([0.5, -0.5]))
    g = ap.mlp_backward(p, cache, np.zeros(3))
    for arr in g.weights + g.biases:
        assert np.all(arr == 0.0)


def test_backward_affine_outer_product():
    p = ap.MlpParams(layer_sizes=[2, 2],
                     weights=[np.array([[1.0, 2.0], [3.0, 4.0]])],
                     biases=[np.zeros(2)], activation="relu")
    x = np.array([0.3, -0.8])
    _, cache = ap.mlp_forward(p, x)
    g_out = np.array([1.5, -2.5])
    g = ap.mlp_backward(p, cache, g_out)
    np.testing.assert_allclose(g.weights[0], np.outer(g_out, x))
    np.testing.assert_allclose(g.biases[0], g_out)


def test_backward_matches_finite_differences():
    p = ap.mlp_init([4, 8, 8, 3], activation="relu", seed=2)
    x = np.random.default_rng(3).normal(size=4)
    err = ap.grad_check(p, x, quadratic_loss(np.array([0.1, -0.2, 0.3])),
                        h=1e-5)
    assert err < 1e-4


def test_grad_check_linear_net_exact():
    p = ap.mlp_init([3, 2], seed=4)
    err = ap.grad_check(p, np.array([1.0, 2.0, -1.0]),
                        quadratic_loss(np.zeros(2)), h=1e-5)
    assert err < 1e-7


def test_grad_check_tanh_tight():
    p = ap.mlp_init([3, 10, 2], activation="tanh", seed=6)
    err = ap.grad_check(p, np.array([0.2, -0.4, 0.9]),
                        quadratic_loss(np.zeros(2)), h=1e-5)
    assert err < 1e-6


def test_grad_check_rejects_zero_h():
    p = ap.mlp_init([2, 1], seed=0)
    with pytest.raises(ConfigurationError):
        ap.grad_check(p, np.zeros(2), quadratic_loss(np.zeros(1)), h=0.0)


def test_sgd_step():
    p = ap.MlpParams(layer_sizes=[1, 1], weights=[np.array([[1.0]])],
                     biases=[np.array([0.0])], activation="relu")
    g = ap.MlpParams(layer_sizes=[1, 1], weights=[np.array([[2.0]])],
                     biases=[np.array([0.0])], activation="relu")
    state = ap.init_opt_state(p, "sgd", lr=0.1)
    p2, state = ap.opt_step(p, g, state)
    assert p2.weights[0][0, 0] == pytest.approx(0.8)
    assert state.step_count == 1


def test_adam_first_step_magnitude():
    # bias-corrected adam step 1 moves each coordinate by ~lr, independent of g
    for scale in (1.0, 100.0):
        p = ap.mlp_init([2, 2], seed=0)
        g = ap.MlpParams(layer_sizes=[2, 2],
                         weights=[np.full((2, 2), scale)],
                         biases=[np.full(2, scale)], activation="relu")
        state = ap.init_opt_state(p, "adam", lr=0.01)
        p2, _ = ap.opt_step(p, g, state)
        np.testing.assert_allclose(p.weights[0] - p2.weights[0], 0.01,
                                   rtol=1e-5)


def test_zero_gradient_is_noop():
    p = ap.mlp_init([3, 4, 1], seed=9)
    zeros = ap.MlpParams(layer_sizes=p.layer_sizes,
                         weights=[np.zeros_like(w) for w in p.weights],
                         biases=[np.zeros_like(b) for b in p.biases],
                         activation="relu")
    for opt in ("sgd", "adam"):
        state = ap.init_opt_state(p, opt, lr=0.1)
        p2, state = ap.opt_step(p, zeros, state)
        for a, b in zip(p.weights + p.biases, p2.weights + p2.biases):
            np.testing.assert_array_equal(a, b)
        assert state.step_count == 1


def test_opt_step_rejects_nonfinite():
    p = ap.mlp_init([2, 1], seed=0)
    g = ap.MlpParams(layer_sizes=[2, 1], weights=[np.array([[np.nan, 0.0]])],
                     biases=[np.zeros(1)], activation="relu")
    state = ap.init_opt_state(p, "sgd", lr=0.1)
    with pytest.raises(NumericError):
        ap.opt_step(p, g, state)


def test_copy_and_polyak():
    a = ap.mlp_init([2, 3, 1], seed=1)
    b = ap.mlp_init([2, 3, 1], seed=2)
    c = ap.copy_params(a)
    assert np.array_equal(c.weights[0], a.weights[0])
    c.weights[0][0, 0] += 1.0
    assert c.weights[0][0, 0] != a.weights[0][0, 0]

    full = ap.polyak_update(a, b, 1.0)
    np.testing.assert_array_equal(full.weights[0], b.weights[0])
    frozen = ap.polyak_update(a, b, 0.0)
    np.testing.assert_array_equal(frozen.weights[0], a.weights[0])

    t = ap.MlpParams([1, 1], [np.array([[0.0]])], [np.zeros(1)], "relu")
    o = ap.MlpParams([1, 1], [np.array([[2.0]])], [np.zeros(1)], "relu")
    half = ap.polyak_update(t, o, 0.5)
    assert half.weights[0][0, 0] == pytest.approx(1.0)


def test_polyak_shape_mismatch():
    with pytest.raises(ShapeError):
        ap.polyak_update(ap.mlp_init([2, 1], seed=0),
                         ap.mlp_init([3, 1], seed=0), 0.5)


def test_params_serialization_roundtrip():
    p = ap.mlp_init([3, 5, 2], activation="tanh", seed=42)
    blob = ap.serialize_params(p)
    q = ap.deserialize_params(blob)
    assert q.layer_sizes == p.layer_sizes
    assert q.activation == "tanh"
    for a, b in zip(p.weights + p.biases, q.weights + q.biases):
        np.testing.assert_array_equal(a, b)
    assert ap.serialize_params(q) == blob


def test_params_deserialize_truncated():
    from ssm_diffusion.errors import FormatError
    blob = ap.serialize_params(ap.mlp_init([3, 5, 2], seed=0))
    with pytest.raises(FormatError):
        ap.deserialize_params(blob[:-16])
