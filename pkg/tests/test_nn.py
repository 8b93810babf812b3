import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfcrl.nn import AdamState, DivergenceError, Mlp, adam_step, finite_difference_check


def test_param_count_and_layout():
    net = Mlp(3, [20, 20, 20], 1)
    assert net.num_params == 3 * 20 + 20 + 2 * (20 * 20 + 20) + 20 + 1
    assert net.layout == {"n_in": 3, "hidden": [20, 20, 20], "n_out": 1}


def test_glorot_init_bounds(rng):
    net = Mlp(4, [10], 2, rng=rng)
    (W1, b1), (W2, b2) = net.layers()
    assert np.all(np.abs(W1) <= np.sqrt(6 / 14))
    assert np.all(np.abs(W2) <= np.sqrt(6 / 12))
    assert not b1.any() and not b2.any()


def test_forward_matches_manual(rng):
    net = Mlp(2, [3], 1, rng=rng)
    (W1, b1), (W2, b2) = net.layers()
    x = rng.standard_normal((4, 2))
    ref = np.tanh(x @ W1.T + b1) @ W2.T + b2
    np.testing.assert_allclose(net.forward(x), ref, rtol=1e-14)
    np.testing.assert_allclose(net.forward(x[0]), ref[0], rtol=1e-14)


def test_wrong_width_rejected():
    net = Mlp(2, [3], 1)
    with pytest.raises(ValueError):
        net.forward(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        Mlp(2, [3], 1, params=np.zeros(4))


def test_blocked_backward_matches_single_block(rng):
    net = Mlp(3, [7, 7], 2, rng=rng)
    x = rng.standard_normal((5000, 3))
    cot = rng.standard_normal((5000, 2))
    _, acts = net.forward(x, keep=True)
    g_blocked, gx_blocked = net.backward(acts, cot)
    net.block_rows = 10**9
    g_one, gx_one = net.backward(acts, cot)
    np.testing.assert_allclose(g_blocked, g_one, rtol=1e-11, atol=1e-11)
    np.testing.assert_array_equal(gx_blocked, gx_one)


@settings(max_examples=25, deadline=None)
@given(
    n_in=st.integers(1, 5),
    hidden=st.lists(st.integers(1, 6), min_size=1, max_size=3),
    n_out=st.integers(1, 3),
    rows=st.integers(1, 4),
    seed=st.integers(0, 2**31 - 1),
)
def test_gradients_vs_finite_differences(n_in, hidden, n_out, rows, seed):
    rng = np.random.default_rng(seed)
    net = Mlp(n_in, hidden, n_out, rng=rng)
    net.params = net.params + 0.1 * rng.standard_normal(net.num_params)
    x = rng.standard_normal((rows, n_in))
    cot = rng.standard_normal((rows, n_out))
    assert finite_difference_check(net, x, 1e-5, cot) <= 1e-4


def test_fd_step_range():
    net = Mlp(1, [2], 1)
    with pytest.raises(ValueError):
        finite_difference_check(net, np.zeros((1, 1)), step=1e-2)


def test_adam_first_step_is_signed_lr():
    # bias correction makes the first update lr * g / (|g| + eps)
    st_ = AdamState(lr=0.01, size=3)
    p = adam_step(st_, np.zeros(3), np.array([2.0, -0.5, 0.0]))
    np.testing.assert_allclose(p, [-0.01, 0.01, 0.0], rtol=1e-6)
    assert st_.step_count == 1


@settings(max_examples=30, deadline=None)
@given(
    mag=st.floats(1e-3, 1e3),
    signs=st.lists(st.sampled_from([-1.0, 1.0]), min_size=1, max_size=60),
    lr=st.floats(1e-5, 1e-1),
)
def test_adam_step_bounded_for_constant_magnitude(mag, signs, lr):
    state = AdamState(lr=lr, size=1)
    p = np.zeros(1)
    for s in signs:
        new = adam_step(state, p, np.array([s * mag]))
        assert np.max(np.abs(new - p)) <= lr * (1 + 1e-6)
        p = new


def test_adam_non_finite_leaves_state():
    state = AdamState(lr=0.1, size=2)
    adam_step(state, np.zeros(2), np.ones(2))
    m, v = state.m.copy(), state.v.copy()
    with pytest.raises(DivergenceError):
        adam_step(state, np.zeros(2), np.array([np.nan, 1.0]))
    assert state.step_count == 1
    np.testing.assert_array_equal(state.m, m)
    np.testing.assert_array_equal(state.v, v)


def test_adam_minimizes_quadratic():
    state = AdamState(lr=0.05, size=2)
    p = np.array([3.0, -2.0])
    for _ in range(2000):
        p = adam_step(state, p, 2 * p)
    assert np.max(np.abs(p)) < 1e-2
