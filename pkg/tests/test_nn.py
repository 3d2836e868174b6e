import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agropomdp.errors import ShapeError, UsageError
from agropomdp.nn import (
    AdamState,
    GruCell,
    GruSpec,
    MlpNetwork,
    MlpSpec,
    RecurrentQNetwork,
    adam_step,
    architecture_of,
    backprop,
    finite_diff_grad,
    gru_forward,
    init_network,
    mlp_forward,
    value_and_grad,
)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a) + np.abs(b)), 1e-12))


def jitter_biases(net, rng):
    # zero biases can put a pre-activation exactly on the ReLU kink
    for p in net.params:
        if p.ndim == 1:
            p[...] = rng.normal(scale=0.1, size=p.shape)
    return net


def naive_gru(params, window):
    """Step-by-step reference using scalar-friendly formulas."""
    Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh = params
    sig = lambda a: 1.0 / (1.0 + np.exp(-a))  # noqa: E731
    h = np.zeros(Wz.shape[0])
    for x in window:
        z = sig(Wz @ x + Uz @ h + bz)
        r = sig(Wr @ x + Ur @ h + br)
        c = np.tanh(Wh @ x + Uh @ (r * h) + bh)
        h = (1 - z) * h + z * c
    return h


def test_mlp_forward_matches_hand_computation():
    W0 = np.array([[1.0, -1.0], [0.5, 2.0]])
    b0 = np.array([0.0, -1.0])
    W1 = np.array([[1.0, 1.0]])
    b1 = np.array([0.25])
    net = MlpNetwork([W0, W1], [b0, b1])
    x = np.array([2.0, 1.0])
    hidden = np.maximum(W0 @ x + b0, 0)
    assert mlp_forward(net, x) == pytest.approx(W1 @ hidden + b1)


def test_mlp_batch_equals_rows():
    net = init_network((4, 8, 3), seed=1)
    X = np.random.default_rng(0).normal(size=(6, 4))
    batch = net.forward(X)
    for i in range(6):
        np.testing.assert_allclose(batch[i], net.forward(X[i]), rtol=0, atol=1e-14)


def test_init_bounds_and_zero_biases():
    net = init_network(MlpSpec((10, 256, 21)), seed=3)
    for w in net.weights:
        bound = np.sqrt(6.0 / (w.shape[0] + w.shape[1]))
        assert np.abs(w).max() <= bound
        assert np.abs(w).max() > 0.9 * bound
    assert all(not b.any() for b in net.biases)


def test_init_is_seeded():
    a = init_network(GruSpec(10, 8, (16,), 21), seed=5)
    b = init_network(GruSpec(10, 8, (16,), 21), seed=5)
    c = init_network(GruSpec(10, 8, (16,), 21), seed=6)
    assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
    assert not np.array_equal(a.params[0], c.params[0])


def test_gru_matches_reference_loop():
    net = init_network(GruSpec(3, 5, (7,), 4), seed=2)
    window = np.random.default_rng(1).normal(size=(6, 3))
    q, h = gru_forward(net, window)
    np.testing.assert_allclose(h, naive_gru(net.gru.params, window), atol=1e-13)
    np.testing.assert_allclose(q, net.head.forward(h), atol=1e-13)


def test_gru_hidden_in_open_interval_for_bounded_inputs():
    net = init_network(GruSpec(4, 6, (8,), 3), seed=0)
    w = np.random.default_rng(2).uniform(-3, 3, size=(5, 4))
    _, h = net.forward_hidden(w)
    assert np.all(np.abs(h) < 1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.lists(st.floats(-0.99, 0.99), min_size=6, max_size=6))
def test_gru_gates_strictly_between_zero_and_one(x, h):
    cell = init_network(GruSpec(4, 6, (8,), 3), seed=0).gru
    z, r = cell.gates(np.array(x), np.array(h))
    assert np.all((z > 0) & (z < 1)) and np.all((r > 0) & (r < 1))


def test_gru_window_shape_errors():
    net = init_network(GruSpec(3, 4, (5,), 2), seed=0)
    with pytest.raises(ShapeError):
        net.forward(np.zeros((5, 4)))
    with pytest.raises(ShapeError):
        net.forward(np.zeros((0, 3)))


def test_mismatched_layers_rejected():
    with pytest.raises(ShapeError, match="layer 1"):
        MlpNetwork([np.zeros((4, 3)), np.zeros((2, 5))], [np.zeros(4), np.zeros(2)])
    with pytest.raises(ShapeError):
        GruCell([np.zeros((2, 2))] * 8)


def test_backward_without_forward_is_usage_error():
    net = init_network((3, 4, 2), seed=0)
    with pytest.raises(UsageError):
        net.backward(np.zeros(3), np.ones(2))
    net.forward(np.zeros(3), record=True)
    with pytest.raises(UsageError):
        net.backward(np.ones(3), np.ones(2))


@pytest.mark.parametrize("seed", range(5))
def test_mlp_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    net = jitter_biases(init_network((4, 6, 5, 3), seed=seed), rng)
    x = rng.normal(size=(3, 4))
    target = rng.normal(size=(3, 3))
    loss = lambda out: 0.5 * float(np.sum((out - target) ** 2))  # noqa: E731
    _, grads = value_and_grad(net, x, lambda out: (loss(out), out - target))
    num = finite_diff_grad(net, x, loss)
    for g, n in zip(grads, num):
        assert rel_err(g, n) < 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_gru_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    net = jitter_biases(init_network(GruSpec(3, 4, (5,), 2), seed=seed), rng)
    x = rng.normal(size=(2, 4, 3))
    target = rng.normal(size=(2, 2))
    loss = lambda out: 0.5 * float(np.sum((out - target) ** 2))  # noqa: E731
    out = net.forward(x, record=True)
    grads = backprop(net, x, out - target)
    num = finite_diff_grad(net, x, loss)
    for g, n in zip(grads, num):
        assert rel_err(g, n) < 1e-4


def test_finite_diff_restores_parameters():
    net = init_network((2, 3, 1), seed=0)
    before = [p.copy() for p in net.params]
    finite_diff_grad(net, np.ones(2), lambda o: float(o.sum()))
    assert all(np.array_equal(a, b) for a, b in zip(before, net.params))


def test_adam_first_step_moves_by_lr_times_sign():
    p = [np.array([1.0, -2.0, 0.5])]
    g = [np.array([3.0, -0.1, 0.0])]
    state = AdamState.for_params(p, lr=0.01)
    adam_step(p, g, state)
    # bias-corrected first step is lr * g / (|g| + eps)
    np.testing.assert_allclose(p[0], [1.0 - 0.01, -2.0 + 0.01, 0.5], atol=1e-8)


def test_adam_matches_textbook_recurrence():
    rng = np.random.default_rng(0)
    p = [rng.normal(size=(3, 2))]
    ref = p[0].copy()
    state = AdamState.for_params(p, lr=1e-3)
    m = np.zeros_like(ref)
    v = np.zeros_like(ref)
    for t in range(1, 6):
        g = rng.normal(size=ref.shape)
        adam_step(p, [g], state)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 1e-3 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
    np.testing.assert_allclose(p[0], ref, atol=1e-14)


def test_adam_rejects_incongruent_gradients():
    p = [np.zeros(3)]
    with pytest.raises(ShapeError):
        adam_step(p, [np.zeros(4)], AdamState.for_params(p))


def test_architecture_round_trip():
    spec = GruSpec(10, 64, (32, 32), 21)
    net = init_network(spec, 0)
    assert isinstance(net, RecurrentQNetwork)
    assert architecture_of(net) == spec
    assert architecture_of(init_network((5, 7, 2), 0)) == MlpSpec((5, 7, 2))
