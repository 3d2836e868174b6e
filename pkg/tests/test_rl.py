import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agropomdp.crop import CropEnv, EnvConfig
from agropomdp.errors import ConfigError, ShapeError, StateError
from agropomdp.nn import MlpNetwork, init_network
from agropomdp.rl import (
    AgentConfig,
    Batch,
    DelayedCueEnv,
    Experience,
    QAgent,
    ReplayBuffer,
    TabularQ,
    WindowBuilder,
    bellman_target,
    chain_mdp,
    discounted_return,
    greedy_action,
    push_experience,
    q_learning,
    random_deterministic_mdp,
    run_episode,
    sample_batch,
    select_action,
    soft_update,
    tabular_q_update,
    train_agent,
    train_step,
    value_iteration,
)


def exp(i, L=2, d=1, terminal=False):
    w = np.repeat(np.arange(i, i + L, dtype=float)[:, None], d, axis=1)
    nxt = w + 1.0
    return Experience(w, i % 3, float(i), nxt, terminal)


def fixed_q_agent(q):
    """Agent whose network outputs ``q`` regardless of input."""
    q = np.asarray(q, dtype=float)
    net = MlpNetwork([np.zeros((len(q), 1))], [q])
    return QAgent(net, AgentConfig(warmup=0), seed=0)


# ---------------------------------------------------------------- returns and tables


def test_discounted_return_examples():
    assert discounted_return([1, 1, 1], 0.5) == 1.75
    assert discounted_return([3.0, 5.0, 7.0], 0.0) == 3.0
    assert discounted_return([0, 0, 0], 0.9) == 0.0
    with pytest.raises(ConfigError):
        discounted_return([1], 1.5)


def test_tabular_update_examples():
    t = TabularQ(3, 2)
    t.q[1] = [2.0, -1.0]
    tabular_q_update(t, 0, 1, 1.0, 1, False, 0.5, 0.9)
    assert t.q[0, 1] == pytest.approx(1.4)
    before = t.q.copy()
    tabular_q_update(t, 2, 0, 5.0, 1, True, 1.0, 0.9)
    assert t.q[2, 0] == 5.0
    changed = np.argwhere(t.q != before)
    assert changed.tolist() == [[2, 0]]


def test_tabular_update_rejects_bad_arguments():
    t = TabularQ(2, 2)
    with pytest.raises(IndexError):
        tabular_q_update(t, 2, 0, 0.0, 0, False, 0.5, 0.9)
    with pytest.raises(IndexError):
        tabular_q_update(t, 0, 0, 0.0, -1, False, 0.5, 0.9)
    with pytest.raises(ConfigError):
        tabular_q_update(t, 0, 0, 0.0, 0, False, 0.0, 0.9)


def test_value_iteration_on_chain_matches_closed_form():
    q = value_iteration(chain_mdp(4, 0.9))
    # from the last state, stepping right forever pays 1 per step
    assert q[3, 1] == pytest.approx(10.0)
    assert q[2, 1] == pytest.approx(10.0)
    assert q[1, 1] == pytest.approx(0.9 * 10.0)


def test_q_learning_converges_on_chain():
    mdp = chain_mdp(4, 0.9)
    table = q_learning(mdp, 50_000, np.random.default_rng(0))
    assert np.max(np.abs(table.q - value_iteration(mdp))) < 1e-3


@pytest.mark.parametrize("seed", [1, 2])
def test_q_learning_converges_on_random_sixteen_state_mdp(seed):
    rng = np.random.default_rng(seed)
    mdp = random_deterministic_mdp(16, 3, rng, gamma=0.8)
    table = q_learning(mdp, 150_000, rng)
    assert np.max(np.abs(table.q - value_iteration(mdp))) < 1e-3


# ---------------------------------------------------------------- targets and action selection


def test_bellman_target_examples():
    assert bellman_target(5.0, True, [100.0, 3.0], 0.99) == 5.0
    assert bellman_target(1.0, False, [3.0, 10.0, -1.0], 0.99) == pytest.approx(10.9)
    assert bellman_target(2.5, False, [7.0, 8.0], 0.0) == 2.5


def test_bellman_target_batched_masks_terminals():
    out = bellman_target([1.0, 1.0], [0.0, 1.0], np.array([[3.0, 10.0], [3.0, 10.0]]), 0.5)
    np.testing.assert_allclose(out, [6.0, 1.0])


def test_greedy_selection_and_ties():
    rng = np.random.default_rng(0)
    assert select_action(fixed_q_agent([1, 3, 2]), np.zeros(1), 0.0, rng) == 1
    assert select_action(fixed_q_agent([2, 2, 0]), np.zeros(1), 0.0, rng) == 0


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=2, max_size=21),
    st.floats(0.01, 100),
    st.floats(-100, 100),
)
def test_greedy_invariant_under_positive_affine_maps(q, scale, shift):
    q = np.array(q)
    mapped = scale * q + shift
    # only compare where the map keeps distinct values distinct in float64
    if len(set(mapped)) == len(set(q)):
        assert greedy_action(q) == greedy_action(mapped)


def test_uniform_exploration_frequencies():
    agent = fixed_q_agent(np.arange(21.0))
    rng = np.random.default_rng(42)
    draws = np.array([select_action(agent, np.zeros(1), 1.0, rng) for _ in range(21_000)])
    counts = np.bincount(draws, minlength=21)
    p = 1 / 21
    sigma = np.sqrt(21_000 * p * (1 - p))
    assert np.all(np.abs(counts - 21_000 * p) < 5 * sigma)


def test_select_action_shape_errors():
    agent = fixed_q_agent([0.0, 1.0])
    with pytest.raises(ShapeError):
        select_action(agent, np.zeros((2, 1)), 0.0, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        select_action(agent, np.zeros(1), 1.5, np.random.default_rng(0))


# ---------------------------------------------------------------- replay


def test_buffer_is_fifo():
    buf = ReplayBuffer(2)
    for i in range(3):
        push_experience(buf, exp(i))
    assert [e.reward for e in buf.contents()] == [1.0, 2.0]
    one = ReplayBuffer(5)
    one.push(exp(0))
    assert len(one) == 1


def test_buffer_rejects_unshifted_windows():
    buf = ReplayBuffer(4)
    bad = Experience(np.zeros((2, 1)), 0, 0.0, np.ones((2, 1)), False)
    with pytest.raises(ShapeError):
        buf.push(bad)
    with pytest.raises(ShapeError):
        buf.push(Experience(np.zeros((2, 1)), 0, 0.0, np.zeros((3, 1)), False))


def test_sampling_rules():
    buf = ReplayBuffer(10)
    with pytest.raises(StateError):
        sample_batch(buf, 1, np.random.default_rng(0))
    buf.push(exp(7))
    batch = sample_batch(buf, 4, np.random.default_rng(0))
    assert len(batch) == 4 and all(e.reward == 7.0 for e in batch)
    np.testing.assert_array_equal(batch[0].window_next, exp(7).window_next)


def test_seeded_sampling_is_reproducible_and_uniform():
    buf = ReplayBuffer(10)
    for i in range(10):
        buf.push(exp(i))
    a = buf.sample_batch(32, np.random.default_rng(3))
    b = buf.sample_batch(32, np.random.default_rng(3))
    np.testing.assert_array_equal(a.windows, b.windows)
    draws = [int(e.reward) for e in buf.sample(10_000, np.random.default_rng(1))]
    counts = np.bincount(draws, minlength=10)
    sigma = np.sqrt(10_000 * 0.1 * 0.9)
    assert np.all(np.abs(counts - 1000) < 5 * sigma)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 30))
def test_buffer_size_and_order_after_wraparound(cap, n):
    buf = ReplayBuffer(cap)
    for i in range(n):
        buf.push(exp(i))
    assert len(buf) == min(cap, n)
    assert [e.reward for e in buf.contents()] == [float(i) for i in range(max(0, n - cap), n)]
    if n:
        batch = buf.sample_batch(5, np.random.default_rng(0))
        np.testing.assert_array_equal(batch.next_windows[:, :-1], batch.windows[:, 1:])


# ---------------------------------------------------------------- learning steps


def test_soft_update_examples():
    t = MlpNetwork([np.zeros((1, 1))], [np.zeros(1)])
    e = MlpNetwork([np.full((1, 1), 2.0)], [np.full(1, 2.0)])
    soft_update(t, e, 0.5)
    assert t.weights[0][0, 0] == 1.0
    soft_update(t, e, 1.0)
    assert all(np.array_equal(a, b) for a, b in zip(t.params, e.params))
    with pytest.raises(ShapeError):
        soft_update(t, init_network((1, 2, 1), 0), 0.5)


def test_soft_update_contracts_geometrically():
    src = init_network((3, 4, 2), seed=1)
    tgt = init_network((3, 4, 2), seed=2)
    gap = lambda: np.sqrt(sum(np.sum((a - b) ** 2) for a, b in zip(tgt.params, src.params)))  # noqa: E731
    d0 = gap()
    for k in range(1, 4):
        soft_update(tgt, src, 0.1)
        assert gap() == pytest.approx(d0 * 0.9**k, rel=1e-12)


def test_train_step_requires_warmup():
    agent = QAgent.build(2, 3, False, AgentConfig(warmup=10, hidden=(4,)), seed=0)
    agent.buffer.push(exp(0, L=1, d=2))
    with pytest.raises(StateError):
        train_step(agent, agent.buffer.sample_batch(1, agent.rng))


def test_train_step_zero_td_error_changes_nothing():
    agent = QAgent.build(1, 2, False, AgentConfig(warmup=0, gamma=0.0, hidden=(3,)), seed=0)
    x = np.array([[[0.5]]])
    q = agent.eval_net.forward(x[:, -1])[0]
    batch = Batch(x, np.array([1]), np.array([q[1]]), x.copy(), np.array([1.0]))
    before = [p.copy() for p in agent.eval_net.params]
    assert train_step(agent, batch) == 0.0
    assert all(np.array_equal(a, b) for a, b in zip(before, agent.eval_net.params))


def test_train_step_loss_is_squared_td_error_and_target_is_untouched():
    net = MlpNetwork([np.array([[2.0]])], [np.array([0.5])])
    agent = QAgent(net, AgentConfig(warmup=0, gamma=0.5, lr=1e-3), seed=0)
    target_before = [p.copy() for p in agent.target_net.params]
    w = np.array([[[1.0]]])
    batch = Batch(w, np.array([0]), np.array([1.0]), np.array([[[3.0]]]), np.array([0.0]))
    # target = 1 + 0.5 * (2*3 + 0.5) = 4.25; q = 2.5
    assert train_step(agent, batch) == pytest.approx((4.25 - 2.5) ** 2)
    assert all(np.array_equal(a, b) for a, b in zip(target_before, agent.target_net.params))
    assert not np.array_equal(agent.eval_net.weights[0], [[2.0]])


def test_regression_to_fixed_targets_drives_loss_down():
    cfg = AgentConfig(warmup=0, gamma=0.0, lr=1e-2, hidden=(16,))
    agent = QAgent.build(3, 4, False, cfg, seed=0)
    rng = np.random.default_rng(0)
    w = rng.normal(size=(32, 1, 3))
    batch = Batch(w, rng.integers(0, 4, 32), rng.normal(size=32), w.copy(), np.ones(32))
    losses = [train_step(agent, batch) for _ in range(500)]
    assert losses[-1] < 0.1 * losses[0]


# ---------------------------------------------------------------- episodes


def test_window_padding_repeats_first_observation():
    wb = WindowBuilder(5)
    w = wb.reset(np.array([1.0, 2.0]))
    assert w.shape == (5, 2) and np.all(w == [1.0, 2.0])
    w2 = wb.push(np.array([3.0, 4.0]))
    np.testing.assert_array_equal(w2[:-1], w[1:])
    np.testing.assert_array_equal(w2[-1], [3.0, 4.0])


def small_crop_agent(mode, **kw):
    env = CropEnv(EnvConfig(mode=mode, episode_length=180))
    cfg = AgentConfig(hidden=(8,), gru_hidden=4, batch_size=8, warmup=50, **kw)
    return env, QAgent.build(env.obs_size, env.n_actions, env.mode.recurrent, cfg, seed=3)


def test_train_episode_grows_buffer_by_steps_and_lags_target():
    env, agent = small_crop_agent("POMDP10")
    trace = run_episode(agent, env, "train", eps=0.5)
    # the season ends at harvest or after the step limit, whichever comes first
    assert len(agent.buffer) == len(trace.rewards) == trace.summary.days <= 180
    assert agent.train_steps > 0 and trace.losses
    assert not np.array_equal(agent.target_net.params[0], agent.eval_net.params[0])
    e = agent.buffer.contents()[0]
    assert np.all(e.window_t == e.window_t[0])  # padded start


def test_eval_is_deterministic_and_leaves_networks_alone():
    env, agent = small_crop_agent("MDP10")
    before = [p.copy() for p in agent.eval_net.params]
    a = run_episode(agent, env, "eval")
    b = run_episode(agent, env, "eval")
    assert a.actions == b.actions and a.rewards == b.rewards
    assert all(np.array_equal(x, y) for x, y in zip(before, agent.eval_net.params))
    assert len(agent.buffer) == 0


def test_target_starts_equal_to_eval():
    _, agent = small_crop_agent("POMDP28")
    assert agent.target_net is not agent.eval_net
    assert all(np.array_equal(a, b) for a, b in zip(agent.target_net.params, agent.eval_net.params))


def test_config_validation_and_schedule():
    with pytest.raises(ConfigError):
        AgentConfig(gamma=1.2)
    with pytest.raises(ConfigError):
        AgentConfig(tau=0.0)
    with pytest.raises(ConfigError):
        AgentConfig(batch_size=0)
    c = AgentConfig(episodes=100)
    assert c.epsilon(0) == 1.0 and c.epsilon(30) == pytest.approx(1.0 - 0.95 * 0.5)
    assert c.epsilon(60) == 0.05 and c.epsilon(99) == 0.05


def test_delayed_cue_env():
    env = DelayedCueEnv(length=5, seed=0)
    obs = env.reset()
    assert obs[0] in (-1.0, 1.0)
    rewards = []
    for _ in range(5):
        obs, r, done, _ = env.step(1 if env.cue > 0 else 0)
        rewards.append(r)
    assert done and rewards == [0, 0, 0, 0, 1.0] and obs[0] == 0.0
    with pytest.raises(StateError):
        env.step(0)


def test_selection_keeps_the_best_greedy_weights():
    env, agent = small_crop_agent("MDP10", episodes=6, select_every=2)
    scores = []
    orig = run_episode

    def spy(ag, e, mode="eval", **kw):
        trace = orig(ag, e, mode, **kw)
        if mode == "eval":
            scores.append(trace.total_reward)
        return trace

    import agropomdp.rl.agent as mod

    mod.run_episode = spy
    try:
        train_agent(agent, env)
    finally:
        mod.run_episode = orig
    assert len(scores) == 3
    ep, best = agent.selected
    assert best == max(scores) and ep in (1, 3, 5)
    assert run_episode(agent, env, "eval").total_reward == best
    assert all(np.array_equal(t, e) for t, e in zip(agent.target_net.params, agent.eval_net.params))


def test_selection_off_by_default_and_validated():
    env, agent = small_crop_agent("MDP10", episodes=2)
    train_agent(agent, env)
    assert agent.selected is None
    with pytest.raises(ConfigError):
        AgentConfig(select_every=-1)
