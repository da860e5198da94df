import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pubamg import (MmdConfig, exploitability, greedy_policy, minimax_ent, mmd_step, solve, solve_three_stage,
                    solve_two_stage, unregularized)
from pubamg.objectives import entropy

from oracles import numeric_proximal_max


def test_mmd_step_examples():
    out = mmd_step([0.5, 0.5], [1.0, 0.0], eta=1.0, alpha=1.0)
    assert out == pytest.approx([0.6225, 0.3775], abs=1e-4)
    pi = np.array([0.2, 0.3, 0.5])
    q = np.array([0.3, -1.0, 2.0])
    plain = pi * np.exp(0.7 * q)
    assert mmd_step(pi, q, 0.7, 0.0) == pytest.approx(plain / plain.sum(), abs=1e-15)
    shrink = pi ** (1 / 1.35)
    assert mmd_step(pi, np.zeros(3), 0.7, 0.5) == pytest.approx(shrink / shrink.sum(), abs=1e-15)


def test_mmd_step_domain_errors():
    with pytest.raises(ValueError):
        mmd_step([1.0, 0.0], [0.0, 0.0], 0.1, 0.1)
    with pytest.raises(ValueError):
        mmd_step([0.5, 0.5], [0.0, 0.0], 0.1, 0.1, rho=[1.0, 0.0])
    with pytest.raises(ValueError):
        mmd_step([0.5, 0.5], [0.0, 0.0], 0.0, 0.1)


def test_greedy_policy_examples():
    assert greedy_policy([1.0, 0.0], 1.0) == pytest.approx([0.7311, 0.2689], abs=1e-4)
    assert np.array_equal(greedy_policy([2.0, 2.0, 1.0], 0.0), [0.5, 0.5, 0.0])
    rho = np.array([0.1, 0.6, 0.3])
    assert greedy_policy([1.0, -2.0, 0.5], 1e6, rho) == pytest.approx(rho, abs=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_closed_form_matches_numeric_maximizer(n, seed):
    rng = np.random.default_rng(seed)
    pi_t = 0.9 * rng.dirichlet(np.ones(n)) + 0.1 / n
    rho = 0.8 * rng.dirichlet(np.ones(n)) + 0.2 / n
    q = rng.normal(size=n)
    eta, alpha = rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.0)
    assert np.abs(mmd_step(pi_t, q, eta, alpha, rho) - numeric_proximal_max(pi_t, q, eta, alpha, rho)).max() < 1e-6


def test_fixed_point_is_the_greedy_policy(rng):
    for _ in range(10):
        q = rng.normal(size=4)
        rho = rng.dirichlet(np.ones(4)) * 0.9 + 0.025
        pi = np.ones(4) / 4
        target = greedy_policy(q, 0.05, rho)
        for _ in range(10_000):
            pi = mmd_step(pi, q, 0.1, 0.05, rho)
            if np.abs(pi - target).max() < 1e-10:
                break
        assert np.abs(pi - target).max() < 1e-10


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=5), st.floats(0.0, 0.5))
def test_steps_do_not_decrease_the_regularized_objective(q, alpha):
    q = np.array(q)
    pi = np.ones(len(q)) / len(q)
    value = pi @ q + alpha * entropy(pi)
    for _ in range(50):
        pi = mmd_step(pi, q, 0.05, alpha)
        new = pi @ q + alpha * entropy(pi)
        assert new >= value - 1e-12
        value = new


def test_config_validation():
    obj = minimax_ent(0.1)
    for kwargs in ({"eta": 0.0}, {"outer_iters": 0}, {"record_every": 0}, {"inner_iters": "cube"}):
        with pytest.raises(ValueError):
            MmdConfig(**{"eta": 0.1, "objective": obj, "outer_iters": 5, **kwargs})
    cfg = MmdConfig(0.1, obj, 5)
    assert [cfg.inner_count(t) for t in range(10)] == [1, 2, 2, 2, 3, 3, 3, 3, 3, 4]
    assert MmdConfig(0.1, obj, 5, inner_iters=7).inner_count(100) == 7


def test_trace_records_and_is_deterministic(games):
    rps = games["perturbed_rps"]
    cfg = MmdConfig(0.05, minimax_ent(0.1, "inv:0.1"), 95, record_every=10)
    a, b = solve_two_stage(rps, cfg), solve_two_stage(rps, cfg)
    assert a.iterations == list(range(0, 95, 10)) + [94]
    assert a.alphas[1] == pytest.approx(0.1 / 2)
    assert all(np.array_equal(x, y) for x, y in zip(a.thetas, b.thetas))
    for pi in a.policies:
        assert all(np.isclose(v.sum(), 1.0) for v in pi.values())


def test_two_stage_unregularized_responder_is_argmax(games):
    rps = games["perturbed_rps"]
    trace = solve_two_stage(rps, MmdConfig(0.1, unregularized(), 1))
    assert np.array_equal(trace.policies[0]["red"], [1.0, 0.0, 0.0])  # unique best answer to uniform
    trace = solve_two_stage(rps, MmdConfig(0.1, unregularized(), 2, record_every=1))
    assert set(np.unique(trace.policies[1]["red"])) <= {0.0, 0.5, 1.0}


def test_structural_rejection(games):
    cfg = MmdConfig(0.1, minimax_ent(0.1), 2)
    with pytest.raises(ValueError):
        solve_two_stage(games["kuhn"], cfg)
    with pytest.raises(ValueError):
        solve_three_stage(games["perturbed_rps"], cfg)
    # any alternating three-stage game is accepted, whoever moves first
    assert len(solve_three_stage(games["rigged_mp"], cfg)) == 2


def test_kuhn_constant_temperature_converges(games):
    kuhn = games["kuhn"]
    obj = minimax_ent(0.1)
    trace = solve(kuhn, MmdConfig(0.1, obj, 800, record_every=100, warm_start=True))
    assert exploitability(kuhn, trace.policies[-1], obj).exploitability < 1e-6


def test_uniform_restart_is_the_default(games):
    kuhn = games["kuhn"]
    obj = minimax_ent(0.1)
    cold = solve(kuhn, MmdConfig(0.1, obj, 30, record_every=29))
    warm = solve(kuhn, MmdConfig(0.1, obj, 30, record_every=29, warm_start=True))
    assert not np.allclose(cold.thetas[-1], warm.thetas[-1])
    regs = [exploitability(kuhn, t.policies[-1], obj).exploitability for t in (cold, warm)]
    assert regs[1] < regs[0]
