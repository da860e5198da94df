import math

import numpy as np
import pytest

from pubamg import (GreedyResponder, MmdConfig, TwoStageGame, action_values, best_response, exploitability,
                    exploitability_bound, expected_objective, final_stage_value, initial_pbs, minimax_ent,
                    minimax_kl, pbs_step, pubamg_exploitability_two_stage, random_policy, solve_three_stage,
                    solve_two_stage, uniform_policy)
from pubamg.bench import run_worst_case_demo
from pubamg.efg import player_policy
from pubamg.pub import make_pbs
from pubamg.response import simplex_grid

from oracles import brute_force_br_value

NE = np.array([0.4, 0.4, 0.2])
ZERO_SUM = ["perturbed_rps", "kuhn", "rigged_mp", "adversarial_mp"]


def test_action_values_vs_uniform(games):
    rps = games["perturbed_rps"]
    av = action_values(rps, uniform_policy(rps), None, "red")
    assert np.allclose(av.values, [1 / 3, -1 / 3, 0.0], atol=1e-15)
    assert av.reach == pytest.approx(1.0)


def test_action_values_vs_equilibrium_are_zero(games):
    rps = games["perturbed_rps"]
    av = action_values(rps, {"blue": NE, "red": NE}, None, "blue")
    assert np.allclose(av.values, 0.0, atol=1e-15)


def test_final_stage_action_values_are_terminal_payoffs(games, rng):
    kuhn = games["kuhn"]
    pi = random_policy(kuhn, rng)
    av = action_values(kuhn, pi, None, "0:Q:pb")
    # Q against J (win 2 on call) or K (lose 2), weighted by the opponent's chance of betting
    bj, bk = pi["1:J:p"][1], pi["1:K:p"][1]
    call = (2 * bj - 2 * bk) / (bj + bk)
    assert np.allclose(av.values, [-1.0, call], atol=1e-12)


def test_zero_reach_infoset_is_flagged(games):
    kuhn = games["kuhn"]
    pi = uniform_policy(kuhn)
    for c in "JQK":
        pi[f"1:{c}:p"] = np.array([1.0, 0.0])  # never bet after a check
    av = action_values(kuhn, pi, None, "0:K:pb")
    assert av.reach == 0.0 and np.all(av.values == 0.0)


def test_best_response_examples(games):
    rps = games["perturbed_rps"]
    assert best_response(rps, {"blue": NE}, 1).value == pytest.approx(0.0, abs=1e-15)
    br = best_response(rps, {"blue": np.ones(3) / 3}, 1)
    assert np.array_equal(br.policy["red"], [1.0, 0.0, 0.0])
    assert br.value == pytest.approx(-1 / 3)


@pytest.mark.parametrize("name", ZERO_SUM)
@pytest.mark.parametrize("responder", [0, 1])
def test_best_response_matches_brute_force(games, rng, name, responder):
    tree = games[name]
    for _ in range(3):
        opp = random_policy(tree, rng, 1 - responder)
        br = best_response(tree, opp, responder)
        assert br.value == pytest.approx(brute_force_br_value(tree, opp, responder), abs=1e-12)
        assert br.value == pytest.approx(expected_objective(tree, {**opp, **br.policy}), abs=1e-10)


@pytest.mark.parametrize("name", ZERO_SUM)
def test_regularized_best_response_is_locally_optimal(games, rng, name):
    tree = games[name]
    obj = minimax_ent(0.3)
    for responder in (0, 1):
        opp = random_policy(tree, rng, 1 - responder)
        br = best_response(tree, opp, responder, obj)
        joint = {**opp, **br.policy}
        base = expected_objective(tree, joint, obj)
        assert br.value == pytest.approx(base, abs=1e-10)
        sign = 1.0 if responder == 0 else -1.0
        for label, delta in br.policy.items():
            n = len(delta)
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    step = min(0.01, delta[j])
                    moved = delta.copy()
                    moved[i] += step
                    moved[j] -= step
                    value = expected_objective(tree, {**joint, label: moved}, obj)
                    assert sign * (value - base) <= 1e-8


def test_exploitability_examples(games):
    rps = games["perturbed_rps"]
    assert exploitability(rps, {"blue": NE, "red": NE}).exploitability == pytest.approx(0.0, abs=1e-12)
    assert exploitability(rps, uniform_policy(rps)).exploitability == pytest.approx(1 / 3)
    assert run_worst_case_demo().exploitability == 1.0


@pytest.mark.parametrize("name", ZERO_SUM)
def test_exploitability_nonnegative(games, rng, name):
    tree = games[name]
    for obj in (None, minimax_ent(0.1), minimax_kl(0.2, random_policy(tree, rng))):
        for _ in range(5):
            report = exploitability(tree, random_policy(tree, rng), obj)
            assert report.exploitability >= -1e-9
            assert report.exploitability == pytest.approx((report.br_value_vs_p1 - report.br_value_vs_p0) / 2)


@pytest.mark.parametrize("alpha", [0.05, 0.1, 0.3, 1.0])
def test_regularized_equilibria_respect_the_bound_on_rps(games, alpha):
    rps = games["perturbed_rps"]
    obj = minimax_ent(alpha)
    trace = solve_two_stage(rps, MmdConfig(min(0.05, alpha), obj, 4000, record_every=4000))
    pi = trace.policies[-1]
    assert exploitability(rps, pi, obj).exploitability < 1e-9
    assert exploitability(rps, pi).exploitability <= exploitability_bound(alpha, rps.horizon, 1 / 3) + 1e-6


def test_regularized_equilibrium_respects_the_bound_on_kuhn(games):
    kuhn = games["kuhn"]
    obj = minimax_ent(0.2)
    trace = solve_three_stage(kuhn, MmdConfig(0.1, obj, 300, record_every=300, warm_start=True))
    pi = trace.policies[-1]
    assert exploitability(kuhn, pi, obj).exploitability < 1e-6
    assert exploitability(kuhn, pi).exploitability <= exploitability_bound(0.2, kuhn.horizon, 1 / 2) + 1e-6


def test_simplex_grid():
    g = simplex_grid(3, 0.005)
    assert g.shape == (20301, 3)
    assert np.allclose(g.sum(axis=1), 1.0)
    assert len(np.unique(np.round(g * 200).astype(int), axis=0)) == len(g)
    with pytest.raises(ValueError):
        simplex_grid(3, 0.3)


def test_pubamg_exploitability_examples(games):
    rps = games["perturbed_rps"]
    resp = GreedyResponder(rps)
    at_ne = pubamg_exploitability_two_stage(rps, {"blue": NE}, resp)
    assert abs(at_ne.exploitability) <= at_ne.tolerance
    assert at_ne.tolerance == pytest.approx(0.02)
    pure = pubamg_exploitability_two_stage(rps, {"blue": np.array([1.0, 0.0, 0.0])}, resp)
    assert pure.br_value_vs_p0 == pytest.approx(-1.0)
    assert pure.exploitability == pytest.approx(0.5, abs=1e-12)
    hot = pubamg_exploitability_two_stage(rps, {"blue": np.array([1.0, 0.0, 0.0])},
                                          GreedyResponder(rps, minimax_ent(1e4)))
    assert hot.exploitability == pytest.approx((1 / 3 + 1) / 2, abs=1e-3)


def test_pubamg_exploitability_with_plain_callable_matches_batch(games):
    rps = games["perturbed_rps"]
    obj = minimax_ent(0.1)
    resp = GreedyResponder(rps, obj)
    rule = {"blue": np.array([0.5, 0.3, 0.2])}
    fast = pubamg_exploitability_two_stage(rps, rule, resp, obj, grid=0.05)
    slow = pubamg_exploitability_two_stage(rps, rule, lambda r: resp(r), obj, grid=0.05)
    assert fast.exploitability == pytest.approx(slow.exploitability, abs=1e-12)


def test_two_stage_structure_checks(games):
    with pytest.raises(ValueError):
        TwoStageGame(games["kuhn"])
    with pytest.raises(ValueError):
        TwoStageGame(games["rigged_mp"])
    game = TwoStageGame(games["perturbed_rps"])
    assert game.announcer == 0 and game.responder == 1


def test_responder_value_matches_best_response(games, rng):
    rps = games["perturbed_rps"]
    game = TwoStageGame(rps)
    for obj in (None, minimax_ent(0.2)):
        blue = random_policy(rps, rng, 0)
        assert game.responder_value(blue["blue"], obj)[0] == pytest.approx(best_response(rps, blue, 1, obj).value,
                                                                           abs=1e-12)


def _second_stage(tree, blue):
    return pbs_step(tree, initial_pbs(tree), {"blue": blue}).successors[0].pbs


def test_final_stage_value_examples(games):
    rps = games["perturbed_rps"]
    assert final_stage_value(rps, _second_stage(rps, NE)) == pytest.approx(0.0, abs=1e-15)
    assert final_stage_value(rps, _second_stage(rps, np.array([1.0, 0.0, 0.0]))) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        final_stage_value(games["kuhn"], initial_pbs(games["kuhn"]))
    with pytest.raises(ValueError):
        final_stage_value(rps, make_pbs(rps, {rps.terminals[0]: 1.0}))


def test_soft_value_brackets_hard_value(games, rng):
    rps = games["perturbed_rps"]
    for _ in range(20):
        pbs = _second_stage(rps, rng.dirichlet(np.ones(3)))
        hard = final_stage_value(rps, pbs)
        for alpha in (0.01, 0.3, 2.0):
            soft = final_stage_value(rps, pbs, minimax_ent(alpha))
            assert hard - alpha * math.log(3) - 1e-12 <= soft <= hard + 1e-12


def test_final_stage_value_matches_best_response_on_kuhn(games, rng):
    kuhn = games["kuhn"]
    obj = minimax_ent(0.2)
    pi = random_policy(kuhn, rng)
    rule = {k: pi[k] for k in ("0:J", "0:Q", "0:K")}
    check = next(s for s in pbs_step(kuhn, initial_pbs(kuhn), rule).successors if s.observation == "p")
    rule1 = {k: pi[k] for k in ("1:J:p", "1:Q:p", "1:K:p")}
    pb = next(s for s in pbs_step(kuhn, check.pbs, rule1).successors if s.observation == "pb")
    value = final_stage_value(kuhn, pb.pbs, obj)
    # brute force: maximize over a fine grid at each of the three call/fold infosets independently
    grid = np.linspace(0, 1, 20001)
    total = 0.0
    for c in "JQK":
        label = f"0:{c}:pb"
        nodes = [h for h in pb.pbs.support if kuhn.nodes[h].infoset == label]
        b = np.array([pb.pbs.belief()[h] for h in nodes])
        calls = np.array([kuhn.nodes[kuhn.nodes[h].children[1]].payoff for h in nodes])
        delta = np.stack([1 - grid, grid], axis=1)
        ent = -np.sum(np.where(delta > 0, delta * np.log(np.where(delta > 0, delta, 1)), 0), axis=1)
        total += np.max(b.sum() * (delta[:, 0] * -1.0) + delta[:, 1] * (b @ calls) + 0.2 * b.sum() * ent)
    assert value == pytest.approx(total, abs=1e-7)
