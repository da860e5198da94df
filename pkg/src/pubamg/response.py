"""Best responses, action values and exploitability, in the original game and
in the public-belief game for two-stage trees."""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp, xlogy

from .efg import GameTree, Policy, check_policy
from .objectives import Objective, player_sign
from .pub import DecisionRule, PublicBeliefState, initial_pbs, _settle


class ActionValues(NamedTuple):
    values: np.ndarray
    reach: float  # opponent-and-chance mass of the infoset; 0 means the values are placeholders


@dataclass(frozen=True)
class BestResponseResult:
    policy: Policy
    value: float  # player 0's objective when the responder plays ``policy``


@dataclass(frozen=True)
class ExploitabilityReport:
    br_value_vs_p0: float  # min over player 1 of J(pi_0, .)
    br_value_vs_p1: float  # max over player 0 of J(., pi_1)
    exploitability: float
    tolerance: float = 0.0


def _theta(tree: GameTree, pi: Policy) -> np.ndarray:
    return tree.flat.to_theta(pi)


def action_values(tree: GameTree, pi: Policy, obj: Objective | None, infoset: str) -> ActionValues:
    """Acting player's value of each action at ``infoset`` given joint policy ``pi``.

    The immediate regularizer of the infoset itself is left out; every later
    decision contributes its regularizer as usual.
    """
    check_policy(tree, pi)
    flat = tree.flat
    theta = _theta(tree, pi)
    reach = flat.reach(theta)
    v = flat.values(theta, obj)
    q, den = flat.action_values(reach, v)
    j = flat.infoset_index[infoset]
    lo, hi = flat.offsets[j], flat.offsets[j + 1]
    return ActionValues(q[lo:hi].copy(), float(den[lo]))


def best_response(tree: GameTree, opponent: Policy, responder: int, obj: Objective | None = None) -> BestResponseResult:
    flat = tree.flat
    check_policy(tree, opponent, players=(1 - responder,))
    theta = flat.to_theta(opponent, fill_uniform=True)
    theta, value = flat.best_response(theta, responder, obj)
    return BestResponseResult(flat.to_policy(theta, responder), value)


def exploitability(tree: GameTree, pi: Policy, obj: Objective | None = None) -> ExploitabilityReport:
    flat = tree.flat
    check_policy(tree, pi)
    theta = flat.to_theta(pi)
    _, vs_p0 = flat.best_response(theta, 1, obj)
    _, vs_p1 = flat.best_response(theta, 0, obj)
    return ExploitabilityReport(vs_p0, vs_p1, (vs_p1 - vs_p0) / 2.0)


def exploitability_theta(tree: GameTree, theta: np.ndarray, obj: Objective | None = None) -> float:
    _, vs_p0 = tree.flat.best_response(theta, 1, obj)
    _, vs_p1 = tree.flat.best_response(theta, 0, obj)
    return (vs_p1 - vs_p0) / 2.0


# -- one-decision problems ---------------------------------------------------

def _soft_opt(x: np.ndarray, alpha: float, log_rho: np.ndarray | None) -> np.ndarray:
    """max over delta of <delta, x> + alpha * bonus(delta), along the last axis.

    ``log_rho`` None means an entropy bonus; otherwise the bonus is -KL(delta, rho).
    """
    if alpha <= 0:
        return x.max(axis=-1)
    b = None if log_rho is None else np.exp(log_rho)
    return alpha * logsumexp(x / alpha, axis=-1, b=b)


def _greedy_rows(x: np.ndarray, alpha: float, log_rho: np.ndarray | None) -> np.ndarray:
    if alpha <= 0:
        m = x.max(axis=-1, keepdims=True)
        hit = (x >= m - 1e-12 * (1.0 + np.abs(m))).astype(float)
        return hit / hit.sum(axis=-1, keepdims=True)
    z = x / alpha + (0.0 if log_rho is None else log_rho)
    z = np.exp(z - z.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def _bonus_rows(delta: np.ndarray, obj: Objective | None, log_rho: np.ndarray | None) -> np.ndarray:
    if obj is None or not obj.regularized:
        return np.zeros(delta.shape[:-1])
    if obj.kind == "entropy":
        return -xlogy(delta, delta).sum(axis=-1)
    return -(xlogy(delta, delta) - delta * log_rho).sum(axis=-1)


def _alpha(obj: Objective | None) -> float:
    return obj.alpha if obj is not None and obj.regularized else 0.0


def _log_rho(obj: Objective | None, label: str, n: int) -> np.ndarray | None:
    if obj is not None and obj.kind == "kl":
        return np.log(obj.magnet(label, n))
    return None


def _final_payoffs(tree: GameTree, node: int) -> np.ndarray:
    nd = tree.nodes[node]
    out = np.zeros(len(nd.children))
    for a, c in enumerate(nd.children):
        landed: dict[int, float] = {}
        _settle(tree, c, 1.0, landed)
        for i, m in landed.items():
            if not tree.nodes[i].is_terminal:
                raise ValueError("public belief state is not at a final decision stage")
            out[a] += m * tree.nodes[i].payoff
    return out


def final_stage_value(tree: GameTree, pbs: PublicBeliefState, obj: Objective | None = None) -> float:
    """Equilibrium value (for player 0) of a public belief state with one decision left."""
    if pbs.is_terminal:
        raise ValueError("public belief state is terminal")
    weights: dict[str, np.ndarray] = {}
    for h, b in zip(pbs.support, pbs.probs):
        label = tree.nodes[h].infoset
        q = b * _final_payoffs(tree, h)
        weights[label] = weights.get(label, 0.0) + q
    mass: dict[str, float] = {}
    for h, b in zip(pbs.support, pbs.probs):
        label = tree.nodes[h].infoset
        mass[label] = mass.get(label, 0.0) + b
    s = player_sign(pbs.player)
    alpha = _alpha(obj)
    total = 0.0
    for label, q in weights.items():
        m = mass[label]
        if m <= 0:
            continue
        x = s * q / m
        total += m * s * float(_soft_opt(x, alpha, _log_rho(obj, label, len(x))))
    return total


# -- two-stage public-belief games ----------------------------------------------

class TwoStageGame:
    """A tree with one announcing infoset followed by one final decision stage.

    Candidate announcer rules are evaluated in batches: a rule matrix of shape
    (G, n_actions) maps to belief masses over the second-stage nodes.
    """

    def __init__(self, tree: GameTree):
        if tree.n_stages != 2:
            raise ValueError("expected a game with exactly two decision stages")
        first = tree.stage_infosets(0)
        if len(first) != 1:
            raise ValueError("the first decision stage must consist of a single infoset")
        self.tree = tree
        self.infoset = first[0]
        info = tree.infosets[self.infoset]
        self.announcer = info.player
        self.responder = 1 - info.player
        self.n_actions = len(info.actions)
        start = initial_pbs(tree)
        if start.is_terminal or any(tree.nodes[h].infoset != self.infoset for h in start.support):
            raise ValueError("the initial public state must be the announcing infoset")
        landed = []
        for h, mu in zip(start.support, start.probs):
            for a, c in enumerate(tree.nodes[h].children):
                out: dict[int, float] = {}
                _settle(tree, c, mu, out)
                landed.append((a, out))
        nodes = sorted({i for _, out in landed for i in out})
        col = {i: k for k, i in enumerate(nodes)}
        self.nodes = nodes
        self.mass = np.zeros((self.n_actions, len(nodes)))
        for a, out in landed:
            for i, m in out.items():
                self.mass[a, col[i]] += m
        self.terminal_cols = np.array([k for k, i in enumerate(nodes) if tree.nodes[i].is_terminal], dtype=int)
        self.terminal_payoff = np.array([tree.nodes[nodes[k]].payoff for k in self.terminal_cols])
        self.responder_infosets = []
        for label in tree.stage_infosets(1):
            if tree.infosets[label].player != self.responder:
                raise ValueError("second-stage decisions must belong to the responder")
            cols = [col[i] for i in tree.infosets[label].nodes if i in col]
            payoffs = np.array([_final_payoffs(tree, nodes[k]) for k in cols])
            self.responder_infosets.append((label, np.array(cols, dtype=int), payoffs))

    def masses(self, rules: np.ndarray) -> np.ndarray:
        return np.atleast_2d(rules) @ self.mass

    def infoset_q(self, m: np.ndarray):
        """Yield (label, conditioning mass, unnormalized player-0 action payoffs)."""
        for label, cols, payoffs in self.responder_infosets:
            yield label, m[:, cols].sum(axis=1), m[:, cols] @ payoffs

    def _announcer_bonus(self, rules: np.ndarray, obj: Objective | None) -> np.ndarray:
        log_rho = _log_rho(obj, self.infoset, self.n_actions)
        return player_sign(self.announcer) * _alpha(obj) * _bonus_rows(rules, obj, log_rho)

    def value(self, rules: np.ndarray, responses: dict[str, np.ndarray], obj: Objective | None = None) -> np.ndarray:
        """Player 0's objective for each candidate announcer rule against the given responses."""
        rules = np.atleast_2d(rules)
        m = self.masses(rules)
        total = m[:, self.terminal_cols] @ self.terminal_payoff + self._announcer_bonus(rules, obj)
        s = player_sign(self.responder)
        alpha = _alpha(obj)
        for label, mj, qj in self.infoset_q(m):
            delta = np.broadcast_to(responses[label], qj.shape)
            total = total + (delta * qj).sum(axis=1)
            if alpha > 0:
                total = total + s * alpha * mj * _bonus_rows(delta, obj, _log_rho(obj, label, qj.shape[1]))
        return total

    def responder_value(self, rules: np.ndarray, obj: Objective | None = None) -> np.ndarray:
        """Player 0's objective when the responder answers each rule optimally."""
        rules = np.atleast_2d(rules)
        m = self.masses(rules)
        total = m[:, self.terminal_cols] @ self.terminal_payoff + self._announcer_bonus(rules, obj)
        s = player_sign(self.responder)
        alpha = _alpha(obj)
        for label, mj, qj in self.infoset_q(m):
            safe = np.where(mj > 0, mj, 1.0)[:, None]
            opt = _soft_opt(s * qj / safe, alpha, _log_rho(obj, label, qj.shape[1]))
            total = total + np.where(mj > 0, mj * s * opt, 0.0)
        return total

    def greedy_responses(self, rules: np.ndarray, alpha: float, obj: Objective | None = None) -> dict[str, np.ndarray]:
        rules = np.atleast_2d(rules)
        m = self.masses(rules)
        s = player_sign(self.responder)
        out = {}
        for label, mj, qj in self.infoset_q(m):
            safe = np.where(mj > 0, mj, 1.0)[:, None]
            delta = _greedy_rows(s * qj / safe, alpha, _log_rho(obj, label, qj.shape[1]))
            delta[mj <= 0] = 1.0 / qj.shape[1]
            out[label] = delta
        return out


class GreedyResponder:
    """Second mover that answers an announced rule with the (soft) greedy policy of its objective."""

    def __init__(self, tree: GameTree, obj: Objective | None = None):
        self.game = tree if isinstance(tree, TwoStageGame) else TwoStageGame(tree)
        self.obj = obj
        self.alpha = _alpha(obj)

    def batch(self, rules: np.ndarray) -> dict[str, np.ndarray]:
        return self.game.greedy_responses(rules, self.alpha, self.obj)

    def __call__(self, first_rule: DecisionRule) -> DecisionRule:
        out = self.batch(np.asarray(first_rule[self.game.infoset], dtype=float)[None])
        return {k: v[0] for k, v in out.items()}


def simplex_grid(n: int, step: float) -> np.ndarray:
    """All points of the probability simplex in R^n whose coordinates are multiples of ``step``."""
    return _simplex_grid(n, int(round(1.0 / step)), step)


@functools.lru_cache(maxsize=8)
def _simplex_grid(n: int, N: int, step: float) -> np.ndarray:
    if abs(N * step - 1.0) > 1e-9:
        raise ValueError("grid step must divide 1")
    rows = []
    for bars in itertools.combinations(range(N + n - 1), n - 1):
        edges = (-1,) + bars + (N + n - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    grid = np.array(rows, dtype=float) / N
    grid.flags.writeable = False
    return grid


def _refine(center: np.ndarray, step: float, ticks: int = 10) -> np.ndarray:
    n = len(center)
    fine = step / ticks
    offsets = np.array(list(itertools.product(range(-ticks, ticks + 1), repeat=n - 1)), dtype=float)
    offsets = np.hstack([offsets, -offsets.sum(axis=1, keepdims=True)]) * fine
    pts = center + offsets
    pts = pts[np.all(pts >= -1e-15, axis=1)]
    pts = np.clip(pts, 0.0, None)
    return pts / pts.sum(axis=1, keepdims=True)


def _responses_for(game: TwoStageGame, rules: np.ndarray, responder_fn) -> dict[str, np.ndarray]:
    if isinstance(responder_fn, GreedyResponder):
        return responder_fn.batch(rules)
    out = {label: np.empty((len(rules), len(p[0]) if len(p) else 0)) for label, _, p in game.responder_infosets}
    for g, rule in enumerate(rules):
        answer = responder_fn({game.infoset: rule})
        for label in out:
            out[label][g] = answer[label]
    return out


def pubamg_exploitability_two_stage(tree: GameTree | TwoStageGame, first_rule: DecisionRule,
                                    responder_fn: Callable[[DecisionRule], DecisionRule],
                                    obj: Objective | None = None, grid: float = 0.005) -> ExploitabilityReport:
    """Exploitability in the public-belief game of (first_rule, responder_fn).

    The responder side is exact. The announcer side maximizes over a simplex
    grid plus one refinement pass at a tenth of the step around the best grid
    point; the announced rule itself is always among the candidates.
    """
    game = tree if isinstance(tree, TwoStageGame) else TwoStageGame(tree)
    delta0 = np.asarray(first_rule[game.infoset], dtype=float)
    sign = player_sign(game.announcer)
    resp_side = float(game.responder_value(delta0, obj)[0])

    def scored(cands):
        return sign * game.value(cands, _responses_for(game, cands, responder_fn), obj)

    cands = np.vstack([simplex_grid(game.n_actions, grid), delta0[None]])
    scores = scored(cands)
    best = cands[int(np.argmax(scores))]
    fine = _refine(best, grid)
    fine_scores = scored(fine)
    ann_side = sign * float(max(scores.max(), fine_scores.max()))

    lipschitz = 2.0 * float(np.abs(game.tree.flat.payoff).max())
    if game.announcer == 0:
        vs_p0, vs_p1 = resp_side, ann_side
    else:
        vs_p0, vs_p1 = ann_side, resp_side
    return ExploitabilityReport(vs_p0, vs_p1, (vs_p1 - vs_p0) / 2.0, tolerance=grid * lipschitz)
