"""Public belief states, public decision rules, and the maps between
public-belief policies and original-game policies.

A public-belief policy is any callable ``policy(pbs, history) -> rule``
where ``history`` is the tuple of ``(public_label, rule)`` announcements
made earlier on the same public trajectory. Keying by announcements rather
than by belief vectors keeps lookups exact.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .efg import GameTree, Policy, check_policy
from .objectives import Objective, player_sign, regularizer

DecisionRule = dict  # infoset label -> action distribution
History = tuple  # ((public_label, DecisionRule), ...)
PubPolicy = Callable[["PublicBeliefState", History], DecisionRule]


@dataclass(frozen=True, eq=False)
class PublicBeliefState:
    public: str
    support: tuple[int, ...]
    probs: np.ndarray
    player: int | None  # acting player, None when the public state is terminal

    @property
    def is_terminal(self) -> bool:
        return self.player is None

    def belief(self) -> dict[int, float]:
        return dict(zip(self.support, self.probs.tolist()))


@dataclass(frozen=True, eq=False)
class Successor:
    observation: str
    prob: float
    pbs: PublicBeliefState


@dataclass(frozen=True, eq=False)
class PbsStep:
    successors: list[Successor]
    reward: float


def _settle(tree: GameTree, node: int, mass: float, out: dict[int, float]) -> None:
    """Push probability mass through chance nodes until it lands on a decision or terminal node."""
    nd = tree.nodes[node]
    if nd.kind == "chance":
        for p, c in zip(nd.probs, nd.children):
            if p > 0:
                _settle(tree, c, mass * p, out)
    else:
        out[node] = out.get(node, 0.0) + mass


def make_pbs(tree: GameTree, masses: dict[int, float]) -> PublicBeliefState:
    support = tuple(sorted(i for i, m in masses.items() if m > 0))
    if not support:
        raise ValueError("empty belief")
    labels = {tree.nodes[i].public for i in support}
    if len(labels) != 1:
        raise ValueError(f"belief spans several public states: {sorted(labels)}")
    probs = np.array([masses[i] for i in support], dtype=float)
    probs /= probs.sum()
    first = tree.nodes[support[0]]
    player = first.player if first.kind == "decision" else None
    return PublicBeliefState(first.public, support, probs, player)


def initial_pbs(tree: GameTree) -> PublicBeliefState:
    masses: dict[int, float] = {}
    _settle(tree, tree.root, 1.0, masses)
    return make_pbs(tree, masses)


def public_infosets(tree: GameTree, public: str) -> list[str]:
    """Infoset labels of the acting player inside one public state."""
    seen = []
    for i in tree.public_states[public]:
        label = tree.nodes[i].infoset
        if label is not None and label not in seen:
            seen.append(label)
    return seen


def pbs_step(tree: GameTree, pbs: PublicBeliefState, rule: DecisionRule,
             obj: Objective | None = None) -> PbsStep:
    """Public transition and expected (regularized) reward of announcing ``rule`` at ``pbs``."""
    if pbs.is_terminal:
        raise ValueError("no decision is taken at a terminal public state")
    reward = 0.0
    landed: dict[int, float] = {}
    for h, b in zip(pbs.support, pbs.probs):
        nd = tree.nodes[h]
        if nd.infoset not in rule:
            raise KeyError(f"decision rule does not cover infoset {nd.infoset!r}")
        delta = np.asarray(rule[nd.infoset], dtype=float)
        if obj is not None and obj.regularized:
            rho = obj.magnet(nd.infoset, len(delta)) if obj.kind == "kl" else None
            reward += b * player_sign(nd.player) * obj.alpha * regularizer(delta, obj, rho)
        for a, c in enumerate(nd.children):
            if delta[a] > 0:
                _settle(tree, c, b * delta[a], landed)
    groups: dict[str, dict[int, float]] = {}
    for i, m in landed.items():
        if tree.nodes[i].is_terminal:
            reward += m * tree.nodes[i].payoff
        groups.setdefault(tree.nodes[i].public, {})[i] = m
    successors = []
    for label in sorted(groups):
        masses = groups[label]
        total = sum(masses.values())
        if total > 0:
            successors.append(Successor(label, total, make_pbs(tree, masses)))
    return PbsStep(successors, float(reward))


def _initial_payoff(tree: GameTree, pbs: PublicBeliefState) -> float:
    # only non-zero for degenerate games that end before anyone acts
    return float(sum(b * tree.nodes[h].payoff for h, b in zip(pbs.support, pbs.probs)))


def pub_objective(tree: GameTree, policy: PubPolicy, obj: Objective | None = None) -> float:
    """Objective of a public-belief joint policy, accumulated through ``pbs_step``."""

    def value(pbs: PublicBeliefState, history: History) -> float:
        if pbs.is_terminal:
            return 0.0
        rule = policy(pbs, history)
        step = pbs_step(tree, pbs, rule, obj)
        nxt = history + ((pbs.public, rule),)
        return step.reward + sum(s.prob * value(s.pbs, nxt) for s in step.successors)

    start = initial_pbs(tree)
    if start.is_terminal:
        return _initial_payoff(tree, start)
    return value(start, ())


def reachable_pbs(tree: GameTree, policy: PubPolicy):
    """Breadth-first (pbs, history, rule) triples reachable under the policy's own announcements."""
    queue = deque([(initial_pbs(tree), ())])
    while queue:
        pbs, history = queue.popleft()
        if pbs.is_terminal:
            continue
        rule = policy(pbs, history)
        yield pbs, history, rule
        for s in pbs_step(tree, pbs, rule).successors:
            queue.append((s.pbs, history + ((pbs.public, rule),)))


def correspondence_down(tree: GameTree, policy: PubPolicy) -> Policy:
    """Original-game joint policy that replays the public-belief policy's own announcements.

    Infosets never reached along the way get the uniform distribution.
    """
    pi: Policy = {}
    for pbs, _, rule in reachable_pbs(tree, policy):
        for h in pbs.support:
            label = tree.nodes[h].infoset
            pi[label] = np.asarray(rule[label], dtype=float).copy()
    for label, info in tree.infosets.items():
        if label not in pi:
            pi[label] = np.full(len(info.actions), 1.0 / len(info.actions))
    return pi


class CanonicalPolicy:
    """Public-belief policy that ignores beliefs and plays a fixed behavioral policy."""

    def __init__(self, tree: GameTree, pi: Policy):
        self.tree = tree
        self.pi = {k: np.asarray(v, dtype=float) for k, v in pi.items()}

    def __call__(self, pbs: PublicBeliefState, history: History = ()) -> DecisionRule:
        return {k: self.pi[k] for k in public_infosets(self.tree, pbs.public)}


def canonical_up(tree: GameTree, pi: Policy) -> CanonicalPolicy:
    players = {tree.infosets[k].player for k in pi if k in tree.infosets}
    check_policy(tree, pi, players=tuple(players))
    return CanonicalPolicy(tree, pi)


def joint_pub_policy(policy0: PubPolicy, policy1: PubPolicy) -> PubPolicy:
    """Combine per-player public-belief policies, dispatching on the acting player."""

    def policy(pbs: PublicBeliefState, history: History) -> DecisionRule:
        return (policy0 if pbs.player == 0 else policy1)(pbs, history)

    return policy
