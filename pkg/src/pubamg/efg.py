"""Explicit finite-horizon two-player zero-sum game trees.

Games are written one node per line::

    node <id> player=<0|1|C|T> parent=<id|-> infoset=<label|-> public=<label> \
        actions=<a:child,...> | probs=<a:p:child,...> | payoff=<float>

``#`` starts a comment. Only player 0's payoff is stored.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .objectives import Objective, player_sign, regularizer

PROB_TOL = 1e-12

Policy = dict  # infoset label -> np.ndarray of action probabilities


class GameFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class GameValidationError(ValueError):
    pass


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    name: str
    kind: str  # decision | chance | terminal
    public: str
    player: int | None = None
    infoset: str | None = None
    parent: int | None = None
    actions: tuple[str, ...] = ()
    children: tuple[int, ...] = ()
    probs: tuple[float, ...] = ()
    payoff: float = 0.0
    depth: int = 0

    @property
    def is_terminal(self) -> bool:
        return self.kind == "terminal"


@dataclass(frozen=True)
class Infoset:
    label: str
    player: int
    actions: tuple[str, ...]
    nodes: tuple[int, ...]
    public: str
    depth: int
    stage: int  # number of decisions taken before reaching it


@dataclass(frozen=True, eq=False)
class GameTree:
    nodes: tuple[Node, ...]
    root: int
    horizon: int
    infosets: dict[str, Infoset]
    public_states: dict[str, tuple[int, ...]]
    source: str = field(default="", repr=False)
    name: str = ""

    @property
    def terminals(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.is_terminal]

    def infosets_of(self, player: int) -> list[str]:
        return [k for k, v in self.infosets.items() if v.player == player]

    def node_index(self, name: str) -> int:
        return self._index_by_name[name]

    @cached_property
    def _index_by_name(self) -> dict[str, int]:
        return {n.name: i for i, n in enumerate(self.nodes)}

    @cached_property
    def flat(self):
        from ._flat import FlatTree

        return FlatTree(self)

    @cached_property
    def n_stages(self) -> int:
        return 1 + max(info.stage for info in self.infosets.values())

    def stage_infosets(self, stage: int) -> list[str]:
        return [k for k, v in self.infosets.items() if v.stage == stage]

    def path(self, node: int) -> list[tuple[int, int]]:
        """(ancestor, action index) pairs from the root down to ``node``."""
        out = []
        while self.nodes[node].parent is not None:
            parent = self.nodes[node].parent
            out.append((parent, self.nodes[parent].children.index(node)))
            node = parent
        return out[::-1]


_NODE_RE = re.compile(r"^node\s+(\S+)\s+(.*)$")
_FIELDS = ("player", "parent", "infoset", "public", "actions", "probs", "payoff")


def _number(text: str) -> float:
    return float(Fraction(text))


def parse_game(text: str, name: str = "") -> GameTree:
    """Parse and validate a game in the textual node format."""
    raw = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _NODE_RE.match(line)
        if not m:
            raise GameFormatError(lineno, f"expected 'node <id> ...', got {line!r}")
        node_id, rest = m.groups()
        attrs = {}
        for token in rest.split():
            key, eq, value = token.partition("=")
            if not eq or key not in _FIELDS:
                raise GameFormatError(lineno, f"bad field {token!r}")
            if key in attrs:
                raise GameFormatError(lineno, f"duplicate field {key!r}")
            attrs[key] = value
        for key in ("player", "parent", "public"):
            if key not in attrs:
                raise GameFormatError(lineno, f"missing field {key!r}")
        player = attrs["player"]
        body = {"0": "actions", "1": "actions", "C": "probs", "T": "payoff"}.get(player)
        if body is None:
            raise GameFormatError(lineno, f"player must be 0, 1, C or T, got {player!r}")
        for other in ("actions", "probs", "payoff"):
            if other != body and other in attrs:
                raise GameFormatError(lineno, f"field {other!r} not allowed for player={player}")
        if body not in attrs:
            raise GameFormatError(lineno, f"player={player} node needs {body}=")
        try:
            entry = {"name": node_id, "lineno": lineno, "public": attrs["public"]}
            entry["parent"] = None if attrs["parent"] == "-" else attrs["parent"]
            infoset = attrs.get("infoset", "-")
            entry["infoset"] = None if infoset == "-" else infoset
            if body == "payoff":
                entry.update(kind="terminal", payoff=_number(attrs["payoff"]))
            elif body == "actions":
                pairs = [item.split(":") for item in attrs["actions"].split(",")]
                if any(len(p) != 2 for p in pairs):
                    raise ValueError("actions must look like a:child,...")
                entry.update(kind="decision", player=int(player), actions=[p[0] for p in pairs],
                             children=[p[1] for p in pairs])
            else:
                triples = [item.split(":") for item in attrs["probs"].split(",")]
                if any(len(p) != 3 for p in triples):
                    raise ValueError("probs must look like a:p:child,...")
                entry.update(kind="chance", actions=[p[0] for p in triples],
                             probs=[_number(p[1]) for p in triples], children=[p[2] for p in triples])
        except (ValueError, ZeroDivisionError) as exc:
            raise GameFormatError(lineno, str(exc)) from None
        raw.append(entry)
    if not raw:
        raise GameValidationError("game has no nodes")
    return _build(raw, text, name)


def load_game(spec_text: str, name: str = "") -> GameTree:
    return parse_game(spec_text, name)


def _build(raw: list[dict], text: str, name: str) -> GameTree:
    index = {}
    for i, e in enumerate(raw):
        if e["name"] in index:
            raise GameValidationError(f"duplicate node id {e['name']!r}")
        index[e["name"]] = i
    roots = [i for i, e in enumerate(raw) if e["parent"] is None]
    if len(roots) != 1:
        raise GameValidationError(f"expected exactly one root, found {len(roots)}")
    root = roots[0]

    parent_of = {}
    for i, e in enumerate(raw):
        kids = e.get("children", [])
        if len(set(e.get("actions", []))) != len(e.get("actions", [])):
            raise GameValidationError(f"node {e['name']!r} repeats an action label")
        if e["kind"] != "terminal" and not kids:
            raise GameValidationError(f"node {e['name']!r} has no actions")
        for child in kids:
            if child not in index:
                raise GameValidationError(f"node {e['name']!r} points to unknown child {child!r}")
            c = index[child]
            if c in parent_of:
                raise GameValidationError(f"node {child!r} has two parents")
            if raw[c]["parent"] != e["name"]:
                raise GameValidationError(f"node {child!r} declares parent {raw[c]['parent']!r}, "
                                          f"but is a child of {e['name']!r}")
            parent_of[c] = i
        if e["kind"] == "chance":
            probs = e["probs"]
            if any(p < 0 for p in probs):
                raise GameValidationError(f"chance node {e['name']!r} has a negative probability")
            total = sum(probs)
            if abs(total - 1.0) > PROB_TOL:
                raise GameValidationError(f"chance outcome probabilities sum to {total:.12g}")
            if e["infoset"] is not None:
                raise GameValidationError(f"chance node {e['name']!r} cannot carry an infoset")
        elif e["kind"] == "decision" and e["infoset"] is None:
            raise GameValidationError(f"decision node {e['name']!r} needs an infoset label")
        elif e["kind"] == "terminal" and e["infoset"] is not None:
            raise GameValidationError(f"terminal node {e['name']!r} cannot carry an infoset")
    for i, e in enumerate(raw):
        if i != root and i not in parent_of:
            raise GameValidationError(f"node {e['name']!r} is not reachable from the root")

    # depth, decision count and owner histories by walking down from the root
    depth = {root: 0}
    stage = {root: 0}
    history = {root: ((), ())}  # per player: ((infoset, action), ...)
    order = [root]
    for i in order:
        e = raw[i]
        for a, child in enumerate(e.get("children", [])):
            c = index[child]
            depth[c] = depth[i] + 1
            stage[c] = stage[i] + (e["kind"] == "decision")
            h = list(history[i])
            if e["kind"] == "decision":
                p = e["player"]
                h[p] = h[p] + ((e["infoset"], e["actions"][a]),)
            history[c] = tuple(h)
            order.append(c)

    nodes = []
    for i, e in enumerate(raw):
        nodes.append(Node(
            name=e["name"], kind=e["kind"], public=e["public"], player=e.get("player"),
            infoset=e["infoset"], parent=parent_of.get(i), actions=tuple(e.get("actions", ())),
            children=tuple(index[c] for c in e.get("children", ())), probs=tuple(e.get("probs", ())),
            payoff=e.get("payoff", 0.0), depth=depth[i]))

    members: dict[str, list[int]] = {}
    for i, n in enumerate(nodes):
        if n.kind == "decision":
            members.setdefault(n.infoset, []).append(i)
    infosets = {}
    for label, idx in members.items():
        first = nodes[idx[0]]
        for i in idx[1:]:
            n = nodes[i]
            if n.player != first.player:
                raise GameValidationError(f"infoset {label!r} mixes owners")
            if n.actions != first.actions:
                raise GameValidationError(f"infoset {label!r} has inconsistent action sets")
            if n.public != first.public:
                raise GameValidationError(f"infoset {label!r} spans two public states")
            if history[i][n.player] != history[idx[0]][first.player]:
                raise GameValidationError(f"infoset {label!r} violates perfect recall")
            if stage[i] != stage[idx[0]]:
                raise GameValidationError(f"infoset {label!r} spans two stages")
        infosets[label] = Infoset(label, first.player, first.actions, tuple(idx), first.public,
                                  first.depth, stage[idx[0]])

    public_states: dict[str, list[int]] = {}
    for i, n in enumerate(nodes):
        public_states.setdefault(n.public, []).append(i)
    for label, idx in public_states.items():
        kinds = {(nodes[i].kind, nodes[i].player) for i in idx}
        if len(kinds) > 1:
            raise GameValidationError(f"public state {label!r} mixes node kinds or acting players")
        if len({nodes[i].depth for i in idx}) > 1:
            raise GameValidationError(f"public state {label!r} spans several depths")
        parents = {nodes[nodes[i].parent].public for i in idx if nodes[i].parent is not None}
        if len(parents) > 1:
            raise GameValidationError(f"public state {label!r} is reached from different public histories")

    horizon = max(stage[i] for i, n in enumerate(nodes) if n.kind == "terminal")
    return GameTree(tuple(nodes), root, horizon, infosets,
                    {k: tuple(v) for k, v in public_states.items()}, text, name)


# -- policies ---------------------------------------------------------------

def uniform_policy(tree: GameTree, player: int | None = None) -> Policy:
    return {k: np.full(len(v.actions), 1.0 / len(v.actions))
            for k, v in tree.infosets.items() if player is None or v.player == player}


def random_policy(tree: GameTree, rng: np.random.Generator, player: int | None = None) -> Policy:
    return {k: rng.dirichlet(np.ones(len(v.actions)))
            for k, v in tree.infosets.items() if player is None or v.player == player}


def player_policy(tree: GameTree, pi: Policy, player: int) -> Policy:
    return {k: pi[k] for k in tree.infosets_of(player) if k in pi}


def check_policy(tree: GameTree, pi: Policy, players=(0, 1)) -> None:
    for label, info in tree.infosets.items():
        if info.player not in players:
            continue
        if label not in pi:
            raise PolicyError(f"policy is missing infoset {label!r}")
        p = np.asarray(pi[label], dtype=float)
        if p.shape != (len(info.actions),):
            raise PolicyError(f"infoset {label!r} expects {len(info.actions)} probabilities")
        if np.any(p < -PROB_TOL) or abs(p.sum() - 1.0) > 1e-9:
            raise PolicyError(f"infoset {label!r} is not a probability vector")


@dataclass(frozen=True)
class ReachTable:
    chance: np.ndarray
    player0: np.ndarray
    player1: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.chance * self.player0 * self.player1

    def opponent(self, player: int) -> np.ndarray:
        """Chance times the other player's reach."""
        return self.chance * (self.player1 if player == 0 else self.player0)


def reach_probabilities(tree: GameTree, pi: Policy) -> ReachTable:
    check_policy(tree, pi)
    n = len(tree.nodes)
    r = np.ones((3, n))
    stack = [tree.root]
    while stack:
        i = stack.pop()
        node = tree.nodes[i]
        for a, c in enumerate(node.children):
            r[:, c] = r[:, i]
            if node.kind == "chance":
                r[0, c] *= node.probs[a]
            else:
                r[1 + node.player, c] *= pi[node.infoset][a]
            stack.append(c)
    return ReachTable(r[0], r[1], r[2])


def expected_objective(tree: GameTree, pi: Policy, obj: Objective | None = None) -> float:
    """Expected accumulated reward for player 0 (payoffs plus signed regularizers)."""
    reach = reach_probabilities(tree, pi)
    total = reach.total
    value = sum(total[i] * tree.nodes[i].payoff for i in tree.terminals)
    if obj is not None and obj.regularized:
        for label, info in tree.infosets.items():
            mass = sum(total[i] for i in info.nodes)
            if mass == 0:
                continue
            rho = obj.magnet(label, len(info.actions)) if obj.kind == "kl" else None
            value += mass * player_sign(info.player) * obj.alpha * regularizer(pi[label], obj, rho)
    return float(value)
