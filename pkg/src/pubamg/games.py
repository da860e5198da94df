"""Built-in games, each emitted in the textual node format and parsed back."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .efg import GameTree, parse_game

# Row player (blue, player 0) payoffs; rows and columns ordered R, P, S.
PERTURBED_RPS_MATRIX = np.array([[0.0, -1.0, 2.0],
                                 [1.0, 0.0, -2.0],
                                 [-2.0, 2.0, 0.0]])
PERTURBED_RPS_EQUILIBRIUM = np.array([0.4, 0.4, 0.2])


def _fmt(x: float) -> str:
    return repr(float(x))


def matrix_game_source(matrix, row_actions, col_actions, title: str = "") -> str:
    """Simultaneous 2-player matrix game, encoded with the column move hidden behind one infoset."""
    matrix = np.asarray(matrix, dtype=float)
    lines = [f"# {title}"] if title else []
    lines.append("node root player=0 parent=- infoset=blue public=root actions="
                 + ",".join(f"{a}:b{a}" for a in row_actions))
    for i, a in enumerate(row_actions):
        lines.append(f"node b{a} player=1 parent=root infoset=red public=blue-moved actions="
                     + ",".join(f"{b}:b{a}r{b}" for b in col_actions))
    for i, a in enumerate(row_actions):
        for j, b in enumerate(col_actions):
            lines.append(f"node b{a}r{b} player=T parent=b{a} public=end payoff={_fmt(matrix[i, j])}")
    return "\n".join(lines) + "\n"


def perturbed_rps_source() -> str:
    return matrix_game_source(PERTURBED_RPS_MATRIX, "RPS", "RPS",
                              "perturbed rock-paper-scissors: payouts doubled whenever scissors is played")


def perturbed_rps() -> GameTree:
    return parse_game(perturbed_rps_source(), "perturbed_rps")


def cooperative_matching_pennies_source() -> str:
    # common payoff; only meant for illustrating the backward dependence problem
    return matrix_game_source(np.eye(2), "TH", "TH", "cooperative matching pennies (common payoff)")


def cooperative_matching_pennies() -> GameTree:
    return parse_game(cooperative_matching_pennies_source(), "cooperative_mp")


def adversarial_matching_pennies_source() -> str:
    return matrix_game_source(2 * np.eye(2) - 1, "TH", "TH", "adversarial matching pennies")


def adversarial_matching_pennies() -> GameTree:
    return parse_game(adversarial_matching_pennies_source(), "adversarial_mp")


def rigged_adversarial_matching_pennies_source() -> str:
    lines = [
        "# rigged adversarial matching pennies",
        "# red (player 1) rigs or not; blue (player 0) opts out or picks a side; red then picks a side",
        "node root player=1 parent=- infoset=red public=root actions=Fair:f,Unfair:u",
    ]
    for g in "fu":
        lines.append(f"node {g} player=0 parent=root infoset=blue public=red-moved "
                     f"actions=Tails:{g}T,Heads:{g}H,Out:{g}O")
    for g in "fu":
        lines.append(f"node {g}O player=T parent={g} public=out payoff=0")
        for side in "TH":
            lines.append(f"node {g}{side} player=1 parent={g} infoset=red:{'fair' if g == 'f' else 'unfair'} "
                         f"public=in actions=Tails:{g}{side}T,Heads:{g}{side}H")
            for red in "TH":
                if g == "u":
                    payoff = -1.0
                else:
                    payoff = 1.0 if side == red else -1.0
                lines.append(f"node {g}{side}{red} player=T parent={g}{side} public=end payoff={_fmt(payoff)}")
    return "\n".join(lines) + "\n"


def rigged_adversarial_matching_pennies() -> GameTree:
    return parse_game(rigged_adversarial_matching_pennies_source(), "rigged_mp")


KUHN_CARDS = "JQK"


def kuhn_poker_source() -> str:
    """Three-card Kuhn poker: ante 1, bet 1, player 0 acts first."""
    deals = [(a, b) for a in KUHN_CARDS for b in KUHN_CARDS if a != b]
    lines = ["# Kuhn poker (ante 1, bet 1); payoffs to player 0",
             "node deal player=C parent=- public=deal probs="
             + ",".join(f"{a}{b}:1/6:{a}{b}" for a, b in deals)]
    for a, b in deals:
        d = a + b
        win = 1.0 if KUHN_CARDS.index(a) > KUHN_CARDS.index(b) else -1.0
        lines += [
            f"node {d} player=0 parent=deal infoset=0:{a} public=start actions=check:{d}.p,bet:{d}.b",
            f"node {d}.p player=1 parent={d} infoset=1:{b}:p public=p actions=check:{d}.pp,bet:{d}.pb",
            f"node {d}.pp player=T parent={d}.p public=pp payoff={_fmt(win)}",
            f"node {d}.pb player=0 parent={d}.p infoset=0:{a}:pb public=pb actions=fold:{d}.pbf,call:{d}.pbc",
            f"node {d}.pbf player=T parent={d}.pb public=pbf payoff=-1.0",
            f"node {d}.pbc player=T parent={d}.pb public=pbc payoff={_fmt(2 * win)}",
            f"node {d}.b player=1 parent={d} infoset=1:{b}:b public=b actions=fold:{d}.bf,call:{d}.bc",
            f"node {d}.bf player=T parent={d}.b public=bf payoff=1.0",
            f"node {d}.bc player=T parent={d}.b public=bc payoff={_fmt(2 * win)}",
        ]
    return "\n".join(lines) + "\n"


def kuhn_poker() -> GameTree:
    return parse_game(kuhn_poker_source(), "kuhn")


KUHN_VALUE = -1.0 / 18.0


@dataclass(frozen=True)
class WorstCasePubPolicy:
    """Public-belief policy on rigged matching pennies whose original-game image is maximally exploitable.

    Red announces a fair game, blue mixes heads and tails evenly if the
    announcement was fair (and opts out otherwise), and red answers heads
    whenever blue's announced tails probability is at least one half.
    """

    rule_t0: np.ndarray
    rule_t1: Callable[[np.ndarray], np.ndarray]
    rule_t2: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, pbs, history):
        if len(history) == 0:
            return {"red": self.rule_t0}
        announced_t0 = history[0][1]["red"]
        if len(history) == 1:
            return {"blue": self.rule_t1(announced_t0)}
        rule = self.rule_t2(announced_t0, history[1][1]["blue"])
        return {"red:fair": rule, "red:unfair": rule}


def _blue_rule(announced_t0: np.ndarray) -> np.ndarray:
    # (Tails, Heads, Out)
    if announced_t0[0] == 1.0:
        return np.array([0.5, 0.5, 0.0])
    return np.array([0.0, 0.0, 1.0])


def _red_final_rule(announced_t0: np.ndarray, announced_t1: np.ndarray) -> np.ndarray:
    # (Tails, Heads)
    if announced_t1[0] >= 0.5:
        return np.array([0.0, 1.0])
    return np.array([1.0, 0.0])


def worst_case_pub_policy() -> WorstCasePubPolicy:
    return WorstCasePubPolicy(np.array([1.0, 0.0]), _blue_rule, _red_final_rule)


GAMES: dict[str, Callable[[], GameTree]] = {
    "perturbed_rps": perturbed_rps,
    "kuhn": kuhn_poker,
    "rigged_mp": rigged_adversarial_matching_pennies,
    "adversarial_mp": adversarial_matching_pennies,
    "cooperative_mp": cooperative_matching_pennies,
}

ZERO_SUM_GAMES = ("perturbed_rps", "kuhn", "rigged_mp", "adversarial_mp")


def get_game(name_or_path: str) -> GameTree:
    """Built-in game by name, otherwise a game file on disk."""
    if name_or_path in GAMES:
        return GAMES[name_or_path]()
    path = Path(name_or_path)
    if not path.exists():
        raise FileNotFoundError(f"no built-in game or file named {name_or_path!r}")
    return parse_game(path.read_text(), path.stem)
