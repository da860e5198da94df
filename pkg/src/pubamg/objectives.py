"""Regularized minimax objectives.

An objective adds a per-decision term to the leaf payoff of player 0.
Player 0 is rewarded for its own entropy (or penalized for its own KL
divergence from the magnet), player 1 the other way around, so the
objective stays zero-sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
from scipy.special import xlogy

KINDS = ("none", "entropy", "kl")


@dataclass(frozen=True)
class Schedule:
    """Temperature schedule ``alpha_t`` over the iteration index t, which starts at 0."""

    kind: str = "const"  # const | inv | exp
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("const", "inv", "exp"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "inv" and self.rate < 0:
            raise ValueError("inverse schedule needs a nonnegative rate")
        if self.kind == "exp" and not 0 < self.rate <= 1:
            raise ValueError("exponential schedule needs a rate in (0, 1]")

    def __call__(self, alpha0: float, t: int) -> float:
        if self.kind == "inv":
            return alpha0 / (1.0 + self.rate * t)
        if self.kind == "exp":
            return alpha0 * self.rate**t
        return alpha0

    @property
    def anneals(self) -> bool:
        return (self.kind == "inv" and self.rate > 0) or (self.kind == "exp" and self.rate < 1)

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """Parse ``const``, ``inv:<c>`` or ``exp:<g>``."""
        name, _, arg = text.strip().partition(":")
        if name == "const":
            return cls()
        if name in ("inv", "exp") and arg:
            return cls(name, float(arg))
        raise ValueError(f"cannot parse schedule {text!r}")

    def __str__(self) -> str:
        return "const" if self.kind == "const" else f"{self.kind}:{self.rate:g}"


@dataclass(frozen=True)
class Objective:
    kind: str = "none"
    alpha: float = 0.0
    reference: Mapping[str, np.ndarray] | None = field(default=None, compare=False)
    schedule: Schedule = Schedule()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.kind == "kl":
            if self.reference is None:
                raise ValueError("a KL objective needs a reference policy")
            for label, rho in self.reference.items():
                if np.any(np.asarray(rho) <= 0):
                    raise ValueError(f"reference policy is not interior at infoset {label!r}")

    @property
    def regularized(self) -> bool:
        return self.kind != "none" and self.alpha > 0

    def alpha_at(self, t: int) -> float:
        if self.kind == "none":
            return 0.0
        return self.schedule(self.alpha, t)

    def at(self, t: int) -> "Objective":
        """The objective frozen at the temperature of iteration ``t``."""
        return replace(self, alpha=self.alpha_at(t), schedule=Schedule())

    def magnet(self, infoset: str, n_actions: int) -> np.ndarray:
        if self.kind == "kl":
            return np.asarray(self.reference[infoset], dtype=float)
        return np.full(n_actions, 1.0 / n_actions)

    def reference_floor(self) -> float:
        """Smallest probability the magnet places on any action."""
        if self.kind != "kl":
            raise ValueError("only KL objectives carry an explicit reference")
        return min(float(np.min(r)) for r in self.reference.values())


def unregularized() -> Objective:
    return Objective()


def minimax_ent(alpha: float, schedule: Schedule | str = Schedule()) -> Objective:
    if isinstance(schedule, str):
        schedule = Schedule.parse(schedule)
    return Objective("entropy", float(alpha), None, schedule)


def minimax_kl(alpha: float, reference: Mapping[str, np.ndarray], schedule: Schedule | str = Schedule()) -> Objective:
    if isinstance(schedule, str):
        schedule = Schedule.parse(schedule)
    ref = {k: np.asarray(v, dtype=float) for k, v in reference.items()}
    return Objective("kl", float(alpha), ref, schedule)


def entropy(delta) -> float:
    """Shannon entropy in nats with 0 log 0 = 0."""
    delta = np.asarray(delta, dtype=float)
    return float(-xlogy(delta, delta).sum())


def kl(delta, rho) -> float:
    delta = np.asarray(delta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any((rho <= 0) & (delta > 0)):
        raise ValueError("KL divergence undefined: reference assigns zero mass to a played action")
    pos = delta > 0
    return float(np.sum(delta[pos] * (np.log(delta[pos]) - np.log(rho[pos]))))


def regularizer(delta, obj: Objective, rho=None) -> float:
    """Unsigned regularization bonus: H(delta) or -KL(delta, rho)."""
    if obj.kind == "entropy":
        return entropy(delta)
    if obj.kind == "kl":
        return -kl(delta, rho)
    return 0.0


def player_sign(player: int) -> float:
    return 1.0 if player == 0 else -1.0


def step_reward(payoff_term: float, delta, acting_player: int, obj: Objective, infoset: str | None = None) -> float:
    """Per-decision regularized reward, always reported for player 0."""
    if not obj.regularized:
        return float(payoff_term)
    rho = obj.magnet(infoset, len(delta)) if obj.kind == "kl" else None
    return float(payoff_term) + player_sign(acting_player) * obj.alpha * regularizer(delta, obj, rho)


def exploitability_bound(alpha: float, horizon: int, eps: float) -> float:
    if eps <= 0 or eps > 1:
        raise ValueError("eps must lie in (0, 1]")
    if alpha < 0 or horizon < 1:
        raise ValueError("need alpha >= 0 and horizon >= 1")
    return alpha * horizon * abs(math.log(eps))


def payoff_bound(tree, obj: Objective | None = None) -> float:
    """Upper bound on the absolute expected objective over all joint policies."""
    m = max(abs(tree.nodes[i].payoff) for i in tree.terminals)
    if obj is None or not obj.regularized:
        return m
    if obj.kind == "entropy":
        per_step = math.log(max(len(info.actions) for info in tree.infosets.values()))
    else:
        per_step = abs(math.log(obj.reference_floor()))
    return m + obj.alpha * tree.horizon * per_step
