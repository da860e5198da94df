"""Magnetic mirror descent and the stagewise public-belief solvers built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax

from .efg import GameTree, Policy
from .objectives import Objective
from .response import TwoStageGame


def _as_simplex_point(x, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise ValueError(f"{what} must be a finite vector")
    if np.any(x <= 0):
        raise ValueError(f"{what} must be strictly positive")
    return x


def mmd_step(pi_t, q, eta: float, alpha: float, rho=None) -> np.ndarray:
    """One magnetic mirror descent step on a single simplex.

    Returns the maximizer of <pi, q> - alpha KL(pi, rho) - KL(pi, pi_t) / eta,
    which is proportional to (pi_t exp(eta q) rho^(alpha eta))^(1 / (1 + alpha eta)).
    ``rho`` defaults to uniform.
    """
    pi_t = _as_simplex_point(pi_t, "pi_t")
    q = np.asarray(q, dtype=float)
    if eta <= 0 or alpha < 0:
        raise ValueError("need eta > 0 and alpha >= 0")
    log_rho = 0.0 if rho is None else np.log(_as_simplex_point(rho, "rho"))
    return softmax((np.log(pi_t) + eta * q + alpha * eta * log_rho) / (1.0 + alpha * eta))


def greedy_policy(q, alpha: float, rho=None) -> np.ndarray:
    """Maximizer of <pi, q> - alpha KL(pi, rho); uniform over the argmax set when alpha is 0."""
    q = np.asarray(q, dtype=float)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        m = q.max()
        hit = (q >= m - 1e-12 * (1.0 + abs(m))).astype(float)
        return hit / hit.sum()
    log_rho = 0.0 if rho is None else np.log(_as_simplex_point(rho, "rho"))
    return softmax(q / alpha + log_rho)


@dataclass(frozen=True)
class MmdConfig:
    eta: float
    objective: Objective
    outer_iters: int
    inner_iters: str | int = "sqrt"  # stage-2 inner solve length: ceil(sqrt(t)) or a fixed count
    record_every: int = 1
    warm_start: bool = False  # start each stage-2 inner solve from the previous one instead of uniform

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.outer_iters < 1 or self.record_every < 1:
            raise ValueError("outer_iters and record_every must be at least 1")
        if not (self.inner_iters == "sqrt" or (isinstance(self.inner_iters, int) and self.inner_iters >= 1)):
            raise ValueError("inner_iters must be 'sqrt' or a positive integer")

    def inner_count(self, t: int) -> int:
        """Inner iterations at 0-based outer iteration t: ceil(sqrt(t + 1)) under the sqrt rule."""
        if self.inner_iters == "sqrt":
            r = math.isqrt(t + 1)
            return r if r * r == t + 1 else r + 1
        return int(self.inner_iters)


@dataclass
class IterateTrace:
    tree: GameTree
    iterations: list[int] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    thetas: list[np.ndarray] = field(default_factory=list)
    metrics: dict[str, list[float]] = field(default_factory=dict)

    def record(self, t: int, alpha: float, theta: np.ndarray) -> None:
        if self.iterations and t <= self.iterations[-1]:
            raise ValueError("trace iterations must increase")
        self.iterations.append(t)
        self.alphas.append(alpha)
        self.thetas.append(theta.copy())

    @property
    def policies(self) -> list[Policy]:
        return [self.tree.flat.to_policy(th) for th in self.thetas]

    def __len__(self) -> int:
        return len(self.iterations)


def _check_alternating(tree: GameTree, n_stages: int) -> list[int]:
    if tree.n_stages != n_stages:
        raise ValueError(f"expected {n_stages} decision stages, found {tree.n_stages}")
    owners = []
    for s in range(n_stages):
        players = {tree.infosets[k].player for k in tree.stage_infosets(s)}
        if len(players) != 1:
            raise ValueError(f"stage {s} mixes decisions of both players")
        owners.append(players.pop())
    if any(a == b for a, b in zip(owners, owners[1:])):
        raise ValueError("decision stages must alternate between the players")
    return owners


class _StagewiseSolver:
    """Shared machinery: the last stage answers greedily, earlier stages move by MMD."""

    def __init__(self, tree: GameTree, cfg: MmdConfig):
        self.tree = tree
        self.cfg = cfg
        self.flat = flat = tree.flat
        self.obj = cfg.objective
        self.log_rho = flat.log_magnet(self.obj)
        self.stage_mask = [flat.slot_stage == s for s in range(tree.n_stages)]
        self.stage_edges = [flat.stage_edges(s) for s in range(tree.n_stages)]
        self.theta = flat.uniform()

    def q(self, theta: np.ndarray, stage: int, obj_t: Objective) -> tuple[np.ndarray, np.ndarray]:
        flat = self.flat
        reach = flat.reach(theta)
        v = flat.values(theta, obj_t, self.log_rho)
        return flat.action_values(reach, v, self.stage_edges[stage])

    def greedy_stage(self, theta: np.ndarray, stage: int, obj_t: Objective) -> None:
        q, _ = self.q(theta, stage, obj_t)
        m = self.stage_mask[stage]
        theta[m] = self.flat.greedy(q, obj_t.alpha, self.log_rho)[m]

    def mmd_stage(self, theta: np.ndarray, stage: int, obj_t: Objective) -> None:
        q, _ = self.q(theta, stage, obj_t)
        m = self.stage_mask[stage]
        theta[m] = self.flat.mmd(theta, q, self.cfg.eta, obj_t.alpha, self.log_rho)[m]

    def corresponded(self, theta: np.ndarray) -> np.ndarray:
        """Replace rules at infosets the composite never reaches by uniform."""
        flat = self.flat
        r = flat.reach(theta).prod(axis=0)
        d = flat.decision_nodes
        mass = np.bincount(flat.node_infoset[d], r[d], minlength=flat.n_infosets)
        dead = (mass <= 0)[flat.slot_infoset]
        out = theta.copy()
        out[dead] = flat.uniform()[dead]
        return out

    def should_record(self, t: int) -> bool:
        return t % self.cfg.record_every == 0 or t == self.cfg.outer_iters - 1


def solve_two_stage(tree: GameTree, cfg: MmdConfig) -> IterateTrace:
    """Announcer moves by MMD against a responder that answers each announcement greedily."""
    TwoStageGame(tree)
    _check_alternating(tree, 2)
    s = _StagewiseSolver(tree, cfg)
    trace = IterateTrace(tree)
    theta = s.theta
    for t in range(cfg.outer_iters):
        obj_t = cfg.objective.at(t)
        s.greedy_stage(theta, 1, obj_t)
        if s.should_record(t):
            trace.record(t, obj_t.alpha, s.corresponded(theta))
        s.mmd_stage(theta, 0, obj_t)
    return trace


def solve_three_stage(tree: GameTree, cfg: MmdConfig) -> IterateTrace:
    """Three alternating stages: greedy last stage, an inner MMD solve for the middle
    stage, and one MMD step per outer iteration for the first stage."""
    _check_alternating(tree, 3)
    s = _StagewiseSolver(tree, cfg)
    trace = IterateTrace(tree)
    theta = s.theta
    middle = s.stage_mask[1]
    uniform = s.flat.uniform()
    for t in range(cfg.outer_iters):
        obj_t = cfg.objective.at(t)
        if not cfg.warm_start:
            theta[middle] = uniform[middle]
        for _ in range(cfg.inner_count(t)):
            s.greedy_stage(theta, 2, obj_t)
            s.mmd_stage(theta, 1, obj_t)
        s.greedy_stage(theta, 2, obj_t)
        if s.should_record(t):
            trace.record(t, obj_t.alpha, s.corresponded(theta))
        s.mmd_stage(theta, 0, obj_t)
    return trace


def solve(tree: GameTree, cfg: MmdConfig) -> IterateTrace:
    if tree.n_stages == 2:
        return solve_two_stage(tree, cfg)
    if tree.n_stages == 3:
        return solve_three_stage(tree, cfg)
    raise ValueError(f"no solver for games with {tree.n_stages} decision stages")
