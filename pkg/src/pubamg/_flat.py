"""Array view of a GameTree used by the solvers and best-response code.

Policies are flattened into one vector of action probabilities ("slots"),
infoset by infoset, so reach, values and action values reduce to a few
numpy scatter/gather calls per depth level.
"""
from __future__ import annotations

import numpy as np
from scipy.special import xlogy

CHANCE = 2


class FlatTree:
    def __init__(self, tree):
        self.tree = tree
        nodes = tree.nodes
        n = self.n_nodes = len(nodes)
        self.labels = sorted(tree.infosets, key=lambda k: (tree.infosets[k].depth, k))
        self.infoset_index = {k: j for j, k in enumerate(self.labels)}
        sizes = [len(tree.infosets[k].actions) for k in self.labels]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.n_slots = int(self.offsets[-1])
        self.n_infosets = len(self.labels)
        self.slot_infoset = np.repeat(np.arange(self.n_infosets), sizes)
        self.infoset_player = np.array([tree.infosets[k].player for k in self.labels], dtype=int)
        self.infoset_stage = np.array([tree.infosets[k].stage for k in self.labels], dtype=int)
        self.infoset_depth = np.array([tree.infosets[k].depth for k in self.labels], dtype=int)
        self.slot_player = self.infoset_player[self.slot_infoset]
        self.slot_sign = np.where(self.slot_player == 0, 1.0, -1.0)
        self.slot_stage = self.infoset_stage[self.slot_infoset]
        self.slot_size = np.repeat(sizes, sizes).astype(float)

        self.payoff = np.array([nd.payoff for nd in nodes])
        self.depth = np.array([nd.depth for nd in nodes], dtype=int)
        self.node_infoset = np.array([self.infoset_index[nd.infoset] if nd.kind == "decision" else -1
                                      for nd in nodes], dtype=int)
        self.node_player = np.array([nd.player if nd.kind == "decision" else -1 for nd in nodes], dtype=int)
        self.decision_nodes = np.flatnonzero(self.node_infoset >= 0)

        parent, child, slot, owner, cprob = [], [], [], [], []
        for i, nd in enumerate(nodes):
            for a, c in enumerate(nd.children):
                parent.append(i)
                child.append(c)
                if nd.kind == "chance":
                    slot.append(-1)
                    owner.append(CHANCE)
                    cprob.append(nd.probs[a])
                else:
                    slot.append(self.offsets[self.infoset_index[nd.infoset]] + a)
                    owner.append(nd.player)
                    cprob.append(0.0)
        self.parent = np.array(parent, dtype=int)
        self.child = np.array(child, dtype=int)
        self.slot = np.array(slot, dtype=int)
        self.owner = np.array(owner, dtype=int)
        self.chance_prob = np.array(cprob)
        self.dec_edges = np.flatnonzero(self.slot >= 0)
        self.dec_slot = self.slot[self.dec_edges]
        # reach factor rows: 0 chance, 1 player 0, 2 player 1
        self.owner_row = np.where(self.owner == CHANCE, 0, self.owner + 1)
        self.max_depth = int(self.depth.max())
        self.levels = [np.flatnonzero(self.depth[self.child] == d) for d in range(self.max_depth + 1)]
        self.nodes_at = [np.flatnonzero(self.depth == d) for d in range(self.max_depth + 1)]
        # opponent-and-chance reach is what conditions the acting player's action values
        self.edge_opp_row = np.where(self.owner == 0, 2, 1)

    # -- conversions ----------------------------------------------------

    def to_theta(self, pi, fill_uniform: bool = False) -> np.ndarray:
        theta = np.empty(self.n_slots)
        for j, k in enumerate(self.labels):
            lo, hi = self.offsets[j], self.offsets[j + 1]
            if k in pi:
                theta[lo:hi] = pi[k]
            elif fill_uniform:
                theta[lo:hi] = 1.0 / (hi - lo)
            else:
                raise KeyError(k)
        return theta

    def to_policy(self, theta: np.ndarray, player: int | None = None) -> dict:
        return {k: theta[self.offsets[j]:self.offsets[j + 1]].copy()
                for j, k in enumerate(self.labels)
                if player is None or self.infoset_player[j] == player}

    def uniform(self) -> np.ndarray:
        return 1.0 / self.slot_size

    def log_magnet(self, obj) -> np.ndarray:
        if obj is not None and obj.kind == "kl":
            return np.log(self.to_theta(obj.reference))
        return -np.log(self.slot_size)

    # -- segment helpers ---------------------------------------------------

    def seg_sum(self, x: np.ndarray) -> np.ndarray:
        return np.add.reduceat(x, self.offsets[:-1])

    def seg_softmax(self, logits: np.ndarray) -> np.ndarray:
        m = np.maximum.reduceat(logits, self.offsets[:-1])
        e = np.exp(logits - m[self.slot_infoset])
        return e / self.seg_sum(e)[self.slot_infoset]

    def seg_argmax_uniform(self, q: np.ndarray) -> np.ndarray:
        m = np.maximum.reduceat(q, self.offsets[:-1])
        tol = 1e-12 * (1.0 + np.abs(m))
        hit = (q >= (m - tol)[self.slot_infoset]).astype(float)
        return hit / self.seg_sum(hit)[self.slot_infoset]

    def greedy(self, q: np.ndarray, alpha: float, log_rho: np.ndarray) -> np.ndarray:
        """Per-infoset maximizer of <delta, q> - alpha KL(delta, rho); argmax ties split evenly at alpha=0."""
        if alpha <= 0:
            return self.seg_argmax_uniform(q)
        return self.seg_softmax(q / alpha + log_rho)

    def mmd(self, theta: np.ndarray, q: np.ndarray, eta: float, alpha: float, log_rho: np.ndarray) -> np.ndarray:
        # slots of other stages may hold exact zeros; their output is discarded by the caller
        with np.errstate(divide="ignore"):
            logits = (np.log(theta) + eta * q + alpha * eta * log_rho) / (1.0 + alpha * eta)
        return self.seg_softmax(logits)

    # -- evaluation ------------------------------------------------------

    def edge_probs(self, theta: np.ndarray) -> np.ndarray:
        p = self.chance_prob.copy()
        p[self.dec_edges] = theta[self.dec_slot]
        return p

    def reach(self, theta: np.ndarray) -> np.ndarray:
        """(3, n_nodes) array of chance, player-0 and player-1 reach."""
        p = self.edge_probs(theta)
        r = np.ones((3, self.n_nodes))
        for e in self.levels[1:]:
            r[:, self.child[e]] = r[:, self.parent[e]]
            r[self.owner_row[e], self.child[e]] *= p[e]
        return r

    def infoset_regularizer(self, theta: np.ndarray, obj, log_rho: np.ndarray | None = None) -> np.ndarray:
        """Unsigned per-infoset bonus: H(delta) or -KL(delta, rho)."""
        if obj is None or not obj.regularized:
            return np.zeros(self.n_infosets)
        if obj.kind == "entropy":
            return -self.seg_sum(xlogy(theta, theta))
        if log_rho is None:
            log_rho = self.log_magnet(obj)
        pos = theta > 0
        terms = np.zeros_like(theta)
        terms[pos] = theta[pos] * (np.log(theta[pos]) - log_rho[pos])
        return -self.seg_sum(terms)

    def node_regularizer(self, theta: np.ndarray, obj, log_rho=None) -> np.ndarray:
        out = np.zeros(self.n_nodes)
        if obj is None or not obj.regularized:
            return out
        reg = self.infoset_regularizer(theta, obj, log_rho)
        d = self.decision_nodes
        out[d] = np.where(self.node_player[d] == 0, 1.0, -1.0) * obj.alpha * reg[self.node_infoset[d]]
        return out

    def values(self, theta: np.ndarray, obj=None, log_rho=None) -> np.ndarray:
        """Expected future objective for player 0 from every node."""
        p = self.edge_probs(theta)
        v = self.payoff + self.node_regularizer(theta, obj, log_rho)
        for e in reversed(self.levels[1:]):
            v += np.bincount(self.parent[e], p[e] * v[self.child[e]], minlength=self.n_nodes)
        return v

    def action_values(self, reach: np.ndarray, v: np.ndarray, edges=None) -> tuple[np.ndarray, np.ndarray]:
        """Per-slot action values for the acting player and per-slot conditioning mass."""
        e = self.dec_edges if edges is None else edges
        w = reach[0, self.parent[e]] * reach[self.edge_opp_row[e], self.parent[e]]
        s = self.slot[e]
        num = np.bincount(s, w * v[self.child[e]], minlength=self.n_slots)
        den = np.bincount(s, w, minlength=self.n_slots)
        q = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return q * self.slot_sign, den

    def stage_edges(self, stage: int) -> np.ndarray:
        return self.dec_edges[self.slot_stage[self.dec_slot] == stage]

    def _br_plan(self, responder: int) -> list:
        """Per depth, from the bottom: (edges leaving responder nodes, their infoset slot ranges, edges into d+1)."""
        plans = self.__dict__.setdefault("_br_plans", {})
        if responder not in plans:
            resp_edges = self.dec_edges[self.owner[self.dec_edges] == responder]
            plan = []
            for d in range(self.max_depth, -1, -1):
                here = resp_edges[self.depth[self.parent[resp_edges]] == d]
                segs = [(int(self.offsets[j]), int(self.offsets[j + 1]))
                        for j in np.unique(self.slot_infoset[self.slot[here]])]
                e_out = self.levels[d + 1] if d + 1 < len(self.levels) else np.zeros(0, dtype=int)
                at = self.nodes_at[d]
                plan.append((d, here, segs, e_out, at[self.node_infoset[at] >= 0]))
            plans[responder] = plan
        return plans[responder]

    def best_response(self, theta: np.ndarray, responder: int, obj=None) -> tuple[np.ndarray, float]:
        """Exact (soft) best response by backward induction; returns (theta, root value)."""
        theta = theta.copy()
        mine = self.slot_player == responder
        theta[mine] = self.uniform()[mine]
        reach = self.reach(theta)  # responder slots do not affect opponent-and-chance reach
        alpha = obj.alpha if obj is not None and obj.regularized else 0.0
        log_rho = self.log_magnet(obj)
        v = self.payoff.copy()
        for d, here, segs, e_out, dec in self._br_plan(responder):
            if len(here):
                q, den = self.action_values(reach, v, here)
                for lo, hi in segs:
                    if den[lo] <= 0:
                        theta[lo:hi] = 1.0 / (hi - lo)
                    elif alpha <= 0:
                        qq = q[lo:hi]
                        hit = (qq >= qq.max() - 1e-12 * (1.0 + abs(qq.max()))).astype(float)
                        theta[lo:hi] = hit / hit.sum()
                    else:
                        z = q[lo:hi] / alpha + log_rho[lo:hi]
                        z = np.exp(z - z.max())
                        theta[lo:hi] = z / z.sum()
            if len(e_out):
                p = self.edge_probs(theta)
                v += np.bincount(self.parent[e_out], p[e_out] * v[self.child[e_out]], minlength=self.n_nodes)
            if len(dec) and alpha > 0:
                reg = self.node_regularizer(theta, obj, log_rho)
                v[dec] += reg[dec]
        return theta, float(v[self.tree.root])
