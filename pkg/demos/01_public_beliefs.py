"""
Public beliefs on Kuhn poker
============================

Announce a decision rule for player 0, watch the public belief update, then
map a public-belief policy back to an ordinary behavioral policy.
"""
import numpy as np

from pubamg import (canonical_up, correspondence_down, expected_objective, initial_pbs, kuhn_poker, pbs_step,
                    pub_objective, random_policy)

kuhn = kuhn_poker()
start = initial_pbs(kuhn)
print("initial belief over deals:", np.round(start.probs, 4))

# Player 0 announces: bet with the king, check otherwise.
rule = {"0:J": np.array([1.0, 0.0]), "0:Q": np.array([1.0, 0.0]), "0:K": np.array([0.0, 1.0])}
step = pbs_step(kuhn, start, rule)
for succ in step.successors:
    deals = [kuhn.nodes[kuhn.nodes[h].parent].name for h in succ.pbs.support]
    print(f"observe {succ.observation!r} w.p. {succ.prob:.3f}: belief", dict(zip(deals, np.round(succ.pbs.probs, 3).tolist())))

# Lifting a policy to the public-belief game and mapping it back loses nothing.
pi = random_policy(kuhn, np.random.default_rng(0))
lifted = canonical_up(kuhn, pi)
print("objective in the game:", expected_objective(kuhn, pi))
print("objective of the lift:", pub_objective(kuhn, lifted))
back = correspondence_down(kuhn, lifted)
print("round trip exact:", all(np.array_equal(back[k], pi[k]) for k in pi))
