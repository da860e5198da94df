"""
Kuhn poker with annealed entropy
================================

A shortened version of the shipped annealed run (the full config takes about
a minute). Exploitability falls as the temperature decays; the value player 0
can guarantee approaches -1/18.
"""
import sys

from pubamg import KUHN_VALUE, best_response, get_game
from pubamg.bench import ExperimentConfig, run_experiment

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 1500
cfg = ExperimentConfig(game="kuhn", objective="ent", alpha=0.2, schedule="inv:0.002", eta=0.1, iters=iters,
                       record_every=max(1, iters // 10), warm_start=True, metrics=("expl", "reg_expl"))
result = run_experiment(cfg)
for row in result.rows:
    print(f"iteration {row[0]:5d}  expl {row[1]:.5f}  reg_expl {row[2]:.2e}")

kuhn = get_game("kuhn")
pi = result.trace.policies[-1]
p0 = {k: v for k, v in pi.items() if kuhn.infosets[k].player == 0}
print(f"guaranteed value {best_response(kuhn, p0, 1).value:.5f} (game value {KUHN_VALUE:.5f})")
