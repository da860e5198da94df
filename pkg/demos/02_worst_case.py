"""
An equilibrium of the public-belief game that is maximally exploitable
======================================================================

On rigged matching pennies, red announces a fair coin and blue's rule only
mixes when the announcement was fair. Inside the public-belief game nobody
gains by deviating, yet the behavioral policy it maps to loses 1 to either
player's best response.
"""
from pubamg.bench import run_worst_case_demo

print(run_worst_case_demo())
