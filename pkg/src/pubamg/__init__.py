"""Tabular solvers for regularized public-belief games built from two-player
zero-sum extensive-form games."""
from .efg import (GameFormatError, GameTree, GameValidationError, PolicyError, expected_objective,
                  load_game, parse_game, random_policy, reach_probabilities, uniform_policy)
from .games import GAMES, KUHN_VALUE, get_game, kuhn_poker, perturbed_rps, rigged_adversarial_matching_pennies
from .mmd import IterateTrace, MmdConfig, greedy_policy, mmd_step, solve, solve_three_stage, solve_two_stage
from .objectives import (Objective, Schedule, exploitability_bound, minimax_ent, minimax_kl, payoff_bound,
                         unregularized)
from .pub import (PublicBeliefState, canonical_up, correspondence_down, initial_pbs, pbs_step, pub_objective)
from .response import (BestResponseResult, ExploitabilityReport, GreedyResponder, TwoStageGame, action_values,
                       best_response, exploitability, final_stage_value, pubamg_exploitability_two_stage)

__version__ = "0.1.0"
