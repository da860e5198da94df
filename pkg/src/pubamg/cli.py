"""Command-line entry point: ``pubamg solve|demo-worst-case|list-games|validate``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import ConfigError, ExperimentConfig, load_config, run_experiment, run_worst_case_demo
from .efg import GameFormatError, GameValidationError, parse_game
from .games import GAMES

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

_SOLVE_FLAGS = ("game", "objective", "alpha", "schedule", "eta", "iters", "record_every", "metrics", "grid",
                "out", "warm_start", "inner_iters")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pubamg", description="Regularized public-belief game solving.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run MMD on a game and write metric curves as CSV")
    s.add_argument("--config", help="key=value file; command-line flags override it")
    s.add_argument("--game", help="built-in game name or game file")
    s.add_argument("--objective", choices=["none", "ent", "kl"])
    s.add_argument("--alpha", type=float)
    s.add_argument("--schedule", help="const, inv:<c> or exp:<g>")
    s.add_argument("--eta", type=float)
    s.add_argument("--iters", type=int)
    s.add_argument("--record-every", dest="record_every", type=int)
    s.add_argument("--metrics", help="comma-separated subset of pubamg_expl,pubamg_reg_expl,expl,reg_expl")
    s.add_argument("--grid", type=float)
    s.add_argument("--out")
    s.add_argument("--warm-start", dest="warm_start", action="store_const", const="true")
    s.add_argument("--inner-iters", dest="inner_iters", help="'sqrt' or a fixed count")

    sub.add_parser("demo-worst-case", help="rigged matching pennies: equilibrium that maps to a maximally exploitable policy")
    sub.add_parser("list-games", help="list built-in games")
    v = sub.add_parser("validate", help="parse and check a game file")
    v.add_argument("file")
    return p


def _solve(args) -> int:
    given = {k: getattr(args, k) for k in _SOLVE_FLAGS if getattr(args, k) is not None}
    cfg = load_config(args.config, **given) if args.config else ExperimentConfig.from_mapping(given)
    result = run_experiment(cfg)
    print(result.summary)
    return EXIT_OK


def _validate(path: str) -> int:
    tree = parse_game(Path(path).read_text(), Path(path).stem)
    counts = {k: sum(1 for n in tree.nodes if n.kind == k) for k in ("decision", "chance", "terminal")}
    print(f"{path}: ok")
    print(f"nodes: {len(tree.nodes)} ({counts['decision']} decision, {counts['chance']} chance, "
          f"{counts['terminal']} terminal)")
    print(f"infosets: {len(tree.infosets)}; public states: {len(tree.public_states)}; "
          f"decision stages: {tree.n_stages}; horizon: {tree.horizon}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _solve(args)
        if args.command == "demo-worst-case":
            print(run_worst_case_demo())
            return EXIT_OK
        if args.command == "list-games":
            for name, make in GAMES.items():
                tree = make()
                print(f"{name:16s} {len(tree.nodes):3d} nodes, {len(tree.infosets):2d} infosets, "
                      f"{tree.n_stages} decision stages")
            return EXIT_OK
        return _validate(args.file)
    except (GameFormatError, GameValidationError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # anything else is a failure while running, not bad input
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
