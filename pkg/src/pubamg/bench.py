"""Experiment runner: solve a game, score the recorded iterates, write CSV curves."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .efg import GameTree, expected_objective
from .games import get_game, rigged_adversarial_matching_pennies, worst_case_pub_policy
from .mmd import IterateTrace, MmdConfig, solve
from .objectives import Objective, Schedule, exploitability_bound, minimax_ent, minimax_kl, unregularized
from .pub import correspondence_down, pub_objective
from .response import GreedyResponder, TwoStageGame, exploitability, exploitability_theta, \
    pubamg_exploitability_two_stage

METRICS = ("pubamg_expl", "pubamg_reg_expl", "expl", "reg_expl")
PUBAMG_METRICS = ("pubamg_expl", "pubamg_reg_expl")


class ConfigError(ValueError):
    pass


class OutputError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    game: str = "perturbed_rps"
    objective: str = "ent"  # none | ent | kl (kl uses the uniform reference)
    alpha: float = 0.1
    schedule: str = "const"
    eta: float = 0.1
    iters: int = 1000
    record_every: int = 10
    metrics: tuple[str, ...] = ("expl", "reg_expl")
    grid: float = 0.005
    out: str | None = None
    warm_start: bool = False
    inner_iters: str = "sqrt"

    def __post_init__(self):
        if self.objective not in ("none", "ent", "kl"):
            raise ConfigError(f"unknown objective {self.objective!r}")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ConfigError(f"unknown metrics: {', '.join(sorted(unknown))}")
        if not self.metrics:
            raise ConfigError("no metrics requested")
        try:
            Schedule.parse(self.schedule)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.iters < 1 or self.record_every < 1:
            raise ConfigError("iters and record_every must be positive")
        if not self.eta > 0 or self.alpha < 0 or not 0 < self.grid <= 0.5:
            raise ConfigError("need eta > 0, alpha >= 0 and 0 < grid <= 0.5")

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, raw in values.items():
            name = key.replace("-", "_")
            if name == "outer_iters":
                name = "iters"
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kw[name] = _coerce(name, raw)
        return cls(**kw)

    def build_objective(self, tree: GameTree) -> Objective:
        if self.objective == "none" or self.alpha == 0:
            return unregularized()
        if self.objective == "ent":
            return minimax_ent(self.alpha, self.schedule)
        reference = {k: np.full(len(v.actions), 1.0 / len(v.actions)) for k, v in tree.infosets.items()}
        return minimax_kl(self.alpha, reference, self.schedule)


def _coerce(name: str, raw):
    if not isinstance(raw, str):
        return tuple(raw) if name == "metrics" else raw
    raw = raw.strip()
    try:
        if name in ("alpha", "eta", "grid"):
            return float(raw)
        if name in ("iters", "record_every"):
            return int(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    if name == "metrics":
        return tuple(m.strip() for m in raw.split(",") if m.strip())
    if name == "warm_start":
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"bad value for warm_start: {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    if name == "out" and raw in ("", "-"):
        return None
    return raw


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"config line {lineno}: expected key = value")
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(values)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trace: IterateTrace
    header: list[str]
    rows: list[list[float]]
    final: dict[str, float]
    bound: float | None
    wall_time: float
    summary: str = field(default="", repr=False)

    def column(self, metric: str) -> np.ndarray:
        return np.array([r[self.header.index(metric)] for r in self.rows])


def _bound(tree: GameTree, obj: Objective, final_alpha: float) -> float | None:
    if not obj.regularized:
        return None
    if obj.kind == "entropy":
        eps = 1.0 / max(len(v.actions) for v in tree.infosets.values())
    else:
        eps = obj.reference_floor()
    return exploitability_bound(final_alpha, tree.horizon, eps)


def score_iterate(tree: GameTree, theta: np.ndarray, obj_t: Objective, metrics, grid: float,
                  two_stage: TwoStageGame | None = None) -> dict[str, float]:
    """Requested metrics of one recorded iterate; regularized ones use the iterate's own temperature."""
    out = {}
    if "expl" in metrics:
        out["expl"] = exploitability_theta(tree, theta)
    if "reg_expl" in metrics:
        out["reg_expl"] = exploitability_theta(tree, theta, obj_t)
    if two_stage is not None and any(m in metrics for m in PUBAMG_METRICS):
        flat = tree.flat
        j = flat.infoset_index[two_stage.infoset]
        first_rule = {two_stage.infoset: theta[flat.offsets[j]:flat.offsets[j + 1]]}
        responder = GreedyResponder(two_stage, obj_t)
        if "pubamg_expl" in metrics:
            out["pubamg_expl"] = pubamg_exploitability_two_stage(two_stage, first_rule, responder, None, grid).exploitability
        if "pubamg_reg_expl" in metrics:
            out["pubamg_reg_expl"] = pubamg_exploitability_two_stage(two_stage, first_rule, responder, obj_t,
                                                                     grid).exploitability
    return out


def run_experiment(cfg: ExperimentConfig, tree: GameTree | None = None) -> ExperimentResult:
    start = time.perf_counter()
    tree = tree if tree is not None else get_game(cfg.game)
    if cfg.out is not None:
        try:  # fail before a long solve rather than after it
            Path(cfg.out).open("w").close()
        except OSError as e:
            raise OutputError(f"cannot write {cfg.out}: {e.strerror}") from None
    two_stage = None
    if any(m in cfg.metrics for m in PUBAMG_METRICS):
        try:
            two_stage = TwoStageGame(tree)
        except ValueError as e:
            raise ConfigError(f"public-belief metrics need a two-stage game: {e}") from None
    obj = cfg.build_objective(tree)
    inner = cfg.inner_iters if cfg.inner_iters == "sqrt" else int(cfg.inner_iters)
    mmd_cfg = MmdConfig(cfg.eta, obj, cfg.iters, inner, cfg.record_every, cfg.warm_start)
    trace = solve(tree, mmd_cfg)

    header = ["iteration", *cfg.metrics]
    rows = []
    for t, theta in zip(trace.iterations, trace.thetas):
        scores = score_iterate(tree, theta, obj.at(t), cfg.metrics, cfg.grid, two_stage)
        for m in cfg.metrics:
            trace.metrics.setdefault(m, []).append(scores[m])
        rows.append([t, *(scores[m] for m in cfg.metrics)])
    if cfg.out is not None:
        write_csv(cfg.out, header, rows)
    final = dict(zip(cfg.metrics, rows[-1][1:]))
    bound = _bound(tree, obj, trace.alphas[-1])
    result = ExperimentResult(cfg, trace, header, rows, final, bound, time.perf_counter() - start)
    result.summary = format_summary(result)
    return result


def csv_text(header: list[str], rows: list[list[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([str(int(row[0]))] + [f"{x:.17g}" for x in row[1:]])
    return buf.getvalue()


def write_csv(path: str | Path, header: list[str], rows: list[list[float]]) -> None:
    Path(path).write_text(csv_text(header, rows))


def format_summary(result: ExperimentResult) -> str:
    cfg = result.config
    lines = [f"game: {cfg.game}",
             f"objective: {cfg.objective} alpha={cfg.alpha:g} schedule={cfg.schedule} eta={cfg.eta:g}",
             f"iterations: {cfg.iters} (recorded {len(result.rows)})"]
    for m, v in result.final.items():
        lines.append(f"final {m}: {v:.6g}")
    if result.bound is not None:
        lines.append(f"exploitability bound at final alpha: {result.bound:.6g}")
    if cfg.out:
        lines.append(f"csv: {cfg.out}")
    lines.append(f"wall time: {result.wall_time:.2f}s")
    return "\n".join(lines)


@dataclass(frozen=True)
class WorstCaseReport:
    expected_return: float
    exploitability: float
    policy: dict[str, np.ndarray]
    certificates: dict[str, float]  # deviation name -> value the deviating player earns

    def __str__(self) -> str:
        lines = ["rigged adversarial matching pennies, public-belief equilibrium mapped back to the game",
                 f"expected return: {self.expected_return:g}"]
        for k, v in self.policy.items():
            lines.append(f"  {k}: {np.array2string(v, precision=3)}")
        for k, v in self.certificates.items():
            lines.append(f"deviation '{k}' earns {v:g}")
        lines.append(f"exploitability: {self.exploitability:g}")
        return "\n".join(lines)


def run_worst_case_demo() -> WorstCaseReport:
    tree = rigged_adversarial_matching_pennies()
    policy = worst_case_pub_policy()
    ret = pub_objective(tree, policy)
    pi = correspondence_down(tree, policy)
    report = exploitability(tree, pi)
    rig = dict(pi, red=np.array([0.0, 1.0]))
    heads = dict(pi, blue=np.array([0.0, 1.0, 0.0]))
    certificates = {
        "red rigs always": -expected_objective(tree, rig),
        "blue plays heads always": expected_objective(tree, heads),
    }
    return WorstCaseReport(ret, report.exploitability, pi, certificates)


__all__ = ["ConfigError", "OutputError", "ExperimentConfig", "ExperimentResult", "METRICS", "WorstCaseReport", "csv_text",
           "load_config", "parse_config_text", "run_experiment", "run_worst_case_demo", "score_iterate",
           "write_csv"]
