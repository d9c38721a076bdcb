"""Deterministic experiment runner: episodes, regret accounting,
replication, aggregation, and hyper-parameter sweeps.

Runs are embarrassingly parallel; every run derives its own random streams
from (master seed, experiment hash, run index), so scheduling cannot change
any result.
"""
from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig, experiment_id
from .errors import ConfigError
from .policies import make_policy, realized_reward
from .rng import RngStream, stable_hash

__all__ = [
    "DEFAULT_GRID",
    "RegretCurve",
    "AggregatedResult",
    "ExperimentResult",
    "SweepEntry",
    "SweepResult",
    "checkpoint_rounds",
    "run_episode",
    "run_experiment",
    "sweep",
]

DEFAULT_GRID = tuple(2.0 ** (k - 4) for k in range(7))


@dataclass
class RegretCurve:
    """Per-round cumulative pseudo-regret of a single run."""

    cumulative: np.ndarray

    def at(self, rounds: np.ndarray) -> np.ndarray:
        return self.cumulative[np.asarray(rounds, dtype=int) - 1]


@dataclass
class AggregatedResult:
    experiment_id: str
    checkpoints: np.ndarray
    n_runs: int
    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]

    @property
    def algorithms(self) -> list[str]:
        return list(self.mean)

    def final_mean(self, label: str) -> float:
        return float(self.mean[label][-1])

    def final_stderr(self, label: str) -> float:
        return float(self.stderr[label][-1])


@dataclass
class ExperimentResult:
    experiment_id: str
    config: SimConfig
    checkpoints: np.ndarray
    curves: dict[str, np.ndarray]  # label -> (n_runs, n_checkpoints)

    def aggregate(self) -> AggregatedResult:
        mean, stderr = {}, {}
        for label, rows in self.curves.items():
            mean[label] = rows.mean(axis=0)
            if rows.shape[0] > 1:
                stderr[label] = rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])
            else:
                stderr[label] = np.zeros(rows.shape[1])
        return AggregatedResult(
            self.experiment_id, self.checkpoints, next(iter(self.curves.values())).shape[0], mean, stderr
        )


def checkpoint_rounds(T: int, stride: int) -> np.ndarray:
    points = list(range(stride, T + 1, stride))
    if not points or points[-1] != T:
        points.append(T)
    return np.asarray(points, dtype=int)


def run_episode(env, policy, T: int, pull_gen: np.random.Generator, realized: bool = False) -> RegretCurve:
    """Run select -> pull -> update for T rounds.

    Regret is charged with expected values by default (low-variance
    pseudo-regret); ``realized`` switches to optimal minus realized reward.
    """
    optimal = env.optimal_value()
    increments = np.empty(T)
    last_action = None
    last_expected = 0.0
    for t in range(1, T + 1):
        action = policy.select(t)
        feedback = env.pull(action, pull_gen)
        policy.update(t, action, feedback)
        if realized:
            increments[t - 1] = optimal - realized_reward(env, action, feedback)
        else:
            if action is not last_action:  # identity: epoch policies reuse one slate object
                last_action = action
                last_expected = env.expected_value(action)
            increments[t - 1] = optimal - last_expected
    return RegretCurve(np.cumsum(increments))


def _run_one(cfg: SimConfig, run_index: int) -> dict[str, np.ndarray]:
    root = RngStream(cfg.master_seed, (stable_hash(experiment_id(cfg)),))
    run_stream = root.child(run_index)
    env = cfg.env.sample(run_stream.child("env").generator())
    points = checkpoint_rounds(cfg.T, cfg.stride)
    out = {}
    for i, alg in enumerate(cfg.algorithms):
        policy = make_policy(alg, env, run_stream.child("policy", i), env_spec=cfg.env)
        pull_gen = run_stream.child("pull", i).generator()
        curve = run_episode(env, policy, cfg.T, pull_gen, realized=cfg.realized)
        out[alg.label] = curve.at(points)
    return out


def _worker(args: tuple[SimConfig, int]) -> dict[str, np.ndarray]:
    return _run_one(*args)


def run_experiment(cfg: SimConfig, workers: int | None = None) -> ExperimentResult:
    """Run n_runs independent (instance, episode) pairs and collect
    checkpointed curves; a fresh environment instance is drawn per run."""
    workers = cfg.workers if workers is None else workers
    points = checkpoint_rounds(cfg.T, cfg.stride)
    labels = [alg.label for alg in cfg.algorithms]
    if len(set(labels)) != len(labels):
        raise ConfigError("duplicate algorithm specs in one experiment")
    per_run: list[dict[str, np.ndarray]]
    if workers > 1 and cfg.n_runs > 1:
        with multiprocessing.Pool(processes=workers) as pool:
            per_run = pool.map(_worker, [(cfg, r) for r in range(cfg.n_runs)])
    else:
        per_run = [_run_one(cfg, r) for r in range(cfg.n_runs)]
    curves = {
        label: np.vstack([per_run[r][label] for r in range(cfg.n_runs)]) for label in labels
    }
    return ExperimentResult(experiment_id(cfg), cfg, points, curves)


@dataclass
class SweepEntry:
    algorithm: str  # base label (before substituting the grid value)
    param: str | None
    value: float | None
    final_mean_regret: float
    final_stderr: float
    selected: bool
    label: str  # resolved label actually run


@dataclass
class SweepResult:
    entries: list[SweepEntry] = field(default_factory=list)
    best: dict[str, ExperimentResult] = field(default_factory=dict)


def sweep(cfg: SimConfig, grid=DEFAULT_GRID) -> SweepResult:
    """Run every algorithm across the grid of its tuning parameter and keep
    the best (lowest final mean regret; ties go to the smaller value)."""
    grid = sorted(float(g) for g in grid)
    if not grid:
        raise ConfigError("sweep grid must be non-empty")
    result = SweepResult()
    for alg in cfg.algorithms:
        param = alg.tunable()
        if param is None:
            res = run_experiment(cfg.single(alg))
            agg = res.aggregate()
            result.entries.append(
                SweepEntry(alg.label, None, None, agg.final_mean(alg.label), agg.final_stderr(alg.label), True, alg.label)
            )
            result.best[alg.label] = res
            continue
        best_entry = None
        for value in grid:
            variant = alg.with_param(param, value)
            res = run_experiment(cfg.single(variant))
            agg = res.aggregate()
            entry = SweepEntry(
                alg.label, param, value,
                agg.final_mean(variant.label), agg.final_stderr(variant.label),
                False, variant.label,
            )
            result.entries.append(entry)
            if best_entry is None or entry.final_mean_regret < best_entry.final_mean_regret:
                best_entry = entry
                result.best[alg.label] = res
        best_entry.selected = True
    return result
