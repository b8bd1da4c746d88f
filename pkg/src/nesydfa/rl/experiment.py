"""Grids of A2C runs (agents x tasks x schemes x seeds) with CSV outputs."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from ..tensor.checkpoint import save as save_checkpoint
from .a2c import AGENTS, A2cConfig, ConfigError, TrainResult, a2c_train
from .env import GridWorld
from .tasks import task_ids

RUN_FIELDS = ["run_id", "episode", "cumulative_reward", "grounder_loss", "labeling_accuracy"]
SUMMARY_FIELDS = ["run_id", "agent", "task", "scheme", "seed", "final_mean_reward", "final_labeling_accuracy"]
SCHEMES = ("dense", "sparse")


@dataclass
class RlConfig:
    tasks: list[str] = field(default_factory=lambda: ["visit_pg"])
    agents: list[str] = field(default_factory=lambda: ["rm"])
    schemes: list[str] = field(default_factory=lambda: ["dense"])
    grid: tuple[int, int] = (5, 5)
    horizon: int = 60
    episodes: int = 5000
    seeds: list[int] = field(default_factory=lambda: [0])
    hyperparameters: dict = field(default_factory=dict)
    final_window: int = 100

    def validate(self) -> None:
        for a in self.agents:
            if a not in AGENTS:
                hint = " (off-policy methods are not supported: the grounder keeps changing the " \
                       "policy input, so only on-policy agents are offered)" if a in ("dqn", "crm", "qrm") else ""
                raise ConfigError(f"unknown agent {a!r}; choose from {', '.join(AGENTS)}{hint}")
        known = set(task_ids())
        for t in self.tasks:
            if t not in known:
                raise ConfigError(f"unknown task {t!r}; choose from {', '.join(sorted(known))}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown reward scheme {s!r}; choose from {', '.join(SCHEMES)}")
        if self.horizon < 1 or self.episodes < 1 or min(self.grid) < 2:
            raise ConfigError("horizon and episodes must be positive and the grid at least 2x2")
        valid = {f.name for f in fields(A2cConfig)} - {"episodes", "seed"}
        bad = set(self.hyperparameters) - valid
        if bad:
            raise ConfigError(f"unknown hyperparameters: {', '.join(sorted(bad))}")
        self.a2c(0).validate()

    def a2c(self, seed: int) -> A2cConfig:
        return A2cConfig(episodes=self.episodes, seed=seed, **self.hyperparameters)

    @classmethod
    def from_json(cls, obj: dict) -> "RlConfig":
        allowed = {f.name for f in fields(cls)}
        extra = set(obj) - allowed
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        obj = dict(obj)
        for key in ("tasks", "agents", "schemes"):
            if isinstance(obj.get(key), str):
                obj[key] = [obj[key]]
        if "task" in obj or "agent" in obj:
            raise ConfigError("use the plural keys tasks/agents")
        if "grid" in obj:
            obj["grid"] = tuple(obj["grid"])
        cfg = cls(**obj)
        cfg.validate()
        return cfg

    def to_json(self) -> dict:
        out = asdict(self)
        out["grid"] = list(self.grid)
        return out


@dataclass
class RunSpec:
    agent: str
    task: str
    scheme: str
    seed: int

    @property
    def run_id(self) -> str:
        return f"{self.agent}_{self.task}_{self.scheme}_s{self.seed}"


def run_specs(cfg: RlConfig) -> list[RunSpec]:
    return [RunSpec(a, t, s, seed) for t in cfg.tasks for s in cfg.schemes for a in cfg.agents
            for seed in cfg.seeds]


def make_env(cfg: RlConfig, spec: RunSpec) -> GridWorld:
    w, h = cfg.grid
    return GridWorld.for_task(spec.task, spec.scheme, seed=spec.seed, width=w, height=h, horizon=cfg.horizon)


def run_one(cfg: RlConfig, spec: RunSpec) -> TrainResult:
    return a2c_train(spec.agent, make_env(cfg, spec), cfg.a2c(spec.seed))


def _fmt(x: float) -> str:
    return "" if x != x else repr(float(x))


def write_run_csv(path: Path, spec: RunSpec, res: TrainResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_FIELDS)
        for i, (r, gl, la) in enumerate(zip(res.rewards, res.grounder_loss, res.labeling_acc), start=1):
            w.writerow([spec.run_id, i, _fmt(r), _fmt(gl), _fmt(la)])


def save_run_checkpoint(path: Path, res: TrainResult) -> None:
    agent = res.agent
    tensors = {p.name: p for p in agent.parameters()}
    if res.kind == "nrm":
        tensors.update({p.name: p for p in agent.grounder.parameters()})
    save_checkpoint(path, tensors)


def aggregate(results: Sequence[tuple[RunSpec, TrainResult]], out_dir: Path) -> list[Path]:
    """Mean/std reward curve per (agent, task, scheme) across seeds."""
    groups: dict[tuple[str, str, str], list[TrainResult]] = {}
    for spec, res in results:
        groups.setdefault((spec.agent, spec.task, spec.scheme), []).append(res)
    paths = []
    for (agent, task, scheme), runs in sorted(groups.items()):
        curves = np.array([r.rewards for r in runs])
        path = out_dir / f"aggregate_{agent}_{task}_{scheme}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["episode", "mean_reward", "std_reward", "n_seeds"])
            for i in range(curves.shape[1]):
                w.writerow([i + 1, _fmt(curves[:, i].mean()), _fmt(curves[:, i].std()), curves.shape[0]])
        paths.append(path)
    return paths


def run_experiment(cfg: RlConfig, out_dir: str | Path, threads: int = 1, checkpoints: bool = True
                   ) -> list[tuple[RunSpec, TrainResult]]:
    cfg.validate()
    out_dir = Path(out_dir)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)
    specs = run_specs(cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(lambda s: run_one(cfg, s), specs))
    else:
        done = [run_one(cfg, s) for s in specs]
    results = list(zip(specs, done))
    for spec, res in results:
        write_run_csv(out_dir / "runs" / f"{spec.run_id}.csv", spec, res)
        if checkpoints:
            save_run_checkpoint(out_dir / "runs" / f"{spec.run_id}.twck", res)
    aggregate(results, out_dir)
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for spec, res in results:
            w.writerow([spec.run_id, spec.agent, spec.task, spec.scheme, spec.seed,
                        _fmt(res.final_mean(cfg.final_window)), _fmt(res.labeling_acc[-1])])
    (out_dir / "config.json").write_text(json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n")
    return results
