"""Multi-seed grounding runs over a formula catalog (keep the best runs by train accuracy)."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..ltlf.formula import Formula
from .dataset import DegenerateFormula, GlyphDataset, RenderConfig, synthesize_dataset
from .model import SsgModel, TrainConfig, evaluate, train

METRIC_FIELDS = ["formula", "seed", "epoch", "split", "loss", "seq_acc", "grounding_acc",
                 "grounding_acc_perm"]
SUMMARY_FIELDS = ["formula", "split", "status", "n_kept", "seq_acc_mean", "seq_acc_std",
                  "grounding_acc_mean", "grounding_acc_perm_mean"]


@dataclass
class RunResult:
    formula: str
    seed: int
    history: list[dict]
    final: dict[str, dict]  # split name -> metrics
    params: dict[str, np.ndarray] = field(default_factory=dict)  # trained grounder


@dataclass
class FormulaResult:
    formula: str
    runs: list[RunResult] = field(default_factory=list)
    kept: list[int] = field(default_factory=list)
    skipped: str | None = None

    def kept_runs(self) -> list[RunResult]:
        return [r for r in self.runs if r.seed in self.kept]

    def mean(self, split: str, key: str = "seq_acc") -> float:
        return float(np.mean([r.final[split][key] for r in self.kept_runs()]))

    def std(self, split: str, key: str = "seq_acc") -> float:
        return float(np.std([r.final[split][key] for r in self.kept_runs()]))


def single_run(ds: GlyphDataset, seed: int, cfg: TrainConfig, hidden: Sequence[int] = (64, 64)) -> RunResult:
    model = SsgModel.for_dataset(ds, np.random.default_rng(seed), hidden)
    before = model.dfa.checksum()
    history = train(model, ds, cfg, seed=seed)
    if model.dfa.checksum() != before:
        raise AssertionError("training changed the injected automaton")
    final = {s.name: evaluate(model, s) for s in ds.splits()}
    params = {p.name: p.data.copy() for p in model.grounder.parameters()}
    return RunResult(ds.formula_id, seed, history, final, params)


def keep_best(runs: Sequence[RunResult], keep: int) -> list[int]:
    """Seeds of the ``keep`` runs with the highest final train accuracy (ties: lower seed first)."""
    ranked = sorted(runs, key=lambda r: (-r.final["train"]["seq_acc"], r.seed))
    return sorted(r.seed for r in ranked[:keep])


def run_catalog(formulas: Mapping[str, Formula], props: Sequence[str], seeds: Sequence[int],
                render: RenderConfig = RenderConfig(), cfg: TrainConfig = TrainConfig(),
                keep: int = 7, threads: int = 1, data_seed: int = 0,
                hidden: Sequence[int] = (64, 64)) -> list[FormulaResult]:
    results: dict[str, FormulaResult] = {}
    datasets: dict[str, GlyphDataset] = {}
    for name in sorted(formulas):
        results[name] = FormulaResult(name)
        try:
            datasets[name] = synthesize_dataset(formulas[name], props, render, data_seed, name)
        except DegenerateFormula as err:
            results[name].skipped = str(err)
    jobs = [(name, s) for name in sorted(datasets) for s in seeds]

    def work(job):
        name, s = job
        return single_run(datasets[name], s, cfg, hidden)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(work, jobs))
    else:
        done = [work(j) for j in jobs]
    for run in done:
        results[run.formula].runs.append(run)
    for res in results.values():
        if res.runs:
            res.kept = keep_best(res.runs, keep)
    return [results[n] for n in sorted(results)]


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_metrics(results: Sequence[FormulaResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_FIELDS)
        for res in results:
            for run in res.runs:
                for rec in run.history:
                    w.writerow([res.formula, run.seed] + [_fmt(rec[k]) for k in METRIC_FIELDS[2:]])
                last = run.history[-1]["epoch"] if run.history else 0
                for split, rec in run.final.items():
                    if split == "train":
                        continue
                    w.writerow([res.formula, run.seed, last, split] + [_fmt(rec[k]) for k in METRIC_FIELDS[4:]])


def write_summary(results: Sequence[FormulaResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for res in results:
            if res.skipped:
                w.writerow([res.formula, "", "degenerate: " + res.skipped, 0, "", "", "", ""])
                continue
            for split in res.runs[0].final:
                w.writerow([res.formula, split, "ok", len(res.kept), _fmt(res.mean(split)),
                            _fmt(res.std(split)), _fmt(res.mean(split, "grounding_acc")),
                            _fmt(res.mean(split, "grounding_acc_perm"))])
