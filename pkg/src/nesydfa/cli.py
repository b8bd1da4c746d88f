"""Command-line entry point: ``nesydfa <command> [options]``.

Exit codes: 0 on success, 1 when a run fails, 2 for usage, syntax or
configuration errors.
"""
from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .automata import DENSE, SPARSE, MooreMachine, label_rewards, run
from .ltlf import (
    DEFAULT_STATE_CAP, Dfa, LtlfSyntaxError, StateBudgetExceeded, UnknownPropositionError, compile,
    declare_formulas, parse, propositions,
)
from .tensor import checkpoint

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad arguments or configuration (exit code 2)."""


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    config: dict
    seeds: list[int]
    out_dir: str
    version: str
    timings: dict = field(default_factory=dict)

    def write(self) -> Path:
        path = Path(self.out_dir) / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _version_stamp() -> str:
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             timeout=5, cwd=Path(__file__).parent)
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as err:
        raise UsageError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise UsageError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(obj, dict):
        raise UsageError("config must be a JSON object")
    return obj


def _merge(config: dict, **flags) -> dict:
    """Flags given on the command line override config keys."""
    out = dict(config)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def _csv_list(text: str | None) -> list[str] | None:
    return None if text is None else [t.strip() for t in text.split(",") if t.strip()]


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_formula(text: str, props: list[str] | None):
    """Catalog name, gridworld task id, or formula text."""
    from .rl.tasks import GRID_ALPHABET, task_formula, task_ids
    if text in task_ids():
        return task_formula(text), list(GRID_ALPHABET)
    catalog = declare_formulas(*(props or ["a", "b"])[:2]) if not props or len(props) >= 2 else {}
    if text in catalog:
        return catalog[text], props or ["a", "b"]
    phi = parse(text, props)
    return phi, props or sorted(propositions(phi))


# ---------------------------------------------------------------- compile

def cmd_compile(args) -> int:
    text = Path(args.file).read_text() if args.file else args.formula
    if text is None:
        raise UsageError("give a formula or --file")
    props = _csv_list(args.props)
    phi, props = _resolve_formula(text.strip(), props)
    d = compile(phi, props, state_cap=args.max_states)
    out = _out_dir(args)
    (out / "dfa.json").write_text(json.dumps(d.to_json(), indent=2) + "\n")
    n_outputs = 2
    if args.rewards:
        machine, lab = label_rewards(d, args.rewards, args.scale)
        pots = lab.potentials.tolist() if lab.potentials is not None else None
        (out / "machine.json").write_text(json.dumps(machine.to_json(pots), indent=2) + "\n")
        (out / "graph.dot").write_text(machine.to_dot())
        n_outputs = machine.n_outputs
    else:
        (out / "graph.dot").write_text(d.to_dot())
    stats = {"n_states": d.n_states, "n_symbols": d.n_symbols, "n_outputs": n_outputs}
    (out / "stats.json").write_text(json.dumps(stats, sort_keys=True) + "\n")
    print(json.dumps(stats, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------- dataset

def cmd_dataset(args) -> int:
    from .sssg import RenderConfig, save_dataset, synthesize_dataset
    props = _csv_list(args.props)
    phi, props = _resolve_formula(args.formula, props)
    render = RenderConfig(noise=args.noise)
    ds = synthesize_dataset(phi, props, render, seed=args.seed, formula_id=args.name or args.formula,
                            test_per_class=args.test_per_class)
    out = _out_dir(args)
    path = out / f"{_safe(ds.formula_id)}.glyd"
    save_dataset(ds, path)
    sizes = {s.name: len(s) for s in ds.splits()}
    print(json.dumps({"path": str(path), "sizes": sizes}, sort_keys=True))
    return EXIT_OK


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


# ---------------------------------------------------------------- sssg

SSSG_DEFAULTS = {"formulas": "all", "props": ["a", "b"], "runs": 10, "keep": 7, "epochs": 150, "lr": 3e-3,
                 "batch": None, "noise": 0.25, "feature_dim": 16, "data_seed": 0, "hidden": [64, 64]}


def cmd_sssg(args) -> int:
    from .sssg import RenderConfig, TrainConfig
    from .sssg.harness import run_catalog, write_metrics, write_summary
    cfg = _merge(SSSG_DEFAULTS, **_load_config(args.config))
    cfg = _merge(cfg, formulas=_csv_list(args.formulas), runs=args.runs, keep=args.keep, epochs=args.epochs)
    unknown = set(cfg) - set(SSSG_DEFAULTS) - {"seeds"}
    if unknown:
        raise UsageError(f"unknown sssg config keys: {', '.join(sorted(unknown))}")
    catalog = declare_formulas(*cfg["props"])
    names = sorted(catalog) if cfg["formulas"] == "all" else list(cfg["formulas"])
    missing = [n for n in names if n not in catalog]
    if missing:
        raise UsageError(f"unknown formulas: {', '.join(missing)}")
    seeds = list(cfg.get("seeds") or range(args.seed, args.seed + int(cfg["runs"])))
    if not 1 <= int(cfg["keep"]) <= len(seeds):
        raise UsageError("keep must be between 1 and the number of runs")
    cfg["seeds"] = seeds
    out = _out_dir(args)
    t0 = time.time()
    results = run_catalog({n: catalog[n] for n in names}, cfg["props"], seeds,
                          RenderConfig(feature_dim=cfg["feature_dim"], noise=cfg["noise"]),
                          TrainConfig(lr=cfg["lr"], epochs=cfg["epochs"], batch=cfg["batch"]),
                          keep=cfg["keep"], threads=args.threads, data_seed=cfg["data_seed"],
                          hidden=cfg["hidden"])
    write_metrics(results, out / "metrics.csv")
    write_summary(results, out / "summary.csv")
    ckpt = out / "checkpoints"
    ckpt.mkdir(exist_ok=True)
    for res in results:
        for r in res.runs:
            checkpoint.save(ckpt / f"{_safe(res.formula)}_s{r.seed}.twck", r.params)
    RunManifest("sssg", args.config, cfg, seeds, str(out), _version_stamp(),
                {"seconds": round(time.time() - t0, 3)}).write()
    for res in results:
        if res.skipped:
            print(f"{res.formula}: skipped ({res.skipped})")
        else:
            print(f"{res.formula}: train {res.mean('train'):.3f}  test10 {res.mean('test10'):.3f}  "
                  f"test15 {res.mean('test15'):.3f}")
    return EXIT_OK


# ---------------------------------------------------------------- rl

def cmd_rl(args) -> int:
    from .rl import ConfigError, RlConfig, run_experiment
    raw = _load_config(args.config)
    raw = _merge(raw, agents=_csv_list(args.agents), tasks=_csv_list(args.tasks),
                 schemes=_csv_list(args.schemes), episodes=args.episodes, horizon=args.horizon)
    if "seeds" not in raw or args.runs is not None:
        raw["seeds"] = list(range(args.seed, args.seed + (args.runs or 1)))
    try:
        cfg = RlConfig.from_json(raw)
    except (ConfigError, TypeError) as err:
        raise UsageError(str(err)) from err
    out = _out_dir(args)
    t0 = time.time()
    results = run_experiment(cfg, out, threads=args.threads)
    RunManifest("rl", args.config, cfg.to_json(), list(cfg.seeds), str(out), _version_stamp(),
                {"seconds": round(time.time() - t0, 3)}).write()
    for spec, res in results:
        line = f"{spec.run_id}: final-{cfg.final_window} mean reward {res.final_mean(cfg.final_window):.1f}"
        if spec.agent == "nrm":
            line += f", labeling accuracy {res.labeling_acc[-1]:.3f}"
        print(line)
    return EXIT_OK


# ---------------------------------------------------------------- eval

def _load_machine(path: str) -> MooreMachine | Dfa:
    obj = json.loads(Path(path).read_text())
    return MooreMachine.from_json(obj) if "outputs" in obj else Dfa.from_json(obj)


def cmd_eval(args) -> int:
    if args.dataset:
        return _eval_grounder(args)
    if not args.machine:
        raise UsageError("give a machine JSON (with --trace) or --dataset with --checkpoint")
    m = _load_machine(args.machine)
    for text in args.trace or []:
        trace = [s for s in text.split(",") if s]
        try:
            states, outputs = run(m, trace)
        except (KeyError, ValueError) as err:
            raise UsageError(f"bad trace {text!r}: {err}") from err
        rec = {"trace": trace, "states": states}
        if isinstance(m, MooreMachine):
            rec["outputs"] = [m.outputs[o] for o in outputs]
        else:
            rec["accepted"] = bool(states[-1] in m.accepting)
        print(json.dumps(rec))
    return EXIT_OK


def _eval_grounder(args) -> int:
    from .deepdfa import inject
    from .sssg import SsgModel, evaluate, load_dataset
    from .sssg.model import Grounder
    if not args.checkpoint:
        raise UsageError("--dataset needs --checkpoint")
    ds = load_dataset(args.dataset)
    state = checkpoint.load(args.checkpoint)
    weights = sorted((k for k in state if k.endswith(".weight")), key=lambda k: int(k.split(".")[1]))
    dims = [state[weights[0]].shape[0]] + [state[k].shape[1] for k in weights]
    grounder = Grounder(dims, np.random.default_rng(0))
    grounder.mlp.load_state_dict(state)
    d = compile(ds.formula_ast(), list(ds.alphabet))
    model = SsgModel(grounder, inject(MooreMachine.from_dfa(d)))
    for split in ds.splits():
        rec = evaluate(model, split)
        print(json.dumps({"split": split.name, **{k: round(float(v), 6) for k, v in rec.items()}}))
    return EXIT_OK


# ---------------------------------------------------------------- gradcheck

def cmd_gradcheck(args) -> int:
    from . import tensor as T
    from .deepdfa import inject
    from .sssg.model import Grounder, SsgModel
    rng = np.random.default_rng(args.seed)
    catalog = declare_formulas()
    names = sorted(catalog)
    worst = 0.0
    for i in range(args.configs):
        name = names[int(rng.integers(len(names)))]
        d = compile(catalog[name], ["a", "b"])
        model = SsgModel(Grounder([6, 8, 2], rng), inject(MooreMachine.from_dfa(d)))
        length, batch = int(rng.integers(2, 6)), 3
        x = rng.normal(size=(batch, length, 6))
        y = rng.integers(0, 2, size=batch)
        err = T.grad_check(lambda: T.cross_entropy(model.last_output(x), y), model.grounder.parameters(),
                           h=args.h)
        worst = max(worst, err)
        print(f"config {i}: {name}, length {length}: max relative error {err:.3e}")
    ok = worst < args.tol
    print(f"{'PASS' if ok else 'FAIL'}: worst {worst:.3e} (tolerance {args.tol:g})")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent runs")
    common.add_argument("--config", help="JSON config file; command-line flags take precedence")

    p = argparse.ArgumentParser(prog="nesydfa", description="Temporal-logic automata as differentiable layers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", parents=[common], help="compile an LTLf formula to a minimal DFA")
    c.add_argument("formula", nargs="?", help="formula text or a catalog template name")
    c.add_argument("--file", help="read the formula from a file")
    c.add_argument("--props", help="comma-separated propositions (alphabet order)")
    c.add_argument("--rewards", choices=[DENSE, SPARSE], help="also write a reward-labelled machine")
    c.add_argument("--scale", type=float, default=100.0)
    c.add_argument("--max-states", type=int, default=DEFAULT_STATE_CAP)
    c.set_defaults(func=cmd_compile)

    d = sub.add_parser("dataset", parents=[common], help="synthesize a glyph-sequence dataset")
    d.add_argument("formula", help="formula text or a catalog template name")
    d.add_argument("--props")
    d.add_argument("--name")
    d.add_argument("--noise", type=float, default=0.25)
    d.add_argument("--test-per-class", type=int, default=500)
    d.set_defaults(func=cmd_dataset)

    s = sub.add_parser("sssg", parents=[common], help="train grounders over the formula catalog")
    s.add_argument("--formulas", help="comma-separated catalog names (default: all)")
    s.add_argument("--runs", type=int, help="seeds per formula")
    s.add_argument("--keep", type=int, help="runs kept per formula (best train accuracy)")
    s.add_argument("--epochs", type=int)
    s.set_defaults(func=cmd_sssg)

    r = sub.add_parser("rl", parents=[common], help="train A2C agents on gridworld tasks")
    r.add_argument("--agents", help="comma-separated: rm, nrm, rnn")
    r.add_argument("--tasks", help="comma-separated task ids")
    r.add_argument("--schemes", help="comma-separated: dense, sparse")
    r.add_argument("--episodes", type=int)
    r.add_argument("--horizon", type=int)
    r.add_argument("--runs", type=int, help="number of seeds, starting at --seed")
    r.set_defaults(func=cmd_rl)

    e = sub.add_parser("eval", parents=[common], help="run a machine on traces or score a trained grounder")
    e.add_argument("machine", nargs="?", help="dfa.json or machine.json")
    e.add_argument("--trace", action="append", help="comma-separated symbols; repeatable")
    e.add_argument("--dataset", help="dataset file written by the dataset command")
    e.add_argument("--checkpoint", help="grounder checkpoint written by the sssg command")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("gradcheck", parents=[common], help="finite-difference check of the full pipeline")
    g.add_argument("--configs", type=int, default=5)
    g.add_argument("--h", type=float, default=1e-5)
    g.add_argument("--tol", type=float, default=1e-5)
    g.set_defaults(func=cmd_gradcheck)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except LtlfSyntaxError as err:
        print(f"syntax error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, UnknownPropositionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except StateBudgetExceeded as err:
        print(f"compile failed: {err}", file=sys.stderr)
        return EXIT_FAIL
    except Exception as err:  # noqa: BLE001 - report any run failure as exit code 1
        print(f"run failed: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
