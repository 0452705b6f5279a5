"""Command-line entry point: ``eosp <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from . import feasibility as fz
from .data import (
    DatasetIOError,
    ExperimentResult,
    SchemaError,
    SyntheticConfig,
    generate_synthetic,
    load_dataset,
    save_dataset,
    write_results,
)
from .experiment import RunSpec, ValidationObjective, aggregate, method_name, run_seeds, sweep_labeled
from .graph import ConfigurationError, Splits, StructuralError, make_splits
from .hpo import SearchSpace, best_so_far, search, write_trial_log
from .metrics import COLUMN_TITLES, COLUMNS
from .models import GraphModel, ModelParams
from .train import DivergenceError, evaluate

log = logging.getLogger("eosp")

USAGE_ERROR = 2


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """``"0..4"`` (inclusive range) or ``"0,2,5"``."""
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise UsageError("--seeds is empty")
    return seeds


def default_seed() -> int:
    return int(os.environ.get("FAIRGNN_SEED", "0"))


# --- argument parsing ---------------------------------------------------------


def _add_data_flags(p):
    p.add_argument("--nodes", help="nodes CSV (id,feat_*,label,sensitive)")
    p.add_argument("--edges", help="edges CSV (src,dst)")
    p.add_argument("--synthetic", help="synthetic-graph config (TOML, flat keys)")


def _add_model_flags(p):
    p.add_argument("--config", help="TOML file with run settings; CLI flags take precedence")
    p.add_argument("--model", choices=("gcn", "sage"))
    p.add_argument("--alpha", type=float, help="equal-opportunity weight")
    p.add_argument("--beta", type=float, help="statistical-parity weight")
    p.add_argument("--lr", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--labeled-count", type=int)
    p.add_argument("--no-self-loops", action="store_true", default=None)
    p.add_argument("--seeds", help="e.g. 0..4 or 0,1,2 (default: $FAIRGNN_SEED or 0)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eosp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train per seed and aggregate test metrics")
    _add_data_flags(p)
    _add_model_flags(p)

    p = sub.add_parser("eval", help="evaluate saved checkpoints on their seed's test split")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--checkpoint-dir", required=True, help="directory holding model_seed<k>.json")

    p = sub.add_parser("hpo", help="search (alpha, beta) on the validation hybrid score")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--search-seed", type=int)

    p = sub.add_parser("synth", help="write a synthetic graph as nodes/edges CSV")
    p.add_argument("--synthetic", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="out")

    p = sub.add_parser("feasibility", help="EO+SP feasible region of the free confusion entries")
    p.add_argument("--x", type=float, required=True, help="negative proportion of group a")
    p.add_argument("--y", type=float, required=True, help="negative proportion of group b")
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--out", default="out")

    p = sub.add_parser("sweep-labeled", help="baseline vs fairness-regularized across labeled proportions")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--proportions", default="20,30,37.5,50", help="percent of nodes labeled")
    return parser


# --- config resolution -------------------------------------------------------

DEFAULTS = {"alpha": 1.0, "beta": 1.0, "trials": 15}


def resolve(args) -> dict:
    """Merge defaults < config file < CLI flags."""
    cfg = {f.name: getattr(RunSpec(), f.name) for f in fields(RunSpec)}
    cfg.update(DEFAULTS)
    cfg["seeds"] = str(default_seed())
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"no such file: {path}")
        with path.open("rb") as fh:
            cfg.update(tomllib.load(fh))
    flag_map = {
        "model": "model",
        "alpha": "alpha",
        "beta": "beta",
        "lr": "lr",
        "hidden": "hidden",
        "layers": "layers",
        "dropout": "dropout",
        "epochs": "epochs",
        "labeled_count": "labeled_count",
        "seeds": "seeds",
        "trials": "trials",
        "search_seed": "search_seed",
    }
    for attr, key in flag_map.items():
        v = getattr(args, attr, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "no_self_loops", None):
        cfg["self_loops"] = False
    for k in ("nodes", "edges", "synthetic", "out", "jobs"):
        cfg[k] = getattr(args, k, None)
    return cfg


def run_spec(cfg: dict) -> RunSpec:
    return RunSpec(**{f.name: cfg[f.name] for f in fields(RunSpec)})


def load_data(cfg: dict):
    has_files = cfg.get("nodes") or cfg.get("edges")
    if bool(has_files) == bool(cfg.get("synthetic")):
        raise UsageError("give exactly one data source: --nodes/--edges or --synthetic")
    if has_files:
        if not (cfg.get("nodes") and cfg.get("edges")):
            raise UsageError("--nodes and --edges must be given together")
        return load_dataset(cfg["nodes"], cfg["edges"])
    path = Path(cfg["synthetic"])
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    return generate_synthetic(SyntheticConfig.from_toml(path))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _echo_config(out: Path, cfg: dict) -> None:
    _write_json(out / "config.json", {k: v for k, v in sorted(cfg.items()) if k != "jobs"})


def _metadata(out: Path, **timings) -> None:
    _write_json(out / "metadata.json", {"created": time.strftime("%Y-%m-%dT%H:%M:%S"), **timings})


# --- subcommands ----------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = resolve(args)
    dataset = load_data(cfg)
    spec = run_spec(cfg)
    seeds = parse_seeds(cfg["seeds"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    runs = run_seeds(dataset, seeds, spec, cfg["alpha"], cfg["beta"], cfg["jobs"] or 1)
    for r in runs:
        (out / f"history_seed{r.seed}.jsonl").write_text(r.history.to_jsonl())
        r.history.best_params.save(out / f"model_seed{r.seed}.json")
        _write_json(out / f"splits_seed{r.seed}.json", r.splits.to_json())
    result = aggregate(method_name(spec, cfg["alpha"], cfg["beta"]), runs)
    write_results([result], out / "summary.csv", "csv")
    write_results([result], out / "summary.json", "json")
    _echo_config(out, cfg)
    _metadata(out, wall_time={str(r.seed): r.wall_time for r in runs})
    print((out / "summary.csv").read_text(), end="")
    return 0


def cmd_eval(args) -> int:
    cfg = resolve(args)
    dataset = load_data(cfg)
    seeds = parse_seeds(cfg["seeds"])
    ckpt = Path(args.checkpoint_dir)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    name = None
    trained = ckpt / "config.json"
    if trained.exists():
        tcfg = json.loads(trained.read_text())
        name = method_name(run_spec(tcfg), tcfg["alpha"], tcfg["beta"])
    for seed in seeds:
        path = ckpt / f"model_seed{seed}.json"
        if not path.exists():
            raise FileNotFoundError(f"no such file: {path}")
        params = ModelParams.load(path)
        split_path = ckpt / f"splits_seed{seed}.json"
        if split_path.exists():
            splits = Splits.from_json(json.loads(split_path.read_text()))
        else:
            splits = make_splits(dataset, cfg["labeled_count"], seed)
        model = GraphModel(params, dataset.A, self_loops=cfg["self_loops"])
        reports.append(evaluate(model, dataset, splits.test, cfg["threshold"]))
        name = name or params.encoder_kind.upper()
    result = ExperimentResult(name or "model", reports)
    write_results([result], out / "eval.csv", "csv")
    write_results([result], out / "eval.json", "json")
    print((out / "eval.csv").read_text(), end="")
    return 0


def cmd_hpo(args) -> int:
    cfg = resolve(args)
    dataset = load_data(cfg)
    spec = run_spec(cfg)
    seeds = parse_seeds(cfg["seeds"])
    seed = seeds[0]
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    splits = make_splits(dataset, spec.labeled_count, seed)
    space = SearchSpace(trials=int(cfg["trials"]), seed=int(cfg.get("search_seed", seed)))
    objective = ValidationObjective(dataset, splits, spec, seed)
    jobs = cfg["jobs"] or 1
    start = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            best, history = search(space, objective, batch_size=jobs, executor=ex)
    else:
        best, history = search(space, objective)
    write_trial_log(history, out / "trials.jsonl")
    curve = best_so_far(history)
    _write_json(
        out / "hpo_summary.json",
        {
            "best_alpha": best[0],
            "best_beta": best[1],
            "best_score": max(r.score for r in history if not r.failed),
            "trials": len(history),
            "convergence": [{"trial": i + 1, "best_so_far": v} for i, v in enumerate(curve)],
        },
    )
    with (out / "convergence.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "alpha", "beta", "score", "best_so_far"])
        for r, v in zip(history, curve):
            w.writerow([r.index + 1, r.alpha, r.beta, "" if r.failed else repr(r.score), "" if v is None else repr(v)])
    _echo_config(out, cfg)
    _metadata(out, wall_time=time.perf_counter() - start, trial_wall_time=[r.wall_time for r in history])
    print(f"best alpha={best[0]} beta={best[1]}")
    return 0


def cmd_synth(args) -> int:
    path = Path(args.synthetic)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    cfg = SyntheticConfig.from_toml(path, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = generate_synthetic(cfg)
    save_dataset(ds, out / "nodes.csv", out / "edges.csv")
    _write_json(out / "synthetic_config.json", asdict(cfg))
    print(f"wrote {ds.n} nodes, {ds.num_edges} edges to {out}")
    return 0


def cmd_feasibility(args) -> int:
    rates = fz.BaseRates(args.x, args.y)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    TP, FP, mask = fz.region_grid(rates, args.resolution)
    with (out / "region.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tp_b", "fp_b", "feasible"])
        for tp, fp, ok in zip(TP.reshape(-1), FP.reshape(-1), mask.reshape(-1)):
            w.writerow([f"{tp:.10g}", f"{fp:.10g}", int(ok)])
    measure = float(mask.mean())
    _write_json(
        out / "measure.json",
        {"x": args.x, "y": args.y, "resolution": args.resolution, "measure": measure,
         "exact_measure": fz.exact_region_measure(rates)},
    )
    print(f"measure={measure:.6f}")
    return 0


def cmd_sweep_labeled(args) -> int:
    cfg = resolve(args)
    dataset = load_data(cfg)
    spec = run_spec(cfg)
    seeds = parse_seeds(cfg["seeds"])
    props = [float(p) for p in str(args.proportions).split(",") if p.strip()]
    if not props or any(not 0 < p <= 100 for p in props):
        raise UsageError("--proportions must be percentages in (0, 100]")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep_labeled(dataset, props, seeds, spec, cfg["alpha"], cfg["beta"], cfg["jobs"] or 1)
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Proportion", "LabeledCount", "Method", *COLUMN_TITLES])
        for row in rows:
            res = row["result"]
            w.writerow([f"{row['proportion']:g}", row["labeled_count"], res.method, *(res.cell(c) for c in COLUMNS)])
    timings = [
        {"proportion": row["proportion"], "method": row["result"].method, "seed": seed, "seconds": t}
        for row in rows
        for seed, t in zip(seeds, row["wall_times"])
    ]
    _echo_config(out, cfg)
    _metadata(out, run_wall_time=timings)
    print((out / "sweep.csv").read_text(), end="")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "hpo": cmd_hpo,
    "synth": cmd_synth,
    "feasibility": cmd_feasibility,
    "sweep-labeled": cmd_sweep_labeled,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (UsageError, ConfigurationError, StructuralError, SchemaError, DatasetIOError, fz.DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
