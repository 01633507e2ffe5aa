"""Command-line entry points.

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric failure.
Failures print one machine-parseable line on stderr:
``<CATEGORY>_ERROR: <reason>``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys

import numpy as np

from .evaluation import (evaluate_checkpoint, export_embeddings,
                         export_hard_negative_degrees, write_degree_csv,
                         write_global_csv)
from .encoders import load_checkpoint
from .graphs import (DataError, load_graph, load_splits, save_splits,
                     atomic_write_text, split_nodes)
from .losses import HarConfig
from .pipeline import (ConfigError, TrainConfig, TrainingDivergedError,
                       load_config, run_sharp)

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse usage errors are config errors
        raise ConfigError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="sharpgcl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prepare-splits", help="write splits.json for a dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--train-frac", type=float, default=0.6)
    sp.add_argument("--val-frac", type=float, default=0.2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="default: <data>/splits.json")

    tp = sub.add_parser("train", help="run the two-step pipeline")
    tp.add_argument("--data", required=True)
    tp.add_argument("--config", required=True)
    tp.add_argument("--out", required=True)
    tp.add_argument("--seed", type=int, default=None, help="override config seed")
    tp.add_argument("--splits", default=None, help="default: <data>/splits.json")

    ep = sub.add_parser("evaluate", help="re-evaluate a saved checkpoint")
    ep.add_argument("--checkpoint", required=True)
    ep.add_argument("--data", required=True)
    ep.add_argument("--out", required=True)
    ep.add_argument("--config", default=None, help="run config for probe/r settings")
    ep.add_argument("--splits", default=None)

    wp = sub.add_parser("sweep", help="grid of configs x seeds")
    wp.add_argument("--data", required=True)
    wp.add_argument("--config", required=True, help="base run config")
    wp.add_argument("--grid", required=True, help="JSON file {key: [values...]}")
    wp.add_argument("--out", required=True)
    wp.add_argument("--seeds", type=int, required=True)
    wp.add_argument("--splits", default=None)
    wp.add_argument("--workers", type=int, default=1,
                    help="run cells in this many spawned processes (default sequential)")

    xp = sub.add_parser("export-embeddings", help="frozen-encoder embedding CSV")
    xp.add_argument("--checkpoint", required=True)
    xp.add_argument("--data", required=True)
    xp.add_argument("--out", required=True)

    hp = sub.add_parser("export-hard-negatives", help="hard-negative degree CSV")
    hp.add_argument("--data", required=True)
    hp.add_argument("--out", required=True)
    hp.add_argument("--k", type=int, default=5)
    hp.add_argument("--tau", type=float, default=0.4)
    hp.add_argument("--checkpoint", action="append", default=[],
                    help="epoch=path pair; repeatable (or bare path for epoch 0)")
    hp.add_argument("--run", default=None,
                    help="run directory with checkpoints/epoch_N.bin snapshots")
    hp.add_argument("--seed", type=int, default=0)
    return p


def _splits_path(args) -> str:
    return args.splits or os.path.join(args.data, "splits.json")


def _cmd_prepare_splits(args) -> int:
    graph = load_graph(args.data)
    split = split_nodes(graph.num_nodes, args.train_frac, args.val_frac, 0.0, args.seed)
    save_splits(split, args.out or os.path.join(args.data, "splits.json"))
    return 0


def _cmd_train(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.validate()
    graph = load_graph(args.data)
    split = load_splits(_splits_path(args), r=config.r, seed=config.seed)
    split.validate(graph.num_nodes)
    os.makedirs(args.out, exist_ok=True)
    _, _, result = run_sharp(graph, split, config, out_dir=args.out)
    _write_reports(args.out, config, result)
    return 0


def _write_reports(out_dir: str, config: TrainConfig, result) -> None:
    reports = os.path.join(out_dir, "reports")
    os.makedirs(reports, exist_ok=True)
    write_global_csv(os.path.join(reports, "global.csv"), [{
        "model": config.loss, "dataset": config.dataset, "encoder": config.encoder,
        "r": config.r, "seed": config.seed,
        "micro_f1": result.micro_f1, "macro_f1": result.macro_f1,
    }])
    write_degree_csv(result.degree, os.path.join(reports, "degree.csv"))


def _cmd_evaluate(args) -> int:
    config = load_config(args.config) if args.config else TrainConfig()
    model = load_checkpoint(args.checkpoint)
    graph = load_graph(args.data)
    split = load_splits(_splits_path(args), r=config.r, seed=config.seed)
    split.validate(graph.num_nodes)
    result = evaluate_checkpoint(model, graph, split, config.probe_l2,
                                 config.probe_max_iter, config.probe_tol)
    os.makedirs(args.out, exist_ok=True)
    _write_reports(args.out, config, result)
    return 0


def _sweep_cell(task: dict):
    """One (grid-cell, seed) run; executed in-process or in a worker."""
    cfg = TrainConfig(**task["config"]).validate()
    try:
        graph = load_graph(task["data"])
        split = load_splits(task["splits"], r=cfg.r, seed=cfg.seed)
        split.validate(graph.num_nodes)
        _, _, result = run_sharp(graph, split, cfg, out_dir=task["out"])
        return task["cell"], result.micro_f1, None
    except (DataError, TrainingDivergedError, FloatingPointError) as exc:
        return task["cell"], None, f"{type(exc).__name__}: {exc}"


def _cmd_sweep(args) -> int:
    base = load_config(args.config)
    with open(args.grid, "r", encoding="utf-8") as fh:
        grid = json.load(fh)
    if not grid:
        raise ConfigError("empty sweep")
    load_graph(args.data)  # fail fast on data errors before spawning work
    keys = sorted(grid)
    os.makedirs(args.out, exist_ok=True)

    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        params = dict(zip(keys, combo))
        for seed in range(args.seeds):
            cfg = TrainConfig(**{**base.__dict__, **params, "seed": seed})
            cfg.validate()
            cell = "_".join(f"{k}-{params[k]}" for k in keys) + f"_seed-{seed}"
            cells.append({
                "cell": cell, "params": params, "seed": seed,
                "config": {**cfg.__dict__},
                "data": args.data, "splits": _splits_path(args),
                "out": os.path.join(args.out, cell),
            })

    results = {}
    if args.workers > 1:
        import concurrent.futures
        import multiprocessing
        ctx = multiprocessing.get_context("spawn")
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers,
                                                    mp_context=ctx) as pool:
            for cell, score, error in pool.map(_sweep_cell, cells):
                results[cell] = (score, error)
    else:
        for task in cells:
            cell, score, error = _sweep_cell(task)
            results[cell] = (score, error)

    rows = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        params = dict(zip(keys, combo))
        scores = []
        for seed in range(args.seeds):
            cell = "_".join(f"{k}-{params[k]}" for k in keys) + f"_seed-{seed}"
            score, error = results[cell]
            if error is not None:
                print(f"sweep cell {cell} failed: {error}", file=sys.stderr)
            else:
                scores.append(score)
        mean = repr(float(np.mean(scores))) if scores else ""
        std = repr(float(np.std(scores))) if scores else ""
        rows.append(",".join(str(params[k]) for k in keys) + f",{mean},{std}")
    header = ",".join(keys) + ",mean_f1,std_f1"
    atomic_write_text(os.path.join(args.out, "sweep.csv"),
                      "\n".join([header] + rows) + "\n")
    return 0


def _cmd_export_embeddings(args) -> int:
    model = load_checkpoint(args.checkpoint)
    graph = load_graph(args.data)
    export_embeddings(model, graph, args.out)
    return 0


def _cmd_export_hard_negatives(args) -> int:
    graph = load_graph(args.data)
    models = {}
    for item in args.checkpoint:
        if "=" in item:
            epoch_s, path = item.split("=", 1)
            epoch = int(epoch_s)
        else:
            epoch, path = 0, item
        models[epoch] = load_checkpoint(path)
    if args.run:
        ck_dir = os.path.join(args.run, "checkpoints")
        if not os.path.isdir(ck_dir):
            raise DataError(f"missing checkpoint directory: {ck_dir}")
        for name in sorted(os.listdir(ck_dir)):
            if name.startswith("epoch_") and name.endswith(".bin"):
                models[int(name[6:-4])] = load_checkpoint(os.path.join(ck_dir, name))
    if not models:
        raise ConfigError("no checkpoints given (use --checkpoint or --run)")
    config = HarConfig(tau=args.tau)
    export_hard_negative_degrees(models, graph, args.k, args.out, config, seed=args.seed)
    return 0


_COMMANDS = {
    "prepare-splits": _cmd_prepare_splits,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "export-embeddings": _cmd_export_embeddings,
    "export-hard-negatives": _cmd_export_hard_negatives,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, DataError):
            print(f"DATA_ERROR: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"CONFIG_ERROR: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDivergedError as exc:
        print(f"NUMERIC_ERROR: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"NUMERIC_ERROR: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"DATA_ERROR: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
