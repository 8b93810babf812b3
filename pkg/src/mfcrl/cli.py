"""Command line: train, evaluate, trajectories, list-benchmarks, check.

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 numerical
divergence.
"""

import argparse
import copy
import json
import logging
import os
import sys

import numpy as np

from .actor_critic import Trainer
from .benchmarks import BENCHMARKS, get_benchmark
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig
from .environment import write_rollout_csv
from .nn import DivergenceError
from .reporting import (
    MetricsLog,
    control_gap,
    evaluate_table,
    trajectory_dump,
    write_manifest,
    write_trajectories,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("mfcrl")

CHECKPOINT = "checkpoint.json"
CRASH = "crash_checkpoint.json"
METRICS = "metrics.csv"
MANIFEST = "manifest.json"


def _run_config(args):
    if args.config:
        cfg = RunConfig.load(args.config)
    elif args.benchmark:
        cfg = RunConfig(benchmark=args.benchmark)
    else:
        raise ConfigError("give --config or --benchmark")
    if args.benchmark and args.config and args.benchmark != cfg.benchmark:
        raise ConfigError(f"--benchmark {args.benchmark} conflicts with config {cfg.benchmark}")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.output:
        cfg.output_dir = args.output
    if args.scale:
        cfg.desk = args.scale == "desk"
    if args.epochs is not None:
        cfg.trainer = {**cfg.trainer, "epochs": args.epochs}
    cfg.validate()
    return cfg


def _bench_blob(cfg):
    return {"key": cfg.benchmark, "params": dict(cfg.params), "desk": cfg.desk}


def cmd_train(args):
    cfg = _run_config(args)
    tc = cfg.trainer_config()
    model = cfg.model()
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    resolved = cfg.resolved()
    ckpt_path = os.path.join(out, CHECKPOINT)

    state = None
    if os.path.exists(ckpt_path) and not args.fresh:
        state, old_tc, old_bench, _ = load_checkpoint(ckpt_path)
        if old_bench != _bench_blob(cfg) or old_tc.to_dict() != tc.to_dict():
            raise ConfigError(f"{ckpt_path} was written by a different configuration; use --fresh")
        if state.epoch > tc.epochs:
            raise ConfigError(f"checkpoint is at epoch {state.epoch}, beyond epochs={tc.epochs}")
        log.info("resuming from epoch %d", state.epoch)

    write_manifest(os.path.join(out, MANIFEST), resolved, "train")
    trainer = Trainer(tc, model, cfg.sampler(), state)
    metrics = MetricsLog(os.path.join(out, METRICS))
    metrics.start(trainer.state.epoch)
    bench = _bench_blob(cfg)
    save_checkpoint(ckpt_path, trainer.state, tc, bench)
    every = max(1, tc.checkpoint_every)
    stop = tc.epochs if args.stop_at is None else min(tc.epochs, args.stop_at)
    try:
        while trainer.state.epoch < stop:
            before = copy.deepcopy(trainer.state)
            try:
                m = trainer.train_epoch()
            except DivergenceError as exc:
                save_checkpoint(
                    os.path.join(out, CRASH), before, tc, bench,
                    extra={"diverged_at_epoch": before.epoch, "error": str(exc)},
                )
                log.error("diverged at epoch %d: %s", before.epoch, exc)
                return EXIT_DIVERGED
            metrics.append(m)
            if trainer.state.epoch % every == 0 or trainer.state.epoch == stop:
                metrics.flush()
                save_checkpoint(ckpt_path, trainer.state, tc, bench)
            if args.verbose and m["epoch"] % 100 == 0:
                log.info(
                    "epoch %d lam=%.4g critic_loss=%.4g mean_cost=%.4g",
                    m["epoch"], m["lam"], m["critic_loss"], m["mean_cost"],
                )
    finally:
        metrics.close()
    return EXIT_OK


def _load(args):
    state, tc, bench, _ = load_checkpoint(args.checkpoint)
    if not bench.get("key"):
        raise ConfigError("checkpoint does not name its benchmark")
    model = get_benchmark(bench["key"]).model(**bench.get("params", {}))
    for net, width in ((state.actor, model.p), (state.critic, 1)):
        if net.n_out != width or net.n_in < 1 + model.d:
            raise ConfigError("checkpoint networks do not match the benchmark dimensions")
    return state, tc, bench, model


def _parse_grid(text):
    grid = []
    for item in text.split(","):
        try:
            mean, var = (float(v) for v in item.split(":"))
        except ValueError:
            raise ConfigError(f"grid entries look like mean:variance, got {item!r}") from None
        if var < 0:
            raise ConfigError("grid variances must be non-negative")
        grid.append((mean, var))
    return grid


def cmd_evaluate(args):
    state, tc, bench, model = _load(args)
    b = get_benchmark(bench["key"])
    grid = _parse_grid(args.grid) if args.grid else list(b.eval_grid)
    table = evaluate_table(
        state.actor, state.critic, model, grid, args.particles, tc.steps, args.seed, b.key,
        with_gap=not args.no_gap,
    )
    print(table.pretty())
    if not args.no_gap:
        print(f"aggregate simulated-cost gap: {100 * table.aggregate_gap():.2f}%")
    if args.output:
        table.write(args.output)
    return EXIT_OK


def cmd_trajectories(args):
    state, tc, bench, model = _load(args)
    header, rows, record = trajectory_dump(
        state.actor, model, tc.steps, args.mean, args.variance, args.particles, args.count, args.seed
    )
    if rows and rows[0][-1] == "0":
        log.warning("benchmark has no analytic control; only the learned control is reported")
    else:
        print(f"mean |alpha* - m| along paths: {control_gap(header, rows):.4f}")
    if args.output:
        write_trajectories(args.output, header, rows)
    if args.rollout_csv:
        write_rollout_csv(record, args.rollout_csv)
    return EXIT_OK


def cmd_list(args):
    if args.json:
        blob = {
            key: {
                "dim": b.dim,
                "description": b.description,
                "params": b.model().describe(),
                "desk": b.desk.__dict__,
                "full": b.full.__dict__,
            }
            for key, b in BENCHMARKS.items()
        }
        print(json.dumps(blob, indent=1, sort_keys=True))
        return EXIT_OK
    for key, b in BENCHMARKS.items():
        print(f"{key:12s} d={b.dim}  {b.description}")
    return EXIT_OK


def cmd_check(args):
    from .checks import run_all

    results = run_all(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="mfcrl", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train actor and critic on a benchmark")
    t.add_argument("--config", help="JSON run configuration")
    t.add_argument("--benchmark", help="benchmark id (see list-benchmarks)")
    t.add_argument("--seed", type=int)
    t.add_argument("--output", help="output directory")
    t.add_argument("--epochs", type=int, help="override the number of epochs")
    t.add_argument("--scale", choices=["desk", "full"], help="training preset")
    t.add_argument("--fresh", action="store_true", help="ignore an existing checkpoint")
    t.add_argument("--stop-at", type=int, help="pause after this epoch (resume later)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="Anal/Calc/MSE/RelError table from a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--particles", type=int, default=10000)
    e.add_argument("--grid", help="comma-separated mean:variance pairs")
    e.add_argument("--seed", type=int, default=12345)
    e.add_argument("--no-gap", action="store_true", help="skip the simulated-cost comparison")
    e.add_argument("--output", help="CSV file for the table")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("trajectories", help="learned vs analytic control along learned paths")
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--mean", type=float, default=0.0)
    r.add_argument("--variance", type=float, default=0.5)
    r.add_argument("--count", type=int, default=5)
    r.add_argument("--particles", type=int, default=1000)
    r.add_argument("--seed", type=int, default=12345)
    r.add_argument("--output", help="CSV file for the path dump")
    r.add_argument("--rollout-csv", help="also dump the full simulated rollout")
    r.set_defaults(func=cmd_trajectories)

    b = sub.add_parser("list-benchmarks", help="registered benchmarks and presets")
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_list)

    c = sub.add_parser("check", help="oracle and gradient invariant suite")
    c.add_argument("--quick", action="store_true")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    np.seterr(over="ignore", invalid="ignore")
    try:
        return args.func(args)
    except (ConfigError, CheckpointError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
