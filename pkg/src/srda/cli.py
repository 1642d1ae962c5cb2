"""Command-line interface: ``srda {gen,train,eval,tune,info}``.

Every subcommand also accepts ``--config FILE``, a plain ``key = value`` file
whose keys are the long option names (dashes or underscores). Values given
on the command line override the file.

Report CSV columns (``train --report``, ``eval --report``)::

    stream_offset,classes_seen,top1_accuracy,topk_accuracy[,offline_accuracy]

Curve CSV columns (``tune --curve``)::

    alpha,accuracy
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import CheckpointResult, EvaluationReport, offline_reference, topk_accuracy
from .heads import DEFAULT_EPSILON, HeadConfig, build_head
from .io import load_checkpoint, load_features, memory_report, save_checkpoint, save_features
from .protocol import ScenarioConfig, StreamPlan, make_plan, run_stream
from .stats import StatisticsAccumulator
from .synthetic import generate_synthetic
from .tuning import AlphaGrid, grid_search_alpha


class CLIError(Exception):
    pass


def _unit_interval(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in [0, 1], got {v}")
    return v


def _epsilon(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1], got {v}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _non_negative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _add_head_options(p, alpha_default=0.5):
    p.add_argument("--alpha", type=_unit_interval, default=alpha_default,
                   help="blend between pooled (0, SLDA) and class (1, SQDA) covariance")
    p.add_argument("--epsilon", type=_epsilon, default=DEFAULT_EPSILON, help="identity shrinkage before inversion")
    p.add_argument("--top-k", type=_positive_int, default=5, help="rank for top-k accuracy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srda", description="Streaming regularized discriminant analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", type=Path, help="key=value file of option defaults")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    p = command("gen", "write a synthetic Gaussian dataset to feature files")
    p.add_argument("--out", type=Path, required=True, help="training feature file (.csv for CSV)")
    p.add_argument("--classes", type=_positive_int, default=20)
    p.add_argument("--dim", type=_positive_int, default=32)
    p.add_argument("--samples-per-class", type=_positive_int, default=30)
    p.add_argument("--heteroscedasticity", type=float, default=100.0,
                   help="maximum per-class covariance condition number (>= 1)")
    p.add_argument("--radius", type=float, default=3.0, help="norm of every class mean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-out", type=Path)
    p.add_argument("--val-per-class", type=_positive_int, default=30)
    p.add_argument("--test-out", type=Path)
    p.add_argument("--test-per-class", type=_positive_int, default=100)
    p.set_defaults(func=cmd_gen)

    p = command("train", "stream training features into a checkpoint")
    p.add_argument("--train", type=Path, required=True, help="training feature file")
    p.add_argument("--eval", type=Path, help="evaluation feature file for checkpoint accuracies")
    p.add_argument("--checkpoint", type=Path, required=True, help="output checkpoint")
    p.add_argument("--report", type=Path, help="output evaluation CSV")
    p.add_argument("--plan-out", type=Path, help="write the stream plan manifest")
    p.add_argument("--plan", type=Path, help="replay a stream plan manifest instead of building one")
    p.add_argument("--base-classes", type=_non_negative_int, default=0)
    p.add_argument("--increment", type=_positive_int, default=1, help="classes per evaluation checkpoint")
    p.add_argument("--class-order-seed", type=int, default=0)
    p.add_argument("--shuffle-seed", type=int, default=0)
    p.add_argument("--ordering", choices=("class_incremental", "iid"), default="class_incremental")
    p.add_argument("--all-classes", action="store_true",
                   help="evaluate checkpoints on every eval sample, not only seen classes")
    p.add_argument("--offline", action="store_true",
                   help="also compute the batch-fit reference per checkpoint and Omega_all")
    p.add_argument("--counter", choices=("class", "global"), default="class")
    _add_head_options(p)
    p.set_defaults(func=cmd_train)

    p = command("eval", "evaluate a checkpoint on a feature file")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--eval", type=Path, required=True)
    p.add_argument("--report", type=Path, help="output CSV (one row)")
    p.add_argument("--alpha", type=_unit_interval, help="override the checkpoint's alpha")
    p.add_argument("--epsilon", type=_epsilon, help="override the checkpoint's epsilon")
    p.add_argument("--top-k", type=_positive_int, help="override the checkpoint's top-k")
    p.set_defaults(func=cmd_eval)

    p = command("tune", "grid-search alpha on validation features without retraining")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--val", type=Path, required=True, help="validation feature file")
    p.add_argument("--curve", type=Path, help="output alpha-accuracy CSV")
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--grid", help="explicit comma-separated alpha values (must include 0 and 1)")
    p.add_argument("--metric", choices=("top1", "topk"), default="top1")
    p.add_argument("--top-k", type=_positive_int)
    p.add_argument("--epsilon", type=_epsilon)
    p.add_argument("--no-update", action="store_true", help="leave the checkpoint untouched")
    p.set_defaults(func=cmd_tune)

    p = command("info", "memory report and class inventory")
    p.add_argument("--checkpoint", type=Path, help="checkpoint to describe")
    p.add_argument("--classes", type=_positive_int, help="class count (without a checkpoint)")
    p.add_argument("--dim", type=_positive_int, help="feature dimension (without a checkpoint)")
    p.set_defaults(func=cmd_info)
    return parser


def read_config(path: Path) -> dict[str, str]:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise CLIError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CLIError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _config_argv(sub: argparse.ArgumentParser, config: dict[str, str]) -> list[str]:
    by_dest = {a.dest: a for a in sub._actions if a.option_strings}
    argv = []
    for key, value in config.items():
        action = by_dest.get(key)
        if action is None or key in ("config", "help"):
            raise CLIError(f"unknown config key: {key}")
        flag = action.option_strings[-1]
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise CLIError(f"config key {key} expects a boolean, got {value!r}")
        else:
            argv.extend([flag, value])
    return argv


def _find_config(argv) -> Path | None:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return Path(argv[i + 1])
        if arg.startswith("--config="):
            return Path(arg.split("=", 1)[1])
    return None


def parse_args(argv):
    parser = build_parser()
    subparsers = parser._subparsers._group_actions[0].choices
    path = _find_config(argv)
    if path is None or not argv or argv[0] not in subparsers:
        return parser.parse_args(argv)
    # config values go first so that explicit flags override them
    extra = _config_argv(subparsers[argv[0]], read_config(path))
    return parser.parse_args([argv[0], *extra, *argv[1:]])


def _load(path: Path):
    if not path.exists():
        raise CLIError(f"no such file: {path}")
    return load_features(path)


def _write(path: Path | None, text: str) -> None:
    if path is not None:
        path.write_text(text)


def cmd_gen(args) -> int:
    X, y, params = generate_synthetic(args.classes, args.dim, args.samples_per_class,
                                      args.heteroscedasticity, args.seed, args.radius)
    save_features(args.out, X, y)
    for k, (path, per_class) in enumerate(((args.val_out, args.val_per_class),
                                           (args.test_out, args.test_per_class)), start=1):
        if path is not None:
            Xs, ys = params.sample(per_class, np.random.default_rng([args.seed, k]))
            save_features(path, Xs, ys)
    print(f"wrote {len(y)} samples ({args.classes} classes, d={args.dim}) to {args.out}")
    return 0


def cmd_train(args) -> int:
    X, y = _load(args.train)
    Xe = ye = None
    if args.eval is not None:
        Xe, ye = _load(args.eval)
        if Xe.shape[1] != X.shape[1]:
            raise CLIError(f"eval dimension {Xe.shape[1]} does not match train dimension {X.shape[1]}")
    elif args.offline or args.report is not None:
        raise CLIError("--report and --offline need --eval")
    head = HeadConfig(alpha=args.alpha, epsilon=args.epsilon, top_k=args.top_k)
    scenario = ScenarioConfig(base_class_count=args.base_classes, class_order_seed=args.class_order_seed,
                              within_class_shuffle_seed=args.shuffle_seed, increment_size=args.increment,
                              ordering_mode=args.ordering)
    if args.plan is not None:
        if not args.plan.exists():
            raise CLIError(f"no such file: {args.plan}")
        plan = StreamPlan.from_text(args.plan.read_text())
    else:
        try:
            plan = make_plan(y, scenario)
        except ValueError as exc:
            raise CLIError(str(exc)) from None
    _write(args.plan_out, plan.to_text())

    report, acc = run_stream(X, y, plan, head, Xe, ye, seen_classes_only=not args.all_classes,
                             accumulator=StatisticsAccumulator(X.shape[1], counter=args.counter))
    if args.offline:
        ref = offline_reference(X, y, Xe, ye, head, plan.class_sets(y))
        report = report.with_offline(ref)
    save_checkpoint(args.checkpoint, acc, head, scenario={
        "base_class_count": scenario.base_class_count,
        "class_order_seed": scenario.class_order_seed,
        "within_class_shuffle_seed": scenario.within_class_shuffle_seed,
        "increment_size": scenario.increment_size,
        "ordering_mode": scenario.ordering_mode,
    })
    _write(args.report, report.to_csv())
    print(report.summary() if report.checkpoints else f"trained on {acc.total_count} samples")
    return 0


def _checkpoint(path: Path):
    if not path.exists():
        raise CLIError(f"no such file: {path}")
    return load_checkpoint(path)


def cmd_eval(args) -> int:
    acc, head, _ = _checkpoint(args.checkpoint)
    head = head or HeadConfig()
    changes = {k: v for k, v in (("alpha", args.alpha), ("epsilon", args.epsilon), ("top_k", args.top_k))
               if v is not None}
    head = head.replace(**changes)
    Xe, ye = _load(args.eval)
    model = build_head(acc, head)
    row = CheckpointResult(acc.total_count, len(acc), topk_accuracy(model, Xe, ye, 1),
                           topk_accuracy(model, Xe, ye, head.top_k))
    report = EvaluationReport([row], top_k=head.top_k)
    _write(args.report, report.to_csv())
    print(report.summary())
    return 0


def cmd_tune(args) -> int:
    acc, head, meta = _checkpoint(args.checkpoint)
    head = head or HeadConfig()
    k = args.top_k or head.top_k
    epsilon = args.epsilon or head.epsilon
    try:
        if args.grid:
            grid = AlphaGrid(tuple(float(v) for v in args.grid.split(",")), metric=args.metric, k=k)
        else:
            grid = AlphaGrid.uniform(args.grid_step, metric=args.metric, k=k)
    except ValueError as exc:
        raise CLIError(f"invalid grid: {exc}") from None
    Xv, yv = _load(args.val)
    result = grid_search_alpha(acc, Xv, yv, grid, epsilon)
    _write(args.curve, result.to_csv())
    if not args.no_update:
        extra = dict(meta.get("extra") or {})
        extra["tuned_alpha"] = result.best_alpha
        extra["tuned_accuracy"] = result.best_accuracy
        extra["tuning_metric"] = args.metric
        save_checkpoint(args.checkpoint, acc, head.replace(alpha=result.best_alpha, epsilon=epsilon),
                        scenario=meta.get("scenario"), extra=extra)
    print(f"best_alpha={result.best_alpha!r} best_accuracy={result.best_accuracy:.6f}")
    return 0


def cmd_info(args) -> int:
    if args.checkpoint is not None:
        acc, head, meta = _checkpoint(args.checkpoint)
        report = memory_report(max(len(acc), 1), acc.dimension)
        for line in report.lines():
            print(line)
        print(f"total_count={acc.total_count} classes_seen={len(acc)}")
        if head is not None:
            print(f"head: alpha={head.alpha!r} epsilon={head.epsilon!r} top_k={head.top_k}")
        tuned = (meta.get("extra") or {}).get("tuned_alpha")
        if tuned is not None:
            print(f"tuned_alpha={tuned!r}")
        print("class_id,count,prior")
        for k, n in acc.counts().items():
            print(f"{k},{n},{acc.class_prior(k)!r}")
        return 0
    if args.classes is None or args.dim is None:
        raise CLIError("info needs --checkpoint or both --classes and --dim")
    for line in memory_report(args.classes, args.dim).lines():
        print(line)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except CLIError as exc:
        print(f"srda: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"srda: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"srda: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
