"""Training commands: a single run, or a dimensionality sweep."""

import argparse

from embench.config import CONFIG_FLAGS, ModelKind, TrainConfig
from embench.corpus import read_documents, read_vocab
from embench.errors import UsageError
from embench.tasks import EvalBundle, TaskSpec
from embench.trainer import DIMENSIONS, run_dimension_sweep, run_training

from .common import FlagParser, flag_parser, parse_flags


def _training_parser(prog: str, description: str) -> FlagParser:
    parser = flag_parser(prog, description)
    parser.add_argument("--config", help="YAML or key=value file; flags override it")
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--vocab", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--model", choices=[k.value for k in ModelKind])
    parser.add_argument("--dim", type=int)
    parser.add_argument("--window", type=int)
    parser.add_argument("--negatives", type=int)
    parser.add_argument("--subsample", type=float)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--iters", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--batch", type=int, help="windows per update (default 32)")
    parser.add_argument("--early-stop", help="none | val-loss | task:NAME")
    parser.add_argument("--patience", type=int)
    parser.add_argument("--cw-hidden", type=int)
    parser.add_argument("--x-max", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--glove-main-only", action="store_const", const=True)
    parser.add_argument("--val-fraction", type=float)
    parser.add_argument("--val-max-windows", type=int)
    parser.add_argument("--correlation", choices=["pearson", "spearman"])
    parser.add_argument("--no-analogy-exclude", dest="analogy_exclude", action="store_const", const=False)
    parser.add_argument("--eval", action="append", metavar="TASK=DATA", help="repeatable; avg=TRAIN,TEST")
    parser.add_argument("--eval-bundle", help="YAML evaluation bundle")
    return parser


def build_config(args: argparse.Namespace) -> TrainConfig:
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    overrides = {key: getattr(args, dest) for dest, key in CONFIG_FLAGS.items() if getattr(args, dest) is not None}
    return config.updated(overrides)


def build_bundle(args: argparse.Namespace, config: TrainConfig) -> EvalBundle:
    options = {"correlation": config.correlation, "analogy_exclude": config.analogy_exclude}
    if args.eval_bundle and args.eval:
        raise UsageError("use either --eval or --eval-bundle, not both")
    if args.eval_bundle:
        return EvalBundle.from_yaml(args.eval_bundle, **options)
    return EvalBundle([TaskSpec.parse(text) for text in args.eval or []], **options)


def handle_train(arg: str) -> None:
    """train --model KIND --corpus PATH --vocab PATH --out DIR [flags]"""
    args = parse_flags(_training_parser("train", "Train one embedding model."), arg)
    config = build_config(args)
    bundle = build_bundle(args, config)

    run = run_training(config, read_documents(args.corpus), read_vocab(args.vocab), bundle, args.out)
    print(f"selected iteration {run.selected}: {run.checkpoint}")


def handle_sweep(arg: str) -> None:
    """sweep --dims 10,20,50,100,200 plus the train flags"""
    parser = _training_parser("sweep", "Train one model per dimensionality.")
    parser.add_argument("--dims", default=",".join(str(d) for d in DIMENSIONS))
    args = parse_flags(parser, arg)
    try:
        dims = [int(d) for d in args.dims.split(",")]
    except ValueError:
        raise UsageError(f"--dims expects comma-separated integers, got {args.dims!r}") from None

    config = build_config(args)
    bundle = build_bundle(args, config)
    runs = run_dimension_sweep(config, read_documents(args.corpus), read_vocab(args.vocab), bundle, args.out, dims)

    print("\t".join(["dim", "iteration", *bundle.names]))
    for dim, run in runs.items():
        record = run.selected_record
        print("\t".join([str(dim), str(run.selected), *(r.format_value() for r in record.results)]))
