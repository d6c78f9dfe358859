"""PGR comparison and stopping-strategy commands."""

import logging
from pathlib import Path

from embench.errors import UsageError
from embench.evaluation import random_embedding
from embench.pgr import build_pgr_report
from embench.storage import read_embeddings
from embench.tasks import EvalBundle, TaskSpec
from embench.trainer import compare_stopping_strategies, read_run_log

from .common import flag_parser, parse_flags, parse_pairs

logger = logging.getLogger(__name__)


def handle_compare(arg: str) -> None:
    """compare --task NAME=DATA ... --embedding NAME=PATH ... [--random-dim D] [--seed S]"""
    parser = flag_parser("compare", "PGR report of several embeddings against a random baseline.")
    parser.add_argument("--task", action="append", required=True, metavar="NAME=DATA")
    parser.add_argument("--embedding", action="append", required=True, metavar="NAME=PATH")
    parser.add_argument("--random-dim", type=int, help="default: first embedding's dimensionality")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--correlation", choices=["pearson", "spearman"], default="pearson")
    parser.add_argument("--no-analogy-exclude", dest="analogy_exclude", action="store_false")
    args = parse_flags(parser, arg)

    bundle = EvalBundle(
        [TaskSpec.parse(text) for text in args.task],
        correlation=args.correlation,
        analogy_exclude=args.analogy_exclude,
    )
    tables = {name: read_embeddings(path) for name, path in parse_pairs(args.embedding, "--embedding")}
    if len(tables) != len(args.embedding):
        raise UsageError("embedding names must be unique")

    results = {}
    for name, table in tables.items():
        results[name] = {r.task: r.value for r in bundle.evaluate(table)}
        logger.info("%s: %s", name, results[name])

    first = next(iter(tables.values()))
    dim = args.random_dim or first.dim
    if dim < 1:
        raise UsageError("--random-dim must be >= 1")
    baseline = random_embedding(first.words, dim, args.seed)
    baselines = {r.task: r.value for r in bundle.evaluate(baseline)}

    print(build_pgr_report(results, baselines).render(), end="")


def handle_strategies(arg: str) -> None:
    """strategies --log PATH ... [--baseline TASK=VALUE ...]"""
    parser = flag_parser("strategies", "Win counts of each early-stopping signal across run logs.")
    parser.add_argument("--log", action="append", required=True)
    parser.add_argument("--baseline", action="append", metavar="TASK=VALUE")
    args = parse_flags(parser, arg)

    try:
        baselines = {task: float(value) for task, value in parse_pairs(args.baseline, "--baseline")}
    except ValueError:
        raise UsageError("--baseline values must be numbers") from None

    total = None
    for path in args.log:
        records = read_run_log(Path(path))
        if not records:
            logger.warning("%s: no iterations logged", path)
            continue
        tasks = [r.task for r in records[0].results]
        table = compare_stopping_strategies(records, tasks, baselines)
        total = table if total is None else total + table
    if total is None:
        raise UsageError("no run log has any iteration")
    print(total.render(), end="")
