"""Evaluation and nearest-neighbor commands."""

from pathlib import Path

from embench.errors import DataError, UsageError
from embench.evaluation import nearest_neighbors
from embench.storage import read_embeddings
from embench.tasks import EvalBundle, TaskSpec

from .common import flag_parser, parse_flags


def handle_eval(arg: str) -> None:
    """eval --embedding PATH --task {ws|tfl|sem|syn|analogy|avg} --data PATH [--train-data PATH]"""
    parser = flag_parser("eval", "Evaluate an embedding file on one task.")
    parser.add_argument("--embedding", required=True)
    parser.add_argument("--task", required=True)
    parser.add_argument("--data", required=True)
    parser.add_argument("--train-data")
    parser.add_argument("--correlation", choices=["pearson", "spearman"], default="pearson")
    parser.add_argument("--no-analogy-exclude", dest="analogy_exclude", action="store_false")
    args = parse_flags(parser, arg)

    train_data = Path(args.train_data) if args.train_data else None
    spec = TaskSpec(args.task, Path(args.data), train_data)
    bundle = EvalBundle([spec], correlation=args.correlation, analogy_exclude=args.analogy_exclude)
    result = bundle.evaluate_task(args.task, read_embeddings(args.embedding))
    print(result.line())


def handle_neighbors(arg: str) -> None:
    """neighbors --embedding PATH --word W [--k K]"""
    parser = flag_parser("neighbors", "List the nearest neighbors of a word.")
    parser.add_argument("--embedding", required=True)
    parser.add_argument("--word", required=True)
    parser.add_argument("--k", type=int, default=10)
    args = parse_flags(parser, arg)

    table = read_embeddings(args.embedding)
    if args.word not in table.index:
        raise DataError(f"word not in vocabulary: {args.word}")
    if not 1 <= args.k < len(table):
        raise UsageError(f"--k must be between 1 and {len(table) - 1}")

    for rank, (word, sim) in enumerate(nearest_neighbors(table, table.vector(args.word), args.k, {args.word}), 1):
        print(f"{rank} {word} {sim:.4f}")
