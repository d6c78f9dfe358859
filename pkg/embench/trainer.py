"""Multi-iteration training with validation, checkpoints and early stopping.

Each iteration is a full pass over the (freshly subsampled) training
windows, followed by the validation loss, a checkpoint and the task
metrics of that checkpoint. Metrics are computed on the checkpoint as
reloaded from disk, so re-evaluating a checkpoint reproduces them.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, TypeVar

import numpy as np

from .config import ModelKind, TrainConfig
from .corpus import Document, Vocabulary, WindowBatch, document_windows, encode_documents, keep_mask
from .errors import DataError, NumericalDivergence, UsageError
from .evaluation import EmbeddingTable, TaskResult
from .glove import accumulate_cooccurrence, export_glove, glove_epoch, init_glove
from .models import ModelSpec
from .neural import TANH, Activation, NeuralModel
from .optim import AdaGradState
from .pgr import WIN_THRESHOLD, pgr
from .storage import CheckpointStore, read_log
from .tasks import EvalBundle
from .workers import chunked, run_jobs

logger = logging.getLogger(__name__)

T = TypeVar("T")

DOCS_PER_JOB = 256
DIMENSIONS = (10, 20, 50, 100, 200)
VAL_LOSS = "val-loss"


@dataclass
class IterationRecord:
    """Validation loss and task results after one completed iteration."""

    iteration: int
    val_loss: float | None
    results: list[TaskResult] = field(default_factory=list)
    checkpoint: Path | None = None

    def metric(self, task: str) -> float:
        for result in self.results:
            if result.task == task:
                return result.value
        raise KeyError(task)

    def signal(self, name: str) -> float | None:
        """Value of a stopping signal: 'val-loss' or a task name."""
        return self.val_loss if name == VAL_LOSS else self.metric(name)


@dataclass
class TrainingRun:
    """All iteration records of a run and the iteration it selected."""

    records: list[IterationRecord]
    selected: int
    out_dir: Path

    @property
    def selected_record(self) -> IterationRecord:
        return next(r for r in self.records if r.iteration == self.selected)

    @property
    def checkpoint(self) -> Path | None:
        return self.selected_record.checkpoint


class EarlyStopper:
    """Best-so-far tracking with patience.

    Only a strict improvement moves the best iteration, so ties select
    the earliest one.
    """

    def __init__(self, higher_is_better: bool = True, patience: int = 2):
        self.higher_is_better = higher_is_better
        self.patience = patience
        self.best_iteration: int | None = None
        self.best_value: float | None = None
        self.since_best = 0

    def _improves(self, value: float) -> bool:
        if self.best_value is None:
            return True
        return value > self.best_value if self.higher_is_better else value < self.best_value

    def update(self, iteration: int, value: float | None) -> bool:
        """Record one iteration's value; True when training should stop."""
        if value is not None and not math.isnan(value) and self._improves(value):
            self.best_iteration, self.best_value = iteration, value
            self.since_best = 0
            return False
        self.since_best += 1
        return self.since_best >= self.patience


def select_iteration(
    series: Sequence[float],
    higher_is_better: bool = True,
    patience: int = 2,
) -> tuple[int, int]:
    """Apply the stopping rule to a value series.

    Returns:
        (selected iteration, iteration after which training stops), both 1-based
    """
    if not series:
        raise ValueError("empty series")
    stopper = EarlyStopper(higher_is_better, patience)
    for iteration, value in enumerate(series, 1):
        if stopper.update(iteration, value):
            return stopper.best_iteration or iteration, iteration
    return stopper.best_iteration or len(series), len(series)


def split_train_validation(
    documents: Sequence[T],
    fraction: float = 0.95,
    seed: int = 1,
) -> tuple[list[T], list[T]]:
    """Seeded document-level split; both parts keep corpus order."""
    n = len(documents)
    if n < 2:
        raise DataError("need at least 2 documents for a train/validation split")
    n_train = min(n - 1, max(1, round(n * fraction)))
    order = np.random.default_rng(seed).permutation(n)
    train_ids = set(order[:n_train].tolist())
    train = [d for i, d in enumerate(documents) if i in train_ids]
    val = [d for i, d in enumerate(documents) if i not in train_ids]
    return train, val


def validation_windows(documents: Sequence[Document], radius: int, limit: int) -> WindowBatch:
    """The first `limit` windows of the validation documents, not subsampled."""
    batches, taken = [], 0
    for doc in documents:
        if taken >= limit:
            break
        batch = document_windows(doc.token_ids, radius).select(slice(0, limit - taken))
        batches.append(batch)
        taken += len(batch)
    return WindowBatch.concat(batches)


def _criterion(config: TrainConfig, bundle: EvalBundle) -> tuple[str, bool] | None:
    """Stopping signal name and whether higher is better, or None."""
    stop = config.early_stop
    if stop.mode == "none":
        return None
    if stop.mode == "val-loss":
        return VAL_LOSS, False
    if stop.task not in bundle:
        raise UsageError(f"Early stopping on task {stop.task}, which is not being evaluated")
    return stop.task, True


class _Iterations:
    """Per-iteration bookkeeping shared by the neural and GloVe loops."""

    def __init__(self, config: TrainConfig, vocab: Vocabulary, bundle: EvalBundle, store: CheckpointStore):
        self.config = config
        self.vocab = vocab
        self.bundle = bundle
        self.store = store
        self.records: list[IterationRecord] = []
        self.criterion = _criterion(config, bundle)
        self.stopper = EarlyStopper(
            higher_is_better=self.criterion[1] if self.criterion else True,
            patience=config.patience,
        )
        store.write_config(config.to_lines())
        store.start_log(bundle.names)

    @property
    def last_checkpoint(self) -> Path | None:
        return self.records[-1].checkpoint if self.records else None

    def finish(self, iteration: int, vectors: np.ndarray, val_loss: float | None) -> bool:
        """Checkpoint, evaluate and log one iteration; True to stop early."""
        path = self.store.save(iteration, EmbeddingTable(list(self.vocab.words), vectors))
        results = self.bundle.evaluate(self.store.load(iteration)) if len(self.bundle) else []
        record = IterationRecord(iteration, val_loss, results, path)
        self.records.append(record)
        self.store.append_log(iteration, val_loss, [r.value for r in results])

        summary = " ".join(f"{r.task}={r.format_value()}" for r in results)
        loss = "n/a" if val_loss is None else f"{val_loss:.6f}"
        logger.info("iteration %i: val_loss=%s %s", iteration, loss, summary)

        if self.criterion is None:
            return False
        stop = self.stopper.update(iteration, record.signal(self.criterion[0]))
        if stop:
            logger.info(
                "early stop after iteration %i: %s peaked at iteration %i",
                iteration, self.criterion[0], self.stopper.best_iteration,
            )
        return stop

    def run(self) -> TrainingRun:
        if self.criterion is None or self.stopper.best_iteration is None:
            selected = self.records[-1].iteration
        else:
            selected = self.stopper.best_iteration
        logger.info("selected iteration %i: %s", selected, self.store.checkpoint_path(selected))
        return TrainingRun(records=self.records, selected=selected, out_dir=self.store.out_dir)


def _train_neural(
    config: TrainConfig,
    vocab: Vocabulary,
    train_docs: list[Document],
    val_docs: list[Document],
    progress: _Iterations,
    activation: Activation,
) -> None:
    spec = ModelSpec(config.model, config.dim, config.radius, config.hidden_width)
    model = NeuralModel(spec, vocab, lr=config.lr, negatives=config.negatives, seed=config.seed, activation=activation)
    keep_prob = vocab.keep_probabilities(config.subsample)
    val_windows = validation_windows(val_docs, config.radius, config.val_max_windows)
    jobs = chunked(train_docs, DOCS_PER_JOB)

    def work(chunk: Sequence[Document], rng: np.random.Generator) -> float:
        documents = []
        for doc in chunk:
            kept = keep_mask(doc.token_ids, vocab, config.subsample, rng, keep_prob)
            documents.append(document_windows(doc.token_ids[kept], config.radius, np.flatnonzero(kept)))
        windows = WindowBatch.concat(documents)
        return sum(model.train_batch(batch, rng) for batch in windows.split(config.batch))

    for iteration in range(1, config.iterations + 1):
        logger.info("iteration %i/%i: training %s", iteration, config.iterations, config.model)
        train_loss = run_jobs(jobs, work, config.workers, (config.seed, iteration))
        logger.debug("iteration %i: summed training loss %.4f", iteration, train_loss)
        # Fixed stream so validation loss is comparable across iterations.
        val_loss = model.validation_loss(val_windows, seed=[config.seed, 0])
        if progress.finish(iteration, model.export(), val_loss):
            break


def _train_glove(config: TrainConfig, vocab: Vocabulary, train_docs: list[Document], progress: _Iterations) -> None:
    table = accumulate_cooccurrence(train_docs, config.radius, len(vocab), config.workers)
    if len(table) == 0:
        raise DataError("empty co-occurrence table: no document has two in-vocabulary tokens")
    params = init_glove(len(vocab), config.dim, config.seed)
    optimizer = AdaGradState.for_blocks(params.blocks(), lr=config.lr)
    for iteration in range(1, config.iterations + 1):
        cost = glove_epoch(
            table, params, optimizer, (config.seed, iteration), config.x_max, config.alpha, config.workers
        )
        logger.info("iteration %i/%i: glove cost %.6f", iteration, config.iterations, cost)
        if progress.finish(iteration, export_glove(params, config.glove_main_only), None):
            break


def run_training(
    config: TrainConfig,
    documents: Sequence[Sequence[str]],
    vocab: Vocabulary,
    bundle: EvalBundle | None,
    out_dir: Path | str,
    activation: Activation = TANH,
) -> TrainingRun:
    """Train `config.model` on tokenized documents and checkpoint every iteration.

    Raises:
        NumericalDivergence: with `last_checkpoint` set to the last good one
    """
    config.validate()
    if len(vocab) < 2:
        raise DataError("vocabulary needs at least 2 words")
    bundle = bundle or EvalBundle()
    store = CheckpointStore(out_dir)
    progress = _Iterations(config, vocab, bundle, store)

    docs = encode_documents(documents, vocab)
    train_docs, val_docs = split_train_validation(docs, config.val_fraction, config.seed)
    logger.info(
        "%s: %i training / %i validation documents, %i training tokens",
        config.model, len(train_docs), len(val_docs), sum(len(d) for d in train_docs),
    )

    try:
        if config.model == ModelKind.GLOVE:
            _train_glove(config, vocab, train_docs, progress)
        else:
            _train_neural(config, vocab, train_docs, val_docs, progress, activation)
    except NumericalDivergence as e:
        e.last_checkpoint = progress.last_checkpoint
        logger.error("training diverged: %s", e)
        raise
    return progress.run()


def run_dimension_sweep(
    config: TrainConfig,
    documents: Sequence[Sequence[str]],
    vocab: Vocabulary,
    bundle: EvalBundle | None,
    out_dir: Path | str,
    dims: Sequence[int] = DIMENSIONS,
) -> dict[int, TrainingRun]:
    """One run per dimensionality, each in its own 'dim-D' directory."""
    runs = {}
    for dim in dims:
        logger.info("sweep: dim %i", dim)
        runs[dim] = run_training(config.updated({"dim": dim}), documents, vocab, bundle, Path(out_dir) / f"dim-{dim}")
    return runs


def read_run_log(path: Path | str) -> list[IterationRecord]:
    """Records from a run log; results carry values only, without coverage."""
    task_names, rows = read_log(path)
    return [
        IterationRecord(
            iteration=iteration,
            val_loss=loss,
            results=[
                TaskResult(task=name, value=value, evaluated=0, skipped=0, correlation=name == "ws")
                for name, value in zip(task_names, metrics)
            ],
        )
        for iteration, loss, metrics in rows
    ]


@dataclass
class StrategyTable:
    """Win counts per (stopping signal, target task), summed over runs."""

    signals: list[str]
    targets: list[str]
    wins: dict[tuple[str, str], int] = field(default_factory=dict)
    runs: int = 1

    def win(self, signal: str, target: str) -> int:
        return self.wins.get((signal, target), 0)

    def total(self, signal: str) -> int:
        return sum(self.win(signal, t) for t in self.targets)

    def __add__(self, other: "StrategyTable") -> "StrategyTable":
        signals = self.signals + [s for s in other.signals if s not in self.signals]
        targets = self.targets + [t for t in other.targets if t not in self.targets]
        wins = {key: self.wins.get(key, 0) + other.wins.get(key, 0) for key in {*self.wins, *other.wins}}
        return StrategyTable(signals, targets, wins, self.runs + other.runs)

    def render(self) -> str:
        """Tab-separated signal x target matrix with a per-signal total."""
        lines = ["\t".join(["signal", *self.targets, "total"])]
        for signal in self.signals:
            counts = [str(self.win(signal, t)) for t in self.targets]
            lines.append("\t".join([signal, *counts, str(self.total(signal))]))
        return "\n".join(lines) + "\n"


def _peak(records: Sequence[IterationRecord], signal: str, higher_is_better: bool) -> IterationRecord | None:
    best = None
    for record in records:
        value = record.signal(signal)
        if value is None or math.isnan(value):
            continue
        if best is None:
            best = record
            continue
        current = best.signal(signal)
        if (value > current) if higher_is_better else (value < current):
            best = record
    return best


def compare_stopping_strategies(
    records: Sequence[IterationRecord],
    tasks: Sequence[str],
    baselines: dict[str, float] | None = None,
) -> StrategyTable:
    """Which stopping signal lands within WIN_THRESHOLD PGR of each task's peak.

    Each signal selects its own peak iteration (earliest on ties). The
    stop wins on a target task when the target's metric there reaches
    WIN_THRESHOLD percent of the target's peak gain over `baselines`
    (default 0). A peak at or below its baseline raises DataError.
    """
    baselines = baselines or {}
    signals = ([VAL_LOSS] if any(r.val_loss is not None for r in records) else []) + list(tasks)
    table = StrategyTable(signals=signals, targets=list(tasks))
    for signal in signals:
        stop = _peak(records, signal, higher_is_better=signal != VAL_LOSS)
        if stop is None:
            continue
        for target in tasks:
            peak = max(r.metric(target) for r in records)
            value = stop.metric(target)
            base = baselines.get(target, 0.0)
            won = pgr(value, peak, base) >= WIN_THRESHOLD
            table.wins[(signal, target)] = int(won)
    return table
