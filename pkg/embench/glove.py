"""Count-based comparator: co-occurrence counts fit by weighted least squares.

Every in-window pair adds exactly 1 to X[target][context]; there is no
distance weighting. Only the non-zero cells of X enter the objective

    sum f(X_ij) * (w_i . c_j + b_i + b~_j - ln X_ij) ** 2

with f(x) = min(1, (x / x_max) ** alpha).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Document
from .errors import DataError, DataFormatError, NumericalDivergence
from .models import REAL
from .optim import AdaGradState
from .workers import chunked, run_jobs

logger = logging.getLogger(__name__)

X_MAX = 100.0
ALPHA = 0.75
DOCS_PER_PARTIAL = 10_000
CELLS_PER_JOB = 50_000


@dataclass
class CooccurrenceTable:
    """Sparse co-occurrence counts, cells sorted by (i, j), every value > 0."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    vocab_size: int

    def __len__(self) -> int:
        return len(self.values)

    def get(self, i: int, j: int) -> float:
        key = np.searchsorted(self._keys(), i * self.vocab_size + j)
        if key < len(self) and self.rows[key] == i and self.cols[key] == j:
            return float(self.values[key])
        return 0.0

    def total(self) -> float:
        return float(self.values.sum())

    def _keys(self) -> np.ndarray:
        return self.rows * self.vocab_size + self.cols


def _partial_counts(documents: Sequence[Document], radius: int, vocab_size: int) -> tuple[np.ndarray, np.ndarray]:
    keys = []
    for doc in documents:
        ids = doc.token_ids
        for offset in range(1, min(radius, len(ids) - 1) + 1):
            left, right = ids[:-offset], ids[offset:]
            keys.append(left * vocab_size + right)
            keys.append(right * vocab_size + left)
    if not keys:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(keys), return_counts=True)


def accumulate_cooccurrence(
    documents: Sequence[Document],
    radius: int,
    vocab_size: int,
    workers: int = 1,
) -> CooccurrenceTable:
    """Count every in-window (target, context) pair once, both directions.

    Partial tables over document chunks are merged once at the end.
    """
    parts = chunked(list(documents), DOCS_PER_PARTIAL)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        partials = list(pool.map(lambda part: _partial_counts(part, radius, vocab_size), parts))

    if partials:
        keys = np.concatenate([k for k, _ in partials])
        counts = np.concatenate([c for _, c in partials])
    else:
        keys = counts = np.empty(0, dtype=np.int64)
    unique, inverse = np.unique(keys, return_inverse=True)
    values = np.bincount(inverse, weights=counts, minlength=len(unique)).astype(REAL)

    table = CooccurrenceTable(
        rows=unique // vocab_size,
        cols=unique % vocab_size,
        values=values,
        vocab_size=vocab_size,
    )
    logger.info("co-occurrence table: %i non-zero cells, %.0f pairs", len(table), table.total())
    return table


def write_cooccurrence(path: Path | str, table: CooccurrenceTable) -> None:
    """Write 'i j X_ij' lines sorted by (i, j)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for i, j, x in zip(table.rows, table.cols, table.values):
            f.write(f"{i} {j} {float(x)!r}\n")


def read_cooccurrence(path: Path | str, vocab_size: int) -> CooccurrenceTable:
    rows, cols, values = [], [], []
    try:
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                parts = line.split()
                try:
                    i, j, x = int(parts[0]), int(parts[1]), float(parts[2])
                except (IndexError, ValueError):
                    raise DataFormatError(path, line_no, "expected 'i j X_ij'") from None
                if len(parts) != 3 or x <= 0 or not (0 <= i < vocab_size and 0 <= j < vocab_size):
                    raise DataFormatError(path, line_no, "cell out of range")
                rows.append(i)
                cols.append(j)
                values.append(x)
    except OSError as e:
        raise DataError(f"Cannot read co-occurrence table {path}: {e}") from e
    order = np.lexsort((cols, rows))
    return CooccurrenceTable(
        rows=np.array(rows, dtype=np.int64)[order],
        cols=np.array(cols, dtype=np.int64)[order],
        values=np.array(values, dtype=REAL)[order],
        vocab_size=vocab_size,
    )


@dataclass
class GloveParams:
    """Main and context embeddings with their biases."""

    main_emb: np.ndarray
    context_emb: np.ndarray
    main_bias: np.ndarray
    context_bias: np.ndarray

    def blocks(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def init_glove(vocab_size: int, dim: int, seed: int) -> GloveParams:
    """Embeddings uniform in [-0.5/d, 0.5/d], biases zero."""
    rng = np.random.default_rng(seed)
    return GloveParams(
        main_emb=rng.uniform(-0.5 / dim, 0.5 / dim, size=(vocab_size, dim)).astype(REAL),
        context_emb=rng.uniform(-0.5 / dim, 0.5 / dim, size=(vocab_size, dim)).astype(REAL),
        main_bias=np.zeros(vocab_size, dtype=REAL),
        context_bias=np.zeros(vocab_size, dtype=REAL),
    )


def weight(x, x_max: float = X_MAX, alpha: float = ALPHA):
    """Clipped power weight f(x) = min(1, (x / x_max) ** alpha)."""
    return np.minimum(1.0, (np.asarray(x, dtype=REAL) / x_max) ** alpha)


def glove_cell_gradients(
    params: GloveParams,
    i: int,
    j: int,
    x: float,
    x_max: float = X_MAX,
    alpha: float = ALPHA,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss of cell (i, j) and the gradients of its four parameter rows."""
    main, context = params.main_emb[i], params.context_emb[j]
    diff = main @ context + params.main_bias[i] + params.context_bias[j] - np.log(x)
    fx = float(weight(x, x_max, alpha))
    scale = 2.0 * fx * diff
    grads = {
        "main_emb": scale * context,
        "context_emb": scale * main,
        "main_bias": np.array([scale]),
        "context_bias": np.array([scale]),
    }
    return float(fx * diff * diff), grads


def glove_cost(table: CooccurrenceTable, params: GloveParams, x_max: float = X_MAX, alpha: float = ALPHA) -> float:
    """Total weighted least-squares cost over the non-zero cells."""
    dots = np.einsum("ij,ij->i", params.main_emb[table.rows], params.context_emb[table.cols])
    diff = dots + params.main_bias[table.rows] + params.context_bias[table.cols] - np.log(table.values)
    return float((weight(table.values, x_max, alpha) * diff * diff).sum())


def glove_epoch(
    table: CooccurrenceTable,
    params: GloveParams,
    optimizer: AdaGradState,
    seed: Sequence[int],
    x_max: float = X_MAX,
    alpha: float = ALPHA,
    workers: int = 1,
) -> float:
    """One AdaGrad pass over the cells in shuffled order; returns the summed pre-update cost."""
    order = np.random.default_rng([*seed]).permutation(len(table))

    def work(cells: np.ndarray, rng: np.random.Generator) -> float:
        cost = 0.0
        for c in cells:
            i, j = int(table.rows[c]), int(table.cols[c])
            loss, grads = glove_cell_gradients(params, i, j, table.values[c], x_max, alpha)
            if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.values()):
                raise NumericalDivergence("numerical divergence", position=int(c))
            cost += loss
            if loss == 0.0:
                continue
            for name, grad in grads.items():
                row = np.array([i if name.startswith("main") else j])
                if name.endswith("_emb"):
                    grad = grad[np.newaxis, :]
                optimizer.apply(name, getattr(params, name), grad, row)
        return cost

    return run_jobs(chunked(order, CELLS_PER_JOB), work, workers, seed)


def train_glove(
    table: CooccurrenceTable,
    params: GloveParams,
    epochs: int,
    optimizer: AdaGradState | None = None,
    seed: int = 1,
    x_max: float = X_MAX,
    alpha: float = ALPHA,
    lr: float = 0.1,
    workers: int = 1,
) -> GloveParams:
    """Fit the parameters in place for `epochs` passes and return them."""
    if len(table) == 0:
        raise DataError("empty co-occurrence table")
    optimizer = optimizer or AdaGradState.for_blocks(params.blocks(), lr=lr)
    for epoch in range(1, epochs + 1):
        cost = glove_epoch(table, params, optimizer, (seed, epoch), x_max, alpha, workers)
        logger.info("glove epoch %i: cost %.6f", epoch, cost)
    return params


def export_glove(params: GloveParams, main_only: bool = False) -> np.ndarray:
    """Per-word vectors: main + context, or main alone."""
    if main_only:
        return params.main_emb.copy()
    return params.main_emb + params.context_emb
