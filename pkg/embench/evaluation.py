"""Intrinsic evaluation of an embedding table.

All evaluators are read-only over the table. Out-of-vocabulary items
are skipped and counted, never zero-filled; metrics cover the
evaluated items only.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats
from scipy.optimize import minimize
from scipy.special import logsumexp

from .datasets import AnalogyQuestion, TflQuestion
from .errors import DataError

logger = logging.getLogger(__name__)

ANALOGY_CHUNK = 256


@dataclass
class EmbeddingTable:
    """Vocabulary-aligned V x d matrix with a word -> row lookup."""

    words: list[str]
    vectors: np.ndarray
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or len(self.vectors) != len(self.words):
            raise DataError("embedding matrix does not match its word list")
        if not np.isfinite(self.vectors).all():
            raise DataError("embedding table has non-finite entries")
        self.index = {w: i for i, w in enumerate(self.words)}
        self._normalized: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.words)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def lookup(self, word: str) -> int | None:
        return self.index.get(word)

    def vector(self, word: str) -> np.ndarray:
        row = self.index.get(word)
        if row is None:
            raise DataError(f"word not in vocabulary: {word}")
        return self.vectors[row]

    def normalized(self) -> np.ndarray:
        """Unit-length rows; all-zero rows stay zero."""
        if self._normalized is None:
            norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
            self._normalized = self.vectors / np.where(norms > 0, norms, 1.0)
        return self._normalized


@dataclass
class TaskResult:
    """One task's metric with coverage: evaluated + skipped = dataset size."""

    task: str
    value: float
    evaluated: int
    skipped: int
    correlation: bool = False  # value is a correlation, not a percentage
    diagnostics: dict[str, int] = field(default_factory=dict)

    def format_value(self) -> str:
        return f"{self.value:.4f}" if self.correlation else f"{self.value:.2f}"

    def line(self) -> str:
        """Machine-readable 'task metric evaluated skipped'."""
        return f"{self.task} {self.format_value()} {self.evaluated} {self.skipped}"


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DataError("undefined similarity: zero vector")
    return float(np.dot(u, v) / (nu * nv))


def nearest_neighbors(
    table: EmbeddingTable,
    query: np.ndarray,
    k: int,
    exclude: Iterable[str] = (),
) -> list[tuple[str, float]]:
    """Top-k words by cosine to `query`, ties broken by ascending word id."""
    norm = np.linalg.norm(query)
    if norm == 0:
        raise DataError("undefined similarity: zero vector")
    sims = table.normalized() @ (query / norm)
    excluded = {table.index[w] for w in exclude if w in table.index}
    order = np.lexsort((np.arange(len(table)), -sims))
    ranked = [int(i) for i in order if int(i) not in excluded][:k]
    return [(table.words[i], float(sims[i])) for i in ranked]


def eval_ws(
    table: EmbeddingTable,
    pairs: Sequence[tuple[str, str, float]],
    method: str = "pearson",
) -> TaskResult:
    """Correlation between cosine similarity and human score."""
    sims, scores = [], []
    for w1, w2, score in pairs:
        if w1 in table.index and w2 in table.index:
            sims.append(cosine(table.vector(w1), table.vector(w2)))
            scores.append(score)
    if len(sims) < 2:
        raise DataError("word similarity needs at least 2 in-vocabulary pairs")
    if np.ptp(sims) == 0 or np.ptp(scores) == 0:
        raise DataError("degenerate correlation: zero variance")

    if method == "spearman":
        value = stats.spearmanr(sims, scores)[0]
    else:
        value = stats.pearsonr(sims, scores)[0]
    return TaskResult(
        task="ws",
        value=float(value),
        evaluated=len(sims),
        skipped=len(pairs) - len(sims),
        correlation=True,
    )


def eval_tfl(table: EmbeddingTable, questions: Sequence[TflQuestion]) -> TaskResult:
    """Synonym choice: the in-vocabulary candidate nearest to the stem."""
    correct = evaluated = 0
    for q in questions:
        if q.stem not in table.index:
            continue
        candidates = [(i, c) for i, c in enumerate(q.choices) if c in table.index]
        if not candidates:
            continue
        stem = table.vector(q.stem)
        sims = [cosine(stem, table.vector(c)) for _, c in candidates]
        chosen = candidates[int(np.argmax(sims))][0]
        evaluated += 1
        correct += chosen == q.answer
    if evaluated == 0:
        raise DataError("tfl: every question was skipped")
    return TaskResult(
        task="tfl",
        value=100.0 * correct / evaluated,
        evaluated=evaluated,
        skipped=len(questions) - evaluated,
    )


def predict_analogies(
    table: EmbeddingTable,
    quads: np.ndarray,
    exclude: bool = True,
) -> np.ndarray:
    """Row id maximizing cos(x, b - a + c) for each (a, b, c, d) row of ids.

    With `exclude`, a, b and c are not candidates unless one of them is
    the expected answer itself.
    """
    normed = table.normalized()
    predictions = np.empty(len(quads), dtype=np.int64)
    for start in range(0, len(quads), ANALOGY_CHUNK):
        chunk = quads[start:start + ANALOGY_CHUNK]
        a, b, c, d = chunk.T
        targets = table.vectors[b] - table.vectors[a] + table.vectors[c]
        norms = np.linalg.norm(targets, axis=1, keepdims=True)
        sims = (targets / np.where(norms > 0, norms, 1.0)) @ normed.T
        if exclude:
            rows = np.arange(len(chunk))
            for col in (a, b, c):
                keep = col != d
                sims[rows[keep], col[keep]] = -np.inf
        predictions[start:start + len(chunk)] = sims.argmax(axis=1)
    return predictions


def is_syntactic(category: str) -> bool:
    return category.startswith("gram")


def eval_analogy(
    table: EmbeddingTable,
    questions: Sequence[AnalogyQuestion],
    exclude: bool = True,
) -> dict[str, TaskResult]:
    """Analogy accuracy for the 'sem' and 'syn' groups and 'analogy' overall."""
    totals: dict[str, int] = defaultdict(int)
    quads, groups = [], []
    for q in questions:
        group = "syn" if is_syntactic(q.category) else "sem"
        totals[group] += 1
        ids = [table.lookup(w) for w in (q.a, q.b, q.c, q.d)]
        if None not in ids:
            quads.append(ids)
            groups.append(group)

    correct_by_group: dict[str, int] = defaultdict(int)
    evaluated_by_group: dict[str, int] = defaultdict(int)
    if quads:
        quads_arr = np.array(quads, dtype=np.int64)
        hits = predict_analogies(table, quads_arr, exclude) == quads_arr[:, 3]
        for group, hit in zip(groups, hits):
            evaluated_by_group[group] += 1
            correct_by_group[group] += int(hit)

    results = {}
    for group in ("sem", "syn", "analogy"):
        if group == "analogy":
            evaluated = sum(evaluated_by_group.values())
            correct = sum(correct_by_group.values())
            size = sum(totals.values())
        else:
            evaluated, correct, size = evaluated_by_group[group], correct_by_group[group], totals[group]
        if evaluated == 0:
            logger.warning("analogy group %s: no question evaluated", group)
        results[group] = TaskResult(
            task=group,
            value=100.0 * correct / evaluated if evaluated else 0.0,
            evaluated=evaluated,
            skipped=size - evaluated,
        )
    return results


def text_representation(table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray | None:
    """Term-frequency weighted mean of in-vocabulary word vectors."""
    rows = [table.index[t] for t in tokens if t in table.index]
    if not rows:
        return None
    return table.vectors[rows].mean(axis=0)


class SoftmaxRegression:
    """Multinomial logistic regression, L2-regularized, fit by L-BFGS from zero."""

    def __init__(self, l2: float = 1.0, max_iter: int = 200):
        self.l2 = l2
        self.max_iter = max_iter
        self.classes: list[str] = []
        self.weights: np.ndarray | None = None

    @staticmethod
    def _with_bias(x: np.ndarray) -> np.ndarray:
        return np.hstack([x, np.ones((len(x), 1))])

    def fit(self, x: np.ndarray, labels: Sequence[str]) -> "SoftmaxRegression":
        self.classes = sorted(set(labels))
        if len(self.classes) < 2:
            raise DataError("classification needs at least 2 classes in the training data")
        lookup = {c: i for i, c in enumerate(self.classes)}
        xb = self._with_bias(x)
        onehot = np.zeros((len(labels), len(self.classes)))
        onehot[np.arange(len(labels)), [lookup[l] for l in labels]] = 1.0
        shape = (xb.shape[1], len(self.classes))
        penalty = np.ones(shape)
        penalty[-1] = 0.0  # bias row is not regularized

        def objective(flat: np.ndarray) -> tuple[float, np.ndarray]:
            w = flat.reshape(shape)
            logits = xb @ w
            log_norm = logsumexp(logits, axis=1, keepdims=True)
            loss = float((log_norm - logits)[onehot > 0].sum() + 0.5 * self.l2 * (penalty * w * w).sum())
            probs = np.exp(logits - log_norm)
            grad = xb.T @ (probs - onehot) + self.l2 * penalty * w
            return loss, grad.ravel()

        result = minimize(
            objective, np.zeros(shape).ravel(), jac=True, method="L-BFGS-B",
            options={"maxiter": self.max_iter},
        )
        self.weights = result.x.reshape(shape)
        return self

    def predict(self, x: np.ndarray) -> list[str]:
        scores = self._with_bias(x) @ self.weights
        return [self.classes[i] for i in scores.argmax(axis=1)]


def eval_avg(
    table: EmbeddingTable,
    train: Sequence[tuple[str, Sequence[str]]],
    test: Sequence[tuple[str, Sequence[str]]],
    l2: float = 1.0,
    max_iter: int = 200,
) -> TaskResult:
    """Text classification accuracy on tf-weighted average embeddings."""
    zero_texts = 0

    def features(data):
        nonlocal zero_texts
        rows = []
        for _, tokens in data:
            rep = text_representation(table, tokens)
            if rep is None:
                zero_texts += 1
                rep = np.zeros(table.dim)
            rows.append(rep)
        return np.array(rows).reshape(len(data), table.dim)

    model = SoftmaxRegression(l2=l2, max_iter=max_iter)
    model.fit(features(train), [label for label, _ in train])
    if not test:
        raise DataError("avg: empty test set")
    predicted = model.predict(features(test))
    correct = sum(p == label for p, (label, _) in zip(predicted, test))
    return TaskResult(
        task="avg",
        value=100.0 * correct / len(test),
        evaluated=len(test),
        skipped=0,
        diagnostics={"zero_texts": zero_texts},
    )


def random_embedding(words: Sequence[str], dim: int, seed: int) -> EmbeddingTable:
    """Baseline table with i.i.d. uniform [-1, 1] entries."""
    rng = np.random.default_rng(seed)
    return EmbeddingTable(words=list(words), vectors=rng.uniform(-1.0, 1.0, size=(len(words), dim)))
