"""Corpus pipeline: vocabulary, document sampling, subsampling and windows.

Documents are lists of whitespace-separated tokens, one per line of the
corpus file. Every trainer consumes the encoded documents and windows
produced here.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TypeVar

import numpy as np

from .errors import DataError, DataFormatError, UsageError

logger = logging.getLogger(__name__)

# Context slot outside the document. As a row index it addresses the
# trailing pad row of an input embedding matrix with V + 1 rows.
PAD = -1

T = TypeVar("T")


@dataclass
class Vocabulary:
    """Word <-> id map with corpus frequencies, ids in descending count order."""

    words: list[str]
    counts: np.ndarray
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise DataError("duplicate word in vocabulary")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @property
    def total_tokens(self) -> int:
        return int(self.counts.sum())

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        """Map tokens to ids, dropping out-of-vocabulary tokens."""
        index = self.index
        return np.array([index[t] for t in tokens if t in index], dtype=np.int64)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.words[i] for i in ids]

    def frequencies(self) -> np.ndarray:
        """Relative corpus frequency f of every word."""
        return self.counts / self.total_tokens

    def keep_probabilities(self, t: float) -> np.ndarray:
        """Subsampling keep probability min(1, (sqrt(f/t) + 1) * t / f) per word."""
        f = self.frequencies()
        return np.minimum(1.0, (np.sqrt(f / t) + 1.0) * t / f)


@dataclass(frozen=True)
class Document:
    """A document as vocabulary ids, out-of-vocabulary tokens removed."""

    token_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.token_ids)


@dataclass(frozen=True, slots=True)
class Window:
    """A target word with its 2*radius context slots, left to right.

    Slots outside the document hold PAD. `position` is the target's
    token offset inside its document.
    """

    target: int
    context: np.ndarray
    context_len: int
    position: int = 0

    def present(self) -> np.ndarray:
        """Context ids that are not PAD, in slot order."""
        return self.context[self.context != PAD]


@dataclass(frozen=True)
class WindowBatch:
    """Windows stacked row by row: targets (B,), contexts (B, 2w), positions (B,)."""

    targets: np.ndarray
    contexts: np.ndarray
    positions: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def present(self) -> np.ndarray:
        """Boolean (B, 2w) mask of context slots inside the document."""
        return self.contexts != PAD

    @property
    def context_lens(self) -> np.ndarray:
        return self.present.sum(axis=1)

    @classmethod
    def empty(cls, slots: int = 0) -> "WindowBatch":
        none = np.zeros(0, dtype=np.int64)
        return cls(none, np.zeros((0, slots), dtype=np.int64), none)

    @classmethod
    def from_windows(cls, windows: Sequence[Window]) -> "WindowBatch":
        if not windows:
            return cls.empty()
        return cls(
            targets=np.array([w.target for w in windows], dtype=np.int64),
            contexts=np.stack([np.asarray(w.context, dtype=np.int64) for w in windows]),
            positions=np.array([w.position for w in windows], dtype=np.int64),
        )

    @classmethod
    def concat(cls, batches: Iterable["WindowBatch"]) -> "WindowBatch":
        batches = [b for b in batches if len(b)]
        if not batches:
            return cls.empty()
        return cls(
            targets=np.concatenate([b.targets for b in batches]),
            contexts=np.concatenate([b.contexts for b in batches]),
            positions=np.concatenate([b.positions for b in batches]),
        )

    def select(self, rows: np.ndarray | slice) -> "WindowBatch":
        return WindowBatch(self.targets[rows], self.contexts[rows], self.positions[rows])

    def split(self, size: int) -> Iterator["WindowBatch"]:
        """Consecutive batches of at most `size` windows."""
        for start in range(0, len(self), size):
            yield self.select(slice(start, start + size))

    def window(self, i: int) -> Window:
        context = self.contexts[i]
        return Window(
            target=int(self.targets[i]),
            context=context,
            context_len=int((context != PAD).sum()),
            position=int(self.positions[i]),
        )


def read_documents(path: Path | str) -> list[list[str]]:
    """Read a corpus file: one document per line, whitespace tokens."""
    try:
        with open(path, encoding="utf-8") as f:
            return [line.split() for line in f]
    except OSError as e:
        raise DataError(f"Cannot read corpus {path}: {e}") from e


def write_documents(path: Path | str, documents: Iterable[Sequence[str]]) -> None:
    """Write documents in the corpus file format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for doc in documents:
            f.write(" ".join(doc) + "\n")


def build_vocab(
    documents: Iterable[Iterable[str]],
    cap: int = 200_000,
    min_count: int = 1,
) -> Vocabulary:
    """Keep the `cap` most frequent words occurring at least `min_count` times.

    Ties in count are broken by first occurrence in the corpus.
    """
    if cap < 1:
        raise UsageError("vocabulary cap must be >= 1")

    counter: Counter[str] = Counter()
    for doc in documents:
        counter.update(doc)
    if not counter:
        raise DataError("empty corpus")

    # Counter keeps first-occurrence order; sorted() is stable.
    ranked = sorted(counter.items(), key=lambda item: -item[1])
    kept = [(w, c) for w, c in ranked if c >= min_count][:cap]
    if not kept:
        raise DataError(f"no word occurs at least {min_count} times")

    vocab = Vocabulary(words=[w for w, _ in kept], counts=[c for _, c in kept])
    logger.info(
        "vocabulary: %i of %i distinct words kept, %i tokens",
        len(vocab), len(counter), vocab.total_tokens,
    )
    return vocab


def read_vocab(path: Path | str) -> Vocabulary:
    """Read a vocabulary file of 'word count' lines."""
    words, counts = [], []
    try:
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                parts = line.split()
                if len(parts) != 2:
                    raise DataFormatError(path, line_no, "expected 'word count'")
                try:
                    count = int(parts[1])
                except ValueError:
                    raise DataFormatError(path, line_no, f"bad count {parts[1]!r}") from None
                if count < 1:
                    raise DataFormatError(path, line_no, "count must be >= 1")
                words.append(parts[0])
                counts.append(count)
    except OSError as e:
        raise DataError(f"Cannot read vocabulary {path}: {e}") from e
    if not words:
        raise DataError(f"{path}: empty vocabulary")
    return Vocabulary(words=words, counts=counts)


def write_vocab(path: Path | str, vocab: Vocabulary) -> None:
    """Write a vocabulary file, descending count order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for word, count in zip(vocab.words, vocab.counts):
            f.write(f"{word} {int(count)}\n")


def encode_documents(documents: Iterable[Iterable[str]], vocab: Vocabulary) -> list[Document]:
    return [Document(vocab.encode(doc)) for doc in documents]


def shuffle_documents(documents: Sequence[T], seed: int) -> list[T]:
    """Permute documents deterministically; document contents are untouched."""
    order = np.random.default_rng(seed).permutation(len(documents))
    return [documents[i] for i in order]


def sample_subset(documents: Sequence[T], target_tokens: int, seed: int) -> list[T]:
    """Uniform document-level sample holding at least `target_tokens` tokens.

    Documents are taken in a seed-determined random order until the
    running token count reaches the target, so with a fixed seed a
    smaller sample is always a prefix (and subset) of a larger one.
    """
    available = sum(len(doc) for doc in documents)
    if target_tokens > available:
        raise DataError(
            f"sample target {target_tokens} exceeds corpus size {available} tokens"
        )

    sample: list[T] = []
    taken = 0
    for doc in shuffle_documents(documents, seed):
        if taken >= target_tokens:
            break
        sample.append(doc)
        taken += len(doc)
    return sample


def mix_corpora(sources: Sequence[tuple[Sequence[T], int]], seed: int) -> list[T]:
    """Sample each source at its own target, concatenate and shuffle."""
    mixed: list[T] = []
    for documents, target in sources:
        mixed.extend(sample_subset(documents, target, seed))
    return shuffle_documents(mixed, seed)


def keep_mask(
    token_ids: np.ndarray,
    vocab: Vocabulary,
    t: float,
    rng: np.random.Generator,
    keep_prob: np.ndarray | None = None,
) -> np.ndarray:
    """Boolean mask keeping each occurrence independently with p_keep.

    `keep_prob` may be passed precomputed from `vocab.keep_probabilities(t)`.
    """
    if t <= 0:
        raise ValueError("subsample threshold must be > 0")
    if keep_prob is None:
        keep_prob = vocab.keep_probabilities(t)
    token_ids = np.asarray(token_ids, dtype=np.int64)
    if len(token_ids) == 0:
        return np.zeros(0, dtype=bool)
    return rng.random(len(token_ids)) < keep_prob[token_ids]


def subsample(
    token_ids: np.ndarray,
    vocab: Vocabulary,
    t: float,
    rng: np.random.Generator,
    keep_prob: np.ndarray | None = None,
) -> np.ndarray:
    """Drop frequent-word occurrences, each kept independently with p_keep."""
    token_ids = np.asarray(token_ids, dtype=np.int64)
    return token_ids[keep_mask(token_ids, vocab, t, rng, keep_prob)]


def document_windows(
    token_ids: Sequence[int],
    radius: int,
    positions: np.ndarray | None = None,
) -> WindowBatch:
    """All windows of one document, fixed width, PAD outside the document.

    `positions` maps each token to its offset in the original document
    (default: its index), e.g. `np.flatnonzero(mask)` after subsampling.
    """
    if radius < 1:
        raise ValueError("window radius must be >= 1")
    ids = np.asarray(token_ids, dtype=np.int64)
    if len(ids) == 0:
        return WindowBatch.empty(2 * radius)
    pad = np.full(radius, PAD, dtype=np.int64)
    spans = np.lib.stride_tricks.sliding_window_view(np.concatenate([pad, ids, pad]), 2 * radius + 1)
    contexts = np.delete(spans, radius, axis=1)
    if positions is None:
        positions = np.arange(len(ids), dtype=np.int64)
    return WindowBatch(targets=ids, contexts=contexts, positions=np.asarray(positions, dtype=np.int64))


def iter_windows(
    token_ids: Sequence[int],
    radius: int,
    positions: np.ndarray | None = None,
) -> Iterator[Window]:
    """One fixed-width window per position; no shrinking, no distance weighting."""
    batch = document_windows(token_ids, radius, positions)
    for i in range(len(batch)):
        yield batch.window(i)
