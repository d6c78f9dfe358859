"""Negative sampling from the smoothed unigram distribution."""

import numpy as np

from .corpus import Vocabulary

POWER = 0.75


class NegativeSampler:
    """Draws words with probability proportional to count ** 0.75.

    Draws invert a cumulative table with a binary search, O(log V).
    """

    def __init__(self, counts: np.ndarray, k: int = 5, power: float = POWER):
        if k < 1:
            raise ValueError("negatives per target must be >= 1")
        counts = np.asarray(counts, dtype=np.float64)
        if len(counts) < 2:
            raise ValueError("negative sampling needs at least 2 words")
        weights = counts ** power
        self.distribution = weights / weights.sum()
        self.cum_table = np.cumsum(self.distribution)
        self.cum_table[-1] = 1.0
        self.k = k

    @classmethod
    def from_vocab(cls, vocab: Vocabulary, k: int = 5) -> "NegativeSampler":
        return cls(vocab.counts, k)

    def __len__(self) -> int:
        return len(self.distribution)

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        """Independent draws, no exclusion."""
        return np.searchsorted(self.cum_table, rng.random(size), side="right")


def draw_negatives(
    sampler: NegativeSampler,
    rng: np.random.Generator,
    exclude: int | np.ndarray,
    count: int | None = None,
) -> np.ndarray:
    """Draw `count` (default k) negatives per entry of `exclude`.

    The result has shape exclude.shape + (count,); a draw equal to its
    own excluded target is redrawn.
    """
    exclude = np.asarray(exclude)
    draws = sampler.sample(rng, exclude.shape + (count or sampler.k,))
    clash = draws == exclude[..., np.newaxis]
    while clash.any():
        draws[clash] = sampler.sample(rng, int(clash.sum()))
        clash = draws == exclude[..., np.newaxis]
    return draws
