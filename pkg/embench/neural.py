"""Forward passes, gradients and AdaGrad training steps for the neural models.

Predict models (skipgram, cbow, order, lbl, nnlm) map the context to a
representation h and score every candidate target w by e'(w).h under a
negative-sampling objective. C&W scores the whole window, target
included, and trains on a hinge loss against a corrupted window.

Everything works on a WindowBatch: one AdaGrad step applies the summed
gradient of a minibatch, and a batch of one window is plain per-window
SGD. Gradients are returned as {block name: (rows, grad)} where rows is
None for dense blocks and an array of unique row ids for embedding blocks.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .config import ModelKind
from .corpus import Vocabulary, Window, WindowBatch
from .errors import DataError, NumericalDivergence
from .models import CWParams, ModelSpec, PredictModelParams, init_model
from .optim import AdaGradState
from .sampling import NegativeSampler, draw_negatives

logger = logging.getLogger(__name__)

Grads = dict[str, tuple[np.ndarray | None, np.ndarray]]

VALIDATION_BATCH = 1024


@dataclass(frozen=True)
class Activation:
    """Hidden-layer nonlinearity and its derivative written in terms of the output."""

    forward: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]


TANH = Activation(np.tanh, lambda h: 1.0 - h * h)
IDENTITY = Activation(lambda a: a, np.ones_like)


def _as_batch(windows: Window | WindowBatch | Sequence[Window]) -> WindowBatch:
    if isinstance(windows, WindowBatch):
        return windows
    if isinstance(windows, Window):
        return WindowBatch.from_windows([windows])
    return WindowBatch.from_windows(list(windows))


def _sparse(rows: np.ndarray, grads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum gradient rows that address the same parameter row."""
    unique, inverse = np.unique(rows, return_inverse=True)
    summed = np.zeros((len(unique), grads.shape[-1]), dtype=grads.dtype)
    np.add.at(summed, inverse.reshape(-1), grads)
    return unique, summed


def _forward(
    spec: ModelSpec,
    params: PredictModelParams,
    batch: WindowBatch,
    activation: Activation,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Context representations h and, for the concatenating kinds, their input x.

    h is (B, 2w, d) for skipgram (one row per slot, PAD rows included)
    and (B, h_dim) otherwise.
    """
    emb = params.input_emb[batch.contexts]
    match spec.kind:
        case ModelKind.SKIPGRAM:
            return emb, None
        case ModelKind.CBOW:
            present = batch.present
            counts = np.maximum(present.sum(axis=1, keepdims=True), 1)
            return (emb * present[..., np.newaxis]).sum(axis=1) / counts, None
    x = emb.reshape(len(batch), -1)
    match spec.kind:
        case ModelKind.ORDER:
            return x, x
        case ModelKind.LBL:
            return x @ params.hidden_weight.T, x
        case ModelKind.NNLM:
            return activation.forward(params.hidden_bias + x @ params.hidden_weight.T), x
    raise ValueError(f"{spec.kind} does not predict its target")


def represent_context(
    spec: ModelSpec,
    params: PredictModelParams,
    window: Window | WindowBatch,
    activation: Activation = TANH,
) -> np.ndarray | None:
    """Context representation h; for skipgram one row per context word.

    For a single window, returns None when a skipgram or cbow window has
    no context word. A WindowBatch gets the stacked representations.
    """
    if isinstance(window, WindowBatch):
        return _forward(spec, params, window, activation)[0]
    if spec.kind in (ModelKind.SKIPGRAM, ModelKind.CBOW) and window.context_len == 0:
        return None
    batch = WindowBatch.from_windows([window])
    h = _forward(spec, params, batch, activation)[0][0]
    return h[batch.present[0]] if spec.kind == ModelKind.SKIPGRAM else h


def predict_energy(params: PredictModelParams, h: np.ndarray, word_ids) -> np.ndarray | float:
    """Energy e'(w).h of candidate targets.

    `word_ids` may add one trailing candidate axis to h's leading axes,
    e.g. h (B, d) with word_ids (B, K + 1) gives (B, K + 1).
    """
    out = params.output_emb[word_ids]
    if out.ndim > np.ndim(h):
        h = np.expand_dims(h, -2)
    energy = (out * h).sum(axis=-1)
    return float(energy) if np.ndim(energy) == 0 else energy


def _candidates(spec: ModelSpec, batch: WindowBatch, negatives: np.ndarray) -> np.ndarray:
    """Target followed by its negatives: (B, K + 1), or (B, 2w, K + 1) for skipgram."""
    targets = batch.targets[:, np.newaxis]
    if spec.kind == ModelKind.SKIPGRAM:
        targets = np.broadcast_to(targets[:, :, np.newaxis], negatives.shape[:2] + (1,))
    return np.concatenate([targets, negatives], axis=-1)


def _logistic_loss(z: np.ndarray) -> np.ndarray:
    """-log s(z0) - sum log s(-zi) over the last axis."""
    return np.logaddexp(0.0, -z[..., 0]) + np.logaddexp(0.0, z[..., 1:]).sum(axis=-1)


def _negative_sampling(
    params: PredictModelParams, h: np.ndarray, ids: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Loss per row and its gradients for h and e'(ids)."""
    z = predict_energy(params, h, ids)
    gz = expit(z)
    gz[..., 0] -= 1.0
    out = params.output_emb[ids]
    g_h = np.einsum("...k,...kd->...d", gz, out)
    g_out = gz[..., np.newaxis] * h[..., np.newaxis, :]
    return _logistic_loss(z), g_h, g_out


def predict_batch_loss(
    spec: ModelSpec,
    params: PredictModelParams,
    batch: WindowBatch,
    negatives: np.ndarray,
    activation: Activation = TANH,
) -> np.ndarray:
    """Loss per window without gradients; skipgram sums its pair losses."""
    h, _ = _forward(spec, params, batch, activation)
    losses = _logistic_loss(predict_energy(params, h, _candidates(spec, batch, negatives)))
    if spec.kind == ModelKind.SKIPGRAM:
        losses = (losses * batch.present).sum(axis=1)
    return losses


def predict_batch_gradients(
    spec: ModelSpec,
    params: PredictModelParams,
    batch: WindowBatch,
    negatives: np.ndarray,
    activation: Activation = TANH,
) -> tuple[np.ndarray, Grads]:
    """Loss per window and the gradient of their sum, for fixed negatives.

    `negatives` is (B, K), or (B, 2w, K) for skipgram with one row per
    context slot; rows of PAD slots are ignored.
    """
    h, x = _forward(spec, params, batch, activation)
    ids = _candidates(spec, batch, negatives)
    contexts, present = batch.contexts, batch.present
    losses, g_h, g_out = _negative_sampling(params, h, ids)
    grads: Grads = {}

    if spec.kind == ModelKind.SKIPGRAM:
        losses = (losses * present).sum(axis=1)
        grads["input_emb"] = _sparse(contexts[present], g_h[present])
        grads["output_emb"] = _sparse(ids[present].reshape(-1), g_out[present].reshape(-1, g_out.shape[-1]))
        return losses, grads

    grads["output_emb"] = _sparse(ids.reshape(-1), g_out.reshape(-1, g_out.shape[-1]))
    if spec.kind == ModelKind.CBOW:
        counts = np.maximum(present.sum(axis=1), 1)
        g_slot = np.broadcast_to((g_h / counts[:, np.newaxis])[:, np.newaxis, :], contexts.shape + (spec.dim,))
        grads["input_emb"] = _sparse(contexts[present], g_slot[present])
        return losses, grads

    if spec.kind == ModelKind.ORDER:
        g_x = g_h
    elif spec.kind == ModelKind.LBL:
        grads["hidden_weight"] = (None, g_h.T @ x)
        g_x = g_h @ params.hidden_weight
    else:
        g_a = g_h * activation.derivative(h)
        grads["hidden_weight"] = (None, g_a.T @ x)
        grads["hidden_bias"] = (None, g_a.sum(axis=0))
        g_x = g_a @ params.hidden_weight
    grads["input_emb"] = _sparse(contexts.reshape(-1), g_x.reshape(contexts.size, spec.dim))
    return losses, grads


def _single_negatives(spec: ModelSpec, window: Window, negatives: np.ndarray) -> np.ndarray:
    """Per-window negatives as a batch of one."""
    negatives = np.asarray(negatives, dtype=np.int64)
    if spec.kind != ModelKind.SKIPGRAM:
        return negatives[np.newaxis, :]
    rows = np.atleast_2d(negatives)
    full = np.zeros((1, len(window.context), rows.shape[1]), dtype=np.int64)
    full[0, np.asarray(window.context) != -1] = rows
    return full


def predict_gradients(
    spec: ModelSpec,
    params: PredictModelParams,
    window: Window,
    negatives: np.ndarray,
    activation: Activation = TANH,
) -> tuple[float, Grads]:
    """Window loss and gradients for fixed negatives.

    `negatives` is (k,) for every kind except skipgram, which takes one
    row of k negatives per context word and sums the pair losses.
    """
    batch = WindowBatch.from_windows([window])
    losses, grads = predict_batch_gradients(
        spec, params, batch, _single_negatives(spec, window, negatives), activation
    )
    return float(losses[0]), grads


def _cw_slots(batch: WindowBatch, targets: np.ndarray) -> np.ndarray:
    """[left context | target | right context] ids, (B, 2w + 1)."""
    half = batch.contexts.shape[1] // 2
    return np.concatenate([batch.contexts[:, :half], targets[:, np.newaxis], batch.contexts[:, half:]], axis=1)


def _cw_forward(params: CWParams, slots: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Input x, hidden layer and score for each row of `slots`."""
    x = params.input_emb[slots].reshape(len(slots), -1)
    hidden = np.tanh(params.first_bias + x @ params.first_layer.T)
    return x, hidden, hidden @ params.score_weight + params.score_bias[0]


def cw_score(params: CWParams, window: Window, target: int | None = None) -> float:
    """Score of the window with `target` (default: the window's own) at the center."""
    batch = WindowBatch.from_windows([window])
    targets = batch.targets if target is None else np.array([target], dtype=np.int64)
    return float(_cw_forward(params, _cw_slots(batch, targets))[2][0])


def cw_batch_gradients(params: CWParams, batch: WindowBatch, corrupt: np.ndarray) -> tuple[np.ndarray, Grads]:
    """Hinge loss max(0, 1 - s(w, c) + s(w', c)) per window and the gradient of the sum.

    At and below the margin a window's loss is zero and so is its gradient.
    """
    passes = []
    for sign, targets in ((-1.0, batch.targets), (1.0, np.asarray(corrupt, dtype=np.int64))):
        slots = _cw_slots(batch, targets)
        passes.append((sign, slots, *_cw_forward(params, slots)))

    losses = np.maximum(0.0, 1.0 - passes[0][4] + passes[1][4])
    active = losses > 0.0
    if not active.any():
        return losses, {}

    d = params.input_emb.shape[1]
    g_layer = np.zeros_like(params.first_layer)
    g_bias = np.zeros_like(params.first_bias)
    g_weight = np.zeros_like(params.score_weight)
    rows, row_grads = [], []
    for sign, slots, x, hidden, _ in passes:
        hidden, x = hidden[active], x[active]
        g_weight += sign * hidden.sum(axis=0)
        g_z = sign * params.score_weight * (1.0 - hidden * hidden)
        g_layer += g_z.T @ x
        g_bias += g_z.sum(axis=0)
        rows.append(slots[active].reshape(-1))
        row_grads.append((g_z @ params.first_layer).reshape(-1, d))

    grads: Grads = {
        "input_emb": _sparse(np.concatenate(rows), np.vstack(row_grads)),
        "first_layer": (None, g_layer),
        "first_bias": (None, g_bias),
        "score_weight": (None, g_weight),
        # The bias enters both scores and cancels.
        "score_bias": (None, np.zeros(1)),
    }
    return losses, grads


def cw_gradients(params: CWParams, window: Window, corrupt: int) -> tuple[float, Grads]:
    """Hinge loss of one window against `corrupt` and its gradients."""
    losses, grads = cw_batch_gradients(params, WindowBatch.from_windows([window]), np.array([corrupt]))
    return float(losses[0]), grads


def _check_finite(losses: np.ndarray, grads: Grads, batch: WindowBatch) -> None:
    bad = ~np.isfinite(losses)
    if bad.any() or not all(np.isfinite(g).all() for _, g in grads.values()):
        first = int(np.argmax(bad)) if bad.any() else 0
        raise NumericalDivergence("numerical divergence", position=int(batch.positions[first]))


def _apply(params, opt: AdaGradState, grads: Grads) -> None:
    for name, (rows, grad) in grads.items():
        opt.apply(name, getattr(params, name), grad, rows)


def _draw_for_batch(spec: ModelSpec, sampler: NegativeSampler, batch: WindowBatch, rng: np.random.Generator):
    if spec.kind == ModelKind.SKIPGRAM:
        return draw_negatives(sampler, rng, np.broadcast_to(batch.targets[:, np.newaxis], batch.contexts.shape))
    return draw_negatives(sampler, rng, batch.targets)


def _trainable(spec: ModelSpec, batch: WindowBatch) -> WindowBatch:
    """Drop skipgram and cbow windows without a context word."""
    if spec.kind not in (ModelKind.SKIPGRAM, ModelKind.CBOW):
        return batch
    lens = batch.context_lens
    return batch if lens.all() else batch.select(lens > 0)


def draw_corruption(vocab_size: int, target, rng: np.random.Generator):
    """Uniform word id other than `target`; elementwise for an array of targets."""
    word = rng.integers(vocab_size - 1, size=np.shape(target))
    word = word + (word >= target)
    return int(word) if np.ndim(target) == 0 else word


def train_predict_batch(
    spec: ModelSpec,
    params: PredictModelParams,
    opt: AdaGradState,
    sampler: NegativeSampler,
    batch: WindowBatch,
    rng: np.random.Generator,
    activation: Activation = TANH,
) -> tuple[float, int]:
    """One AdaGrad step on the summed minibatch gradient.

    Returns the pre-update loss and the number of windows trained.
    """
    batch = _trainable(spec, batch)
    if not len(batch):
        return 0.0, 0
    negatives = _draw_for_batch(spec, sampler, batch, rng)
    losses, grads = predict_batch_gradients(spec, params, batch, negatives, activation)
    _check_finite(losses, grads, batch)
    _apply(params, opt, grads)
    return float(losses.sum()), len(batch)


def train_predict_sample(
    spec: ModelSpec,
    params: PredictModelParams,
    opt: AdaGradState,
    sampler: NegativeSampler,
    window: Window,
    rng: np.random.Generator,
    activation: Activation = TANH,
) -> float | None:
    """One AdaGrad step on a window; returns the pre-update loss.

    Returns None (no sample) for a skipgram or cbow window without context.
    """
    loss, trained = train_predict_batch(
        spec, params, opt, sampler, WindowBatch.from_windows([window]), rng, activation
    )
    return loss if trained else None


def train_cw_batch(
    params: CWParams,
    opt: AdaGradState,
    batch: WindowBatch,
    rng: np.random.Generator,
) -> float:
    """One hinge-loss step against uniformly corrupted targets; returns the summed loss."""
    if not len(batch):
        return 0.0
    corrupt = draw_corruption(params.input_emb.shape[0] - 1, batch.targets, rng)
    losses, grads = cw_batch_gradients(params, batch, corrupt)
    _check_finite(losses, grads, batch)
    if grads:
        _apply(params, opt, grads)
    return float(losses.sum())


def train_cw_sample(
    params: CWParams,
    opt: AdaGradState,
    window: Window,
    rng: np.random.Generator,
) -> float:
    """One hinge-loss step against a uniformly corrupted target."""
    return train_cw_batch(params, opt, WindowBatch.from_windows([window]), rng)


def batch_loss(
    spec: ModelSpec,
    params: PredictModelParams | CWParams,
    sampler: NegativeSampler,
    batch: WindowBatch,
    rng: np.random.Generator,
    activation: Activation = TANH,
) -> tuple[float, int]:
    """Summed objective over a batch without updating; returns (loss, samples).

    Skipgram counts one sample per (target, context word) pair.
    """
    if spec.kind == ModelKind.CW:
        if not len(batch):
            return 0.0, 0
        corrupt = draw_corruption(params.input_emb.shape[0] - 1, batch.targets, rng)
        passes = [_cw_forward(params, _cw_slots(batch, t))[2] for t in (batch.targets, corrupt)]
        return float(np.maximum(0.0, 1.0 - passes[0] + passes[1]).sum()), len(batch)
    batch = _trainable(spec, batch)
    if not len(batch):
        return 0.0, 0
    negatives = _draw_for_batch(spec, sampler, batch, rng)
    losses = predict_batch_loss(spec, params, batch, negatives, activation)
    samples = int(batch.context_lens.sum()) if spec.kind == ModelKind.SKIPGRAM else len(batch)
    return float(losses.sum()), samples


def validation_loss(
    spec: ModelSpec,
    params: PredictModelParams | CWParams,
    sampler: NegativeSampler,
    windows: WindowBatch | Sequence[Window],
    seed: int | Sequence[int],
    activation: Activation = TANH,
) -> float:
    """Mean objective per sample, negatives drawn from a fresh `seed` stream."""
    rng = np.random.default_rng(seed)
    total, samples = 0.0, 0
    for batch in _as_batch(windows).split(VALIDATION_BATCH):
        loss, count = batch_loss(spec, params, sampler, batch, rng, activation)
        total += loss
        samples += count
    if samples == 0:
        raise DataError("empty validation set")
    return total / samples


class NeuralModel:
    """A neural model with its optimizer state and negative sampler."""

    def __init__(
        self,
        spec: ModelSpec,
        vocab: Vocabulary,
        lr: float = 0.1,
        negatives: int = 5,
        seed: int = 1,
        activation: Activation = TANH,
    ):
        self.spec = spec
        self.vocab_size = len(vocab)
        self.params = init_model(spec, len(vocab), seed)
        self.optimizer = AdaGradState.for_blocks(self.params.blocks(), lr=lr)
        self.sampler = NegativeSampler.from_vocab(vocab, negatives)
        self.activation = activation
        logger.debug(
            "initialized %s: d=%i, w=%i, blocks=%s",
            spec.kind, spec.dim, spec.radius,
            {name: block.shape for name, block in self.params.blocks().items()},
        )

    def train_batch(self, batch: WindowBatch, rng: np.random.Generator) -> float:
        """One update on a minibatch; returns its summed pre-update loss."""
        if self.spec.kind == ModelKind.CW:
            return train_cw_batch(self.params, self.optimizer, batch, rng)
        loss, _ = train_predict_batch(
            self.spec, self.params, self.optimizer, self.sampler, batch, rng, self.activation
        )
        return loss

    def train_window(self, window: Window, rng: np.random.Generator) -> float | None:
        if self.spec.kind == ModelKind.CW:
            return train_cw_sample(self.params, self.optimizer, window, rng)
        return train_predict_sample(
            self.spec, self.params, self.optimizer, self.sampler, window, rng, self.activation
        )

    def validation_loss(self, windows: WindowBatch | Sequence[Window], seed: int | Sequence[int]) -> float:
        return validation_loss(self.spec, self.params, self.sampler, windows, seed, self.activation)

    def export(self) -> np.ndarray:
        """Input embeddings e(w) for the V vocabulary words (PAD row dropped)."""
        return self.params.input_emb[: self.vocab_size].copy()
