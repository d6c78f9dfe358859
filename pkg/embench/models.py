"""Parameter blocks for the six neural embedding models."""

from dataclasses import dataclass, fields

import numpy as np

from .config import ModelKind

REAL = np.float64

# Kinds whose target is predicted from a context representation.
PREDICT_KINDS = (ModelKind.SKIPGRAM, ModelKind.CBOW, ModelKind.ORDER, ModelKind.LBL, ModelKind.NNLM)
NEURAL_KINDS = PREDICT_KINDS + (ModelKind.CW,)


@dataclass(frozen=True)
class ModelSpec:
    """Which model, its dimensionality d and window radius w.

    Context representations by kind:
    - skipgram: each context word's e(w) on its own
    - cbow: mean of the context embeddings
    - order: concatenation of all 2w slot embeddings
    - lbl: H times the concatenation
    - nnlm: tanh(d + H times the concatenation)
    - cw: scores the concatenated window instead of predicting the target
    """

    kind: ModelKind
    dim: int
    radius: int
    cw_hidden: int = 0

    def __post_init__(self):
        if self.kind not in NEURAL_KINDS:
            raise ValueError(f"{self.kind} is not a neural model kind")
        if self.dim < 1 or self.radius < 1:
            raise ValueError("dim and radius must be >= 1")

    @property
    def slots(self) -> int:
        """Context slots n - 1 = 2w."""
        return 2 * self.radius

    @property
    def h_dim(self) -> int:
        """Width of the context representation h (and of e'(w))."""
        if self.kind == ModelKind.ORDER:
            return self.slots * self.dim
        if self.kind == ModelKind.CW:
            return self.cw_hidden or self.dim
        return self.dim


@dataclass
class PredictModelParams:
    """Input embeddings e(w) (V + 1 rows, last is PAD), output e'(w) and hidden layer."""

    input_emb: np.ndarray
    output_emb: np.ndarray
    hidden_weight: np.ndarray | None = None
    hidden_bias: np.ndarray | None = None

    def blocks(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}


@dataclass
class CWParams:
    """Scorer parameters: s = score_weight . tanh(first_bias + first_layer x) + score_bias.

    first_layer columns are [left context | target | right context];
    the target block realizes A and the context blocks realize B.
    """

    input_emb: np.ndarray
    first_layer: np.ndarray
    first_bias: np.ndarray
    score_weight: np.ndarray
    score_bias: np.ndarray  # shape (1,) so it updates in place

    def blocks(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def init_model(spec: ModelSpec, vocab_size: int, seed: int) -> PredictModelParams | CWParams:
    """Allocate the parameter blocks `spec.kind` needs.

    Input embeddings are uniform in [-0.5/d, 0.5/d]; output embeddings,
    biases and the score vector start at zero. Hidden weight matrices
    start uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]: with both the
    hidden layer and e'(w) at zero every gradient through them is zero.
    """
    if vocab_size < 2:
        raise ValueError("vocabulary must hold at least 2 words")
    rng = np.random.default_rng(seed)
    d, concat = spec.dim, spec.slots * spec.dim
    input_emb = rng.uniform(-0.5 / d, 0.5 / d, size=(vocab_size + 1, d)).astype(REAL)

    if spec.kind == ModelKind.CW:
        width = concat + d
        bound = 1.0 / np.sqrt(width)
        return CWParams(
            input_emb=input_emb,
            first_layer=rng.uniform(-bound, bound, size=(spec.h_dim, width)).astype(REAL),
            first_bias=np.zeros(spec.h_dim, dtype=REAL),
            score_weight=np.zeros(spec.h_dim, dtype=REAL),
            score_bias=np.zeros(1, dtype=REAL),
        )

    params = PredictModelParams(
        input_emb=input_emb,
        output_emb=np.zeros((vocab_size, spec.h_dim), dtype=REAL),
    )
    if spec.kind in (ModelKind.LBL, ModelKind.NNLM):
        bound = 1.0 / np.sqrt(concat)
        params.hidden_weight = rng.uniform(-bound, bound, size=(spec.h_dim, concat)).astype(REAL)
    if spec.kind == ModelKind.NNLM:
        params.hidden_bias = np.zeros(spec.h_dim, dtype=REAL)
    return params
