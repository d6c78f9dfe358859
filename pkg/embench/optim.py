"""AdaGrad with per-entry accumulators, dense or row-sparse."""

from dataclasses import dataclass, field

import numpy as np

EPS = 1e-8


def adagrad_update(
    param: np.ndarray,
    grad: np.ndarray,
    accum: np.ndarray,
    lr: float,
    eps: float = EPS,
) -> np.ndarray:
    """accum += g^2; param -= lr * g / (sqrt(accum) + eps). Returns the step."""
    accum += grad * grad
    step = lr * grad / (np.sqrt(accum) + eps)
    param -= step
    return step


@dataclass
class AdaGradState:
    """Squared-gradient accumulators keyed by parameter block name."""

    lr: float = 0.1
    eps: float = EPS
    accum: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_blocks(cls, blocks: dict[str, np.ndarray], lr: float = 0.1, eps: float = EPS) -> "AdaGradState":
        return cls(lr=lr, eps=eps, accum={name: np.zeros_like(p) for name, p in blocks.items()})

    def apply(
        self,
        name: str,
        param: np.ndarray,
        grad: np.ndarray,
        rows: np.ndarray | None = None,
    ) -> np.ndarray:
        """Update a whole block, or only `rows` (unique) when given."""
        accum = self.accum[name]
        if rows is None:
            return adagrad_update(param, grad, accum, self.lr, self.eps)
        acc = accum[rows]
        values = param[rows]
        step = adagrad_update(values, grad, acc, self.lr, self.eps)
        accum[rows] = acc
        param[rows] = values
        return step
