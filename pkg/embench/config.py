"""Configuration management for embench training runs."""

from dataclasses import dataclass, field, fields
from enum import StrEnum
from pathlib import Path

import yaml

from .errors import UsageError


class ModelKind(StrEnum):
    """Embedding models the trainer can drive."""

    SKIPGRAM = "skipgram"
    CBOW = "cbow"
    ORDER = "order"
    LBL = "lbl"
    NNLM = "nnlm"
    CW = "cw"
    GLOVE = "glove"


@dataclass(frozen=True)
class EarlyStop:
    """Early-stopping criterion: none, validation loss, or a task metric."""

    mode: str = "none"  # 'none', 'val-loss' or 'task'
    task: str = ""

    @classmethod
    def parse(cls, text: str) -> "EarlyStop":
        """Parse 'none', 'val-loss' or 'task:NAME'."""
        text = text.strip().lower()
        if text in ("none", "val-loss"):
            return cls(mode=text)
        if text.startswith("task:") and len(text) > 5:
            return cls(mode="task", task=text[5:])
        raise UsageError(f"Invalid early-stop criterion: {text!r} (none|val-loss|task:NAME)")

    def __str__(self) -> str:
        return f"task:{self.task}" if self.mode == "task" else self.mode


# TrainConfig field -> CLI flag, where they differ
FLAG_NAMES = {"radius": "window", "iterations": "iters", "workers": "threads"}


@dataclass
class TrainConfig:
    """Settings for one training run.

    Defaults are the controlled-comparison setup: window radius 5,
    5 negatives, subsampling t=1e-4, AdaGrad learning rate 0.1.
    """

    model: ModelKind = ModelKind.CBOW
    dim: int = 50
    radius: int = 5
    negatives: int = 5
    subsample: float = 1e-4
    lr: float = 0.1
    iterations: int = 5
    seed: int = 1
    workers: int = 1
    batch: int = 32  # windows per AdaGrad step; 1 is plain per-window SGD
    early_stop: EarlyStop = field(default_factory=EarlyStop)
    patience: int = 2
    cw_hidden: int = 0  # 0 means same as dim
    x_max: float = 100.0
    alpha: float = 0.75
    glove_main_only: bool = False
    val_fraction: float = 0.95
    val_max_windows: int = 50_000
    correlation: str = "pearson"
    analogy_exclude: bool = True

    @property
    def hidden_width(self) -> int:
        """C&W hidden layer width."""
        return self.cw_hidden or self.dim

    @classmethod
    def from_file(cls, path: Path | str) -> "TrainConfig":
        """Load a config from YAML (.yaml/.yml) or flat key=value text."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise UsageError(f"Cannot read config file {path}: {e}") from e

        if path.suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
            if not isinstance(data, dict):
                raise UsageError(f"{path}: expected a flat mapping")
        else:
            data = {}
            for line_no, line in enumerate(text.splitlines(), 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise UsageError(f"{path}:{line_no}: expected key=value")
                data[key.strip()] = value.strip()

        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        """Create a TrainConfig from a flat dictionary, coercing value types."""
        return cls().updated(data)

    def updated(self, data: dict) -> "TrainConfig":
        """Return a copy with the given keys replaced."""
        known = {f.name: f for f in fields(self)}
        values = {f: getattr(self, f) for f in known}
        for raw_key, value in data.items():
            key = str(raw_key).replace("-", "_")
            key = CONFIG_FLAGS.get(key, key)
            if key not in known:
                raise UsageError(f"Unknown config key: {raw_key}")
            if value is None:
                continue
            values[key] = _coerce(key, value, type(values[key]))
        config = TrainConfig(**values)
        config.validate()
        return config

    def validate(self) -> None:
        """Reject settings no model can train with."""
        checks = [
            (self.dim >= 1, "dim must be >= 1"),
            (self.radius >= 1, "window radius must be >= 1"),
            (self.negatives >= 1, "negatives must be >= 1"),
            (self.subsample > 0, "subsample threshold must be > 0"),
            (self.lr > 0, "learning rate must be > 0"),
            (self.iterations >= 1, "iterations must be >= 1"),
            (self.workers >= 1, "threads must be >= 1"),
            (self.batch >= 1, "batch must be >= 1"),
            (self.patience >= 1, "patience must be >= 1"),
            (self.cw_hidden >= 0, "cw_hidden must be >= 0"),
            (0 < self.val_fraction < 1, "val_fraction must be in (0, 1)"),
            (self.val_max_windows >= 1, "val_max_windows must be >= 1"),
            (self.correlation in ("pearson", "spearman"), "correlation must be pearson or spearman"),
        ]
        for ok, message in checks:
            if not ok:
                raise UsageError(message)
        if self.model == ModelKind.GLOVE and self.early_stop.mode == "val-loss":
            raise UsageError("GloVe has no validation loss; use none or task:NAME")

    def to_lines(self) -> list[str]:
        """Render as flat key=value lines under the CLI flag names."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{FLAG_NAMES.get(f.name, f.name)}={value}")
        return lines


def _coerce(key: str, value, target: type):
    """Convert a raw config value to the field's type."""
    try:
        if target is EarlyStop:
            return value if isinstance(value, EarlyStop) else EarlyStop.parse(str(value))
        if target is ModelKind:
            return ModelKind(str(value).lower())
        if target is bool:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("true", "yes", "1", "on"):
                return True
            if text in ("false", "no", "0", "off"):
                return False
            raise ValueError(value)
        if target is int:
            return int(str(value))
        if target is float:
            return float(value)
        return str(value)
    except ValueError as e:
        raise UsageError(f"Invalid value for {key}: {value!r}") from e


# flag dest (or config key) -> TrainConfig field
CONFIG_FLAGS = {FLAG_NAMES.get(f.name, f.name): f.name for f in fields(TrainConfig)}
