"""Evaluation bundles: which tasks to run, on which dataset files."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import yaml

from . import datasets
from .errors import DataError, UsageError
from .evaluation import EmbeddingTable, TaskResult, eval_analogy, eval_avg, eval_tfl, eval_ws

logger = logging.getLogger(__name__)

TASK_NAMES = ("ws", "tfl", "sem", "syn", "analogy", "avg")
ANALOGY_TASKS = ("sem", "syn", "analogy")


@dataclass(frozen=True)
class TaskSpec:
    """A task name with its dataset; avg also needs a training file."""

    name: str
    data: Path
    train_data: Path | None = None

    def __post_init__(self):
        if self.name not in TASK_NAMES:
            raise UsageError(f"Unknown task: {self.name} (expected one of {', '.join(TASK_NAMES)})")
        if self.name == "avg" and self.train_data is None:
            raise UsageError("avg needs training data: avg=TRAIN,TEST")

    @classmethod
    def parse(cls, text: str) -> "TaskSpec":
        """Parse 'TASK=DATA', or 'avg=TRAIN,TEST'."""
        name, sep, value = text.partition("=")
        if not sep or not value:
            raise UsageError(f"Expected TASK=DATA, got {text!r}")
        name = name.strip()
        if name == "avg":
            train, comma, test = value.partition(",")
            if not comma:
                raise UsageError("avg needs training data: avg=TRAIN,TEST")
            return cls(name, Path(test), Path(train))
        return cls(name, Path(value))


class EvalBundle:
    """Loaded datasets for a list of tasks, evaluated in declared order."""

    def __init__(
        self,
        specs: Sequence[TaskSpec] = (),
        correlation: str = "pearson",
        analogy_exclude: bool = True,
    ):
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise UsageError("Each task may be given only once")
        self.specs = list(specs)
        self.correlation = correlation
        self.analogy_exclude = analogy_exclude
        self._data: dict[str, object] = {}
        analogy_files: dict[Path, list] = {}
        for spec in self.specs:
            if spec.name in ANALOGY_TASKS:
                if spec.data not in analogy_files:
                    analogy_files[spec.data] = self._load(spec)
                self._data[spec.name] = analogy_files[spec.data]
            else:
                self._data[spec.name] = self._load(spec)

    @staticmethod
    def _load(spec: TaskSpec):
        match spec.name:
            case "ws":
                return datasets.read_ws(spec.data)
            case "tfl":
                return datasets.read_tfl(spec.data)
            case "avg":
                return datasets.read_avg(spec.train_data), datasets.read_avg(spec.data)
            case _:
                return datasets.read_analogy(spec.data)

    @classmethod
    def from_yaml(cls, path: Path | str, **overrides) -> "EvalBundle":
        """Load a bundle file.

        Example:
            correlation: pearson
            tasks:
              ws: data/ws353.txt
              avg: {train: data/avg-train.txt, test: data/avg-test.txt}
        """
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except OSError as e:
            raise DataError(f"Cannot read evaluation bundle {path}: {e}") from e
        except yaml.YAMLError as e:
            raise DataError(f"{path}: invalid YAML: {e}") from e

        base = path.parent
        specs = []
        for name, value in (data.get("tasks") or {}).items():
            if isinstance(value, dict):
                if "test" not in value:
                    raise DataError(f"{path}: task {name} needs a 'test' file")
                train = value.get("train")
                specs.append(TaskSpec(name, base / value["test"], base / train if train else None))
            else:
                specs.append(TaskSpec(name, base / str(value)))
        options = {
            "correlation": data.get("correlation", "pearson"),
            "analogy_exclude": bool(data.get("analogy_exclude", True)),
        }
        options.update(overrides)
        return cls(specs, **options)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    def __len__(self) -> int:
        return len(self.specs)

    def __contains__(self, name: str) -> bool:
        return name in self._data

    def evaluate_task(self, name: str, table: EmbeddingTable) -> TaskResult:
        return self.evaluate(table, [name])[0]

    def evaluate(self, table: EmbeddingTable, names: Sequence[str] | None = None) -> list[TaskResult]:
        """Evaluate `table` on the named tasks (default all), in that order."""
        names = self.names if names is None else list(names)
        analogy_cache: dict[int, dict[str, TaskResult]] = {}
        results = []
        for name in names:
            if name not in self._data:
                raise UsageError(f"Task {name} is not in the evaluation bundle")
            data = self._data[name]
            match name:
                case "ws":
                    result = eval_ws(table, data, self.correlation)
                case "tfl":
                    result = eval_tfl(table, data)
                case "avg":
                    result = eval_avg(table, *data)
                case _:
                    key = id(data)
                    if key not in analogy_cache:
                        analogy_cache[key] = eval_analogy(table, data, self.analogy_exclude)
                    result = analogy_cache[key][name]
            logger.debug("%s: %s (%i evaluated, %i skipped)", name, result.format_value(), result.evaluated, result.skipped)
            results.append(result)
        return results
