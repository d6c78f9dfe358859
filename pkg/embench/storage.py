"""On-disk embedding tables and per-run training artifacts."""

import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, DataFormatError
from .evaluation import EmbeddingTable

logger = logging.getLogger(__name__)

PRECISION = 6
RUN_LOG = "run.log"
RUN_CONF = "run.conf"


def write_embeddings(path: Path | str, table: EmbeddingTable, precision: int = PRECISION) -> Path:
    """Text format: header 'V d', then 'word f1 ... fd' per row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(table)} {table.dim}\n")
        for word, row in zip(table.words, table.vectors):
            f.write(word + " " + " ".join(f"{x:.{precision}f}" for x in row) + "\n")
    return path


def read_embeddings(path: Path | str) -> EmbeddingTable:
    """Read an embedding file; every row is checked against the header."""
    words: list[str] = []
    rows: list[list[float]] = []
    try:
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            try:
                size, dim = int(header[0]), int(header[1])
            except (IndexError, ValueError):
                raise DataFormatError(path, 1, "expected header 'V d'") from None
            if len(header) != 2 or size < 1 or dim < 1:
                raise DataFormatError(path, 1, "expected header 'V d'")
            for line_no, line in enumerate(f, 2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != dim + 1:
                    raise DataFormatError(path, line_no, f"expected a word and {dim} values")
                try:
                    values = [float(x) for x in parts[1:]]
                except ValueError:
                    raise DataFormatError(path, line_no, "non-numeric value") from None
                if not all(math.isfinite(x) for x in values):
                    raise DataFormatError(path, line_no, "non-finite value")
                words.append(parts[0])
                rows.append(values)
    except OSError as e:
        raise DataError(f"Cannot read embeddings {path}: {e}") from e

    if len(words) != size:
        raise DataError(f"{path}: header declares {size} rows, found {len(words)}")
    if len(set(words)) != len(words):
        raise DataError(f"{path}: duplicate word")
    return EmbeddingTable(words=words, vectors=np.array(rows, dtype=np.float64))


class CheckpointStore:
    """A run's output directory: checkpoints, run log and run config.

    Layout:
        iter-001.txt ...  embedding checkpoints, one per iteration
        run.log           one tab-separated line per iteration
        run.conf          the run's settings as key=value lines
    """

    def __init__(self, out_dir: Path | str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    @property
    def log_path(self) -> Path:
        return self.out_dir / RUN_LOG

    def checkpoint_path(self, iteration: int) -> Path:
        return self.out_dir / f"iter-{iteration:03d}.txt"

    def save(self, iteration: int, table: EmbeddingTable) -> Path:
        path = write_embeddings(self.checkpoint_path(iteration), table)
        logger.info("checkpoint written: %s", path)
        return path

    def load(self, iteration: int) -> EmbeddingTable:
        return read_embeddings(self.checkpoint_path(iteration))

    def iterations(self) -> list[int]:
        """Iterations with a checkpoint on disk, ascending."""
        found = []
        for path in self.out_dir.glob("iter-*.txt"):
            try:
                found.append(int(path.stem.removeprefix("iter-")))
            except ValueError:
                continue
        return sorted(found)

    def write_config(self, lines: Sequence[str]) -> Path:
        path = self.out_dir / RUN_CONF
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    def start_log(self, task_names: Sequence[str]) -> None:
        """Truncate the run log and write its header."""
        with open(self.log_path, "w", encoding="utf-8") as f:
            f.write("\t".join(["# iteration", "val_loss", *task_names]) + "\n")

    def append_log(self, iteration: int, val_loss: float | None, metrics: Sequence[float]) -> None:
        loss = "nan" if val_loss is None else f"{val_loss:.6f}"
        fields = [str(iteration), loss, *(f"{m:.6f}" for m in metrics)]
        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write("\t".join(fields) + "\n")


def read_log(path: Path | str) -> tuple[list[str], list[tuple[int, float | None, list[float]]]]:
    """Parse a run log into its task names and (iteration, val_loss, metrics) rows."""
    task_names: list[str] = []
    rows = []
    try:
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if line.startswith("#"):
                    task_names = parts[2:]
                    continue
                if len(parts) != 2 + len(task_names):
                    raise DataFormatError(path, line_no, f"expected {2 + len(task_names)} fields")
                try:
                    iteration = int(parts[0])
                    loss = float(parts[1])
                    metrics = [float(x) for x in parts[2:]]
                except ValueError:
                    raise DataFormatError(path, line_no, "non-numeric field") from None
                rows.append((iteration, None if math.isnan(loss) else loss, metrics))
    except OSError as e:
        raise DataError(f"Cannot read run log {path}: {e}") from e
    return task_names, rows
