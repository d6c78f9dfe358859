"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI uses when it escapes
a command: 1 usage, 2 data, 3 numerical failure.
"""

from pathlib import Path


class EmbenchError(Exception):
    """Base class for all embench errors."""

    exit_code = 2


class UsageError(EmbenchError):
    """Bad flags, unknown configuration keys or invalid values."""

    exit_code = 1


class DataError(EmbenchError):
    """Input data is missing, empty or unusable."""

    exit_code = 2


class DataFormatError(DataError):
    """A file violates its line format."""

    def __init__(self, path: Path | str, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class NumericalDivergence(EmbenchError):
    """Loss or gradient became non-finite during training."""

    exit_code = 3

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        self.last_checkpoint: Path | None = None
        super().__init__(message)

    def __str__(self) -> str:
        text = super().__str__()
        if self.position is not None:
            text += f" (window at token {self.position})"
        if self.last_checkpoint is not None:
            text += f"; last good checkpoint: {self.last_checkpoint}"
        return text
