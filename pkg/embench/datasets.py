"""Readers for the evaluation dataset files.

Blank lines and lines starting with '#' are ignored everywhere. Any
other malformed line raises DataFormatError naming the file and line.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import DataError, DataFormatError


@dataclass(frozen=True)
class TflQuestion:
    """Synonym question: stem, four choices and the index of the answer."""

    stem: str
    choices: tuple[str, str, str, str]
    answer: int


@dataclass(frozen=True)
class AnalogyQuestion:
    """'a is to b as c is to d' under its section category."""

    category: str
    a: str
    b: str
    c: str
    d: str


def _lines(path: Path | str) -> Iterator[tuple[int, str]]:
    try:
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                line = line.rstrip("\n").rstrip("\r")
                if line.strip() and not line.startswith("#"):
                    yield line_no, line
    except OSError as e:
        raise DataError(f"Cannot read dataset {path}: {e}") from e


def _fields(line: str, expected: int) -> list[str]:
    parts = line.split("\t")
    if len(parts) != expected:
        # Accept whitespace-separated files as long as the field count works out.
        parts = line.split()
    return [p.strip() for p in parts]


def _nonempty(path, items: list) -> list:
    if not items:
        raise DataError(f"{path}: empty dataset")
    return items


def read_ws(path: Path | str) -> list[tuple[str, str, float]]:
    """Word similarity pairs: 'word1<TAB>word2<TAB>score'."""
    pairs = []
    for line_no, line in _lines(path):
        parts = _fields(line, 3)
        if len(parts) != 3:
            raise DataFormatError(path, line_no, "expected 'word1<TAB>word2<TAB>score'")
        try:
            score = float(parts[2])
        except ValueError:
            raise DataFormatError(path, line_no, f"bad score {parts[2]!r}") from None
        pairs.append((parts[0], parts[1], score))
    return _nonempty(path, pairs)


def read_tfl(path: Path | str) -> list[TflQuestion]:
    """Synonym questions: 'stem<TAB>c1<TAB>c2<TAB>c3<TAB>c4<TAB>answer(0-3)'."""
    questions = []
    for line_no, line in _lines(path):
        parts = _fields(line, 6)
        if len(parts) != 6:
            raise DataFormatError(path, line_no, "expected a stem, 4 choices and an answer index")
        try:
            answer = int(parts[5])
        except ValueError:
            raise DataFormatError(path, line_no, f"bad answer index {parts[5]!r}") from None
        if not 0 <= answer <= 3:
            raise DataFormatError(path, line_no, "answer index must be 0-3")
        questions.append(TflQuestion(parts[0], tuple(parts[1:5]), answer))
    return _nonempty(path, questions)


def read_analogy(path: Path | str) -> list[AnalogyQuestion]:
    """Analogy questions 'a b c d' grouped under ': category' headers."""
    questions = []
    category = ""
    for line_no, line in _lines(path):
        if line.startswith(":"):
            category = line[1:].strip()
            if not category:
                raise DataFormatError(path, line_no, "empty category name")
            continue
        parts = line.split()
        if len(parts) != 4:
            raise DataFormatError(path, line_no, "expected 'a b c d'")
        questions.append(AnalogyQuestion(category, *parts))
    return _nonempty(path, questions)


def read_avg(path: Path | str) -> list[tuple[str, list[str]]]:
    """Labelled texts: 'label<TAB>text', text tokenized on whitespace."""
    texts = []
    for line_no, line in _lines(path):
        label, sep, text = line.partition("\t")
        if not sep or not label.strip():
            raise DataFormatError(path, line_no, "expected 'label<TAB>text'")
        texts.append((label.strip(), text.split()))
    return _nonempty(path, texts)
