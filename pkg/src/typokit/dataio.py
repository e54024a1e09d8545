"""Line-oriented readers for the TSV query/collection conventions."""

from __future__ import annotations

from pathlib import Path
from typing import Iterator


class ParseError(ValueError):
    """An input row does not match the expected file format."""

    def __init__(self, path: str | Path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


def iter_tsv_pairs(path: str | Path, what: str = "query") -> Iterator[tuple[str, str]]:
    """Yield (id, text) rows from an ``id<TAB>text`` file.

    Raises :class:`ParseError` naming the offending line on rows without
    exactly one tab-separated id field.
    """
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            parts = line.split("\t", 1)
            if len(parts) != 2 or not parts[0]:
                raise ParseError(path, line_no, f"expected '{what}_id<TAB>text'")
            yield parts[0], parts[1]


def read_tsv_pairs(path: str | Path, what: str = "query") -> list[tuple[str, str]]:
    return list(iter_tsv_pairs(path, what))
