"""Corpus loading, split de-duplication and statistics.

Corpora are TSV files (UTF-8, LF lines, no header) with two columns: the
natural-language question and the linearized MRL parse.  De-duplication
masks location and POI surface forms on both sides of each pair and drops
every dev/test example whose masked signature also occurs in train, so that
held-out sets contain no template-level copies of training data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import mrl

__all__ = [
    "CorpusError",
    "CorpusIoError",
    "MalformedLine",
    "ParseError",
    "Example",
    "SplitSet",
    "DedupResult",
    "SplitStats",
    "load_tsv",
    "write_tsv",
    "signature",
    "dedup",
    "split_stats",
]


class CorpusError(ValueError):
    pass


class CorpusIoError(CorpusError):
    pass


class MalformedLine(CorpusError):
    pass


class ParseError(CorpusError):
    pass


@dataclass(frozen=True)
class Example:
    """One question paired with its gold parse (canonical form)."""

    id: str
    question: str
    gold: str


@dataclass(frozen=True)
class SplitSet:
    train: tuple[Example, ...] = ()
    dev: tuple[Example, ...] = ()
    test: tuple[Example, ...] = ()


@dataclass(frozen=True)
class DedupResult:
    splits: SplitSet
    removed_dev: int
    removed_test: int


def load_tsv(path: str | Path) -> list[Example]:
    """Load a two-column question/parse TSV; ids are 1-based line numbers."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusIoError(f"cannot read corpus file {path}: {exc}") from exc
    examples: list[Example] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise MalformedLine(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
        question, raw = cols
        try:
            ast = mrl.parse_mrl(raw)
        except mrl.MrlError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        examples.append(Example(id=str(lineno), question=question, gold=mrl.linearize(ast)))
    return examples


def write_tsv(path: str | Path, examples: list[Example]) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for ex in examples:
                fh.write(f"{ex.question}\t{ex.gold}\n")
    except OSError as exc:
        raise CorpusIoError(f"cannot write corpus file {path}: {exc}") from exc


def signature(example: Example) -> tuple[str, str]:
    """Masked (question, parse) pair used for duplicate detection."""
    masked_q, masked_ast = mrl.mask_pair(example.question, mrl.parse_mrl(example.gold))
    return masked_q, mrl.linearize(masked_ast)


def dedup(splits: SplitSet) -> DedupResult:
    """Drop dev/test examples whose masked signature occurs in train."""
    train_sigs = {signature(ex) for ex in splits.train}
    dev = tuple(ex for ex in splits.dev if signature(ex) not in train_sigs)
    test = tuple(ex for ex in splits.test if signature(ex) not in train_sigs)
    return DedupResult(
        splits=replace(splits, dev=dev, test=test),
        removed_dev=len(splits.dev) - len(dev),
        removed_test=len(splits.test) - len(test),
    )


@dataclass(frozen=True)
class SplitStats:
    train: int
    dev: int
    test: int

    @property
    def total(self) -> int:
        return self.train + self.dev + self.test

    def format_table(self) -> str:
        rows = [("train", self.train), ("dev", self.dev), ("test", self.test), ("total", self.total)]
        width = max(len(f"{n:,}") for _, n in rows)
        return "\n".join(f"{label:<6} {n:>{width},}" for label, n in rows)

    def json_lines(self) -> str:
        return "\n".join(
            json.dumps({"split": label, "examples": n})
            for label, n in [("train", self.train), ("dev", self.dev), ("test", self.test)]
        )


def split_stats(splits: SplitSet) -> SplitStats:
    return SplitStats(train=len(splits.train), dev=len(splits.dev), test=len(splits.test))
