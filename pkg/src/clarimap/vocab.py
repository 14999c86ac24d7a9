"""Symbol vocabularies shared by encoders and the decoder.

A vocabulary is an ordered list of symbols with four reserved entries at
fixed positions: PAD=0, BOS=1, EOS=2, UNK=3.  Two unit granularities exist:
``char`` (every character is a symbol) and ``token`` (MRL structural tokens
on the target side, whitespace-separated words on the source side).  The
``sep`` field records how decoded symbols join back into a string.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import mrl

__all__ = ["Vocab", "PAD", "BOS", "EOS", "UNK", "source_units", "target_units", "build_vocab"]

PAD = 0
BOS = 1
EOS = 2
UNK = 3

_SPECIALS = ("<pad>", "<bos>", "<eos>", "<unk>")


def source_units(text: str, unit: str) -> list[str]:
    if unit == "char":
        return list(text)
    if unit == "token":
        return text.split()
    raise ValueError(f"unknown unit {unit!r}")


def target_units(text: str, unit: str) -> list[str]:
    if unit == "char":
        return list(text)
    if unit == "token":
        # All token texts, structural ones included, so concatenation
        # reconstructs the canonical string exactly.
        return [t.text for t in mrl.tokenize_mrl(text)]
    raise ValueError(f"unknown unit {unit!r}")


@dataclass(frozen=True)
class Vocab:
    symbols: tuple[str, ...]
    sep: str = ""

    def __post_init__(self) -> None:
        if tuple(self.symbols[:4]) != _SPECIALS:
            raise ValueError("vocabulary must start with the reserved symbols")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def encode(self, units: list[str]) -> list[int]:
        index = self._index
        return [index.get(u, UNK) for u in units]

    def decode(self, ids: list[int]) -> str:
        return self.sep.join(self.symbols[i] for i in ids if i > UNK)


def build_vocab(unit_lists: list[list[str]], sep: str = "") -> Vocab:
    seen: dict[str, None] = {}
    for units in unit_lists:
        for u in units:
            seen.setdefault(u, None)
    return Vocab(symbols=_SPECIALS + tuple(sorted(seen)), sep=sep)
