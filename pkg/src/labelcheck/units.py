"""CTC unit inventory and reference tokenization.

The inventory is the CTC modeling alphabet: the blank plus Mandarin
characters plus lower-case Latin letters (or whatever units the upstream
acoustic model was trained on). Unit id 0 is always the blank.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import UnknownUnit

BLANK_SYMBOL = "<blk>"
BLANK_ID = 0

# Structural tags used by the alignment graph; they may never be units.
RESERVED_TAGS = ("<del>", "<is>", "</is>", "<gbg>")

_CJK_RANGES = (
    (0x4E00, 0x9FFF),    # CJK Unified Ideographs
    (0x3400, 0x4DBF),    # Extension A
    (0xF900, 0xFAFF),    # Compatibility Ideographs
    (0x20000, 0x2A6DF),  # Extension B
)


def is_cjk(ch: str) -> bool:
    """True if ``ch`` is a single CJK ideograph codepoint."""
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def _is_latin_letter(ch: str) -> bool:
    return "a" <= ch <= "z" or "A" <= ch <= "Z"


@dataclass(frozen=True)
class UnitInventory:
    """Ordered unit alphabet with a symbol <-> id bijection.

    ``symbols[0]`` must be the blank. Symbols are unique, non-empty,
    single-line strings and may not collide with graph tags.
    """

    symbols: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if not symbols or symbols[0] != BLANK_SYMBOL:
            raise ValueError(f"unit 0 must be {BLANK_SYMBOL!r}")
        index = {}
        for uid, sym in enumerate(symbols):
            if not sym or "\n" in sym or "\r" in sym:
                raise ValueError(f"invalid unit symbol at id {uid}: {sym!r}")
            if sym in RESERVED_TAGS:
                raise ValueError(f"symbol {sym!r} collides with a graph tag")
            if sym in index:
                raise ValueError(f"duplicate symbol {sym!r} (ids {index[sym]} and {uid})")
            index[sym] = uid
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index

    def id_of(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownUnit(symbol) from None

    def symbol_of(self, uid: int) -> str:
        if not 0 <= uid < len(self.symbols):
            raise UnknownUnit(uid)
        return self.symbols[uid]

    def non_blank_ids(self) -> range:
        return range(1, len(self.symbols))

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "UnitInventory":
        """Read a UTF-8 inventory file, one symbol per line, line 0 = blank."""
        with open(path, encoding="utf-8") as fh:
            symbols = [line.rstrip("\n") for line in fh]
        return cls(tuple(symbols))

    def to_file(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for sym in self.symbols:
                fh.write(sym + "\n")


def tokenize_reference(text: str, inv: UnitInventory) -> list[int]:
    """Tokenize a normalized transcript into unit ids.

    Every non-whitespace codepoint maps to one unit: CJK characters are
    looked up directly, Latin letters are lower-cased first (the letter
    inventory is caseless), whitespace is dropped. A codepoint without an
    inventory entry raises :class:`UnknownUnit`.
    """
    ids = []
    for ch in text:
        if ch.isspace():
            continue
        if _is_latin_letter(ch):
            ch = ch.lower()
        ids.append(inv.id_of(ch))
    return ids
