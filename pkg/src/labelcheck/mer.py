"""Mixture error rate: Mandarin characters and English words as tokens."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyReference
from .units import is_cjk
from .validation import edit_distance

CJK_CHAR = "cjk_char"
EN_WORD = "en_word"


@dataclass(frozen=True)
class MerToken:
    kind: str
    surface: str


def mer_tokenize(text: str) -> list[MerToken]:
    """Split text into CJK characters and lower-cased English words.

    Maximal runs of ASCII letters form one word token; anything else
    (whitespace, digits, punctuation) terminates the run and is dropped.
    """
    tokens = []
    word = []

    def flush():
        if word:
            tokens.append(MerToken(EN_WORD, "".join(word)))
            word.clear()

    for ch in text:
        if "a" <= ch <= "z" or "A" <= ch <= "Z":
            word.append(ch.lower())
        elif is_cjk(ch):
            flush()
            tokens.append(MerToken(CJK_CHAR, ch))
        else:
            flush()
    flush()
    return tokens


def mer_errors(ref: str, hyp: str) -> tuple[int, int]:
    """(edit errors, reference token count) for one utterance pair."""
    ref_tokens = mer_tokenize(ref)
    if not ref_tokens:
        raise EmptyReference(f"reference tokenized to nothing: {ref!r}")
    # Surfaces are compared directly: a CJK character can never equal an
    # ASCII word, so kinds cannot collide.
    ref_surfaces = [t.surface for t in ref_tokens]
    hyp_surfaces = [t.surface for t in mer_tokenize(hyp)]
    return edit_distance(ref_surfaces, hyp_surfaces), len(ref_tokens)


def mer_score(ref: str, hyp: str) -> float:
    """Mixture error rate in percent; may exceed 100 on long hypotheses."""
    errors, ref_len = mer_errors(ref, hyp)
    return 100.0 * errors / ref_len


def read_utterance_tsv(lines) -> dict[str, str]:
    """Parse ``utt-id<TAB>text`` lines (an iterable of strings) in order."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        if "\t" not in line:
            raise ValueError(f"line {lineno}: expected 'utt-id<TAB>text'")
        utt, text = line.split("\t", 1)
        if utt in out:
            raise ValueError(f"line {lineno}: duplicate utterance id {utt!r}")
        out[utt] = text
    return out
