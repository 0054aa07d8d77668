"""Tokenization and question segmentation shared by the taggers and parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass

WORLD_TOKENS = ("WORLD1", "WORLD2")

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:['’][A-Za-z]+)*|_+|[^\w\s]")

STOPWORDS = frozenset(
    """a an the this that these those his her its their our my your some any
    of to in on at by for with from into onto over across along through and or but
    is are was were be been being am has have had do does did will would can could
    should may might must shall it he she they we you i him them us me one ones
    which what who whom whose when where why how than then there here as so if not
    no nor too very just also each other another both either neither all more less""".split()
)


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def words(text: str) -> list[str]:
    return [t.text for t in tokenize(text)]


def norm(tok: str) -> str:
    """Lowercase, with any underscore run collapsed to a single blank marker."""
    if tok in WORLD_TOKENS:
        return tok
    if tok.startswith("_"):
        return "_"
    return tok.lower().replace("’", "'")


def option_markers(toks: list[str]) -> tuple[int, int] | None:
    """Token indices of the '(' opening the (A) and (B) markers."""
    a = b = None
    for i in range(len(toks) - 2):
        if toks[i] == "(" and toks[i + 2] == ")":
            if toks[i + 1] == "A" and a is None:
                a = i
            elif toks[i + 1] == "B" and a is not None and b is None:
                b = i
    if a is None or b is None:
        return None
    return a, b


@dataclass(frozen=True)
class Segments:
    body: tuple[int, int]
    option_a: tuple[int, int]
    option_b: tuple[int, int]


def segment(toks: list[str]) -> Segments | None:
    marks = option_markers(toks)
    if marks is None:
        return None
    a, b = marks
    return Segments((0, a), (a + 3, b), (b + 3, len(toks)))


def sentences(toks: list[str], lo: int, hi: int) -> list[tuple[int, int]]:
    """Split [lo, hi) at sentence-final punctuation."""
    out, start = [], lo
    for i in range(lo, hi):
        if toks[i] in (".", "?", "!"):
            if i > start:
                out.append((start, i))
            start = i + 1
    if hi > start:
        out.append((start, hi))
    return out
