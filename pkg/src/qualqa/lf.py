"""Logical forms for two-world comparison questions.

Canonical text::

    qrel(distance, higher, world1) -> qrel(friction, higher, world2) ; qrel(friction, higher, world1)
    qval(smoothness, low, world1), qval(smoothness, high, world2) -> qrel(speed, higher, world1) ; qrel(speed, higher, world2)

EBNF::

    lf     = setup "->" qrel ";" qrel
    setup  = atom { "," atom }
    atom   = qrel | qval
    qrel   = "qrel" "(" ident "," ("higher" | "lower") "," world ")"
    qval   = "qval" "(" ident "," ("low" | "high") "," world ")"
    world  = "world1" | "world2"
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Union

from .theory import Theory, ValueLevel


class LFError(ValueError):
    pass


class LFSyntaxError(LFError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        super().__init__(message if position is None else f"{message} (at offset {position})")


class TemplateError(LFError):
    """An LF that fits neither template; ``invariant`` names the broken rule."""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


class World(str, enum.Enum):
    WORLD1 = "world1"
    WORLD2 = "world2"

    @property
    def opposite(self) -> "World":
        return World.WORLD2 if self is World.WORLD1 else World.WORLD1


class Direction(str, enum.Enum):
    HIGHER = "higher"
    LOWER = "lower"

    @property
    def opposite(self) -> "Direction":
        return Direction.LOWER if self is Direction.HIGHER else Direction.HIGHER


@dataclass(frozen=True)
class QRel:
    property: str
    direction: Direction
    world: World

    def __str__(self) -> str:
        return f"qrel({self.property}, {self.direction.value}, {self.world.value})"

    def mirror(self) -> "QRel":
        """The same fact stated from the other world's side."""
        return QRel(self.property, self.direction.opposite, self.world.opposite)

    def swap_worlds(self) -> "QRel":
        return QRel(self.property, self.direction, self.world.opposite)


@dataclass(frozen=True)
class QVal:
    property: str
    value: ValueLevel
    world: World

    def __str__(self) -> str:
        return f"qval({self.property}, {self.value.value}, {self.world.value})"

    def swap_worlds(self) -> "QVal":
        return QVal(self.property, self.value, self.world.opposite)


Atom = Union[QRel, QVal]


@dataclass(frozen=True)
class QuestionLF:
    setup: tuple
    answer_a: QRel
    answer_b: QRel

    def __post_init__(self):
        setup = tuple(self.setup)
        if len(setup) == 2 and all(isinstance(a, QVal) for a in setup):
            setup = tuple(sorted(setup, key=lambda a: a.world.value))
        object.__setattr__(self, "setup", setup)
        validate(self)

    @property
    def template(self) -> int:
        return 1 if len(self.setup) == 1 else 2

    @property
    def setup_property(self) -> str:
        return self.setup[0].property

    @property
    def answer_property(self) -> str:
        return self.answer_a.property

    @property
    def world_contrast(self) -> bool:
        """True when the options ask the same question about different worlds."""
        return self.answer_a.world is not self.answer_b.world

    def properties(self) -> frozenset[str]:
        return frozenset(a.property for a in (*self.setup, self.answer_a, self.answer_b))

    def swap_worlds(self) -> "QuestionLF":
        return QuestionLF(
            tuple(a.swap_worlds() for a in self.setup),
            self.answer_a.swap_worlds(),
            self.answer_b.swap_worlds(),
        )

    def __str__(self) -> str:
        return serialize_lf(self)


def validate(lf: QuestionLF) -> None:
    setup = lf.setup
    if len(setup) == 1:
        if not isinstance(setup[0], QRel):
            raise TemplateError("template1-setup", "a single setup atom must be a qrel")
    elif len(setup) == 2:
        if not all(isinstance(a, QVal) for a in setup):
            raise TemplateError("template2-setup", "a two-atom setup must be two qvals")
        a, b = setup
        if a.property != b.property:
            raise TemplateError("template2-property", "setup qvals must share a property")
        if a.world is b.world:
            raise TemplateError("template2-worlds", "setup qvals must be in different worlds")
        if a.value is b.value:
            raise TemplateError("template2-values", "setup qvals must have different values")
    else:
        raise TemplateError("setup-arity", f"setup has {len(setup)} atoms, expected 1 or 2")

    a, b = lf.answer_a, lf.answer_b
    if not (isinstance(a, QRel) and isinstance(b, QRel)):
        raise TemplateError("answer-kind", "answer options must be qrel atoms")
    if a.property != b.property:
        raise TemplateError("answer-property", "answer options must share a property")
    same_dir = a.direction is b.direction
    same_world = a.world is b.world
    if same_dir == same_world:
        raise TemplateError(
            "answer-pairing",
            "answers must differ in exactly one of world or direction"
            + (" (they are identical)" if same_dir else " (they differ in both)"),
        )


def check_properties(lf: QuestionLF, t: Theory) -> None:
    for p in sorted(lf.properties()):
        if p not in t.properties:
            raise LFError(f"unknown property {p!r}")


_TOKEN_RE = re.compile(r"\s*(->|→|[(),;]|[A-Za-z_][A-Za-z0-9_]*)")


def _tokens(source: str) -> list[tuple[str, int]]:
    out, pos = [], 0
    source = source.rstrip().rstrip("?").rstrip()
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            if source[pos:].strip() == "":
                break
            raise LFSyntaxError(f"unexpected character {source[pos]!r}", pos)
        tok = m.group(1)
        out.append(("->" if tok == "→" else tok, m.start(1)))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, source: str):
        self.toks = _tokens(source)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def pos(self):
        return self.toks[self.i][1] if self.i < len(self.toks) else None

    def expect(self, want: str | None = None, what: str | None = None) -> str:
        if self.i >= len(self.toks):
            raise LFSyntaxError(f"unexpected end of input, expected {want or what or 'a token'}")
        tok, pos = self.toks[self.i]
        if want is not None and tok != want:
            raise LFSyntaxError(f"expected {want!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    def atom(self) -> Atom:
        pos = self.pos()
        head = self.expect(what="an atom")
        if head not in ("qrel", "qval"):
            raise LFSyntaxError(f"expected qrel or qval, found {head!r}", pos)
        self.expect("(")
        prop = self.ident("property")
        self.expect(",")
        pos = self.pos()
        level = self.ident("direction" if head == "qrel" else "value")
        self.expect(",")
        wpos = self.pos()
        world = self.ident("world")
        self.expect(")")
        try:
            w = World(world)
        except ValueError:
            raise LFSyntaxError(f"bad world {world!r}", wpos) from None
        try:
            if head == "qrel":
                return QRel(prop, Direction(level), w)
            return QVal(prop, ValueLevel(level), w)
        except ValueError:
            raise LFSyntaxError(f"bad {'direction' if head == 'qrel' else 'value'} {level!r}", pos) from None

    def ident(self, what: str) -> str:
        pos = self.pos()
        tok = self.expect(what=what)
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise LFSyntaxError(f"expected {what}, found {tok!r}", pos)
        return tok

    def lf(self) -> QuestionLF:
        setup = [self.atom()]
        while self.peek() == ",":
            self.expect(",")
            setup.append(self.atom())
        self.expect("->")
        a = self.atom()
        self.expect(";")
        b = self.atom()
        if self.i != len(self.toks):
            raise LFSyntaxError(f"trailing input {self.peek()!r}", self.pos())
        if not (isinstance(a, QRel) and isinstance(b, QRel)):
            raise TemplateError("answer-kind", "answer options must be qrel atoms")
        return QuestionLF(tuple(setup), a, b)


def parse_lf(source: str, t: Theory | None = None) -> QuestionLF:
    lf = _Parser(source).lf()
    if t is not None:
        check_properties(lf, t)
    return lf


def serialize_lf(lf: QuestionLF) -> str:
    setup = ", ".join(str(a) for a in lf.setup)
    return f"{setup} -> {lf.answer_a} ; {lf.answer_b}"


def answer_pairs(prop: str) -> list[tuple[QRel, QRel]]:
    """All ordered (answer_a, answer_b) pairs over one property: 4 world-contrast, 4 direction-contrast."""
    pairs = []
    for d in Direction:
        for w in World:
            pairs.append((QRel(prop, d, w), QRel(prop, d, w.opposite)))
    for w in World:
        for d in Direction:
            pairs.append((QRel(prop, d, w), QRel(prop, d.opposite, w)))
    return pairs


def setups(prop: str, template: int) -> list[tuple]:
    if template == 1:
        return [(QRel(prop, d, w),) for d in Direction for w in World]
    return [
        (QVal(prop, v, World.WORLD1), QVal(prop, ValueLevel.HIGH if v is ValueLevel.LOW else ValueLevel.LOW, World.WORLD2))
        for v in (ValueLevel.LOW, ValueLevel.HIGH)
    ]


def enumerate_lfs(props: Iterable[str], template: str = "both") -> list[QuestionLF]:
    """Every template-valid LF over ``props``; 32n^2 for template one, 16n^2 for two."""
    props = sorted(set(props))
    wanted = {"one": (1,), "two": (2,), "both": (1, 2)}[template]
    out = []
    for tpl in wanted:
        for p in props:
            for setup in setups(p, tpl):
                for q in props:
                    for a, b in answer_pairs(q):
                        out.append(QuestionLF(setup, a, b))
    return out
