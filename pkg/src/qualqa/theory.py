"""Qualitative theories: properties, signed influences (q+/q-) and value orderings.

A theory file is line oriented::

    # comment
    property friction
    property speed
    q-(friction, speed)

Every property has the two-level ordering high > low; orderings are implied
rather than written.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field


class TheoryError(ValueError):
    """Raised for syntax or validation problems in a theory."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class ContradictionError(TheoryError):
    def __init__(self, first: "Influence", second: "Influence", line: int | None = None):
        self.edges = (first, second)
        super().__init__(f"contradictory influences {first} and {second}", line=line)


class Sign(enum.Enum):
    PLUS = "+"
    MINUS = "-"

    def __mul__(self, other: "Sign") -> "Sign":
        return compose(self, other)

    def flip(self) -> "Sign":
        return Sign.MINUS if self is Sign.PLUS else Sign.PLUS


def compose(a: Sign, b: Sign) -> Sign:
    return Sign.PLUS if a is b else Sign.MINUS


class ValueLevel(enum.Enum):
    LOW = "low"
    HIGH = "high"


class PathSign(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    AMBIGUOUS = "ambiguous"
    NO_PATH = "no_path"


@dataclass(frozen=True, order=True)
class Influence:
    src: str
    dst: str
    sign: Sign

    def __post_init__(self):
        if self.src == self.dst:
            raise TheoryError(f"influence from {self.src} to itself")

    def __str__(self) -> str:
        return f"q{self.sign.value}({self.src}, {self.dst})"


@dataclass(frozen=True)
class Ordering:
    property: str
    higher: ValueLevel = ValueLevel.HIGH
    lower: ValueLevel = ValueLevel.LOW

    def __post_init__(self):
        if self.higher is self.lower:
            raise TheoryError(f"ordering on {self.property} compares a level with itself")


@dataclass(frozen=True)
class Theory:
    properties: frozenset[str] = frozenset()
    influences: frozenset[Influence] = frozenset()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "properties", frozenset(self.properties))
        object.__setattr__(self, "influences", frozenset(self.influences))
        seen: dict[tuple[str, str], Influence] = {}
        for inf in sorted(self.influences):
            for p in (inf.src, inf.dst):
                if p not in self.properties:
                    raise TheoryError(f"influence {inf} references undeclared property {p!r}")
            prev = seen.get((inf.src, inf.dst))
            if prev is not None and prev.sign is not inf.sign:
                raise ContradictionError(prev, inf)
            seen[(inf.src, inf.dst)] = inf

    @property
    def orderings(self) -> frozenset[Ordering]:
        return frozenset(Ordering(p) for p in self.properties)

    def neighbours(self, undirected: bool = False) -> dict[str, list[tuple[str, Sign]]]:
        adj: dict[str, list[tuple[str, Sign]]] = {p: [] for p in self.properties}
        for inf in sorted(self.influences):
            adj[inf.src].append((inf.dst, inf.sign))
            if undirected:
                adj[inf.dst].append((inf.src, inf.sign))
        return adj

    def check_property(self, p: str) -> None:
        if p not in self.properties:
            raise TheoryError(f"unknown property {p!r}")

    def restricted_to(self, props) -> "Theory":
        props = frozenset(props)
        return Theory(props, {i for i in self.influences if i.src in props and i.dst in props})

    def dumps(self) -> str:
        lines = [f"property {p}" for p in sorted(self.properties)]
        lines += [str(i) for i in sorted(self.influences)]
        return "\n".join(lines) + "\n"


_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_PROPERTY_RE = re.compile(rf"^property\s+({_IDENT})$")
_EDGE_RE = re.compile(rf"^q([+-])\s*\(\s*({_IDENT})\s*,\s*({_IDENT})\s*\)\s*\.?$")


def load_theory(source: str, name: str = "") -> Theory:
    """Parse theory text, validating declarations and edge consistency.

    Duplicate consistent edges collapse silently; an edge pair with the same
    endpoints and opposite signs raises ContradictionError.
    """
    props: list[str] = []
    edges: dict[tuple[str, str], tuple[Influence, int]] = {}
    pending: list[tuple[Influence, int, int]] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        m = _PROPERTY_RE.match(line)
        if m:
            props.append(m.group(1))
            continue
        m = _EDGE_RE.match(line)
        if m:
            sign = Sign.PLUS if m.group(1) == "+" else Sign.MINUS
            src, dst = m.group(2), m.group(3)
            if src == dst:
                raise TheoryError(f"influence from {src} to itself", lineno, col)
            pending.append((Influence(src, dst, sign), lineno, col))
            continue
        raise TheoryError(f"cannot parse statement {line!r}", lineno, col)

    declared = set(props)
    for inf, lineno, col in pending:
        for p in (inf.src, inf.dst):
            if p not in declared:
                raise TheoryError(f"undeclared property {p!r} in {inf}", lineno, col)
        prev = edges.get((inf.src, inf.dst))
        if prev is not None and prev[0].sign is not inf.sign:
            raise ContradictionError(prev[0], inf, line=lineno)
        edges.setdefault((inf.src, inf.dst), (inf, lineno))
    return Theory(frozenset(props), frozenset(e for e, _ in edges.values()), name=name)


def read_theory(path) -> Theory:
    with open(path, encoding="utf-8") as fh:
        return load_theory(fh.read(), name=str(path))


def path_sign(t: Theory, src: str, dst: str, undirected: bool = False) -> PathSign:
    """Composed sign of every simple influence path from src to dst.

    Conflicting signs along different paths give AMBIGUOUS.  With
    ``undirected`` each edge may also be walked backwards with its own sign.
    """
    t.check_property(src)
    t.check_property(dst)
    if src == dst:
        return PathSign.PLUS
    adj = t.neighbours(undirected)
    found: set[Sign] = set()

    def walk(node: str, sign: Sign, visited: set[str]) -> None:
        for nxt, s in adj[node]:
            if nxt in visited:
                continue
            composed = compose(sign, s)
            if nxt == dst:
                found.add(composed)
                continue
            visited.add(nxt)
            walk(nxt, composed, visited)
            visited.discard(nxt)
            if len(found) == 2:
                return

    walk(src, Sign.PLUS, {src})
    if len(found) == 2:
        return PathSign.AMBIGUOUS
    if not found:
        return PathSign.NO_PATH
    return PathSign.PLUS if found.pop() is Sign.PLUS else PathSign.MINUS

