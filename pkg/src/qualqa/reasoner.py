"""Sign-propagation inference from a question's setup to its answer options.

Facts are qrel atoms.  Closure applies world-flip symmetry and pushes each
comparative along q+/q- edges (same direction for q+, opposite for q-).  By
default edges are also walked backwards, which is what lets an observed
effect (the car rolls further) determine its cause (less friction).
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .lf import Direction, QRel, QVal, QuestionLF, World
from .theory import Sign, Theory, ValueLevel


class ReasonerError(ValueError):
    pass


class DegenerateSetupError(ReasonerError):
    pass


class InconsistentSeedError(ReasonerError):
    pass


class Verdict(enum.Enum):
    A = "A"
    B = "B"
    AMBIGUOUS = "ambiguous"
    UNKNOWN = "unknown"

    @property
    def decided(self) -> bool:
        return self in (Verdict.A, Verdict.B)


@dataclass(frozen=True)
class FactSet:
    facts: frozenset[QRel] = frozenset()
    conflicts: frozenset[str] = frozenset()
    trace: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __contains__(self, atom: QRel) -> bool:
        return atom in self.facts

    def __len__(self) -> int:
        return len(self.facts)

    def properties(self) -> frozenset[str]:
        return frozenset(f.property for f in self.facts)


def _orientation(fact: QRel) -> int:
    """+1 when the fact says the property is higher in world1."""
    up = fact.direction is Direction.HIGHER
    return 1 if up == (fact.world is World.WORLD1) else -1


def _facts_for(prop: str, orientation: int) -> tuple[QRel, QRel]:
    d = Direction.HIGHER if orientation > 0 else Direction.LOWER
    f = QRel(prop, d, World.WORLD1)
    return f, f.mirror()


def normalize_setup(lf: QuestionLF, t: Theory) -> FactSet:
    for atom in lf.setup:
        t.check_property(atom.property)
    if lf.template == 1:
        (atom,) = lf.setup
        return FactSet(frozenset({atom, atom.mirror()}))
    a, b = lf.setup
    assert isinstance(a, QVal) and isinstance(b, QVal)
    if a.value is b.value:
        raise DegenerateSetupError(f"{a} and {b} give no comparison")
    high = a if a.value is ValueLevel.HIGH else b
    fact = QRel(high.property, Direction.HIGHER, high.world)
    return FactSet(frozenset({fact, fact.mirror()}))


def closure(seed: FactSet | frozenset | set, t: Theory, bidirectional: bool = True) -> FactSet:
    """Least fixpoint of world-flip symmetry and signed propagation.

    A property reachable with both orientations is a conflict: its facts are
    dropped and its name recorded in ``conflicts``.
    """
    facts = seed.facts if isinstance(seed, FactSet) else frozenset(seed)
    start: dict[str, int] = {}
    for f in facts:
        t.check_property(f.property)
        o = _orientation(f)
        if start.setdefault(f.property, o) != o:
            raise InconsistentSeedError(f"seed says {f.property} is both higher and lower in one world")

    adj = t.neighbours(undirected=bidirectional)
    reached: dict[str, set[int]] = {}
    trace: list[str] = []
    queue = deque(sorted(start.items()))
    for p, o in start.items():
        reached.setdefault(p, set()).add(o)
    while queue:
        p, o = queue.popleft()
        for q, sign in adj[p]:
            o2 = o if sign is Sign.PLUS else -o
            seen = reached.setdefault(q, set())
            if o2 not in seen:
                seen.add(o2)
                queue.append((q, o2))
                trace.append(f"{_facts_for(p, o)[0]} & q{sign.value} link {p}~{q} => {_facts_for(q, o2)[0]}")

    out: set[QRel] = set()
    conflicts = set()
    for p, os in reached.items():
        if len(os) == 2:
            conflicts.add(p)
        else:
            out.update(_facts_for(p, next(iter(os))))
    return FactSet(frozenset(out), frozenset(conflicts), tuple(trace))


def entailed(lf: QuestionLF, t: Theory, bidirectional: bool = True) -> FactSet:
    for atom in (lf.answer_a, lf.answer_b):
        t.check_property(atom.property)
    return closure(normalize_setup(lf, t), t, bidirectional)


def answer(lf: QuestionLF, t: Theory, bidirectional: bool = True) -> Verdict:
    facts = entailed(lf, t, bidirectional)
    a, b = lf.answer_a in facts, lf.answer_b in facts
    if a and b:
        return Verdict.AMBIGUOUS
    if a:
        return Verdict.A
    if b:
        return Verdict.B
    return Verdict.UNKNOWN
