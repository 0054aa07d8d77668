"""World mentions: tagging spans, grouping them into two worlds, delexicalizing.

Grouping follows four steps:

1. spans contained in another span (as a contiguous token run) join its group;
2. the two groups holding the longest spans become the worlds;
3. every other span goes to the world at the smallest edit distance, or is
   ignored when it shares no content word with either world;
4. the world mentioned first is WORLD1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from rapidfuzz.distance import Levenshtein

from .lf import World
from .text import STOPWORDS, Token, segment, tokenize


class WorldTaggingError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int
    text: str = field(compare=False)

    @property
    def key(self) -> tuple[str, ...]:
        return tuple(t.text.casefold() for t in tokenize(self.text))


@dataclass
class WorldGroups:
    world1: list[Span] = field(default_factory=list)
    world2: list[Span] = field(default_factory=list)
    ignored: list[Span] = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return not (self.world1 and self.world2)

    def tagged(self) -> list[tuple[Span, World]]:
        pairs = [(s, World.WORLD1) for s in self.world1] + [(s, World.WORLD2) for s in self.world2]
        return sorted(pairs, key=lambda p: p[0].start)


@dataclass(frozen=True)
class DelexicalizedQuestion:
    source: str
    text: str
    mapping: tuple[tuple[Span, World], ...] = ()

    @property
    def tokens(self) -> list[str]:
        return [t.text for t in tokenize(self.text)]

    def reconstruct(self) -> str:
        out = self.text
        # right to left so earlier offsets stay valid
        placed = _placements(self.text, self.mapping)
        for (lo, hi), (span, _) in sorted(zip(placed, self.mapping), key=lambda x: -x[0][0]):
            out = out[:lo] + span.text + out[hi:]
        return out


def _placements(text: str, mapping) -> list[tuple[int, int]]:
    """Character ranges of the WORLD tokens in ``text``, in mapping order."""
    toks = [t for t in tokenize(text) if t.text in ("WORLD1", "WORLD2")]
    if len(toks) != len(mapping):
        raise WorldTaggingError("mapping does not line up with WORLD tokens")
    return [(t.start, t.end) for t in toks]


def _span(tokens: Sequence[Token], source: str, i: int, j: int) -> Span:
    return Span(i, j, source[tokens[i].start : tokens[j - 1].end])


def _find_runs(keys: list[str], phrase: tuple[str, ...]) -> Iterable[int]:
    n = len(phrase)
    for i in range(len(keys) - n + 1):
        if tuple(keys[i : i + n]) == phrase:
            yield i


def _non_overlapping(cands: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Greedy keep-longest selection; ties go to the earlier span."""
    taken: list[tuple[int, int]] = []
    for i, j in sorted(set(cands), key=lambda c: (-(c[1] - c[0]), c[0])):
        if all(j <= a or i >= b for a, b in taken):
            taken.append((i, j))
    return sorted(taken)


def _content(phrase: tuple[str, ...]) -> bool:
    return any(w not in STOPWORDS and w.isalnum() for w in phrase)


def gold_spans(question: str, literals: Sequence[str], partial: bool = True) -> list[Span]:
    tokens = tokenize(question)
    keys = [t.text.casefold() for t in tokens]
    lit_keys = [tuple(t.text.casefold() for t in tokenize(lit)) for lit in literals if lit and lit.strip()]
    cands = []
    for lit in lit_keys:
        cands += [(i, i + len(lit)) for i in _find_runs(keys, lit)]
    if partial:
        subs: dict[tuple[str, ...], set[int]] = {}
        for n, lit in enumerate(lit_keys):
            for a in range(len(lit)):
                for b in range(a + 1, len(lit) + 1):
                    if b - a < len(lit) and _content(lit[a:b]):
                        subs.setdefault(lit[a:b], set()).add(n)
        # short forms are only trusted inside the answer options
        seg = segment([t.text for t in tokens])
        first = seg.option_a[0] if seg else len(keys)
        for phrase, owners in subs.items():
            if len(owners) == 1 and not any(phrase == lit for lit in lit_keys):
                cands += [(i, i + len(phrase)) for i in _find_runs(keys, phrase) if i >= first]
    full = [(i, i + len(lit)) for lit in lit_keys for i in _find_runs(keys, lit)]
    chosen = _non_overlapping(full)
    rest = [c for c in cands if all(c[1] <= a or c[0] >= b for a, b in chosen)]
    chosen = sorted(chosen + _non_overlapping(rest))
    return [_span(tokens, question, i, j) for i, j in chosen]


SURFACE_NOUNS = frozenset(
    """road roads ice snow carpet carpeting rug rugs wood floor floors grass gravel sand
    concrete asphalt blacktop pavement tile tiles dirt mud metal glass marble linoleum
    street sidewalk driveway track field lawn yard court table countertop counter desk
    bar plank board beam slide ramp hill path trail lake pond river water pool beach
    deck porch hallway kitchen bathroom bedroom paper sandpaper cardboard plastic rubber
    steel aluminum iron stone rock rocks brick bricks cement soil clay mat towel blanket
    sheet cloth silk wool cotton leather velvet felt foam fur""".split()
)
SURFACE_ADJECTIVES = frozenset(
    """rough smooth wet dry icy snowy muddy sandy grassy rocky bumpy slick slippery
    polished waxed oily sticky thick thin shag hardwood wooden tiled carpeted paved
    gravelly dusty frozen calm choppy green frosty soft hard flat steep level""".split()
)
PREPOSITIONS = ("on", "across", "over", "along", "through", "in")
_DETERMINERS = frozenset("a an the his her its their our my your some this that".split())


def heuristic_spans(question: str, nouns=SURFACE_NOUNS, adjectives=SURFACE_ADJECTIVES) -> list[Span]:
    """Lexicon matches plus the noun phrase after one of six prepositions."""
    tokens = tokenize(question)
    keys = [t.text.casefold() for t in tokens]
    n = len(keys)
    cands = []
    for i, k in enumerate(keys):
        if k in nouns:
            a = i
            while a > 0 and (keys[a - 1] in adjectives or keys[a - 1] in nouns):
                a -= 1
            b = i + 1
            while b < n and keys[b] in nouns:
                b += 1
            cands.append((a, b))
        if k in PREPOSITIONS:
            a = i + 1
            while a < n and keys[a] in _DETERMINERS:
                a += 1
            b = a
            while b < n and b - a < 3 and keys[b].isalpha() and keys[b] not in STOPWORDS:
                b += 1
            if b > a:
                cands.append((a, b))
    return [_span(tokens, question, i, j) for i, j in _non_overlapping(cands)]


def tag_spans(question: str, mode: str = "gold", annotations=None, lexicon=None, partial: bool = True) -> list[Span]:
    if mode == "gold":
        if not annotations:
            raise WorldTaggingError("gold tagging needs world annotations")
        literals = list(annotations.values()) if isinstance(annotations, Mapping) else list(annotations)
        return gold_spans(question, literals, partial=partial)
    if mode == "heuristic":
        if lexicon is None:
            return heuristic_spans(question)
        return heuristic_spans(question, nouns=frozenset(w.casefold() for w in lexicon))
    raise WorldTaggingError(f"unknown tagging mode {mode!r}")


def _contains(big: tuple[str, ...], small: tuple[str, ...]) -> bool:
    n = len(small)
    return n <= len(big) and any(big[i : i + n] == small for i in range(len(big) - n + 1))


def _overlap(a: tuple[str, ...], b: tuple[str, ...]) -> bool:
    content = lambda k: {w for w in k if w.isalnum() and w not in STOPWORDS}
    return bool(content(a) & content(b))


def group_spans(spans: Iterable[Span]) -> WorldGroups:
    spans = sorted(spans)
    if not spans:
        return WorldGroups()
    keys = [s.key for s in spans]
    n = len(spans)

    # step 1: maximal spans seed the groups; identical text shares a group
    roots = [i for i in range(n) if not any(keys[j] != keys[i] and _contains(keys[j], keys[i]) for j in range(n))]
    group_of: dict[int, int] = {}
    groups: list[list[int]] = []
    by_key: dict[tuple[str, ...], int] = {}
    for i in roots:
        g = by_key.setdefault(keys[i], len(by_key))
        if g == len(groups):
            groups.append([])
        groups[g].append(i)
        group_of[i] = g
    for i in range(n):
        if i in group_of:
            continue
        owners = {group_of[j] for j in roots if _contains(keys[j], keys[i])}
        if len(owners) == 1:
            g = owners.pop()
        else:
            # contained in both candidate worlds: left for step 3
            g = len(groups)
            groups.append([])
        groups[g].append(i)
        group_of[i] = g

    # step 2
    def rank(g: list[int]):
        return (-max(len(spans[i].text) for i in g), min(spans[i].start for i in g))

    order = sorted(range(len(groups)), key=lambda g: rank(groups[g]))
    if len(order) < 2:
        return WorldGroups(world1=[spans[i] for i in groups[order[0]]])
    worlds = {order[0]: list(groups[order[0]]), order[1]: list(groups[order[1]])}
    ignored: list[Span] = []

    # step 3
    for g in order[2:]:
        for i in groups[g]:
            best = None
            for w in worlds:
                if not any(_overlap(keys[i], keys[m]) for m in groups[w]):
                    continue
                dist, first = min(
                    (Levenshtein.distance(spans[i].text.casefold(), spans[m].text.casefold()), spans[m].start)
                    for m in groups[w]
                )
                if best is None or (dist, first) < best[:2]:
                    best = (dist, first, w)
            if best is None:
                ignored.append(spans[i])
            else:
                worlds[best[2]].append(i)

    # step 4
    first, second = sorted(worlds.values(), key=lambda m: min(spans[i].start for i in m))
    return WorldGroups(
        world1=sorted(spans[i] for i in first),
        world2=sorted(spans[i] for i in second),
        ignored=sorted(ignored),
    )


def delexicalize(question: str, groups: WorldGroups) -> DelexicalizedQuestion:
    tokens = tokenize(question)
    tagged = groups.tagged()
    for (a, _), (b, _) in zip(tagged, tagged[1:]):
        if b.start < a.end:
            raise WorldTaggingError(f"overlapping spans {a} and {b}")
    out, pos = [], 0
    for span, world in tagged:
        lo, hi = tokens[span.start].start, tokens[span.end - 1].end
        out.append(question[pos:lo])
        out.append(world.value.upper())
        pos = hi
    out.append(question[pos:])
    return DelexicalizedQuestion(question, "".join(out), tuple(tagged))


def world_alignment(groups: WorldGroups, annotations) -> bool | None:
    """True if WORLD1 is the annotation's world1, False if swapped, None if unclear."""
    if groups.degenerate or not annotations:
        return None
    lits = [annotations["world1"], annotations["world2"]] if isinstance(annotations, Mapping) else list(annotations)
    lit_keys = [tuple(t.text.casefold() for t in tokenize(x)) for x in lits]

    def score(members: list[Span], lit: tuple[str, ...]) -> float:
        best = 0.0
        for s in members:
            if s.key == lit:
                return 2.0
            if _contains(lit, s.key) or _contains(s.key, lit):
                best = max(best, 1.0 + min(len(s.key), len(lit)) / max(len(s.key), len(lit), 1) * 0.5)
            elif _overlap(s.key, lit):
                best = max(best, 0.5)
        return best

    keep = score(groups.world1, lit_keys[0]) + score(groups.world2, lit_keys[1])
    swap = score(groups.world1, lit_keys[1]) + score(groups.world2, lit_keys[0])
    if keep == swap:
        return None
    return keep > swap
