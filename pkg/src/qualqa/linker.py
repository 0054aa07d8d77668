"""Property linking by embedding similarity, and a linear ranker over LFs.

A property p is linked to a token by the best K-weighted inner product between
the token's vector and the vectors of p's seed words. The ranker scores every
template-valid LF for a delexicalized question with a weight vector over
hand-built features; each feature reads only the setup, only the answer pair,
or only the pair of properties, so the whole candidate space can be scored as
a sum of three small tables.
"""

from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lf import Direction, QRel, QuestionLF, World, answer_pairs, setups
from .resources import path as resource_path
from .text import WORLD_TOKENS, norm, segment, sentences, words
from .theory import Theory
from .worlds import DelexicalizedQuestion

log = logging.getLogger(__name__)


class LinkError(ValueError):
    pass


# -- embeddings, lexicon, K -------------------------------------------------


@dataclass(frozen=True)
class EmbeddingTable:
    words: tuple[str, ...]
    vectors: np.ndarray  # rows are unit vectors
    index: Mapping[str, int] = field(repr=False, compare=False)

    @classmethod
    def from_mapping(cls, table: Mapping[str, Sequence[float]]) -> "EmbeddingTable":
        words = tuple(table)
        if not words:
            raise LinkError("empty embedding table")
        rows = np.asarray([np.asarray(table[w], dtype=float) for w in words])
        if rows.ndim != 2:
            raise LinkError("vectors differ in dimension")
        norms = np.linalg.norm(rows, axis=1)
        if np.any(norms == 0) or not np.all(np.isfinite(rows)):
            bad = words[int(np.argmin(norms))]
            raise LinkError(f"zero or non-finite vector for {bad!r}")
        rows = rows / norms[:, None]
        rows.setflags(write=False)
        return cls(words, rows, {w: i for i, w in enumerate(words)})

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def get(self, word: str) -> np.ndarray | None:
        i = self.index.get(word)
        return None if i is None else self.vectors[i]


def load_embeddings(source: str | Path) -> EmbeddingTable:
    """Read `word v1 ... vd` lines. A leading `count dim` header is skipped."""
    table: dict[str, list[float]] = {}
    dim = None
    with open(source, encoding="utf8") as fh:
        for n, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if n == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            word, vals = parts[0], parts[1:]
            if dim is None:
                dim = len(vals)
            if len(vals) != dim or dim == 0:
                raise LinkError(f"line {n}: expected {dim} values, got {len(vals)}")
            try:
                table[word] = [float(v) for v in vals]
            except ValueError as e:
                raise LinkError(f"line {n}: {e}") from None
    return EmbeddingTable.from_mapping(table)


@dataclass(frozen=True)
class PropertyLexicon:
    seeds: Mapping[str, tuple[str, ...]]

    def __contains__(self, p: str) -> bool:
        return p in self.seeds

    def words(self, p: str) -> tuple[str, ...]:
        if p not in self.seeds:
            raise LinkError(f"unknown property {p!r}")
        return self.seeds[p]

    def check_covers(self, t: Theory) -> None:
        missing = sorted(p for p in t.properties if not self.seeds.get(p))
        if missing:
            raise LinkError(f"no seed words for {', '.join(missing)}")

    def without(self, p: str) -> "PropertyLexicon":
        return PropertyLexicon({q: ws for q, ws in self.seeds.items() if q != p})


_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*)$")


def _read_property_lines(source: str | Path) -> list[tuple[str, list[str]]]:
    out = []
    for n, raw in enumerate(Path(source).read_text(encoding="utf8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise LinkError(f"{source}:{n}: expected 'property: word, word'")
        items = [w.strip() for w in m.group(2).split(",") if w.strip()]
        out.append((m.group(1), items))
    return out


def load_lexicon(source: str | Path) -> PropertyLexicon:
    seeds: dict[str, list[str]] = {}
    for p, ws in _read_property_lines(source):
        seeds.setdefault(p, []).extend(w.lower() for w in ws)
    return PropertyLexicon({p: tuple(ws) for p, ws in seeds.items()})


@dataclass(frozen=True)
class DiagonalWeights:
    diag: np.ndarray

    @classmethod
    def identity(cls, dim: int) -> "DiagonalWeights":
        return cls(np.ones(dim))

    def check(self, e: EmbeddingTable) -> None:
        if self.diag.shape != (e.dim,):
            raise LinkError(f"K has dimension {self.diag.shape[0]}, embeddings {e.dim}")


def load_diagonal(source: str | Path) -> DiagonalWeights:
    vals = [float(v) for v in Path(source).read_text().split()]
    return DiagonalWeights(np.asarray(vals))


# -- linking ----------------------------------------------------------------


class Linker:
    """Seed matrices (pre-multiplied by K) for each property, for fast scoring."""

    def __init__(self, e: EmbeddingTable, lex: PropertyLexicon, k: DiagonalWeights | None = None):
        k = k or DiagonalWeights.identity(e.dim)
        k.check(e)
        self.e, self.lex, self.k = e, lex, k
        self._seeds: dict[str, np.ndarray | None] = {}
        for p, ws in lex.seeds.items():
            rows = [e.get(w) for w in sorted(set(ws))]  # canonical order: same floats however W(p) is listed
            rows = [r * k.diag for r in rows if r is not None]
            self._seeds[p] = np.vstack(rows) if rows else None

    def score(self, p: str, token: str) -> float:
        if p not in self._seeds:
            raise LinkError(f"unknown property {p!r}")
        v = self.e.get(token)
        m = self._seeds[p]
        if v is None or m is None:
            return 0.0
        return float(np.max(m @ v))

    def scores(self, tokens: Iterable[str], props: Iterable[str]) -> dict[str, float]:
        rows = [self.e.index[t] for t in tokens if t in self.e.index]
        mat = self.e.vectors[rows].T if rows else None
        out = {}
        for p in sorted(props):
            if p not in self._seeds:
                raise LinkError(f"unknown property {p!r}")
            m = self._seeds[p]
            out[p] = float(np.max(m @ mat)) if mat is not None and m is not None else 0.0
        return out


def link_score(p: str, token: str, e: EmbeddingTable, lex: PropertyLexicon, k: DiagonalWeights | None = None) -> float:
    return Linker(e, PropertyLexicon({p: lex.words(p)}), k).score(p, token)


def question_property_scores(
    tokens: Sequence[str], t: Theory, e: EmbeddingTable, lex: PropertyLexicon, k: DiagonalWeights | None = None
) -> dict[str, float]:
    return Linker(e, lex, k).scores((x.lower() for x in tokens), t.properties)


# -- cue lexicons ------------------------------------------------------------

HIGHER_WORDS = frozenset("more greater higher larger increase increased increases increasing most lot extra".split())
LOWER_WORDS = frozenset("less lower fewer decrease decreased decreases decreasing least reduced".split())
HIGH_WORDS = frozenset({"high"})
QUESTION_WORDS = frozenset("which what who whom where when why how because so therefore".split())
CLAUSE_BREAKS = frozenset([",", ";", ":", ".", "?", "!", "but", "while", "whereas", "although", "because"])
LOW_WORDS = frozenset({"low"})


@dataclass(frozen=True)
class CueLexicon:
    """Words that carry a direction, optionally tied to one property."""

    comparative: Mapping[str, tuple[tuple[str, int], ...]]  # word -> ((property, +1/-1), ...)
    absolute: Mapping[str, tuple[tuple[str, int], ...]]


def _signed(source: str | Path) -> dict[str, tuple[tuple[str, int], ...]]:
    out: dict[str, list[tuple[str, int]]] = {}
    for p, items in _read_property_lines(source):
        for it in items:
            if it[0] not in "+-" or len(it) < 2:
                raise LinkError(f"{source}: cue {it!r} needs a + or - prefix")
            out.setdefault(it[1:].lower(), []).append((p, 1 if it[0] == "+" else -1))
    return {w: tuple(v) for w, v in out.items()}


def load_cues(comparatives: str | Path, values: str | Path) -> CueLexicon:
    return CueLexicon(_signed(comparatives), _signed(values))


@dataclass(frozen=True)
class Event:
    pos: int
    polarity: int
    property: str | None  # None for words like "more" that fit any property
    absolute: bool


def find_events(keys: Sequence[str], cues: CueLexicon, lo: int, hi: int) -> list[Event]:
    out = []
    i = lo
    while i < hi:
        w = keys[i]
        if w == "not" and i + 1 < hi and keys[i + 1] == "as":
            out.append(Event(i, -1, None, False))
            i += 2
            continue
        if w in cues.comparative:
            out.extend(Event(i, s, p, False) for p, s in cues.comparative[w])
        elif w in cues.absolute:
            out.extend(Event(i, s, p, True) for p, s in cues.absolute[w])
        elif w in HIGHER_WORDS or w in LOWER_WORDS:
            out.append(Event(i, 1 if w in HIGHER_WORDS else -1, None, False))
        elif w in HIGH_WORDS or w in LOW_WORDS:
            out.append(Event(i, 1 if w in HIGH_WORDS else -1, None, True))
        i += 1
    return out


# -- question view -----------------------------------------------------------


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


_WSIGN = {"WORLD1": 1, "WORLD2": -1}


class QuestionView:
    """Token regions, world mentions and direction events of one question."""

    def __init__(self, q: DelexicalizedQuestion | str, cues: CueLexicon):
        text = q.text if isinstance(q, DelexicalizedQuestion) else q
        self.toks = words(text)
        self.keys = [norm(t) for t in self.toks]
        n = len(self.toks)
        seg = segment(self.toks)
        if seg is None:
            body, self.options = (0, n), ((n, n), (n, n))
        else:
            body, self.options = seg.body, (seg.option_a, seg.option_b)
        sents = sentences(self.toks, *body) or [body]
        self.stem = sents[-1]
        split = self._question_start(*self.stem)
        if split is None:
            split = self.stem[0] if len(sents) > 1 else body[1]
        self.context = (body[0], split)  # where the setup is stated
        self.ask = (split, body[1])  # what the question asks, before the options
        self.worlds = [(i, _WSIGN[t]) for i, t in enumerate(self.toks) if t in WORLD_TOKENS]
        self.events = find_events(self.keys, cues, 0, n)
        self._clause = self._clauses()

    def _question_start(self, lo: int, hi: int) -> int | None:
        asks = hi < len(self.toks) and self.toks[hi] == "?"
        for i in range(lo, hi):
            if self.keys[i] == "_" or self.keys[i] in QUESTION_WORDS and (i > lo or asks):
                return i
        return None

    def _clauses(self) -> list[int]:
        out, c = [], 0
        for k in self.keys:
            if k in CLAUSE_BREAKS:
                c += 1
            out.append(c)
        return out

    def region_words(self, *regions: tuple[int, int]) -> list[str]:
        out = []
        for lo, hi in regions:
            out.extend(k for k in self.keys[lo:hi] if k not in WORLD_TOKENS and k != "_")
        return out

    def events_in(self, lo: int, hi: int) -> list[Event]:
        return [ev for ev in self.events if lo <= ev.pos < hi]

    def world_of(self, pos: int, lo: int, hi: int) -> int:
        """Sign of the world an event at ``pos`` talks about, 0 if none nearby.

        Worlds in the event's clause are preferred, then the nearest wins with
        ties to the left; a world right after "than" is a last resort.
        """
        cands = [
            (self._clause[i] != self._clause[pos], self._after_than(i), abs(i - pos), i > pos, s)
            for i, s in self.worlds
            if lo <= i < hi
        ]
        return min(cands)[-1] if cands else 0

    def _after_than(self, i: int) -> bool:
        return any(self.keys[j] == "than" for j in range(max(0, i - 3), i))

    def orientation(self, lo: int, hi: int, pick) -> int:
        """Net sign of 'higher in WORLD1' over the picked events in a region."""
        return _sign(sum(ev.polarity * self.world_of(ev.pos, lo, hi) for ev in self.events_in(lo, hi) if pick(ev)))

    def option_world(self, k: int) -> int:
        lo, hi = self.options[k]
        signs = {s for i, s in self.worlds if lo <= i < hi}
        return signs.pop() if len(signs) == 1 else 0

    def focus_world(self) -> int:
        """The world a direction-contrast question asks about."""
        lo, hi = self.stem
        blank = next((i for i in range(lo, hi) if self.keys[i] == "_"), None)
        if blank is not None:
            before = [s for i, s in self.worlds if i < blank]
            if before:
                return before[-1]
        for a, b in (self.ask, self.stem):
            for i, s in self.worlds:
                if a <= i < b:
                    return s
        return 0


# -- features ----------------------------------------------------------------

SETUP_FEATURES = (
    "tpl1",
    "tpl2",
    "tpl1*values",
    "tpl2*values",
    "setup.link",
    "setup.cue",
    "setup.dir.cue",
    "setup.dir.generic",
    "setup.world1",
    "setup.world.near",
    "setup.dir.word",
)
ANSWER_FEATURES = (
    "ans.link",
    "ans.cue",
    "ans.wc",
    "ans.wc*opt.worlds",
    "ans.dc*opt.dirs",
    "ans.opt.world",
    "ans.opt.dir",
    "ans.stem.dir",
    "ans.focus",
    "ans.a.world1",
    "ans.a.higher",
)
PAIR_FEATURES = ("pair.same", "pair.edge", "pair.path", "pair.unlinked")
FEATURES = SETUP_FEATURES + ANSWER_FEATURES + PAIR_FEATURES
_IDX = {f: i for i, f in enumerate(FEATURES)}
N_FEATURES = len(FEATURES)


def _wsign(w: World) -> int:
    return 1 if w is World.WORLD1 else -1


def _dsign(d: Direction) -> int:
    return 1 if d is Direction.HIGHER else -1


def setup_orientation(setup: tuple) -> int:
    """+1 when the setup says the property is higher in world1."""
    a = setup[0]
    if isinstance(a, QRel):
        return _dsign(a.direction) * _wsign(a.world)
    return 1 if a.value.value == "high" else -1


def _connected(t: Theory | None, p: str, q: str) -> bool:
    if t is None or p not in t.properties or q not in t.properties:
        return False
    adj = t.neighbours(undirected=True)
    seen, todo = {p}, [p]
    while todo:
        for nxt, _ in adj[todo.pop()]:
            if nxt == q:
                return True
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return False


@dataclass
class Tables:
    """Per-question feature tables; an LF's vector is S[s] + A[a] + P[ps, pa]."""

    props: tuple[str, ...]
    setups: list[tuple]
    pairs: list[tuple[QRel, QRel]]
    S: np.ndarray
    A: np.ndarray
    P: np.ndarray
    setup_prop: np.ndarray
    pair_prop: np.ndarray

    def indices(self, lf: QuestionLF) -> tuple[int, int] | None:
        try:
            return self.setups.index(lf.setup), self.pairs.index((lf.answer_a, lf.answer_b))
        except ValueError:
            return None

    def vector(self, s: int, a: int) -> np.ndarray:
        return self.S[s] + self.A[a] + self.P[self.setup_prop[s], self.pair_prop[a]]

    def scores(self, w: np.ndarray) -> np.ndarray:
        return (self.S @ w)[:, None] + (self.A @ w)[None, :] + (self.P @ w)[self.setup_prop][:, self.pair_prop]

    def lf(self, s: int, a: int) -> QuestionLF:
        return QuestionLF(self.setups[s], *self.pairs[a])


class Featurizer:
    def __init__(self, linker: Linker, cues: CueLexicon, theory: Theory | None = None):
        self.linker, self.cues, self.theory = linker, cues, theory

    def view(self, q: DelexicalizedQuestion | str) -> QuestionView:
        return QuestionView(q, self.cues)

    def tables(self, q: DelexicalizedQuestion | str, props: Iterable[str]) -> Tables:
        v = self.view(q)
        props = tuple(sorted(set(props)))
        ctx_link = self.linker.scores(v.region_words(v.context), props)
        ans_link = self.linker.scores(v.region_words(v.ask, *v.options), props)
        n_values = sum(1 for ev in v.events_in(*v.context) if ev.absolute)
        ans_lo, ans_hi = v.ask[0], v.options[1][1]

        S_rows, S_list, S_prop = [], [], []
        for pi, p in enumerate(props):
            cue = any(ev.property == p for ev in v.events_in(*v.context))
            o_cue = v.orientation(*v.context, lambda ev: ev.property == p)
            o_gen = v.orientation(*v.context, lambda ev: ev.property is None)
            own = [ev for ev in v.events_in(*v.context) if ev.property == p]
            own = own or [ev for ev in v.events_in(*v.context) if ev.property is None and not ev.absolute]
            near = _sign(sum(v.world_of(ev.pos, *v.context) for ev in own))
            pol = _sign(sum(ev.polarity for ev in own))
            for tpl in (1, 2):
                for st in setups(p, tpl):
                    f = np.zeros(N_FEATURES)
                    o = setup_orientation(st)
                    f[_IDX[f"tpl{tpl}"]] = 1
                    f[_IDX[f"tpl{tpl}*values"]] = float(n_values >= 2)
                    f[_IDX["setup.link"]] = ctx_link[p]
                    f[_IDX["setup.cue"]] = float(cue)
                    f[_IDX["setup.dir.cue"]] = o_cue * o
                    f[_IDX["setup.dir.generic"]] = o_gen * o
                    if tpl == 1:
                        f[_IDX["setup.world1"]] = _wsign(st[0].world)
                        f[_IDX["setup.world.near"]] = near * _wsign(st[0].world)
                        f[_IDX["setup.dir.word"]] = pol * _dsign(st[0].direction)
                    S_rows.append(f)
                    S_list.append(st)
                    S_prop.append(pi)

        opt_worlds = [v.option_world(k) for k in (0, 1)]
        focus = v.focus_world()
        A_rows, A_list, A_prop = [], [], []
        for pi, p in enumerate(props):
            fits = lambda ev, p=p: ev.property in (None, p)  # noqa: E731
            opt_pol = [_sign(sum(ev.polarity for ev in v.events_in(*v.options[k]) if fits(ev))) for k in (0, 1)]
            stem_pol = _sign(sum(ev.polarity for ev in v.events_in(*v.ask) if fits(ev)))
            cue = any(ev.property == p for ev in v.events_in(ans_lo, ans_hi))
            for a, b in answer_pairs(p):
                f = np.zeros(N_FEATURES)
                wc = a.world is not b.world
                f[_IDX["ans.link"]] = ans_link[p]
                f[_IDX["ans.cue"]] = float(cue)
                f[_IDX["ans.wc"]] = float(wc)
                f[_IDX["ans.wc*opt.worlds"]] = float(wc and all(opt_worlds))
                f[_IDX["ans.dc*opt.dirs"]] = float(not wc and all(opt_pol))
                if wc:
                    f[_IDX["ans.opt.world"]] = (opt_worlds[0] * _wsign(a.world) + opt_worlds[1] * _wsign(b.world)) / 2
                    f[_IDX["ans.stem.dir"]] = stem_pol * _dsign(a.direction)
                else:
                    f[_IDX["ans.focus"]] = focus * _wsign(a.world)
                f[_IDX["ans.opt.dir"]] = (opt_pol[0] * _dsign(a.direction) + opt_pol[1] * _dsign(b.direction)) / 2
                f[_IDX["ans.a.world1"]] = _wsign(a.world)
                f[_IDX["ans.a.higher"]] = _dsign(a.direction)
                A_rows.append(f)
                A_list.append((a, b))
                A_prop.append(pi)

        P = np.zeros((len(props), len(props), N_FEATURES))
        edges = set()
        for inf in self.theory.influences if self.theory is not None else ():
            edges |= {(inf.src, inf.dst), (inf.dst, inf.src)}
        for i, p in enumerate(props):
            for j, q2 in enumerate(props):
                if i == j:
                    P[i, j, _IDX["pair.same"]] = 1
                elif self.theory is not None and (p, q2) in edges:
                    P[i, j, _IDX["pair.edge"]] = 1
                elif _connected(self.theory, p, q2):
                    P[i, j, _IDX["pair.path"]] = 1
                else:
                    P[i, j, _IDX["pair.unlinked"]] = 1
        return Tables(
            props, S_list, A_list, np.asarray(S_rows), np.asarray(A_rows), P, np.asarray(S_prop), np.asarray(A_prop)
        )

    def features(self, q: DelexicalizedQuestion | str, lf: QuestionLF) -> dict[str, float]:
        tb = self.tables(q, lf.properties())
        s, a = tb.indices(lf)
        return dict(zip(FEATURES, tb.vector(s, a).tolist()))


# -- weights, ranking, training ---------------------------------------------


@dataclass(frozen=True)
class RankerWeights:
    values: Mapping[str, float]

    def __post_init__(self):
        unknown = set(self.values) - set(FEATURES)
        if unknown:
            raise LinkError(f"unknown features: {', '.join(sorted(unknown))}")
        if not all(math.isfinite(x) for x in self.values.values()):
            raise LinkError("non-finite weight")

    @classmethod
    def zeros(cls) -> "RankerWeights":
        return cls({f: 0.0 for f in FEATURES})

    @classmethod
    def from_array(cls, w: np.ndarray) -> "RankerWeights":
        return cls({f: float(x) for f, x in zip(FEATURES, w)})

    def array(self) -> np.ndarray:
        return np.asarray([self.values.get(f, 0.0) for f in FEATURES])

    def scaled(self, c: float) -> "RankerWeights":
        return RankerWeights({f: c * x for f, x in self.values.items()})


def load_weights(source: str | Path) -> RankerWeights:
    out = {}
    for n, raw in enumerate(Path(source).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            name, val = line.split("\t")
            out[name.strip()] = float(val)
        except ValueError:
            raise LinkError(f"{source}:{n}: expected 'feature<TAB>value'") from None
    return RankerWeights(out)


def save_weights(w: RankerWeights, dest: str | Path) -> None:
    Path(dest).write_text("".join(f"{f}\t{w.values.get(f, 0.0)!r}\n" for f in FEATURES))


def default_featurizer(theory: Theory | None = None, k: DiagonalWeights | None = None) -> Featurizer:
    e = load_embeddings(resource_path("embeddings.txt"))
    lex = load_lexicon(resource_path("lexicon.txt"))
    cues = load_cues(resource_path("cues.txt"), resource_path("values.txt"))
    return Featurizer(Linker(e, lex, k), cues, theory)


def rank_candidates(
    q: DelexicalizedQuestion | str,
    candidates: Sequence[QuestionLF],
    w: RankerWeights,
    e: EmbeddingTable | Featurizer,
    lex: PropertyLexicon | None = None,
    k: DiagonalWeights | None = None,
    cues: CueLexicon | None = None,
    theory: Theory | None = None,
) -> list[tuple[QuestionLF, float]]:
    """Candidates with their scores, best first; ties keep input order.

    ``e`` may be a ready Featurizer, in which case lex, k, cues and theory
    are taken from it.
    """
    if not candidates:
        raise ValueError("no candidates to rank")
    if isinstance(e, Featurizer):
        fz = e
    else:
        if lex is None:
            raise LinkError("a property lexicon is required")
        cues = cues or load_cues(resource_path("cues.txt"), resource_path("values.txt"))
        fz = Featurizer(Linker(e, lex, k), cues, theory)
    props = set().union(*(c.properties() for c in candidates))
    tb = fz.tables(q, props)
    wa = w.array()
    scored = []
    for c in candidates:
        s, a = tb.indices(c)
        scored.append((c, float(tb.vector(s, a) @ wa)))
    return sorted(scored, key=lambda x: -x[1])


def best_lf(tb: Tables, w: np.ndarray) -> QuestionLF:
    sc = tb.scores(w)
    s, a = np.unravel_index(int(np.argmax(sc)), sc.shape)
    return tb.lf(int(s), int(a))


@dataclass
class TrainingReport:
    skipped: list[str] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)


def train_perceptron(
    train: Sequence[tuple[DelexicalizedQuestion | str, QuestionLF]],
    epochs: int,
    seed: int,
    fz: Featurizer,
    props: Iterable[str] | None = None,
    report: TrainingReport | None = None,
) -> RankerWeights:
    """Averaged structured perceptron over the full candidate space.

    Candidates are all template-valid LFs over ``props`` (default: the
    featurizer's theory). Questions whose gold LF falls outside that space
    are logged and skipped.
    """
    report = report if report is not None else TrainingReport()
    if props is None:
        if fz.theory is None:
            raise LinkError("need props or a theory to enumerate candidates")
        props = fz.theory.properties
    props = sorted(set(props))
    data = []
    for n, (q, gold) in enumerate(train):
        name = f"#{n}"
        if not gold.properties() <= set(props):
            log.warning("gold LF of question %s is not a candidate; skipped", name)
            report.skipped.append(name)
            continue
        tb = fz.tables(q, props)
        data.append((tb, tb.indices(gold)))

    w = np.zeros(N_FEATURES)
    u = np.zeros(N_FEATURES)  # running sum of c * update, for averaging
    c = 1
    rng = random.Random(seed)
    order = list(range(len(data)))
    for _ in range(epochs):
        rng.shuffle(order)
        hits = 0
        for i in order:
            tb, (gs, ga) = data[i]
            sc = tb.scores(w)
            ps, pa = np.unravel_index(int(np.argmax(sc)), sc.shape)
            if sc[ps, pa] > sc[gs, ga] or (ps, pa) != (gs, ga) and sc[ps, pa] == sc[gs, ga]:
                delta = tb.vector(gs, ga) - tb.vector(int(ps), int(pa))
                w += delta
                u += c * delta
            else:
                hits += 1
            c += 1
        report.train_accuracy.append(hits / len(data) if data else 0.0)
    if epochs == 0:
        return RankerWeights.zeros()
    return RankerWeights.from_array(w - u / c)
