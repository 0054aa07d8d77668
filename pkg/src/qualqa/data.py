"""Dataset ingestion, annotation-to-LF deduction, splits and metrics.

Release records are JSON lines::

    {"id": ..., "question": "... (A) ... (B) ...", "answer_index": 0,
     "logical_forms": ["(infer (speed higher world1) (smoothness higher world2) (smoothness higher world1))", ...],
     "world_literals": {"world1": "ice", "world2": "snow"}}

Release LFs are normalized as follows:

=====================================  ==========================================
release                                canonical
=====================================  ==========================================
``(infer SETUP A B)``                  ``SETUP -> A ; B``
``(p higher|lower wN)``                ``qrel(p, higher|lower, wN)``
``(and (p low|high w1) (p ... w2))``   ``qval(p, low|high, w1), qval(p, ..., w2)``
camelCase property ``amountSweat``     snake_case ``amount_sweat``
=====================================  ==========================================

Only the first entry of ``logical_forms`` is used; later entries are the
world-swapped variant.  Records that fail any step are quarantined with a
reason rather than dropped.
"""

from __future__ import annotations

import enum
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .lf import Direction, LFError, QRel, QuestionLF, QVal, World, parse_lf
from .reasoner import Verdict, closure, normalize_setup
from .text import segment, words
from .theory import Influence, Sign, Theory, ValueLevel

SPLITS = ("train", "dev", "test")
FRICTION_PROPERTIES = frozenset({"friction", "heat", "distance", "speed", "smoothness"})


class DataError(ValueError):
    pass


class AnnotationError(DataError):
    pass


# ------------------------------------------------------------- normalization


def snake_case(name: str) -> str:
    return re.sub(r"(?<=[a-z0-9])([A-Z])", r"_\1", name).lower()


def _sexp(text: str):
    toks = re.findall(r"\(|\)|[^\s()]+", text)
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            raise LFError("unexpected end of release LF")
        tok = toks[pos]
        pos += 1
        if tok == "(":
            out = []
            while pos < len(toks) and toks[pos] != ")":
                out.append(read())
            if pos >= len(toks):
                raise LFError("unbalanced parentheses in release LF")
            pos += 1
            return out
        if tok == ")":
            raise LFError("unexpected ')' in release LF")
        return tok

    node = read()
    if pos != len(toks):
        raise LFError("trailing text after release LF")
    return node


def _triple(node) -> tuple[str, str, World]:
    if not (isinstance(node, list) and len(node) == 3 and all(isinstance(x, str) for x in node)):
        raise LFError(f"expected (property level world), got {node!r}")
    prop, level, world = node
    try:
        w = World(world.lower())
    except ValueError:
        raise LFError(f"unknown world {world!r}") from None
    return snake_case(prop), level.lower(), w


def _qrel(node) -> QRel:
    p, level, w = _triple(node)
    try:
        return QRel(p, Direction(level), w)
    except ValueError:
        raise LFError(f"unknown direction {level!r}") from None


def _qval(node) -> QVal:
    p, level, w = _triple(node)
    try:
        return QVal(p, ValueLevel(level), w)
    except ValueError:
        raise LFError(f"unknown value {level!r}") from None


def normalize_release_lf(text: str) -> QuestionLF:
    """Map a release LF (or canonical text) onto the canonical AST."""
    if "->" in text or "→" in text:
        return parse_lf(text)
    node = _sexp(text)
    if not (isinstance(node, list) and len(node) == 4 and node[0] == "infer"):
        raise LFError("release LF is not (infer SETUP A B)")
    _, setup, a, b = node
    if isinstance(setup, list) and setup and setup[0] == "and":
        atoms = tuple(_qval(x) for x in setup[1:])
    else:
        atoms = (_qrel(setup),)
    return QuestionLF(atoms, _qrel(a), _qrel(b))


# ------------------------------------------------------------------- records


@dataclass(frozen=True)
class QuestionRecord:
    id: str
    question: str
    answer_index: int
    gold_lf: QuestionLF
    world_annotations: tuple[str, str] | None = None
    split: str = ""

    def __post_init__(self):
        if self.answer_index not in (0, 1):
            raise DataError(f"{self.id}: answer_index must be 0 or 1")

    @property
    def properties_mentioned(self) -> frozenset[str]:
        return self.gold_lf.properties()

    @property
    def answer(self) -> Verdict:
        return Verdict.A if self.answer_index == 0 else Verdict.B

    @property
    def annotations(self) -> dict[str, str] | None:
        if self.world_annotations is None:
            return None
        return {"world1": self.world_annotations[0], "world2": self.world_annotations[1]}


@dataclass(frozen=True)
class Quarantined:
    id: str
    reason: str
    line: int
    split: str = ""


def record_from_json(obj: Mapping, t: Theory | None = None, split: str = "") -> QuestionRecord:
    try:
        rid = str(obj["id"])
        question = obj["question"]
        answer_index = obj["answer_index"]
        lfs = obj["logical_forms"]
    except KeyError as e:
        raise DataError(f"missing field {e.args[0]!r}") from None
    if not isinstance(question, str) or segment(words(question)) is None:
        raise DataError("question lacks (A)/(B) option markers")
    if isinstance(answer_index, bool) or answer_index not in (0, 1):
        raise DataError(f"answer_index {answer_index!r} is not 0 or 1")
    if not lfs:
        raise DataError("no logical form")
    try:
        lf = normalize_release_lf(lfs[0])
    except LFError as e:
        raise DataError(f"logical form: {e}") from None
    if t is not None:
        unknown = sorted(lf.properties() - t.properties)
        if unknown:
            raise DataError(f"unknown property {', '.join(unknown)}")
    lits = obj.get("world_literals")
    worlds = None
    if isinstance(lits, Mapping) and lits.get("world1") and lits.get("world2"):
        worlds = (str(lits["world1"]), str(lits["world2"]))
    return QuestionRecord(rid, question, int(answer_index), lf, worlds, split)


def read_records(lines: Iterable[str], t: Theory | None = None, split: str = "") -> tuple[list[QuestionRecord], list[Quarantined]]:
    records, bad = [], []
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            bad.append(Quarantined(f"line-{n}", f"malformed JSON: {e.msg}", n, split))
            continue
        try:
            records.append(record_from_json(obj, t, split))
        except DataError as e:
            bad.append(Quarantined(str(obj.get("id", f"line-{n}")), str(e), n, split))
    return records, bad


def load_split(path, t: Theory | None = None, split: str = "") -> tuple[list[QuestionRecord], list[Quarantined]]:
    with open(path, encoding="utf-8") as fh:
        return read_records(fh, t, split)


def split_file(root, split: str) -> Path:
    root = Path(root)
    for name in (f"{split}.jsonl", f"quarel-v1-{split}.jsonl", f"quarel_{split}.jsonl", split):
        p = root / name
        if p.is_file():
            return p
    raise FileNotFoundError(f"no {split} file under {root}")


@dataclass
class Dataset:
    splits: dict[str, list[QuestionRecord]] = field(default_factory=dict)
    quarantine: list[Quarantined] = field(default_factory=list)

    def __len__(self) -> int:
        return sum(len(v) for v in self.splits.values())

    def all(self) -> list[QuestionRecord]:
        return [r for s in SPLITS for r in self.splits.get(s, [])]


def load_dataset(root, t: Theory | None = None, splits: Sequence[str] = SPLITS) -> Dataset:
    ds = Dataset()
    for s in splits:
        recs, bad = load_split(split_file(root, s), t, s)
        ds.splits[s] = recs
        ds.quarantine += bad
    return ds


def default_data_dir() -> Path:
    return Path(os.environ.get("QUAREL_DIR", "data/quarel"))


def is_friction(record: QuestionRecord) -> bool:
    return record.properties_mentioned <= FRICTION_PROPERTIES


def friction_subset(records: Iterable[QuestionRecord]) -> list[QuestionRecord]:
    return [r for r in records if is_friction(r)]


# --------------------------------------------------------------- annotations


class Pairing(enum.Enum):
    SAME_QUESTION_DIFF_WORLDS = "same_question_diff_worlds"
    OPPOSITE_QUESTION_SAME_WORLD = "opposite_question_same_world"


@dataclass(frozen=True)
class AnnotationTuple:
    """What a worker states about a question, from which its LF follows."""

    correct: Verdict
    answer_property: str
    correct_direction: Direction
    pairing: Pairing
    body: object  # Direction for a comparison, (ValueLevel, ValueLevel) for two absolute values
    seed_relation: Influence | None

    def __post_init__(self):
        if self.correct not in (Verdict.A, Verdict.B):
            raise AnnotationError("correct must be A or B")
        if isinstance(self.body, tuple):
            if len(self.body) != 2 or self.body[0] is self.body[1]:
                raise AnnotationError("absolute values must be one low and one high")
        elif not isinstance(self.body, Direction):
            raise AnnotationError("body must be a direction or a pair of values")


def lf_from_annotations(a: AnnotationTuple, p: str) -> QuestionLF:
    """Deduce the LF; the setup is placed in world1."""
    q = a.answer_property
    if a.seed_relation is not None:
        if {a.seed_relation.src, a.seed_relation.dst} != {p, q}:
            raise AnnotationError(f"seed relation {a.seed_relation} does not link {p} and {q}")
        t = Theory(frozenset({p, q}), frozenset({a.seed_relation}))
    else:
        if p != q:
            raise AnnotationError(f"no seed relation links {p} and {q}")
        t = Theory(frozenset({p}))
    if isinstance(a.body, Direction):
        setup = (QRel(p, a.body, World.WORLD1),)
    else:
        setup = (QVal(p, a.body[0], World.WORLD1), QVal(p, a.body[1], World.WORLD2))
    probe = QuestionLF(setup, QRel(q, a.correct_direction, World.WORLD1), QRel(q, a.correct_direction, World.WORLD2))
    facts = closure(normalize_setup(probe, t), t)
    hits = [w for w in World if QRel(q, a.correct_direction, w) in facts]
    if len(hits) != 1:
        raise AnnotationError("no world makes the correct option follow from the seed relation")
    right = QRel(q, a.correct_direction, hits[0])
    if a.pairing is Pairing.SAME_QUESTION_DIFF_WORLDS:
        other = right.swap_worlds()
    else:
        other = QRel(q, a.correct_direction.opposite, right.world)
    pair = (right, other) if a.correct is Verdict.A else (other, right)
    return QuestionLF(setup, *pair)


def _orientation_of(lf: QuestionLF) -> int:
    atom = lf.setup[0]
    if lf.template == 2:
        high = next(x for x in lf.setup if x.value is ValueLevel.HIGH)
        return 1 if high.world is World.WORLD1 else -1
    up = atom.direction is Direction.HIGHER
    return 1 if up == (atom.world is World.WORLD1) else -1


def annotations_from_lf(lf: QuestionLF, correct: Verdict) -> AnnotationTuple:
    """Invert the deduction: the tuple a worker would have given for ``lf``."""
    right = lf.answer_a if correct is Verdict.A else lf.answer_b
    p, q = lf.setup_property, lf.answer_property
    pairing = Pairing.SAME_QUESTION_DIFF_WORLDS if lf.world_contrast else Pairing.OPPOSITE_QUESTION_SAME_WORLD
    if lf.template == 1:
        body = lf.setup[0].direction
    else:
        body = (lf.setup[0].value, lf.setup[1].value)
    seed = None
    if p != q:
        up = right.direction is Direction.HIGHER
        o = 1 if up == (right.world is World.WORLD1) else -1
        seed = Influence(p, q, Sign.PLUS if o == _orientation_of(lf) else Sign.MINUS)
    return AnnotationTuple(correct, q, right.direction, pairing, body, seed)


# ------------------------------------------------------------------- metrics


@dataclass(frozen=True)
class Prediction:
    lf: QuestionLF | None = None
    verdict: Verdict | None = None


@dataclass(frozen=True)
class Metrics:
    answer_accuracy: float
    parse_accuracy: float
    n: int
    abstentions: int
    answer_credit: float = 0.0
    parse_hits: int = 0

    def __post_init__(self):
        for v in (self.answer_accuracy, self.parse_accuracy):
            if not 0.0 <= v <= 1.0:
                raise DataError(f"accuracy {v} outside [0, 1]")

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "answer_acc": round(self.answer_accuracy, 6),
            "parse_acc": round(self.parse_accuracy, 6),
            "abstentions": self.abstentions,
        }


def combine(parts: Iterable[Metrics]) -> Metrics:
    parts = list(parts)
    n = sum(m.n for m in parts)
    credit = sum(m.answer_credit for m in parts)
    hits = sum(m.parse_hits for m in parts)
    return Metrics(credit / n if n else 0.0, hits / n if n else 0.0, n, sum(m.abstentions for m in parts), credit, hits)


def evaluate(predictions: Mapping[str, Prediction], gold: Sequence[QuestionRecord]) -> Metrics:
    """Answer credit 1 / 0 / 0.5 (abstain, ambiguous, unknown); parse = exact LF match."""
    ids = {r.id for r in gold}
    if set(predictions) != ids:
        missing = sorted(ids - set(predictions))[:3]
        extra = sorted(set(predictions) - ids)[:3]
        raise DataError(f"prediction ids do not match records (missing {missing}, unexpected {extra})")
    credit, hits, abstain = 0.0, 0, 0
    for r in gold:
        pred = predictions[r.id]
        v = pred.verdict
        if v is None or not v.decided:
            credit += 0.5
            abstain += 1
        elif v is r.answer:
            credit += 1.0
        if pred.lf is not None and pred.lf == r.gold_lf:
            hits += 1
    n = len(gold)
    return Metrics(credit / n if n else 0.0, hits / n if n else 0.0, n, abstain, credit, hits)


def zero_shot_split(records: Sequence[QuestionRecord], held_out: str) -> tuple[list[QuestionRecord], list[QuestionRecord]]:
    train = [r for r in records if held_out not in r.properties_mentioned]
    test = [r for r in records if held_out in r.properties_mentioned]
    if not test:
        raise DataError(f"property {held_out!r} does not occur in these records")
    return train, test
