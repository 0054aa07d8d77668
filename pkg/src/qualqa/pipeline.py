"""End-to-end runs: tag, group, delexicalize, parse, reason, score."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .ccg import Grammar, parse_question
from .data import Metrics, Prediction, QuestionRecord, evaluate, zero_shot_split
from .linker import Featurizer, RankerWeights, TrainingReport, best_lf, train_perceptron
from .lf import QuestionLF
from .reasoner import ReasonerError, Verdict, answer
from .theory import Theory, TheoryError
from .worlds import DelexicalizedQuestion, delexicalize, group_spans, tag_spans, world_alignment


@dataclass(frozen=True)
class Delexed:
    record: QuestionRecord
    question: DelexicalizedQuestion
    aligned: bool | None  # False when WORLD1 is the annotation's world2

    def to_annotation_order(self, lf: QuestionLF | None) -> QuestionLF | None:
        if lf is None or self.aligned is not False:
            return lf
        return lf.swap_worlds()

    @property
    def gold_in_question_order(self) -> QuestionLF:
        return self.to_annotation_order(self.record.gold_lf)


def delex_record(r: QuestionRecord, mode: str = "gold") -> Delexed:
    if mode == "gold" and r.world_annotations:
        spans = tag_spans(r.question, "gold", r.world_annotations)
    else:
        spans = tag_spans(r.question, "heuristic")
    groups = group_spans(spans)
    aligned = world_alignment(groups, r.world_annotations) if r.world_annotations else None
    return Delexed(r, delexicalize(r.question, groups), aligned)


def safe_answer(lf: QuestionLF | None, t: Theory) -> Verdict | None:
    if lf is None:
        return None
    try:
        return answer(lf, t)
    except (ReasonerError, TheoryError):
        return None


def gold_oracle(records: Sequence[QuestionRecord], t: Theory) -> dict[str, Prediction]:
    return {r.id: Prediction(r.gold_lf, safe_answer(r.gold_lf, t)) for r in records}


def ccg_predictions(records: Sequence[QuestionRecord], g: Grammar, t: Theory, mode: str = "heuristic") -> dict[str, Prediction]:
    out = {}
    for r in records:
        d = delex_record(r, mode)
        lf = parse_question(d.question, g, t)
        out[r.id] = Prediction(d.to_annotation_order(lf), safe_answer(lf, t))
    return out


def run(predictions: dict[str, Prediction], records: Sequence[QuestionRecord]) -> Metrics:
    return evaluate(predictions, records)


def train_ranker(
    records: Sequence[QuestionRecord],
    fz: Featurizer,
    props: Iterable[str],
    epochs: int = 10,
    seed: int = 0,
    mode: str = "gold",
    report: TrainingReport | None = None,
) -> RankerWeights:
    data = []
    for r in records:
        d = delex_record(r, mode)
        data.append((d.question, d.gold_in_question_order))
    return train_perceptron(data, epochs, seed, fz, props, report)


def ranker_predictions(
    records: Sequence[QuestionRecord],
    fz: Featurizer,
    w: RankerWeights,
    props: Iterable[str],
    t: Theory,
    mode: str = "gold",
) -> dict[str, Prediction]:
    props = sorted(set(props))
    wa = w.array()
    out = {}
    for r in records:
        d = delex_record(r, mode)
        lf = best_lf(fz.tables(d.question, props), wa)
        out[r.id] = Prediction(d.to_annotation_order(lf), safe_answer(lf, t))
    return out


@dataclass(frozen=True)
class ZeroShotRow:
    property: str
    n_unseen: int
    seen: Metrics
    unseen: Metrics

    def as_dict(self) -> dict:
        return {"property": self.property, "n_unseen": self.n_unseen, "seen": self.seen.as_dict(), "unseen": self.unseen.as_dict()}


def zero_shot(
    train: Sequence[QuestionRecord],
    test: Sequence[QuestionRecord],
    held_out: str,
    fz: Featurizer,
    props: Iterable[str],
    t: Theory,
    epochs: int = 10,
    seed: int = 0,
) -> ZeroShotRow:
    """Train without any question mentioning ``held_out``; score seen and unseen test questions."""
    kept = [r for r in train if held_out not in r.properties_mentioned]
    seen, unseen = zero_shot_split(test, held_out)
    w = train_ranker(kept, fz, props, epochs, seed)
    preds = ranker_predictions(test, fz, w, props, t)
    m_seen = evaluate({r.id: preds[r.id] for r in seen}, seen)
    m_unseen = evaluate({r.id: preds[r.id] for r in unseen}, unseen)
    return ZeroShotRow(held_out, len(unseen), m_seen, m_unseen)
