"""Command-line entry point.

Exit codes: 0 success, 1 domain failure (bad theory, LF or annotation),
2 usage or I/O problems.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .ccg import GrammarError, parse_question, read_grammar
from .data import FRICTION_PROPERTIES, DataError, Metrics, friction_subset, load_split, split_file
from .lf import LFError, parse_lf
from .linker import (
    DiagonalWeights,
    Featurizer,
    LinkError,
    Linker,
    TrainingReport,
    best_lf,
    load_cues,
    load_diagonal,
    load_embeddings,
    load_lexicon,
    load_weights,
    save_weights,
)
from .pipeline import ccg_predictions, gold_oracle, ranker_predictions, run, train_ranker, zero_shot
from .reasoner import ReasonerError, answer
from .resources import path as resource_path
from .theory import ContradictionError, Theory, TheoryError, read_theory
from .worlds import WorldTaggingError, delexicalize, group_spans, tag_spans

OK, DOMAIN, USAGE = 0, 1, 2
TSV_HEADER = "model\tsplit\tn\tanswer_acc\tparse_acc\tabstentions"


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    theory: Path | None = None
    grammar: Path | None = None
    lexicon: Path | None = None
    embeddings: Path | None = None
    cues: Path | None = None
    values: Path | None = None
    k: Path | None = None
    weights: Path | None = None
    data: Path | None = None
    split: str = "dev"
    train_split: str = "train"
    subset: str = "friction"
    tagging: str = "gold"
    parser: str = "ccg"
    held_out: str | None = None
    epochs: int = 10
    seed: int = 0
    report: Path | None = None
    save_weights: Path | None = None
    model: str | None = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        fields = {f for f in cls.__dataclass_fields__}
        return cls(**{k.replace("-", "_"): v for k, v in vars(ns).items() if k.replace("-", "_") in fields})


def _need(cfg: RunConfig, name: str) -> Path:
    p = getattr(cfg, name)
    if p is None:
        raise UsageError(f"--{name.replace('_', '-')} is required for {cfg.command}")
    if not Path(p).exists():
        raise FileNotFoundError(f"{name}: no such file {p}")
    return Path(p)


def _theory(cfg: RunConfig) -> Theory:
    return read_theory(_need(cfg, "theory"))


def _featurizer(cfg: RunConfig, t: Theory) -> Featurizer:
    e = load_embeddings(cfg.embeddings or resource_path("embeddings.txt"))
    lex = load_lexicon(cfg.lexicon or resource_path("lexicon.txt"))
    lex.check_covers(t)
    k = load_diagonal(cfg.k) if cfg.k else DiagonalWeights.identity(e.dim)
    cues = load_cues(cfg.cues or resource_path("cues.txt"), cfg.values or resource_path("values.txt"))
    return Featurizer(Linker(e, lex, k), cues, t)


def _literals(ns) -> tuple[str, str] | None:
    if ns.world1 and ns.world2:
        return ns.world1, ns.world2
    if ns.world1 or ns.world2:
        raise UsageError("give both --world1 and --world2, or neither")
    return None


def _delex(ns, cfg: RunConfig):
    lits = _literals(ns)
    mode = cfg.tagging if lits else "heuristic"
    spans = tag_spans(ns.question, mode, lits)
    return delexicalize(ns.question, group_spans(spans))


def _write_report(cfg: RunConfig, report: dict) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if cfg.report:
        Path(cfg.report).write_text(text)


def _row(model: str, split: str, m: Metrics) -> str:
    return f"{model}\t{split}\t{m.n}\t{m.answer_accuracy:.4f}\t{m.parse_accuracy:.4f}\t{m.abstentions}"


# -- commands ----------------------------------------------------------------


def cmd_theory_check(cfg: RunConfig, ns) -> int:
    try:
        t = _theory(cfg)
    except ContradictionError as e:
        a, b = e.edges
        print(f"error: {e}", file=sys.stderr)
        print(f"conflict\t{a}\t{b}")
        return DOMAIN
    print(f"ok\t{len(t.properties)} properties\t{len(t.influences)} influences")
    for inf in sorted(t.influences):
        print(f"\t{inf}")
    return OK


def cmd_answer(cfg: RunConfig, ns) -> int:
    t = _theory(cfg)
    lf = parse_lf(ns.lf, t)
    print(answer(lf, t).value)
    return OK


def cmd_delex(cfg: RunConfig, ns) -> int:
    d = _delex(ns, cfg)
    print(d.text)
    for span, world in d.mapping:
        print(f"{world.value.upper()}\t{span.text}")
    return OK


def cmd_parse(cfg: RunConfig, ns) -> int:
    t = _theory(cfg)
    d = _delex(ns, cfg)
    trace: list[str] = []
    if cfg.parser == "ccg":
        lf = parse_question(d, read_grammar(_need(cfg, "grammar")), t, trace)
    elif cfg.parser == "ranker":
        fz = _featurizer(cfg, t)
        w = load_weights(cfg.weights or resource_path("demo_weights.tsv"))
        lf = best_lf(fz.tables(d, t.properties), w.array())
    else:
        raise UsageError("parse supports --parser ccg or ranker")
    print(d.text)
    if ns.trace:
        for line in trace:
            print(f"# {line}")
    if lf is None:
        print("no parse")
        print("unknown")
        return OK
    print(lf)
    try:
        print(answer(lf, t).value)
    except ReasonerError:
        print("unknown")
    return OK


def _records(cfg: RunConfig, split: str, t: Theory):
    recs, bad = load_split(split_file(_need(cfg, "data"), split), t, split)
    if bad:
        print(f"{split}: {len(bad)} record(s) quarantined", file=sys.stderr)
        for q in bad[:10]:
            print(f"  {q.id} (line {q.line}): {q.reason}", file=sys.stderr)
    if cfg.subset == "friction":
        recs = friction_subset(recs)
    return recs, bad


def _props(cfg: RunConfig, t: Theory) -> frozenset[str]:
    return FRICTION_PROPERTIES & t.properties if cfg.subset == "friction" else t.properties


def cmd_eval(cfg: RunConfig, ns) -> int:
    t = _theory(cfg)
    recs, bad = _records(cfg, cfg.split, t)
    report: dict = {"split": cfg.split, "subset": cfg.subset, "parser": cfg.parser, "quarantined": len(bad)}
    if cfg.parser == "gold":
        preds = gold_oracle(recs, t)
    elif cfg.parser == "ccg":
        preds = ccg_predictions(recs, read_grammar(_need(cfg, "grammar")), t, cfg.tagging)
    elif cfg.parser == "ranker":
        fz = _featurizer(cfg, t)
        props = _props(cfg, t)
        if cfg.weights:
            w = load_weights(_need(cfg, "weights"))
        else:
            train, _ = _records(cfg, cfg.train_split, t)
            tr = TrainingReport()
            w = train_ranker(train, fz, props, cfg.epochs, cfg.seed, "gold", tr)
            report["training"] = {"n": len(train), "skipped": len(tr.skipped), "epochs": cfg.epochs, "seed": cfg.seed}
            if cfg.save_weights:
                save_weights(w, cfg.save_weights)
        preds = ranker_predictions(recs, fz, w, props, t, cfg.tagging)
    else:
        raise UsageError(f"unknown parser {cfg.parser!r}")
    m = run(preds, recs)
    model = cfg.model or cfg.parser
    print(TSV_HEADER)
    print(_row(model, cfg.split, m))
    report["model"] = model
    report["metrics"] = m.as_dict()
    _write_report(cfg, report)
    return OK


def cmd_zeroshot(cfg: RunConfig, ns) -> int:
    t = _theory(cfg)
    train, _ = _records(cfg, cfg.train_split, t)
    test, _ = _records(cfg, cfg.split, t)
    props = _props(cfg, t)
    fz = _featurizer(cfg, t)
    held = sorted(props) if cfg.held_out in (None, "all") else [cfg.held_out]
    for p in held:
        if p not in props:
            raise UsageError(f"--held-out {p} is not one of {', '.join(sorted(props))}")
    rows = []
    print("property\tn_unseen\tseen_answer\tseen_parse\tunseen_answer\tunseen_parse")
    for p in held:
        try:
            row = zero_shot(train, test, p, fz, props, t, cfg.epochs, cfg.seed)
        except DataError as e:
            print(f"{p}: {e}", file=sys.stderr)
            continue
        rows.append(row)
        print(
            f"{p}\t{row.n_unseen}\t{row.seen.answer_accuracy:.4f}\t{row.seen.parse_accuracy:.4f}"
            f"\t{row.unseen.answer_accuracy:.4f}\t{row.unseen.parse_accuracy:.4f}"
        )
    n = sum(r.n_unseen for r in rows)
    avg_ans = sum(r.unseen.answer_accuracy * r.n_unseen for r in rows) / n if n else 0.0
    avg_parse = sum(r.unseen.parse_accuracy * r.n_unseen for r in rows) / n if n else 0.0
    print(f"weighted\t{n}\t\t\t{avg_ans:.4f}\t{avg_parse:.4f}")
    _write_report(
        cfg,
        {
            "split": cfg.split,
            "epochs": cfg.epochs,
            "seed": cfg.seed,
            "rows": [r.as_dict() for r in rows],
            "unseen_weighted": {"n": n, "answer_acc": round(avg_ans, 6), "parse_acc": round(avg_parse, 6)},
        },
    )
    return OK


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qualqa", description="Answer qualitative two-world questions.")
    sub = ap.add_subparsers(dest="command", required=True)

    def paths(p, *names):
        for n in names:
            p.add_argument(f"--{n}", type=Path)

    p = sub.add_parser("theory-check", help="validate a theory file")
    paths(p, "theory")
    p.set_defaults(func=cmd_theory_check)

    p = sub.add_parser("answer", help="answer an LF with the reasoner")
    paths(p, "theory")
    p.add_argument("lf", help='e.g. "qrel(speed, higher, world1) -> qrel(heat, higher, world1) ; qrel(heat, higher, world2)"')
    p.set_defaults(func=cmd_answer)

    for name, func, helptext in (
        ("delex", cmd_delex, "tag and delexicalize world mentions"),
        ("parse", cmd_parse, "parse one question into an LF and answer it"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--question", required=True)
        p.add_argument("--world1")
        p.add_argument("--world2")
        p.add_argument("--tagging", choices=["gold", "heuristic"], default="gold")
        if name == "parse":
            paths(p, "theory", "grammar", "weights", "lexicon", "embeddings", "cues", "values", "k")
            p.add_argument("--parser", choices=["ccg", "ranker"], default="ccg")
            p.add_argument("--trace", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="score a pipeline on a dataset split")
    paths(p, "theory", "grammar", "weights", "lexicon", "embeddings", "cues", "values", "k", "data", "report", "save-weights")
    p.add_argument("--parser", choices=["gold", "ccg", "ranker"], required=True)
    p.add_argument("--tagging", choices=["gold", "heuristic"], default="gold")
    p.add_argument("--split", default="dev")
    p.add_argument("--train-split", default="train")
    p.add_argument("--subset", choices=["friction", "all"], default="friction")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("zeroshot", help="hold out each property in turn and score unseen questions")
    paths(p, "theory", "lexicon", "embeddings", "cues", "values", "k", "data", "report")
    p.add_argument("--held-out", default="all")
    p.add_argument("--split", default="dev")
    p.add_argument("--train-split", default="train")
    p.add_argument("--subset", choices=["friction", "all"], default="friction")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_zeroshot)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    cfg = RunConfig.from_args(ns)
    try:
        return ns.func(cfg, ns)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except (TheoryError, LFError, ReasonerError, GrammarError, LinkError, DataError, WorldTaggingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return DOMAIN


if __name__ == "__main__":
    sys.exit(main())
