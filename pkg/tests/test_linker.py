import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qualqa.data import load_split
from qualqa.lf import QuestionLF, enumerate_lfs, parse_lf
from qualqa.linker import (
    FEATURES,
    LinkError,
    PropertyLexicon,
    RankerWeights,
    TrainingReport,
    default_featurizer,
    link_score,
    load_embeddings,
    load_lexicon,
    load_weights,
    question_property_scores,
    rank_candidates,
    save_weights,
    train_perceptron,
)
from qualqa.pipeline import delex_record
from qualqa.resources import path
from qualqa.text import words
from qualqa.theory import load_theory

FIXTURE = "tests/fixtures/quarel_sample.jsonl"
TOY_CAR = (
    "Alan noticed that his toy car rolls further on a wood floor than on a thick carpet. "
    "This suggests that: (A) The carpet has more resistance (B) The floor has more resistance"
)


@pytest.fixture(scope="module")
def emb():
    return load_embeddings(path("embeddings.txt"))


@pytest.fixture(scope="module")
def lex():
    return load_lexicon(path("lexicon.txt"))


@pytest.fixture(scope="module")
def fz(full_theory):
    return default_featurizer(full_theory)


@pytest.fixture(scope="module")
def demo():
    return load_weights(path("demo_weights.tsv"))


@pytest.fixture(scope="module")
def sample(full_theory):
    recs, _ = load_split(FIXTURE, full_theory)
    return {r.id: r for r in recs}


def raw_vectors(file):
    """Independent reading of the embedding file, normalized in plain Python."""
    out = {}
    for line in open(file):
        w, *xs = line.split()
        xs = [float(x) for x in xs]
        n = math.sqrt(sum(x * x for x in xs))
        out[w] = [x / n for x in xs]
    return out


@pytest.fixture(scope="module")
def raw():
    return raw_vectors(path("embeddings.txt"))


def dot(a, b):
    return math.fsum(x * y for x, y in zip(a, b))


def test_embeddings_unit_norm(emb):
    assert len(emb) > 4000 and emb.dim == 50
    assert np.allclose(np.linalg.norm(emb.vectors, axis=1), 1.0, atol=1e-6)


def test_lexicon_covers_theory(lex, full_theory):
    lex.check_covers(full_theory)
    with pytest.raises(LinkError):
        lex.without("speed").check_covers(full_theory)


def test_self_similarity(emb, lex):
    assert link_score("speed", "speed", emb, lex) == pytest.approx(1.0, abs=1e-9)


def test_missing_token_scores_zero(emb, lex):
    assert "zzqx" not in emb
    assert link_score("speed", "zzqx", emb, lex) == 0.0


def test_unknown_property(emb, lex):
    with pytest.raises(LinkError):
        link_score("colour", "red", emb, lex)


def test_longer_against_length(emb, raw):
    lex = PropertyLexicon({"length": ("length", "long")})
    want = max(dot(raw["length"], raw["longer"]), dot(raw["long"], raw["longer"]))
    assert link_score("length", "longer", emb, lex) == pytest.approx(want, abs=1e-9)


def test_diagonal_weights_apply(emb):
    from qualqa.linker import DiagonalWeights

    lex = PropertyLexicon({"p": ("fast",)})
    k = DiagonalWeights(np.linspace(0.5, 1.5, emb.dim))
    want = float(np.sum(emb.get("fast") * k.diag * emb.get("faster")))
    assert link_score("p", "faster", emb, lex, k) == pytest.approx(want, abs=1e-12)
    with pytest.raises(LinkError):
        link_score("p", "faster", emb, lex, DiagonalWeights(np.ones(3)))


def test_bad_embedding_files(tmp_path):
    f = tmp_path / "e.txt"
    f.write_text("a 1 0\nb 1\n")
    with pytest.raises(LinkError):
        load_embeddings(f)
    f.write_text("a 0 0\n")
    with pytest.raises(LinkError):
        load_embeddings(f)
    f.write_text("2 2\na 3 4\nb 0 1\n")
    e = load_embeddings(f)
    assert np.allclose(e.get("a"), [0.6, 0.8])


_WORDS = raw_vectors(path("embeddings.txt"))
_VOCAB = sorted(_WORDS)


@settings(max_examples=300, deadline=None)
@given(token=st.sampled_from(_VOCAB), prop=st.sampled_from(sorted(load_lexicon(path("lexicon.txt")).seeds)))
def test_link_bounded_and_matches_oracle(token, prop, emb, lex):
    s = link_score(prop, token, emb, lex)
    assert s <= 1.0 + 1e-9
    want = max(dot(_WORDS[w], _WORDS[token]) for w in lex.words(prop) if w in _WORDS)
    assert s == pytest.approx(want, abs=1e-9)
    if token in lex.words(prop):
        assert s == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(seeds=st.lists(st.sampled_from(_VOCAB[:300]), min_size=1, max_size=6), token=st.sampled_from(_VOCAB), data=st.data())
def test_link_ignores_seed_order_and_duplicates(seeds, token, data, emb):
    shuffled = data.draw(st.permutations(seeds))
    dup = seeds + data.draw(st.lists(st.sampled_from(seeds), max_size=4))
    a = link_score("p", token, emb, PropertyLexicon({"p": tuple(seeds)}))
    assert a == link_score("p", token, emb, PropertyLexicon({"p": tuple(shuffled)}))
    assert a == link_score("p", token, emb, PropertyLexicon({"p": tuple(dup)}))


def test_question_scores_toy_car(emb, lex, full_theory):
    s = question_property_scores(words(TOY_CAR), full_theory, emb, lex)
    top = sorted(s, key=lambda p: -s[p])[:3]
    assert {"friction", "distance"} <= set(top)


def test_question_scores_empty_and_unknown(emb, lex, full_theory):
    assert set(question_property_scores([], full_theory, emb, lex).values()) == {0.0}
    assert set(question_property_scores(["zzqx", "qqzz"], full_theory, emb, lex).values()) == {0.0}


def test_demo_weights_rank_toy_car_first(fz, demo, sample, full_theory):
    d = delex_record(sample["sample-toy-car"])
    cands = enumerate_lfs(full_theory.properties)
    ranked = rank_candidates(d.question, cands, demo, fz)
    assert ranked[0][0] == d.gold_in_question_order
    assert ranked[0][1] > ranked[1][1]


def test_zero_weights_keep_input_order(fz, full_theory):
    cands = enumerate_lfs(["friction", "speed"])[:40]
    ranked = rank_candidates(TOY_CAR, cands, RankerWeights.zeros(), fz)
    assert [c for c, _ in ranked] == cands


def test_single_candidate(fz, demo, emb, lex):
    lf = parse_lf("qrel(speed, higher, world1) -> qrel(heat, higher, world1) ; qrel(heat, higher, world2)")
    assert [c for c, _ in rank_candidates(TOY_CAR, [lf], demo, fz)] == [lf]
    assert [c for c, _ in rank_candidates(TOY_CAR, [lf], demo, emb, lex)] == [lf]


def test_empty_candidates(fz, demo):
    with pytest.raises(ValueError):
        rank_candidates(TOY_CAR, [], demo, fz)


def test_features_are_finite_and_named(fz):
    lf = parse_lf("qrel(distance, higher, world1) -> qrel(friction, higher, world2) ; qrel(friction, higher, world1)")
    f = fz.features("WORLD1 rolls further than WORLD2. (A) WORLD2 (B) WORLD1", lf)
    assert tuple(f) == FEATURES
    assert all(math.isfinite(x) for x in f.values())


# tiny weights would underflow when halved, which is not exact
_WEIGHT = st.floats(-5, 5, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-200)
_WEIGHTS = st.lists(_WEIGHT, min_size=len(FEATURES), max_size=len(FEATURES))


@settings(max_examples=40, deadline=None)
@given(raw_w=_WEIGHTS, k=st.integers(-20, 20))
def test_top1_invariant_to_power_of_two_scaling(raw_w, k, fz, sample):
    # scaling by 2**k is exact in floating point, so ties break identically
    d = delex_record(sample["sample-ball"])
    cands = enumerate_lfs(["distance", "smoothness", "friction"])
    w = RankerWeights(dict(zip(FEATURES, raw_w)))
    top = rank_candidates(d.question, cands, w, fz)[0][0]
    assert rank_candidates(d.question, cands, w.scaled(2.0**k), fz)[0][0] == top


@settings(max_examples=40, deadline=None)
@given(raw_w=_WEIGHTS, c=st.floats(0.01, 100))
def test_top1_invariant_to_positive_scaling(raw_w, c, fz, sample):
    # any other factor rounds each product, so only near-ties may reorder
    d = delex_record(sample["sample-ball"])
    cands = enumerate_lfs(["distance", "smoothness", "friction"])
    w = RankerWeights(dict(zip(FEATURES, raw_w)))
    ranked = rank_candidates(d.question, cands, w, fz)
    score = dict(ranked)
    top = rank_candidates(d.question, cands, w.scaled(c), fz)[0][0]
    assert score[top] == pytest.approx(ranked[0][1], abs=1e-9 * max(1.0, abs(ranked[0][1])))


def test_weights_roundtrip(tmp_path, demo):
    f = tmp_path / "w.tsv"
    save_weights(demo, f)
    assert load_weights(f).array().tolist() == demo.array().tolist()
    f.write_text("nonsense\t1\n")
    with pytest.raises(LinkError):
        load_weights(f)


SEPARABLE = [
    (
        "The puck slid further on WORLD1 than on WORLD2. Which has more friction? (A) WORLD1 (B) WORLD2",
        "qrel(distance, higher, world1) -> qrel(friction, higher, world1) ; qrel(friction, higher, world2)",
    ),
    (
        "WORLD1 is hot and WORLD2 is cold. The block on (A) WORLD1 (B) WORLD2 has more friction",
        "qval(heat, high, world1), qval(heat, low, world2) -> qrel(friction, higher, world1) ; qrel(friction, higher, world2)",
    ),
]


def _train_acc(data, w, fz, props):
    from qualqa.linker import best_lf

    return sum(best_lf(fz.tables(q, props), w.array()) == g for q, g in data) / len(data)


def test_perceptron_separable(fz):
    props = ["distance", "friction", "heat"]
    data = [(q, parse_lf(g)) for q, g in SEPARABLE]
    report = TrainingReport()
    w = train_perceptron(data, 10, seed=0, fz=fz, props=props, report=report)
    assert report.train_accuracy[-1] == 1.0
    assert _train_acc(data, w, fz, props) == 1.0


def test_perceptron_zero_epochs(fz):
    data = [(q, parse_lf(g)) for q, g in SEPARABLE]
    w = train_perceptron(data, 0, seed=0, fz=fz, props=["distance", "friction", "heat"])
    assert set(w.values.values()) == {0.0}


def test_perceptron_deterministic(fz, sample, full_theory):
    data = [(delex_record(r).question, delex_record(r).gold_in_question_order) for r in sample.values()]
    a = train_perceptron(data, 3, seed=7, fz=fz)
    b = train_perceptron(data, 3, seed=7, fz=fz)
    assert a == b


def test_perceptron_skips_missing_gold(fz):
    data = [(q, parse_lf(g)) for q, g in SEPARABLE]
    report = TrainingReport()
    train_perceptron(data, 2, seed=0, fz=fz, props=["distance", "friction"], report=report)
    assert report.skipped == ["#1"]


def test_linking_independent_of_training(emb, lex, fz, sample):
    held = "smoothness"
    tokens = sorted(_WORDS)[:500]
    before = [link_score(held, t, emb, lex) for t in tokens]
    data = [(delex_record(r).question, delex_record(r).gold_in_question_order) for r in sample.values()]
    train_perceptron([x for x in data if held not in x[1].properties()], 2, seed=0, fz=fz)
    train_perceptron(data, 2, seed=0, fz=fz)
    assert [link_score(held, t, emb, lex) for t in tokens] == before


def test_rank_accepts_plain_theory(emb, lex):
    t = load_theory("property friction\nproperty distance\nq-(friction, distance)\n")
    cands = enumerate_lfs(t.properties)
    ranked = rank_candidates(TOY_CAR, cands, load_weights(path("demo_weights.tsv")), emb, lex, theory=t)
    assert isinstance(ranked[0][0], QuestionLF)
