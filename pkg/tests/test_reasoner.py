import pytest
from hypothesis import given, settings, strategies as st

from qualqa.lf import Direction, QRel, QuestionLF, QVal, World, enumerate_lfs, parse_lf
from qualqa.reasoner import (
    DegenerateSetupError,
    FactSet,
    InconsistentSeedError,
    Verdict,
    answer,
    closure,
    normalize_setup,
)
from qualqa.theory import Theory, ValueLevel, load_theory
from oracles import naive_closure
from test_theory import theories

H, L = Direction.HIGHER, Direction.LOWER
W1, W2 = World.WORLD1, World.WORLD2

TOY_CAR = "qrel(distance, higher, world1) -> qrel(friction, higher, world2) ; qrel(friction, higher, world1)"
FIG3_3 = "qrel(friction, higher, world1) -> qrel(heat, higher, world1) ; qrel(heat, higher, world2)"


def test_normalize_template_two(friction):
    lf = parse_lf(
        "qval(smoothness, low, world1), qval(smoothness, high, world2) -> qrel(speed, higher, world1) ; qrel(speed, higher, world2)"
    )
    assert normalize_setup(lf, friction).facts == {QRel("smoothness", H, W2), QRel("smoothness", L, W1)}


def test_normalize_template_one(friction):
    lf = parse_lf(TOY_CAR)
    assert normalize_setup(lf, friction).facts == {QRel("distance", H, W1), QRel("distance", L, W2)}


def test_degenerate_setup_rejected(friction):
    # QuestionLF refuses equal values, so build the object behind its back
    lf = parse_lf(
        "qval(speed, low, world1), qval(speed, high, world2) -> qrel(heat, higher, world1) ; qrel(heat, higher, world2)"
    )
    object.__setattr__(lf, "setup", (QVal("speed", ValueLevel.LOW, W1), QVal("speed", ValueLevel.LOW, W2)))
    with pytest.raises(DegenerateSetupError):
        normalize_setup(lf, friction)


def test_closure_friction_chain(friction):
    seed = FactSet(frozenset({QRel("smoothness", H, W2), QRel("smoothness", L, W1)}))
    got = closure(seed, friction, bidirectional=False)
    assert QRel("speed", H, W2) in got
    assert QRel("friction", H, W1) in got
    # frozen from the naive forward-chaining oracle
    want, bad = naive_closure(seed.facts, friction, bidirectional=False)
    assert got.facts == want and not bad


def test_reverse_inference_needed_for_car_example():
    t = load_theory("property friction\nproperty distance\nq-(friction, distance)\n")
    seed = {QRel("distance", H, W1), QRel("distance", L, W2)}
    forward = closure(seed, t, bidirectional=False)
    assert forward.properties() == {"distance"}
    both = closure(seed, t)
    assert QRel("friction", H, W2) in both


def test_empty_theory_closure_is_seed_plus_mirror():
    t = Theory(frozenset({"a"}))
    got = closure({QRel("a", H, W1)}, t)
    assert got.facts == {QRel("a", H, W1), QRel("a", L, W2)}


def test_inconsistent_seed():
    t = Theory(frozenset({"a"}))
    with pytest.raises(InconsistentSeedError):
        closure({QRel("a", H, W1), QRel("a", H, W2)}, t)


def test_worked_answers(friction):
    assert answer(parse_lf(TOY_CAR), friction) is Verdict.A
    assert answer(parse_lf(FIG3_3), friction) is Verdict.A


def test_unknown_when_disconnected():
    t = Theory(frozenset({"a", "b"}))
    lf = parse_lf("qrel(a, higher, world1) -> qrel(b, higher, world1) ; qrel(b, higher, world2)")
    assert answer(lf, t) is Verdict.UNKNOWN


def test_conflicting_paths_are_flagged():
    t = load_theory("property a\nproperty b\nproperty c\nq+(a,b)\nq+(b,c)\nq-(a,c)\n")
    got = closure({QRel("a", H, W1)}, t, bidirectional=False)
    assert got.conflicts == {"c"}
    assert not any(f.property == "c" for f in got.facts)
    lf = parse_lf("qrel(a, higher, world1) -> qrel(c, higher, world1) ; qrel(c, higher, world2)")
    assert answer(lf, t, bidirectional=False) is Verdict.UNKNOWN


def test_valid_answer_pairs_are_exclusive(full_theory):
    # world-only or direction-only contrasts cannot both follow from a consistent closure
    lfs = enumerate_lfs({"friction", "heat", "strength", "time"}, "both")
    assert all(answer(lf, full_theory) is not Verdict.AMBIGUOUS for lf in lfs)


@st.composite
def seeds(draw, t):
    props = sorted(t.properties)
    chosen = draw(st.lists(st.sampled_from(props), min_size=1, max_size=2, unique=True))
    return {QRel(p, draw(st.sampled_from(Direction)), draw(st.sampled_from(World))) for p in chosen}


@settings(max_examples=1000, deadline=None)
@given(theories(), st.data(), st.booleans())
def test_closure_matches_naive_fixpoint(t, data, bidirectional):
    seed = data.draw(seeds(t))
    got = closure(seed, t, bidirectional)
    want, bad = naive_closure(seed, t, bidirectional)
    assert got.facts == want
    assert got.conflicts == bad


FRICTION_LFS = enumerate_lfs({"friction", "heat", "speed", "distance", "smoothness"}, "both")


@settings(max_examples=300)
@given(st.sampled_from(FRICTION_LFS))
def test_world_relabeling_symmetry(friction, lf):
    assert answer(lf.swap_worlds(), friction) is answer(lf, friction)


@settings(max_examples=300)
@given(st.sampled_from([lf for lf in FRICTION_LFS if lf.template == 1]))
def test_setup_mirror_equivalence(friction, lf):
    mirrored = QuestionLF((lf.setup[0].mirror(),), lf.answer_a, lf.answer_b)
    assert answer(mirrored, friction) is answer(lf, friction)


def test_closure_is_symmetric(friction):
    got = closure({QRel("heat", L, W2)}, friction)
    for f in got.facts:
        assert f.mirror() in got.facts
