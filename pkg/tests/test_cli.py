import json
import shutil
import subprocess
import sys

import pytest

from qualqa.cli import main
from qualqa.resources import path

FRICTION = str(path("friction.theory"))
FULL = str(path("quarel.theory"))
GRAMMAR = str(path("friction.grammar"))
TOY_CAR = "qrel(distance, higher, world1) -> qrel(friction, higher, world2) ; qrel(friction, higher, world1)"
ERASER = "qrel(friction, higher, world1) -> qrel(heat, higher, world1) ; qrel(heat, higher, world2)"


@pytest.fixture
def data(tmp_path):
    lines = open("tests/fixtures/quarel_sample.jsonl").read().splitlines()
    (tmp_path / "train.jsonl").write_text("\n".join(lines) + "\n")
    (tmp_path / "dev.jsonl").write_text("\n".join(lines) + "\n{broken\n")
    (tmp_path / "test.jsonl").write_text("")
    return tmp_path


def test_theory_check_ok(capsys):
    assert main(["theory-check", "--theory", FRICTION]) == 0
    assert capsys.readouterr().out.startswith("ok\t5 properties")


def test_theory_check_contradiction(tmp_path, capsys):
    f = tmp_path / "bad.theory"
    f.write_text("property a\nproperty b\nq+(a, b)\nq-(a, b)\n")
    assert main(["theory-check", "--theory", str(f)]) == 1
    out = capsys.readouterr().out
    assert "q+(a, b)" in out and "q-(a, b)" in out


def test_theory_check_missing_file(tmp_path):
    assert main(["theory-check", "--theory", str(tmp_path / "nope")]) == 2
    assert main(["theory-check"]) == 2


@pytest.mark.parametrize("lf, want", [(TOY_CAR, "A"), (ERASER, "A")])
def test_answer(lf, want, capsys):
    assert main(["answer", "--theory", FRICTION, lf]) == 0
    assert capsys.readouterr().out.strip() == want


def test_answer_empty_theory_unknown(tmp_path, capsys):
    f = tmp_path / "empty.theory"
    f.write_text("property distance\nproperty friction\n")
    assert main(["answer", "--theory", str(f), TOY_CAR]) == 0
    assert capsys.readouterr().out.strip() == "unknown"


def test_answer_bad_lf(capsys):
    assert main(["answer", "--theory", FRICTION, "qrel(distance, higher) -> nonsense"]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2


def test_delex_with_literals(capsys):
    q = "A ball rolls further on wood than carpet because the (A) carpet is smoother (B) wood is smoother"
    assert main(["delex", "--question", q, "--world1", "wood", "--world2", "carpet"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "A ball rolls further on WORLD1 than WORLD2 because the (A) WORLD2 is smoother (B) WORLD1 is smoother"
    assert main(["delex", "--question", q, "--world1", "wood"]) == 2


@pytest.mark.parametrize("parser", ["ccg", "ranker"])
def test_parse(parser, capsys):
    q = "A ball rolls further on wood than carpet because the (A) carpet is smoother (B) wood is smoother"
    args = ["parse", "--parser", parser, "--theory", FULL, "--grammar", GRAMMAR, "--question", q]
    assert main(args) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-2] == "qrel(distance, higher, world1) -> qrel(smoothness, higher, world2) ; qrel(smoothness, higher, world1)"
    assert out[-1] == "B"


def test_eval_gold(data, tmp_path, capsys):
    rep = tmp_path / "r.json"
    assert main(["eval", "--parser", "gold", "--theory", FULL, "--data", str(data), "--subset", "all", "--report", str(rep)]) == 0
    out = capsys.readouterr()
    header, row = out.out.splitlines()
    assert header.split("\t") == ["model", "split", "n", "answer_acc", "parse_acc", "abstentions"]
    assert row.split("\t") == ["gold", "dev", "15", "1.0000", "1.0000", "0"]
    assert "1 record(s) quarantined" in out.err
    assert json.loads(rep.read_text())["metrics"]["n"] == 15


def test_eval_ccg_and_ranker_are_deterministic(data, tmp_path, capsys):
    for parser in ("ccg", "ranker"):
        outs = []
        for i in range(2):
            rep = tmp_path / f"{parser}{i}.json"
            args = ["eval", "--parser", parser, "--theory", FULL, "--grammar", GRAMMAR, "--data", str(data),
                    "--tagging", "heuristic" if parser == "ccg" else "gold", "--epochs", "3", "--seed", "1",
                    "--report", str(rep)]
            assert main(args) == 0
            outs.append((capsys.readouterr().out, rep.read_bytes()))
        assert outs[0] == outs[1]
        assert outs[0][0].splitlines()[1].split("\t")[2] == "12"  # friction subset of the sample


def test_eval_ranker_saved_weights(data, tmp_path, capsys):
    w = tmp_path / "w.tsv"
    base = ["eval", "--parser", "ranker", "--theory", FULL, "--data", str(data), "--epochs", "2"]
    assert main(base + ["--save-weights", str(w)]) == 0
    first = capsys.readouterr().out
    assert main(base + ["--weights", str(w)]) == 0
    assert capsys.readouterr().out == first


def test_eval_missing_data(tmp_path):
    assert main(["eval", "--parser", "gold", "--theory", FULL, "--data", str(tmp_path)]) == 2


def test_zeroshot_row(data, tmp_path, capsys):
    rep = tmp_path / "z.json"
    assert main(["zeroshot", "--theory", FULL, "--data", str(data), "--held-out", "heat", "--epochs", "2", "--report", str(rep)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split("\t") == ["property", "n_unseen", "seen_answer", "seen_parse", "unseen_answer", "unseen_parse"]
    assert lines[1].startswith("heat\t4\t")
    assert lines[2].startswith("weighted\t4")
    assert json.loads(rep.read_text())["rows"][0]["property"] == "heat"
    assert main(["zeroshot", "--theory", FULL, "--data", str(data), "--held-out", "gravity"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qualqa", "answer", "--theory", FRICTION, TOY_CAR], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "A"


@pytest.mark.skipif(shutil.which("qualqa") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["qualqa", "theory-check", "--theory", FRICTION], capture_output=True, text=True)
    assert r.returncode == 0
