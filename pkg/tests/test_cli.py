import csv
import io
import json

import pytest

from glasschain.cli import main
from glasschain.disorder import DisorderModel, bernoulli, gaussian, shifted_symmetric, two_point
from glasschain.modelfile import ModelFileError, dump_model, parse_model

SYM3 = "[model]\nN = 3\n\n[bond *]\nkind = bernoulli\nJ = 1\np = 0.5\n"


@pytest.fixture
def sym3(tmp_path):
    p = tmp_path / "sym3.ini"
    p.write_text(SYM3)
    return str(p)


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_exact(capsys):
    assert main(["exact", "--J", "1,1,1"]) == 0
    out = {(r[0], r[1], r[2]): r[3] for r in rows(capsys.readouterr().out)[1:]}
    assert float(out[("omega", "1", "")]) == pytest.approx(0.930553325103354, rel=1e-14)
    assert float(out[("truncated", "1", "2")]) == pytest.approx(0.0646238342424454, rel=1e-14)
    assert out[("omega", "1", "")] == "0.930553325103354"


def test_exact_brute_force_and_free(capsys):
    assert main(["exact", "--J", "1,1,-1", "--brute-force", "--workers", "1"]) == 0
    assert "brute_force" in capsys.readouterr().out
    assert main(["exact", "--J", "1,1", "--free"]) == 0
    out = rows(capsys.readouterr().out)
    assert ["truncated", "1", "2", "0", "closed_form"] in out


def test_check2_symmetric(sym3, capsys):
    assert main(["check2", "--model", sym3]) == 0
    r = rows(capsys.readouterr().out)
    assert r[1][5] == "negative"
    assert float(r[1][3]) == pytest.approx(-0.183200630196674, rel=1e-13)


def test_check_exit_codes(tmp_path, capsys):
    ferro = tmp_path / "f.ini"
    ferro.write_text("[model]\nN = 3\n[bond *]\nkind = bernoulli\nJ = 1\np = 1\n")
    assert main(["check2", "--model", str(ferro)]) == 2
    assert main(["check1", "--model", str(ferro)]) == 0
    zero = tmp_path / "z.ini"
    zero.write_text("[model]\nN = 3\n[bond *]\nkind = bernoulli\nJ = 1\np = 0.5\n"
                    "[bond 3]\nkind = shifted_symmetric\nmu = 0\nJ = 0\n")
    assert main(["check2", "--model", str(zero), "--h", "1", "--k", "2"]) == 3


def test_average(sym3, capsys):
    assert main(["average", "--model", sym3, "--h", "1", "--k", "2"]) == 0
    r = rows(capsys.readouterr().out)
    assert float(r[1][3]) == pytest.approx(0.627897885538266, rel=1e-13)
    assert float(r[2][3]) == pytest.approx(-0.183200630196674, rel=1e-13)


def test_average_continuous_needs_seed(tmp_path, capsys):
    p = tmp_path / "g.ini"
    p.write_text("[model]\nN = 3\n[bond *]\nkind = gaussian\nmu = 0\ns = 1\n")
    assert main(["average", "--model", str(p), "--samples", "200"]) == 1
    assert "--seed" in capsys.readouterr().err
    assert main(["average", "--model", str(p), "--samples", "200", "--seed", "4"]) == 0


def test_curve(tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["curve", "--magnitudes", "1,1,1", "--l", "1", "--grid", "0.5:2.0:16", "-o", str(out)]) == 0
    r = rows(out.read_text())
    assert r[0] == ["j_l", "alpha_star"]
    at_one = [float(a) for j, a in r[1:] if abs(float(j) - 1.0) < 1e-12]
    assert at_one == [pytest.approx(0.739235452848841, abs=1e-12)]


def test_curve_from_model(sym3, capsys):
    assert main(["curve", "--model", sym3, "--grid", "1"]) == 0
    assert rows(capsys.readouterr().out)[1] == ["1", "0.739235452848841"]


def test_scan(tmp_path):
    out = tmp_path / "scan.csv"
    assert main(["scan", "--magnitudes", "1,1,1", "--alpha-grid", "0:1:11", "-o", str(out)]) == 0
    r = rows(out.read_text())
    assert r[0] == ["alpha", "average", "g", "verdict"]
    verdicts = [x[3] for x in r[1:]]
    assert verdicts == ["negative"] * 8 + ["positive"] * 3


def test_explore(tmp_path, capsys):
    out = tmp_path / "v.jsonl"
    assert main(["explore", "--search", "all", "-o", str(out), "--workers", "1"]) == 0
    lines = out.read_text().splitlines()
    assert lines and all(set(json.loads(x)) == {"graph", "laws", "pair", "value", "tolerance"} for x in lines)
    summary = json.loads((tmp_path / "v.jsonl.summary.json").read_text())
    assert {s["scan"] for s in summary} == {"control", "chord", "asymmetric"}
    assert all(s["violations"] == 0 for s in summary if s["scan"] == "control")


def test_outputs_byte_identical(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["explore", "--search", "asymmetric", "-o", str(a), "--workers", "1"])
    main(["explore", "--search", "asymmetric", "-o", str(b), "--workers", "1"])
    assert a.read_bytes() == b.read_bytes()
    c1, c2 = tmp_path / "c1.csv", tmp_path / "c2.csv"
    main(["scan", "--magnitudes", "0.5,1,2,1.5", "--h", "2", "--k", "4", "-o", str(c1)])
    main(["scan", "--magnitudes", "0.5,1,2,1.5", "--h", "2", "--k", "4", "-o", str(c2)])
    assert c1.read_bytes() == c2.read_bytes()


@pytest.mark.parametrize("argv, needle", [
    (["exact"], "--J"),
    (["exact", "--J", "1,x"], "--J"),
    (["curve", "--magnitudes", "1,1,1", "--grid", "0.5:2"], "--grid"),
    (["check1"], "--model"),
    (["check1", "--model", "/nonexistent.ini"], "--model"),
    (["check2", "--model", "MODEL", "--h", "1", "--k", "1"], "h != k"),
    (["check1", "--model", "MODEL", "--h", "9"], "out of range"),
    (["nosuchcommand"], "invalid choice"),
    (["curve", "--magnitudes", "1,1,1", "--grid", "1", "--unknown", "3"], "--unknown"),
])
def test_usage_errors(argv, needle, sym3, capsys):
    argv = [sym3 if a == "MODEL" else a for a in argv]
    assert main(argv) == 1
    assert needle in capsys.readouterr().err


@pytest.mark.parametrize("text, field", [
    ("[model]\nN = 2\ncolour = red\n[bond *]\nkind = bernoulli\nJ = 1\np = 0.5\n", "model.colour"),
    ("[model]\nN = 2\n[bond *]\nkind = bernoulli\nJ = 1\np = 0.5\nmu = 1\n", "bond 1.mu"),
    ("[model]\nN = 2\n[bond 1]\nkind = bernoulli\nJ = 1\np = 0.5\n", "bond 2"),
    ("[model]\nN = 2\n[bond *]\nkind = bernoulli\nJ = 1\n", "bond 1.p"),
    ("[model]\n[bond *]\nkind = bernoulli\nJ = 1\np = 0.5\n", "model.N"),
    ("[model]\nN = 2\n[bonds]\nkind = bernoulli\n", "[bonds]"),
    ("[model]\nN = 2\n[bond *]\nkind = bernoulli\nJ = -1\np = 0.5\n", "bond 1"),
])
def test_model_file_errors(text, field):
    with pytest.raises(ModelFileError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_model(text)


def test_unknown_key_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[model]\nN = 2\n[bond *]\nkind = bernoulli\nJ = 1\np = 0.5\nq = 0.5\n")
    assert main(["check1", "--model", str(p)]) == 1
    assert "bond 1.q" in capsys.readouterr().err


def test_dump_model_round_trip(tmp_path):
    model = DisorderModel([bernoulli(0.1 + 0.2, 1 / 3), shifted_symmetric(0.7, 2.25),
                           two_point(1e-3, -2.5, 0.125), gaussian(0.1, 1.7)])
    text = dump_model(model, seed=99)
    assert parse_model(text) == (model, 99)
    src = tmp_path / "m.ini"
    src.write_text(text)
    dumped = tmp_path / "d.ini"
    assert main(["average", "--model", str(src), "--dump-model", str(dumped), "--samples", "200"]) == 0
    assert parse_model(dumped.read_text()) == (model, 99)


def test_workers_env(monkeypatch, sym3, capsys):
    monkeypatch.setenv("GLASSCHAIN_WORKERS", "2")
    assert main(["check1", "--model", sym3]) == 0
    monkeypatch.setenv("GLASSCHAIN_WORKERS", "many")
    assert main(["check1", "--model", sym3]) == 1
    assert "GLASSCHAIN_WORKERS" in capsys.readouterr().err
