import csv
import json

import numpy as np
import pytest

from bsi.cli import main, parse_lengths, parse_state_range

from conftest import EVEN, GOLDEN_MEAN


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def even_data(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "even.txt"
    assert run("generate", "--process", "even", "--length", 2**14, "--seed", 1, "--out", path) == 0
    return path


def _is(library, key, topology):
    return key == library.find(topology).id


def test_parsers():
    assert parse_state_range("1..5") == (1, 5)
    assert parse_state_range("3") == (3, 3)
    assert parse_lengths("2^0..2^3") == [1, 2, 4, 8]
    assert parse_lengths("3, 2^4") == [3, 16]


def test_enumerate(tmp_path, capsys):
    out = tmp_path / "lib.jsonl"
    assert run("enumerate", "--states", "1..2", "--alphabet", 2, "--out", out) == 0
    text = capsys.readouterr().out
    assert "n=1 k=2: 1" in text and "n=2 k=2: 7" in text and "total: 8" in text
    header = json.loads(out.read_text().splitlines()[0])
    assert header["census"] == [1, 7]
    assert run("enumerate", "--states", "0..1", "--out", out) == 2
    assert run("enumerate", "--states", "2..1", "--out", out) == 2


def test_generate(tmp_path):
    out = tmp_path / "gm.txt"
    assert run("generate", "--process", "golden-mean", "--length", 20, "--seed", 3, "--out", out) == 0
    body = out.read_text().strip()
    assert len(body) == 20 and set(body) <= {"0", "1"} and "00" not in body
    assert run("generate", "--process", "even", "--length", 0, "--seed", 3, "--out", out) == 0
    assert out.read_text().strip() == ""
    assert run("generate", "--process", "bogus", "--length", 5, "--out", out) == 2
    assert run("generate", "--process", "file:/nonexistent.json", "--length", 5, "--out", out) == 4


def test_generate_from_file(tmp_path):
    machine = tmp_path / "m.json"
    machine.write_text(json.dumps({"n": 1, "k": 3, "edges": [[0, 0, 0, 0.2], [0, 1, 0, 0.3], [0, 2, 0, 0.5]]}))
    out = tmp_path / "d.txt"
    assert run("generate", "--process", f"file:{machine}", "--length", 300, "--seed", 0, "--out", out) == 0
    assert set(out.read_text().strip()) == {"0", "1", "2"}


def test_infer_even(tmp_path, even_data, full_library):
    out = tmp_path / "r.json"
    assert run("infer", "--data", even_data, "--beta", 4, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert _is(full_library, rep["map"]["id"], EVEN)
    assert rep["map"]["posterior"] > 0.99
    post = [r["posterior"] for r in rep["rows"]]
    assert post == sorted(post, reverse=True)
    assert sum(post) + rep["tail_mass"] == pytest.approx(1.0, abs=1e-9)
    assert rep["data"]["length"] == 2**14
    assert rep["config"] == {"alpha": 1.0, "beta": 4.0, "seed": None}


def test_infer_tail_mass_with_small_top(tmp_path, even_data):
    out = tmp_path / "r.json"
    short = tmp_path / "short.txt"
    short.write_text(even_data.read_text()[:40])
    assert run("infer", "--data", short, "--top", 3, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert len(rep["rows"]) == 3 and rep["tail_mass"] > 0
    assert sum(r["posterior"] for r in rep["rows"]) + rep["tail_mass"] == pytest.approx(1.0, abs=1e-9)


def test_infer_golden_mean_short(tmp_path, full_library):
    # Seed 8 gives one of the less decisive length-64 realizations (about 1 in 6 seeds).
    data = tmp_path / "gm.txt"
    out = tmp_path / "r.json"
    run("generate", "--process", "golden-mean", "--length", 64, "--seed", 8, "--out", data)
    assert run("infer", "--data", data, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert _is(full_library, rep["map"]["id"], GOLDEN_MEAN)
    assert 0.5 < rep["map"]["posterior"] < 0.95


def test_infer_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("01012")
    out = tmp_path / "r.json"
    assert run("infer", "--data", bad, "--out", out) == 4
    assert run("infer", "--data", tmp_path / "missing.txt", "--out", out) == 4
    lib = tmp_path / "lib.jsonl"
    run("enumerate", "--states", "1..2", "--out", lib)
    gm_only = tmp_path / "gm_only.jsonl"
    lines = lib.read_text().splitlines()
    header = json.loads(lines[0])
    rows = [json.loads(l) for l in lines[1:]]
    gm = [r for r in rows if r["n"] == 2 and sorted(map(tuple, r["edges"])) == [(0, 1, 1), (1, 0, 0), (1, 1, 1)]]
    assert len(gm) == 1
    header["census"] = [0, 1]
    gm_only.write_text(json.dumps(header) + "\n" + json.dumps(gm[0]) + "\n")
    zeros = tmp_path / "zeros.txt"
    zeros.write_text("1001")
    assert run("infer", "--library", gm_only, "--data", zeros, "--out", out) == 3
    assert json.loads(out.read_text())["map"] is None
    assert run("sample", "--library", gm_only, "--data", zeros, "--out", tmp_path / "s.csv") == 3
    assert run("infer", "--data", zeros) == 2


def test_sample_and_density(tmp_path, even_data):
    samples = tmp_path / "s.csv"
    summary = tmp_path / "s.json"
    assert run("sample", "--data", even_data, "--samples", 2000, "--seed", 5,
               "--out", samples, "--summary", summary) == 0
    first = samples.read_bytes()
    s = json.loads(summary.read_text())
    assert s["n_samples"] == 2000
    assert s["h_mu"]["ci_low"] <= s["h_mu"]["mean"] <= s["h_mu"]["ci_high"]
    assert abs(s["h_mu"]["mean"] - 2 / 3) < 0.02
    assert run("--threads", 2, "sample", "--data", even_data, "--samples", 2000, "--seed", 5,
               "--out", samples) == 0
    assert samples.read_bytes() == first

    dens = tmp_path / "d.csv"
    assert run("density", "--input", samples, "--column", "hmu", "--out", dens) == 0
    rows = list(csv.reader(dens.open()))
    assert rows[0] == ["x", "density"] and len(rows) == 513
    x, d = np.array(rows[1:], dtype=float).T
    assert np.trapezoid(d, x) == pytest.approx(1.0, abs=1e-2)
    assert run("density", "--input", samples, "--column", "nope", "--out", dens) == 4
    assert run("density", "--input", samples, "--column", "hmu", "--bandwidth", "wide", "--out", dens) == 2


def test_density_degenerate(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("index,topology_id,start_state,h_mu,c_mu\n0,a,0,0.5,0.0\n1,a,0,0.5,0.0\n")
    out = tmp_path / "d.csv"
    assert run("density", "--input", path, "--column", "c_mu", "--out", out) == 0
    assert out.read_text().startswith("# degenerate")


def test_sample_zero(tmp_path, even_data):
    out = tmp_path / "s.csv"
    assert run("sample", "--data", even_data, "--samples", 0, "--out", out) == 0
    assert out.read_text() == "index,topology_id,start_state,h_mu,c_mu\n"
    assert run("sample", "--data", even_data, "--samples", -1, "--out", out) == 2


def test_converge_even(tmp_path, even_data, full_library):
    out = tmp_path / "conv"
    argv = ["converge", "--data", even_data, "--lengths", "2^0..2^8", "--samples", 300,
            "--seed", 2, "--out", out]
    assert run(*argv) == 0
    rows = list(csv.DictReader((out / "summary.csv").open()))
    assert [int(r["L"]) for r in rows] == [2**i for i in range(9)]
    acc = [int(r["accepting"]) for r in rows]
    assert all(a >= b for a, b in zip(acc, acc[1:]))
    states = [int(r["map_n_states"]) for r in rows]
    switch = next(int(r["L"]) for r, n in zip(rows, states) if n == 2)
    assert states[0] == 1 and 16 <= switch <= 128
    assert _is(full_library, rows[-1]["map_id"], EVEN)
    assert all((out / f"report_L{2**i}.json").exists() for i in range(9))
    before = {p.name: p.read_bytes() for p in out.iterdir()}
    assert run("--threads", 2, *argv) == 0
    assert {p.name: p.read_bytes() for p in out.iterdir()} == before


def test_converge_rejects_long_lengths(tmp_path, even_data):
    assert run("converge", "--data", even_data, "--lengths", "2^20", "--out", tmp_path / "c") == 2
