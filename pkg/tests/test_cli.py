import json

import pytest

from microblossom.bench import CSV_SCHEMA
from microblossom.cli import main
from microblossom.graph import load_graph


def test_graph_decode_bench_stats(tmp_path, capsys):
    g = tmp_path / "g.json"
    assert main(["graph", "--code", "surface", "--distance", "3", "--rounds", "2", "--out", str(g)]) == 0
    graph = load_graph(g)
    assert graph.num_vertices == 16
    syn = tmp_path / "s.json"
    syn.write_text(json.dumps({"rounds": [[0], [8]]}))
    out = tmp_path / "m.json"
    assert main(["decode", str(g), str(syn), "--stream", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["pairs"] == [[0, 8]] and len(doc["round_cycles"]) == 2
    assert main(["decode", str(g), str(syn), "--batch", "--no-prematch", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["total_weight"] == doc["total_weight"]

    csv = tmp_path / "b.csv"
    argv = ["bench", "--distance", "3", "--p", "0.02", "0.05", "--shots", "50", "--seed", "4", "--out", str(csv)]
    assert main(argv + ["--summary", str(tmp_path / "sum.json")]) == 0
    assert csv.read_text().startswith(f"# {CSV_SCHEMA}\n")
    assert len(json.loads((tmp_path / "sum.json").read_text())) == 2
    assert "p=0.02" in capsys.readouterr().out
    assert main(["stats", str(csv), "--distance", "3", "--out", str(tmp_path / "t.json")]) == 0
    table = json.loads((tmp_path / "t.json").read_text())
    assert {row["p"] for row in table} == {0.02, 0.05}


def test_verify_exit_code(tmp_path):
    report = tmp_path / "r.json"
    argv = ["verify", "--code", "repetition", "--distance", "3", "5", "--p", "0.1", "--shots", "30", "--out", str(report)]
    assert main(argv) == 0
    assert json.loads(report.read_text())["ok"] is True


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["graph", "--distance", "4"]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["bench", "--stream", "--batch"])
