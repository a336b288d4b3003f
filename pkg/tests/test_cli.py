import csv
import io
import json

import pytest

from groupedtw.cli import run_cli
from groupedtw.pace import format_graph

from conftest import complete, path


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(argv):
    out = io.StringIO()
    code = run_cli(argv, out)
    return code, out.getvalue()


def test_decompose_then_validate(tmp_path):
    gr = write(tmp_path, "p5.gr", format_graph(path(5)))
    td = str(tmp_path / "p5.td")
    code, _ = run(["decompose", "--k", "1", "-i", gr, "-o", td])
    assert code == 0
    code, text = run(["validate", "-i", gr, "-t", td, "--k", "1"])
    assert code == 0 and "valid" in text


def test_decompose_rejects_k5(tmp_path):
    gr = write(tmp_path, "k5.gr", format_graph(complete(5)))
    code, text = run(["decompose", "--k", "1", "-i", gr, "-o", str(tmp_path / "x.td")])
    assert code == 2 and text.strip() == "tw > 1"


def test_validate_reports_uncovered_edge(tmp_path):
    gr = write(tmp_path, "p3.gr", "p tw 3 2\n1 2\n2 3\n")
    td = write(tmp_path, "bad.td", "s td 2 2 3\nb 1 1 2\nb 2 3\n1 2\n")
    code, text = run(["validate", "-i", gr, "-t", td])
    assert code == 1 and "edge-coverage" in text and "1-2" in text


def test_validate_width_bound(tmp_path):
    gr = write(tmp_path, "k4.gr", format_graph(complete(4)))
    td = write(tmp_path, "k4.td", "s td 1 4 4\nb 1 1 2 3 4\n")
    assert run(["validate", "-i", gr, "-t", td])[0] == 0
    assert run(["validate", "-i", gr, "-t", td, "--k", "1"])[0] == 0
    assert run(["validate", "-i", gr, "-t", td, "--k", "0"])[0] == 1


def test_exact(tmp_path):
    gr = write(tmp_path, "k5.gr", format_graph(complete(5)))
    assert run(["exact", "-i", gr]) == (0, "4\n")
    big = write(tmp_path, "big.gr", format_graph(path(25)))
    assert run(["exact", "-i", big])[0] == 65


def test_usage_and_parse_errors(tmp_path):
    assert run(["decompose", "-i", "x"])[0] == 64
    assert run([])[0] == 64
    assert run(["exact", "-i", str(tmp_path / "missing.gr")])[0] == 64
    bad = write(tmp_path, "bad.gr", "p tw 2 1\n1 1\n")
    assert run(["exact", "-i", bad])[0] == 65
    assert run(["decompose", "--k", "1", "--c-alpha", "1", "-i", bad, "-o", "x"])[0] == 64


def test_bench_csv_is_deterministic():
    argv = ["bench", "--k", "1", "--sizes", "60,120", "--seed", "4"]
    a, b = run(argv)[1], run(argv)[1]
    rows_a = list(csv.reader(io.StringIO(a)))
    rows_b = list(csv.reader(io.StringIO(b)))
    assert rows_a[0] == ["n", "width_out", "rounds", "dp_recomputes", "phi_start", "wall_ms"]
    assert [r[:-1] for r in rows_a] == [r[:-1] for r in rows_b]
    assert all(int(r[1]) <= 3 for r in rows_a[1:])


def test_stats_and_telemetry(tmp_path):
    from groupedtw.oracle import GeneratorSpec, generate
    g, _ = generate(GeneratorSpec("partial-k-tree", 40, 1, 1.0, 2))
    gr = write(tmp_path, "g.gr", format_graph(g))
    code, text = run(["stats", "-i", gr, "--k", "1", "--start-width", "7"])
    recs = [json.loads(line) for line in text.splitlines()]
    assert code == 0 and recs and {"phi_start", "dp_recomputes", "w", "mode"} <= set(recs[0])
    rep = tmp_path / "rep.jsonl"
    code, _ = run(["decompose", "--k", "1", "-i", gr, "-o", str(tmp_path / "g.td"),
                   "--telemetry", str(rep), "--parallel-components"])
    assert code == 0 and rep.exists()


def test_stats_start_width_checked(tmp_path):
    gr = write(tmp_path, "p5.gr", format_graph(path(5)))
    assert run(["stats", "-i", gr, "--k", "1", "--start-width", "9"])[0] == 64
