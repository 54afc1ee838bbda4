import csv
import hashlib
import io
import json
import logging

import numpy as np
import pytest

from graphreorder import EdgeList, Permutation, build_csr, from_edges, load_edge_list
from graphreorder.cli import (
    BENCH_COLUMNS,
    RunManifest,
    UsageError,
    cmd_bench,
    cmd_reorder,
    cmd_stats,
    geometric_mean,
    main,
)
from graphreorder.generators import rmat
from graphreorder.graph import read_csr, read_permutation, write_csr, write_edge_list


@pytest.fixture
def small_graph(tmp_path):
    path = tmp_path / "g.csr"
    with open(path, "wb") as fh:
        write_csr(build_csr(rmat(8, 4, seed=1)), fh)
    return path


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- convert -----------------------------------------------------------------


def test_convert_text_binary_text_round_trip(tmp_path):
    src = tmp_path / "g.txt"
    src.write_text("# demo\n3 0\n0 1\n0 1\n2 2\n")
    assert main(["convert", "--graph", str(src), "--out", str(tmp_path / "g.csr")]) == 0
    assert main(["convert", "--graph", str(tmp_path / "g.csr"), "--to", "text",
                 "--out", str(tmp_path / "back.txt")]) == 0
    back = load_edge_list(tmp_path / "back.txt")
    # canonical form: arcs sorted by (source, target), duplicates kept
    assert back.edges == sorted(load_edge_list(src).edges)


def test_convert_bad_magic_fails_without_output(tmp_path, capsys):
    bad = tmp_path / "bad.csr"
    bad.write_bytes(b"CSRG" + bytes(3))
    out = tmp_path / "o.txt"
    assert main(["convert", "--graph", str(bad), "--to", "text", "--out", str(out)]) == 1
    assert not out.exists()
    assert list(tmp_path.glob(".tmp-*")) == []
    assert "error" in capsys.readouterr().err


def test_convert_parse_error_exit_code(tmp_path):
    src = tmp_path / "g.txt"
    src.write_text("0 1\nfoo bar\n")
    assert main(["convert", "--graph", str(src), "--out", str(tmp_path / "g.csr")]) == 1


@pytest.mark.slow
def test_convert_million_edge_round_trip_is_stable(tmp_path):
    g = build_csr(rmat(16, 16, seed=42))
    assert g.num_edges == 1 << 20
    first = tmp_path / "a.csr"
    with open(first, "wb") as fh:
        write_csr(g, fh)
    assert main(["convert", "--graph", str(first), "--to", "text", "--out", str(tmp_path / "a.txt")]) == 0
    assert main(["convert", "--graph", str(tmp_path / "a.txt"), "--out", str(tmp_path / "b.csr")]) == 0
    assert _sha(first) == _sha(tmp_path / "b.csr")


# -- generate / stats --------------------------------------------------------


def test_generate_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["generate", "--scale", "8", "--edge-factor", "4", "--block-scale", "4",
                     "--permute", "--out", str(tmp_path / f"{name}.csr")]) == 0
    assert _sha(tmp_path / "a.csr") == _sha(tmp_path / "b.csr")
    g = read_csr(tmp_path / "a.csr")
    assert (g.num_vertices, g.num_edges) == (256, 1024)


def test_stats_path_five():
    g = build_csr(EdgeList.from_pairs([(i, i + 1) for i in range(4)]).symmetrized())
    stats = cmd_stats(g)
    assert stats["approx_diameter"] == 4 and stats["suggested_kappa"] == 2


def test_stats_kappa_from_long_path():
    g = build_csr(EdgeList.from_pairs([(i, i + 1) for i in range(20)]).symmetrized())
    assert cmd_stats(g)["suggested_kappa"] == 10


def test_stats_empty_graph_is_error(tmp_path):
    with pytest.raises(UsageError):
        cmd_stats(build_csr(EdgeList.from_pairs([], num_vertices=0)))
    empty = tmp_path / "e.txt"
    empty.write_text("# nothing\n")
    assert main(["stats", "--graph", str(empty)]) == 2


def test_stats_json(small_graph, capsys):
    assert main(["stats", "--graph", str(small_graph), "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["num_vertices"] == 256 and data["num_edges"] == 1024
    assert data["suggested_kappa"] == max(1, data["approx_diameter"] // 2)


# -- reorder -----------------------------------------------------------------


def test_reorder_identity_file(small_graph, tmp_path):
    out = tmp_path / "p.txt"
    assert main(["reorder", "--graph", str(small_graph), "--scheme", "identity", "--out", str(out)]) == 0
    assert read_permutation(out) == Permutation.identity(256)


def test_reorder_lorder_logs_resolved_kappa(small_graph, tmp_path, caplog):
    g = read_csr(small_graph)
    with caplog.at_level(logging.INFO, logger="graphreorder"):
        perm, info = cmd_reorder(g, "lorder")
    assert info["resolved_kappa"] == cmd_stats(g)["suggested_kappa"]
    assert f"kappa resolved from diameter estimate: {info['resolved_kappa']}" in caplog.text
    assert info["reorder_time"] >= 0


def test_reorder_unknown_scheme_is_usage_error(small_graph, tmp_path, capsys):
    with pytest.raises(UsageError):
        cmd_reorder(read_csr(small_graph), "bogus")
    with pytest.raises(SystemExit) as exc:
        main(["reorder", "--graph", str(small_graph), "--scheme", "bogus", "--out", str(tmp_path / "p")])
    assert exc.value.code == 2


def test_reorder_writes_locality_table(small_graph, tmp_path):
    loc = tmp_path / "loc.csv"
    assert main(["reorder", "--graph", str(small_graph), "--scheme", "lorder", "--kappa", "2",
                 "--out", str(tmp_path / "p.txt"), "--localities", str(loc)]) == 0
    rows = list(csv.DictReader(loc.open()))
    assert sum(int(r["size"]) for r in rows) == 256


# -- run ---------------------------------------------------------------------


def test_run_with_permutation_and_trace(small_graph, tmp_path):
    perm_path = tmp_path / "p.txt"
    main(["reorder", "--graph", str(small_graph), "--scheme", "random", "--out", str(perm_path)])
    out = tmp_path / "r.csv"
    trace = tmp_path / "t.trac"
    assert main(["run", "--graph", str(small_graph), "--kernel", "bfs", "--source", "3",
                 "--perm", str(perm_path), "--out", str(out), "--trace", str(trace)]) == 0
    assert trace.read_bytes()[:4] == b"TRAC"
    p = read_permutation(perm_path)
    rows = list(csv.DictReader(out.open()))
    levels = np.array([int(r["value"]) for r in rows])
    # results are indexed by new id; vertex 3 moved to p[3]
    assert levels[p[3]] == 0


# -- bench -------------------------------------------------------------------


def test_geometric_mean():
    assert geometric_mean([2.0, 0.5]) == pytest.approx(1.0)
    assert np.isnan(geometric_mean([]))


def test_bench_identity_vs_identity(small_graph):
    g = read_csr(small_graph)
    rows = cmd_bench(g, RunManifest(str(small_graph), ["identity"], ["bfs"], trials=3))
    assert rows[0]["speedup"] == 1.0
    assert rows[-1]["kernel"] == "geomean" and rows[-1]["speedup"] == pytest.approx(1.0)


def test_bench_full_matrix_row_count(small_graph):
    g = read_csr(small_graph)
    schemes = ["identity", "random", "sort", "dbg", "norder", "lorder"]
    rows = cmd_bench(g, RunManifest(str(small_graph), schemes, ["bfs", "pr", "cc"], trials=1))
    data = [r for r in rows if r["kernel"] != "geomean"]
    summary = [r for r in rows if r["kernel"] == "geomean"]
    assert len(data) == 18
    assert [r["scheme"] for r in summary] == schemes


def test_bench_cli_csv_columns(small_graph, tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--graph", str(small_graph), "--schemes", "identity,dbg", "--kernels", "bfs",
                 "--trials", "2", "--out", str(out)]) == 0
    reader = csv.reader(out.open())
    assert next(reader) == BENCH_COLUMNS
    assert len(list(reader)) == 4


def test_manifest_validation(tmp_path):
    with pytest.raises(UsageError):
        RunManifest("g", trials=0)
    with pytest.raises(UsageError):
        RunManifest("g", schemes=["nope"])
    with pytest.raises(UsageError):
        RunManifest("g", kernels=["nope"])
    assert RunManifest("g").trials == 16 and RunManifest("g").seed == 42
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"graph": "g", "schemes": ["dbg"], "bogus": 1}))
    with pytest.raises(UsageError):
        RunManifest.from_json(path)


def test_bench_from_manifest(small_graph, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"graph": str(small_graph), "schemes": ["identity", "sort"],
                                "kernels": ["cc"], "trials": 2}))
    out = tmp_path / "o.json"
    assert main(["bench", "--manifest", str(path), "--json", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())) == 4


# -- cachesim ----------------------------------------------------------------


def test_cachesim_json(small_graph, capsys):
    assert main(["cachesim", "--graph", str(small_graph), "--schemes", "identity,random,lorder",
                 "--kernel", "pr", "--cache-kb", "4", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["scheme"] for r in rows] == ["identity", "random", "lorder"]
    assert all(r["hits"] + r["misses"] == r["accesses"] for r in rows)


def test_cachesim_existing_trace(small_graph, tmp_path, capsys):
    trace = tmp_path / "t.trac"
    main(["run", "--graph", str(small_graph), "--kernel", "cc", "--trace", str(trace)])
    capsys.readouterr()
    assert main(["cachesim", "--trace", str(trace)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("scheme,kernel,accesses")


def test_cachesim_bad_cache_config(small_graph):
    assert main(["cachesim", "--graph", str(small_graph), "--cache-kb", "3"]) == 1


def test_missing_graph_is_usage_error():
    assert main(["bench"]) == 2
