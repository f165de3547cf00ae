import json
import subprocess
import sys

import pytest

from vfcsim.catalog import read_catalog
from vfcsim.cli import main
from vfcsim.dataset import (
    analysis_csv,
    generate_fixture_dataset,
    impute_collaborator_apps,
    records_from_dicts,
    sweep_p_min_shared,
)
from vfcsim.graph import read_graph

SIM_CONFIG = {
    "network": {"mode": "config-model", "n_users": 80, "mean_degree": 5},
    "catalog": {"n_apps": 100},
    "models": ["FA", "EHB", "EBL"],
    "target_avg_apps": 3,
    "replicates": 2,
    "seed": 5,
}


@pytest.fixture
def dataset_file(tmp_path):
    path = tmp_path / "ds.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in generate_fixture_dataset(50, seed=2)))
    return path


def write_config(tmp_path, cfg=SIM_CONFIG, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_gen_graph_config_model(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gen-graph", "--mode", "config-model", "--n", "4", "--degrees", "1,1,1,1",
                 "--out", str(out)]) == 0
    g = read_graph(out)
    assert g.n_users == 4 and g.n_edges == 2
    assert all(g.degree(u) == 1 for u in range(4))
    manifest = json.loads((tmp_path / "g.json.manifest.json").read_text())
    assert manifest["command"] == "gen-graph" and manifest["seeds"] == [0]


def test_gen_graph_edge_list_and_inflate(tmp_path, dataset_file):
    tri = tmp_path / "triangle.txt"
    tri.write_text("a b\nb c\nc a\n")
    out = tmp_path / "tri.json"
    assert main(["gen-graph", "--mode", "edge-list", "--in", str(tri), "--out", str(out)]) == 0
    g = read_graph(out)
    assert (g.n_users, g.n_edges) == (3, 3)
    out2 = tmp_path / "inf.json"
    assert main(["gen-graph", "--mode", "inflate", "--degrees-from", str(dataset_file),
                 "--n", "300", "--out", str(out2)]) == 0
    assert read_graph(out2).n_users == 300


@pytest.mark.parametrize("argv", [
    ["gen-graph", "--mode", "config-model", "--degrees", "1,1"],
    ["gen-graph", "--mode", "config-model", "--degrees", "1,1", "--in", "x.txt", "--out", "g.json"],
    ["gen-graph", "--mode", "edge-list", "--n", "3", "--out", "g.json"],
    ["gen-graph", "--mode", "inflate", "--n", "3", "--out", "g.json"],
    ["gen-graph", "--mode", "config-model", "--degrees", "1,x", "--out", "g.json"],
    ["gen-catalog", "--n-apps", "0", "--out", "c.jsonl"],
    ["gen-catalog", "--zipf", "-1", "--out", "c.jsonl"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_gen_catalog(tmp_path):
    out = tmp_path / "c.jsonl"
    assert main(["gen-catalog", "--n-apps", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 and json.loads(lines[0])["related"] == []
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["gen-catalog", "--seed", "3", "--out", str(a)]) == 0
    assert main(["gen-catalog", "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_catalog(a)) == 1000


def test_simulate_outputs_and_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    cfg = write_config(tmp_path)
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert set(first) == {"timeseries_FA.csv", "timeseries_EHB.csv", "timeseries_EBL.csv",
                          "summary.json", "manifest.json"}
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first
    summary = json.loads(first["summary.json"])
    for m in ("FA", "EHB"):
        assert len(summary["models"][m]["ratio_vs_baseline"]["per_replicate"]) == 2
    manifest = json.loads(first["manifest.json"])
    assert manifest["seeds"] == summary["seeds"]
    assert manifest["started"] == "2023-11-14T22:13:20Z"


def test_simulate_single_user_single_row(tmp_path):
    cfg = write_config(tmp_path, {
        "network": {"mode": "config-model", "degrees": [0]},
        "catalog": {"n_apps": 4},
        "models": ["EBL"],
        "target_avg_apps": 1,
    })
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "timeseries.csv").read_text().splitlines()
    assert rows[0].startswith("replicate,step,avg_apps,avg_aggregate_vfc")
    assert len(rows) == 2


def test_simulate_overrides(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--seed", "9", "--replicates", "1", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["replicates"] == 1 and summary["config"]["seed"] == 9


def test_simulate_config_error_reports_field(tmp_path, capsys):
    bad = dict(SIM_CONFIG, models=["FA", "XYZ"])
    cfg = write_config(tmp_path, bad)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "$.models[1]" in capsys.readouterr().err
    cfg = write_config(tmp_path, {"network": {"mode": "config-model"}}, "b.json")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    (tmp_path / "c.json").write_text("{nope")
    assert main(["simulate", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) == 2


def test_simulate_relative_paths_resolve_against_config(tmp_path):
    (tmp_path / "g.txt").write_text("a b\nb c\n")
    cfg = write_config(tmp_path, {
        "network": {"mode": "edge-list", "path": "g.txt"},
        "catalog": {"n_apps": 10},
        "target_avg_apps": 1,
    })
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0


def test_analyze_matches_library(tmp_path, dataset_file, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    out = tmp_path / "a.csv"
    assert main(["analyze", "--dataset", str(dataset_file), "--thresholds", "0,0.5",
                 "--seed", "4", "--out", str(out)]) == 0
    recs = impute_collaborator_apps(records_from_dicts(generate_fixture_dataset(50, seed=2)), 4)
    assert out.read_text() == analysis_csv(sweep_p_min_shared(recs, [0.0, 0.5]))
    first = out.read_bytes()
    manifest = (tmp_path / "a.csv.manifest.json").read_bytes()
    assert main(["analyze", "--dataset", str(dataset_file), "--thresholds", "0,0.5",
                 "--seed", "4", "--out", str(out)]) == 0
    assert out.read_bytes() == first
    assert (tmp_path / "a.csv.manifest.json").read_bytes() == manifest


def test_analyze_single_threshold(tmp_path, dataset_file):
    out = tmp_path / "a.csv"
    assert main(["analyze", "--dataset", str(dataset_file), "--thresholds", "0", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    rows = generate_fixture_dataset(50, seed=2)
    expected = sum(1 for r in rows if len(r["files"]) >= 10 and r["vendors"])
    assert int(lines[1].split(",")[1]) == expected


def test_analyze_errors(tmp_path, dataset_file):
    assert main(["analyze", "--dataset", str(dataset_file), "--thresholds", "0.2,1.5",
                 "--out", str(tmp_path / "a.csv")]) == 2
    assert main(["analyze", "--dataset", str(tmp_path / "missing.jsonl"),
                 "--out", str(tmp_path / "a.csv")]) == 1
    (tmp_path / "broken.jsonl").write_text("{\n")
    assert main(["analyze", "--dataset", str(tmp_path / "broken.jsonl"),
                 "--out", str(tmp_path / "a.csv")]) == 1


def test_report_merges_summaries(tmp_path):
    cfg = write_config(tmp_path, dict(SIM_CONFIG, replicates=1))
    for name in ("r1", "r2"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    out = tmp_path / "report.csv"
    assert main(["report", "--summaries", str(tmp_path / "r1" / "summary.json"),
                 str(tmp_path / "r2" / "summary.json"), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("source,model,replicates")
    assert len(lines) == 1 + 2 * 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "vfcsim", "gen-catalog", "--n-apps", "5", "--out", str(tmp_path / "c.jsonl")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "vfcsim", "gen-graph"], capture_output=True, text=True)
    assert proc.returncode == 2
