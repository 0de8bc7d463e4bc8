import json
import shutil

import pytest

from steingen.cli import main
from steingen.ergm import default_steps, named_model, sample_exact
from steingen.experiment import ExperimentConfig, aggregate, read_trial_csv
from steingen.graph import Graph, read_edgelist, write_edgelist


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def input_graph(tmp_path_factory):
    path = tmp_path_factory.mktemp("in") / "g.edges"
    write_edgelist(sample_exact(named_model("E2S", 16), seed=4), path)
    return path


def test_generate_deterministic(tmp_path, input_graph, capsys):
    args = ["generate", "--input", str(input_graph), "--stats", "edges,two_stars", "--r", "auto", "--m", "5", "--seed", "7"]
    main(args + ["--output", str(tmp_path / "a")])
    main(args + ["--output", str(tmp_path / "b")])
    a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
    assert a == b
    assert sum(k.startswith("sample_") for k in a) == 5
    assert sum(k.startswith("trajectory_") for k in a) == 5
    man = json.loads(a["manifest.json"])
    assert man["config"]["steps"] == default_steps(16) and len(man["runs"]) == 5
    assert len({r["seed"] for r in man["runs"]}) == 5


def test_generate_variant_counters(tmp_path, input_graph):
    main(["generate", "--input", str(input_graph), "--variant", "steingen_nr", "--m", "2", "--output", str(tmp_path / "nr")])
    runs = json.loads((tmp_path / "nr" / "manifest.json").read_text())["runs"]
    assert all(r["reestimation_count"] == 0 for r in runs)
    main(["generate", "--input", str(input_graph), "--k", "50", "--r", "5000", "--m", "2", "--output", str(tmp_path / "k")])
    for r in json.loads((tmp_path / "k" / "manifest.json").read_text())["runs"]:
        assert r["reestimation_count"] == r["change_count"] // 50


def test_generate_reads_config_and_env(tmp_path, input_graph, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"m": 2, "seed": 3, "steps": 40}))
    monkeypatch.setenv("STEINGEN_OUTPUT_DIR", str(tmp_path / "env"))
    main(["generate", "--config", str(conf), "--input", str(input_graph)])
    man = json.loads((tmp_path / "env" / "manifest.json").read_text())
    assert man["config"]["steps"] == 40 and man["config"]["m"] == 2


def test_experiment_smoke_and_determinism(tmp_path):
    args = ["experiment", "--model", "ER", "--n", "10", "--w", "2", "--m", "2", "--M", "20",
            "--generators", "exact,steingen", "--seed", "5", "--frontier", "10,45"]
    main(args + ["--output", str(tmp_path / "a")])
    main(args + ["--output", str(tmp_path / "b"), "--jobs", "2"])
    a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
    assert a == b
    rows = read_trial_csv(tmp_path / "a" / "trials" / "trial_0000.csv")
    assert {r["generator"] for r in rows} == {"observed", "exact", "steingen", "frontier"}
    obs = [r for r in rows if r["generator"] == "observed"][0]
    assert obs["rejection_rate"] in (0.0, 1.0)
    assert a["frontier.csv"].decode().splitlines()[0] == "r,one_minus_tv,hamming_mean,hamming_sd"


def test_experiment_aggregate_recomputes_from_trials(tmp_path):
    out = tmp_path / "x"
    main(["experiment", "--model", "E2S", "--n", "10", "--w", "3", "--m", "2", "--M", "20", "--output", str(out)])
    rows = []
    for t in range(3):
        rows += read_trial_csv(out / "trials" / f"trial_{t:04d}.csv")
    table, _ = aggregate(rows)
    text = (out / "rejection_rates.csv").read_text().splitlines()
    assert len(text) == 1 + len(table)
    before = tree_bytes(out)
    # resume: deleting one trial recomputes it identically
    (out / "trials" / "trial_0001.csv").unlink()
    main(["experiment", "--model", "E2S", "--n", "10", "--w", "3", "--m", "2", "--M", "20", "--output", str(out)])
    assert tree_bytes(out) == before


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(model=None)
    with pytest.raises(ValueError):
        ExperimentConfig(model="ER", input_path="x.edges")
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(generators=("steingen_k",))


def test_experiment_from_input_file(tmp_path, input_graph):
    out = tmp_path / "f"
    main(["experiment", "--input", str(input_graph), "--w", "1", "--m", "2", "--M", "20", "--r", "200", "--output", str(out)])
    assert (out / "rejection_rates.csv").exists()


def test_assess_copies_give_zeros(tmp_path):
    g = Graph.from_edges(8, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (4, 5), (5, 6), (1, 4), (6, 7), (2, 7)])
    write_edgelist(g, tmp_path / "g.edges")
    sdir = tmp_path / "samples"
    sdir.mkdir()
    for i in range(3):
        shutil.copy(tmp_path / "g.edges", sdir / f"s{i}.edges")
    args = ["assess", "--input", str(tmp_path / "g.edges"), "--samples", str(sdir), "--M", "20", "--null-steps", "100"]
    main(args + ["--output", str(tmp_path / "a")])
    main(args + ["--output", str(tmp_path / "b")])
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")
    rep = json.loads((tmp_path / "a" / "assess_report.json").read_text())
    assert rep["hamming_mean"] == 0 and rep["tv_degree"] == 0
    assert all(v == 0 for v in rep["summary_delta"].values())


def test_assess_detects_mismatched_samples(tmp_path):
    dense = sample_exact(named_model("ER", 20).__class__(20, ("edges",), (1.5,)), seed=1)
    write_edgelist(dense, tmp_path / "g.edges")
    sdir = tmp_path / "samples"
    sdir.mkdir()
    for i in range(10):
        write_edgelist(sample_exact(named_model("ER", 20), seed=100 + i), sdir / f"s{i:02d}.edges")
    main(["assess", "--input", str(tmp_path / "g.edges"), "--samples", str(sdir), "--M", "40", "--output", str(tmp_path / "o")])
    rep = json.loads((tmp_path / "o" / "assess_report.json").read_text())
    assert rep["rejection_rate"] > 0.5
    write_edgelist(Graph.empty(5), sdir / "zz.edges")
    with pytest.raises(ValueError):
        main(["assess", "--input", str(tmp_path / "g.edges"), "--samples", str(sdir), "--M", "20"])


def test_estimate_table_and_stats(tmp_path, input_graph, capsys):
    main(["estimate-table", "--input", str(input_graph), "--stats", "edges,two_stars", "--output", str(tmp_path / "t.csv")])
    first = (tmp_path / "t.csv").read_text()
    main(["estimate-table", "--input", str(input_graph), "--stats", "edges,two_stars", "--output", str(tmp_path / "t2.csv")])
    assert first == (tmp_path / "t2.csv").read_text()
    assert first.startswith("d_edges,d_two_stars,n_u,N_u,qhat")
    capsys.readouterr()
    main(["stats", "--input", str(input_graph)])
    out1 = capsys.readouterr().out
    main(["stats", "--input", str(input_graph)])
    assert capsys.readouterr().out == out1
    s = json.loads(out1)
    assert s["n"] == 16 and s["edges"] == read_edgelist(input_graph).num_edges
