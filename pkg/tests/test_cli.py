import csv
import json
import os
import shutil

import numpy as np
import pytest

from dbstexc import cli
from dbstexc.model import ClusteringResult

from conftest import FIXTURES

TINY = os.path.join(FIXTURES, "tiny.cfg")


def rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_gen_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["gen", "--preset", "blob", "--seed", "5", "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "dataset.csv").read_bytes()
    assert a == (tmp_path / "b" / "dataset.csv").read_bytes()
    assert cli.main(["gen", "--preset", "blob", "--seed", "6", "--out", str(tmp_path / "c")]) == 0
    assert a != (tmp_path / "c" / "dataset.csv").read_bytes()


def test_gen_from_json_spec(tmp_path):
    spec = {"seed": 1, "region_radius": 300, "relevant_blobs": [{"center": [0, 0], "stddev": 20, "count": 30}],
            "uniform_noise": [0, 10]}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    assert cli.main(["gen", "--spec", str(tmp_path / "spec.json"), "--format", "jsonl", "--keyword", "Kew",
                     "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "dataset.jsonl").read_text().splitlines()
    assert len(lines) == 40
    assert sum("Kew" in json.loads(x)["text"] for x in lines) == 30


def test_cluster_tiny_fixture(tmp_path):
    assert cli.main(["cluster", "--config", TINY, "--out", str(tmp_path)]) == 0
    labels = rows(tmp_path / "labels.csv")
    assert [(r["id"], r["relevance"], r["cluster"], r["core"], r["mu"]) for r in labels] == [
        ("t1", "relevant", "1", "1", ""),
        ("t2", "relevant", "1", "1", ""),
        ("t3", "irrelevant", "1", "0", ""),
        ("t4", "relevant", "1", "1", ""),
        ("t5", "relevant", "1", "1", ""),
        ("t6", "irrelevant", "1", "0", ""),
        ("t7", "irrelevant", "noise", "0", ""),
        ("t8", "relevant", "noise", "0", ""),
    ]
    gj = json.loads((tmp_path / "clusters.geojson").read_text())
    assert gj["type"] == "FeatureCollection" and len(gj["features"]) == 1
    feat = gj["features"][0]
    assert feat["properties"]["members"] == 6 and feat["properties"]["mean_mu"] is None
    ring = feat["geometry"]["coordinates"][0]
    assert ring[0] == ring[-1]
    assert all(-0.17 < lon < -0.16 and 51.50 < lat < 51.51 for lon, lat in ring)
    report = rows(tmp_path / "report.csv")
    assert [r["alpha"] for r in report] == ["0.0", "0.5", "0.75", "1.0"]
    assert report[0]["score"] == report[0]["f1"]
    assert (report[0]["tp"], report[0]["fp"], report[0]["fn"]) == ("4", "2", "1")
    svg = (tmp_path / "map.svg").read_text()
    assert svg.startswith("<?xml") and "<polygon" in svg


def test_cluster_is_deterministic(tmp_path):
    outs = []
    for i in range(3):
        assert cli.main(["cluster", "--config", TINY, "--out", str(tmp_path / str(i)),
                         "--algorithm", "f_dbstexc", "--n-min1", "2", "--n-min2", "5",
                         "--n-max1", "0", "--n-max2", "3"]) == 0
        outs.append([(tmp_path / str(i) / f).read_bytes() for f in ("labels.csv", "clusters.geojson", "report.csv")])
    assert outs[0] == outs[1] == outs[2]


def test_flags_override_config(tmp_path):
    assert cli.main(["cluster", "--config", TINY, "--out", str(tmp_path), "--case-insensitive",
                     "--alpha", "0", "--epsilon", "1"]) == 0
    labels = rows(tmp_path / "labels.csv")
    assert labels[2]["relevance"] == "relevant"
    # eps = 1 m leaves every point isolated
    assert {r["cluster"] for r in labels} == {"noise"}
    assert len(rows(tmp_path / "report.csv")) == 1


def test_all_relevant_blob_gives_one_feature(tmp_path):
    rng = np.random.default_rng(0)
    lines = ["id,text,lat,lon"]
    for i, (dlat, dlon) in enumerate(rng.normal(0, 1e-4, size=(40, 2))):
        lines.append(f"b{i},Kew Gardens,{float(51.47 + dlat)!r},{float(-0.29 + dlon)!r}")
    (tmp_path / "in.csv").write_text("\n".join(lines) + "\n")
    assert cli.main(["cluster", "--input", str(tmp_path / "in.csv"), "--poi-center", "51.47,-0.29",
                     "--query", "Kew", "--epsilon", "100", "--n-min", "2", "--n-max", "0",
                     "--out", str(tmp_path / "o")]) == 0
    gj = json.loads((tmp_path / "o" / "clusters.geojson").read_text())
    assert len(gj["features"]) == 1 and gj["features"][0]["properties"]["members"] == 40


def test_one_cell_sweep(tmp_path):
    assert cli.main(["sweep", "--config", TINY, "--out", str(tmp_path), "--epsilons", "40",
                     "--n-mins", "3", "--n-maxs", "2", "--alpha", "0.5"]) == 0
    sweep_rows = rows(tmp_path / "sweep.csv")
    assert len(sweep_rows) == 1
    assert rows(tmp_path / "best.csv") == sweep_rows


def test_sweep_fuzzy_degenerate_matches_crisp(tmp_path):
    common = ["sweep", "--config", os.path.join(FIXTURES, "blob.cfg"), "--epsilons", "40,60"]
    assert cli.main(common + ["--out", str(tmp_path / "c"), "--n-mins", "3,5", "--n-maxs", "1,m"]) == 0
    assert cli.main(common + ["--out", str(tmp_path / "f"), "--algorithm", "f_dbstexc", "--n-min1s", "3,5",
                              "--n-min2s", "3,5", "--n-max1s", "1,m", "--n-max2s", "1,m"]) == 0
    metrics = ["alpha", "tp", "fp", "fn", "precision", "recall", "f1", "area_m2", "area_norm", "score"]
    crisp = {(r["epsilon"], r["n_min"], r["n_max"], r["alpha"]): [r[k] for k in metrics]
             for r in rows(tmp_path / "c" / "sweep.csv")}
    fuzzy = {(r["epsilon"], r["n_min1"], r["n_max1"], r["alpha"]): [r[k] for k in metrics]
             for r in rows(tmp_path / "f" / "sweep.csv")
             if r["n_min1"] == r["n_min2"] and r["n_max1"] == r["n_max2"]}
    assert crisp == fuzzy and len(crisp) == 2 * 2 * 2 * 4


def test_sweep_dbscan_and_dbstexc(tmp_path):
    assert cli.main(["sweep", "--config", os.path.join(FIXTURES, "blob.cfg"), "--out", str(tmp_path),
                     "--algorithm", "dbscan", "--algorithm", "dbstexc", "--epsilons", "40,80",
                     "--n-mins", "3", "--n-maxs", "0,m", "--workers", "2"]) == 0
    best = rows(tmp_path / "best.csv")
    assert [(r["algorithm"], r["alpha"]) for r in best] == \
        [("dbscan", a) for a in ("0.0", "0.5", "0.75", "1.0")] + [("dbstexc", a) for a in ("0.0", "0.5", "0.75", "1.0")]
    for a in range(4):
        assert float(best[4 + a]["score"]) >= float(best[a]["score"])


def test_knn(tmp_path):
    assert cli.main(["knn", "--input", os.path.join(FIXTURES, "blob.csv"), "--out", str(tmp_path)]) == 0
    d = [float(r["distance"]) for r in rows(tmp_path / "knn.csv")]
    assert len(d) == 520 and d == sorted(d)
    assert [r["rank"] for r in rows(tmp_path / "knn.csv")][:3] == ["1", "2", "3"]
    assert "<polyline" in (tmp_path / "knn.svg").read_text()
    assert cli.main(["knn", "--config", os.path.join(FIXTURES, "blob.cfg"), "--relevant-only",
                     "--k", "3", "--out", str(tmp_path / "r")]) == 0
    assert len(rows(tmp_path / "r" / "knn.csv")) == 220


def test_bench(tmp_path):
    (tmp_path / "sizes.csv").write_text("n,m,regime\n30,30,m=n\n60,60,m=n\n20,89,m=n^1.5\n40,253,m=n^1.5\n")
    assert cli.main(["bench", "--sizes", str(tmp_path / "sizes.csv"), "--trials", "1", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["slopes"]) == {"m=n", "m=n^1.5"}
    assert rows(tmp_path / "bench.csv")[0].keys() == {"n", "m", "median_seconds", "backend"}
    assert rows(tmp_path / "bench.csv")[0]["backend"] == "linear"


def test_input_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,text,lat,lon\n1,a,51.5,-0.1\n2,b,abc,-0.1\n")
    argv = ["cluster", "--input", str(bad), "--poi-center", "51.5,-0.1", "--query", "a",
            "--epsilon", "10", "--n-min", "2", "--n-max", "0", "--out", str(tmp_path)]
    assert cli.main(argv) == 2
    assert "line 3" in capsys.readouterr().err
    assert cli.main(["cluster", "--config", TINY, "--out", str(tmp_path), "--algorithm", "dbstexc",
                     "--n-min", "x"]) == 2
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour = red\n")
    assert cli.main(["cluster", "--config", str(cfg)]) == 2
    assert cli.main(["knn", "--input", os.path.join(FIXTURES, "tiny.csv"), "--k", "8", "--out", str(tmp_path)]) == 2
    assert cli.main(["cluster", "--input", os.path.join(FIXTURES, "tiny.csv"), "--out", str(tmp_path)]) == 2


def test_missing_params_exit_2(tmp_path):
    shutil.copy(os.path.join(FIXTURES, "tiny.csv"), tmp_path)
    assert cli.main(["cluster", "--input", str(tmp_path / "tiny.csv"), "--poi-center", "51.5073,-0.1657",
                     "--query", "Hyde Park", "--out", str(tmp_path)]) == 2


def test_invariant_violation_exit_1(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        return ClusteringResult(np.array([-1] * 8), np.array([True] * 5), 0, range_queries=5)

    monkeypatch.setattr(cli, "run_algorithm", broken)
    assert cli.main(["cluster", "--config", TINY, "--out", str(tmp_path)]) == 1
