import math

import numpy as np
import pytest

from dbstexc.cluster import f_dbstexc
from dbstexc.evaluation import (
    EvalReport,
    SweepResult,
    SweepRow,
    SweepSpec,
    area_score,
    cluster_area,
    confusion,
    member_mask,
    prf,
    report,
    score,
    sweep,
)
from dbstexc.index import build
from dbstexc.ingest import QueryRegion
from dbstexc.model import NOISE, ClusteringResult, FuzzyParams, LabeledDataset

from helpers import random_instance

REGION = QueryRegion((0.0, 0.0), 5000.0, 1.0)


def result(labels, n, fuzzy=None):
    labels = np.asarray(labels, dtype=np.int64)
    used = set(labels.tolist()) - {NOISE}
    return ClusteringResult(labels, np.zeros(n, dtype=bool), len(used),
                            fuzzy_scores=None if fuzzy is None else np.asarray(fuzzy, float))


# -- confusion and F1


def test_hand_computed_confusion():
    ds = LabeledDataset.from_arrays(np.zeros((20, 2)), np.zeros((5, 2)))
    r = result([1] * 10 + [NOISE] * 10 + [1] * 5, 20)
    tp, fp, fn = confusion(r, ds)
    assert (tp, fp, fn) == (10, 5, 10)
    p, rec, f1 = prf(tp, fp, fn)
    assert abs(p - 2 / 3) <= 1e-12 and abs(rec - 1 / 2) <= 1e-12 and abs(f1 - 4 / 7) <= 1e-12


def test_perfect_and_empty():
    ds = LabeledDataset.from_arrays(np.zeros((4, 2)), np.zeros((2, 2)))
    assert prf(*confusion(result([1, 1, 2, 2, NOISE, NOISE], 4), ds)) == (1.0, 1.0, 1.0)
    tp, fp, fn = confusion(result([NOISE] * 6, 4), ds)
    assert tp == 0 and prf(tp, fp, fn)[2] == 0.0


def test_tau_filters_weak_members():
    ds = LabeledDataset.from_arrays(np.zeros((3, 2)), np.zeros((1, 2)))
    r = result([1, 1, 1, 1], 3, fuzzy=[1.0, 0.4, 0.6, 0.3])
    assert member_mask(r, 0.5).tolist() == [True, False, True, False]
    assert confusion(r, ds, 0.5) == (2, 0, 1)
    assert confusion(r, ds) == (3, 1, 0)


# -- area


def lattice(x0, y0, side, step):
    g = np.arange(0, side + step / 2, step)
    return np.array([(x0 + a, y0 + b) for a in g for b in g])


def test_square_lattice_area():
    pts = lattice(-500, -500, 1000, 50)
    ds = LabeledDataset.from_arrays(pts)
    r = result([1] * len(pts), len(pts))
    area = cluster_area(r, ds, REGION, 10.0, resolution=10.0)
    assert abs(area - 1e6) <= 4 * 1000 * 10


def test_coincident_clusters_counted_once():
    pts = lattice(0, 0, 300, 100)
    ds = LabeledDataset.from_arrays(np.vstack([pts, pts]))
    one = cluster_area(result([1] * 32, 32), ds, REGION, 10.0, resolution=5.0)
    two = cluster_area(result([1] * 16 + [2] * 16, 32), ds, REGION, 10.0, resolution=5.0)
    assert one == two == pytest.approx(300 * 300, rel=0.05)


def test_two_point_cluster_is_eps_disk():
    ds = LabeledDataset.from_arrays([[0, 0], [30, 0], [2000, 0]])
    eps = 100.0
    area = cluster_area(result([1, 1, NOISE], 3), ds, REGION, eps, resolution=1.0)
    assert area == pytest.approx(math.pi * eps**2, rel=0.005)


def test_area_clipped_to_region():
    pts = lattice(-3000, -3000, 6000, 1000)
    ds = LabeledDataset.from_arrays(pts)
    region = QueryRegion((0.0, 0.0), 1000.0, 1.0)
    area = cluster_area(result([1] * len(pts), len(pts)), ds, region, 10.0)
    assert area == pytest.approx(math.pi * 1e6, rel=0.01)
    assert report(1, 0, 0, area, 1000.0, 1.0).area_norm <= 1.0


def test_region_centre_is_projected():
    # POI 0.01 deg north of the projection origin; cluster sits on the POI
    from dbstexc.geo import Projection

    proj = Projection.at(51.5, 0.0)
    cx, cy = proj.forward(51.51, 0.0)
    pts = lattice(float(cx) - 100, float(cy) - 100, 200, 50)
    ds = LabeledDataset.from_arrays(pts, projection_origin=(51.5, 0.0))
    area = cluster_area(result([1] * len(pts), len(pts)), ds, QueryRegion((51.51, 0.0), 500.0, 1.0), 10.0)
    assert area == pytest.approx(200 * 200, rel=0.01)


# -- score


def test_score_examples():
    assert area_score(0.25, 0.8, 0.5) == pytest.approx(0.4, abs=1e-12)
    for f1 in (0.0, 0.3, 1.0):
        assert area_score(0.0, f1, 0.0) == f1
        for alpha in (0.0, 0.5, 0.75, 1.0, 3.0):
            assert area_score(1.0, f1, alpha) == f1
    with pytest.raises(ValueError):
        area_score(0.5, 0.5, -1)


def test_alpha_zero_gives_f1_on_real_clustering(rng):
    for _ in range(10):
        ds = random_instance(rng)
        r = f_dbstexc(ds, build(ds), FuzzyParams(3.0, 2, 4, 1, 6))
        rep = score(r, ds, QueryRegion((0.0, 0.0), 150.0, 1.0), 0.0, 3.0, resolution=1.0)
        assert rep.score == rep.f1
        assert all(0.0 <= v <= 1.0 for v in (rep.precision, rep.recall, rep.f1, rep.area_norm, rep.score))


# -- sweeps


def test_spec_cells_and_m():
    spec = SweepSpec(epsilons=[1, 2], n_mins=[3], n_maxs=[0, "m"], n_min1s=[1, 3], n_min2s=[2],
                     n_max1s=[0], n_max2s=["m"])
    assert spec.cells("dbscan", 7) == [{"epsilon": 1.0, "n_min": 3}, {"epsilon": 2.0, "n_min": 3}]
    assert [c["n_max"] for c in spec.cells("dbstexc", 7)] == [0, 7, 0, 7]
    # n_min1 = 3 > n_min2 = 2 is skipped
    assert spec.cells("f_dbstexc", 7) == [
        {"epsilon": 1.0, "n_min1": 1, "n_min2": 2, "n_max1": 0, "n_max2": 7},
        {"epsilon": 2.0, "n_min1": 1, "n_min2": 2, "n_max1": 0, "n_max2": 7},
    ]
    with pytest.raises(ValueError):
        SweepSpec(epsilons=[1]).cells("dbstexc", 1)
    with pytest.raises(ValueError):
        spec.cells("kmeans", 1)


def test_one_cell_grid():
    ds = LabeledDataset.from_arrays(lattice(0, 0, 100, 10), [[5, 5]])
    spec = SweepSpec(epsilons=[15.0], n_mins=[3], n_maxs=[1], alphas=[0.5])
    res = sweep(ds, build(ds), spec, "dbstexc", QueryRegion((0.0, 0.0), 500.0, 1.0))
    assert len(res.rows) == 1
    assert res.best() == res.rows


def rep(score_value, alpha=0.5):
    return EvalReport(1, 0, 0, 1.0, 1.0, 1.0, 0.0, 0.0, alpha, score_value)


def test_tie_breaks():
    rows = [
        SweepRow("dbstexc", {"epsilon": 2.0, "n_min": 1, "n_max": 9}, rep(0.5)),
        SweepRow("dbstexc", {"epsilon": 1.0, "n_min": 3, "n_max": 0}, rep(0.5)),
        SweepRow("dbstexc", {"epsilon": 1.0, "n_min": 2, "n_max": 0}, rep(0.5)),
        SweepRow("dbstexc", {"epsilon": 1.0, "n_min": 2, "n_max": 4}, rep(0.5)),
        SweepRow("dbstexc", {"epsilon": 5.0, "n_min": 9, "n_max": 0}, rep(0.4)),
    ]
    assert SweepResult(rows).best() == [rows[3]]
    rows.append(SweepRow("dbstexc", {"epsilon": 9.0, "n_min": 9, "n_max": 0}, rep(0.6)))
    assert SweepResult(rows).best() == [rows[-1]]


def test_fuzzy_tie_break_is_lexicographic():
    a = SweepRow("f_dbstexc", {"epsilon": 1.0, "n_min1": 2, "n_min2": 5, "n_max1": 0, "n_max2": 3}, rep(0.5))
    b = SweepRow("f_dbstexc", {"epsilon": 1.0, "n_min1": 2, "n_min2": 4, "n_max1": 1, "n_max2": 3}, rep(0.5))
    assert SweepResult([a, b]).best() == [b]


def test_best_per_algorithm_and_alpha():
    rows = [
        SweepRow("dbscan", {"epsilon": 1.0, "n_min": 1}, rep(0.2, 0.0)),
        SweepRow("dbscan", {"epsilon": 2.0, "n_min": 1}, rep(0.3, 0.0)),
        SweepRow("dbscan", {"epsilon": 1.0, "n_min": 1}, rep(0.9, 1.0)),
        SweepRow("dbstexc", {"epsilon": 1.0, "n_min": 1, "n_max": 0}, rep(0.1, 0.0)),
    ]
    best = SweepResult(rows).best()
    assert [r.params["epsilon"] for r in best] == [2.0, 1.0, 1.0]
    assert SweepResult(rows).best_score("dbscan", 1.0) == 0.9


def test_containment_on_random_data(rng):
    spec = SweepSpec(epsilons=[2.0, 4.0, 8.0], n_mins=[1, 3, 5], n_maxs=[0, 2, "m"], alphas=[0.0, 0.5, 1.0])
    for _ in range(8):
        ds = random_instance(rng, 200)
        region = QueryRegion((0.0, 0.0), 150.0, 1.0)
        b = build(ds)
        a = sweep(ds, b, spec, "dbscan", region, resolution=2.0)
        d = sweep(ds, b, spec, "dbstexc", region, resolution=2.0)
        for alpha in spec.alphas:
            assert d.best_score("dbstexc", alpha) >= a.best_score("dbscan", alpha)


def test_degenerate_fuzzy_grid_matches_crisp(rng):
    ds = random_instance(rng, 200)
    region = QueryRegion((0.0, 0.0), 150.0, 1.0)
    b = build(ds)
    crisp = SweepSpec(epsilons=[2.0, 5.0], n_mins=[2, 4], n_maxs=[1, 3], alphas=[0.0, 0.5])
    fuzzy = SweepSpec(epsilons=[2.0, 5.0], n_min1s=[2, 4], n_min2s=[2, 4], n_max1s=[1, 3], n_max2s=[1, 3],
                      alphas=[0.0, 0.5])
    c = sweep(ds, b, crisp, "dbstexc", region, resolution=2.0)
    f = sweep(ds, b, fuzzy, "f_dbstexc", region, resolution=2.0)
    f_rows = {(r.params["epsilon"], r.params["n_min1"], r.params["n_max1"], r.report.alpha): r.report
              for r in f.rows if r.params["n_min1"] == r.params["n_min2"] and r.params["n_max1"] == r.params["n_max2"]}
    assert len(f_rows) == len(c.rows)
    for r in c.rows:
        assert f_rows[(r.params["epsilon"], r.params["n_min"], r.params["n_max"], r.report.alpha)] == r.report


def test_parallel_sweep_matches_serial(rng):
    ds = random_instance(rng, 200)
    spec = SweepSpec(epsilons=[2.0, 5.0], n_mins=[1, 3], n_maxs=[0, "m"])
    region = QueryRegion((0.0, 0.0), 150.0, 1.0)
    a = sweep(ds, build(ds), spec, "dbstexc", region, resolution=2.0)
    b = sweep(ds, build(ds), spec, "dbstexc", region, resolution=2.0, workers=3)
    assert [r.as_csv() for r in a.rows] == [r.as_csv() for r in b.rows]


def test_sweep_csv_header(tmp_path):
    rows = [SweepRow("dbscan", {"epsilon": 1.0, "n_min": 2}, rep(0.5))]
    SweepResult(rows).write_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == ("algorithm,epsilon,n_min,n_max,n_min1,n_min2,n_max1,n_max2,alpha,tp,fp,fn,"
                        "precision,recall,f1,area_m2,area_norm,score")
    assert lines[1].startswith("dbscan,1.0,2,,,,,,0.5,1,0,0,")
