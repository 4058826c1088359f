import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dbstexc.index import BackendKind, KdTree, build, range_query
from dbstexc.model import LabeledDataset, PlanarPoint

from helpers import random_instance


def brute(xy, q, eps):
    d = xy - np.asarray(q, dtype=float)
    return np.flatnonzero(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] <= eps * eps)


def test_empty_dataset_answers_empty(kind):
    b = build(LabeledDataset.from_arrays(np.empty((0, 2))), kind)
    x, y = range_query(b, (0.0, 0.0), 10.0)
    assert len(x) == 0 and len(y) == 0


def test_single_point_found(kind):
    b = build(LabeledDataset.from_arrays([[7.5, -2.0]]), kind)
    for eps in (1e-9, 1.0, 1e6):
        x, _ = range_query(b, PlanarPoint(7.5, -2.0), eps)
        assert x.tolist() == [0]


def test_boundary_is_included(kind):
    b = build(LabeledDataset.from_arrays([[0, 0]], [[3, 4]]), kind)
    x, y = range_query(b, (0.0, 0.0), 5.0)
    assert x.tolist() == [0] and y.tolist() == [0]
    x, y = range_query(b, (0.0, 0.0), math.nextafter(5.0, 0.0))
    assert y.tolist() == []


def test_query_counter_and_bad_epsilon(kind):
    b = build(LabeledDataset.from_arrays([[0, 0]]), kind)
    range_query(b, (0, 0), 1.0)
    range_query(b, (0, 0), 1.0)
    assert b.queries == 2
    with pytest.raises(ValueError):
        range_query(b, (0, 0), 0.0)


def test_matches_exhaustive_filter(kind, rng):
    rel = rng.uniform(0, 100, size=(120, 2))
    irr = rng.uniform(0, 100, size=(80, 2))
    b = build(LabeledDataset.from_arrays(rel, irr), kind)
    for _ in range(50):
        q = rng.uniform(-10, 110, size=2)
        eps = rng.uniform(0.5, 40)
        x, y = range_query(b, q, eps)
        assert x.tolist() == brute(rel, q, eps).tolist()
        assert y.tolist() == brute(irr, q, eps).tolist()


def test_backends_agree_on_random_queries(rng):
    for _ in range(20):
        ds = random_instance(rng, 300)
        lin, kd = build(ds, "linear"), build(ds, "kd", leaf_size=int(rng.integers(1, 9)))
        for _ in range(50):
            q = rng.uniform(-5, 105, size=2)
            eps = float(rng.choice([1.0, 5.0, rng.uniform(0.1, 50)]))
            a, b = range_query(lin, q, eps), range_query(kd, q, eps)
            assert a[0].tolist() == b[0].tolist() and a[1].tolist() == b[1].tolist()


def test_kernel_implementations_agree(kernels, rng):
    xy = rng.integers(0, 30, size=(400, 2)).astype(float)
    tree = KdTree.build(xy, leaf_size=4).as_tuple()
    for _ in range(200):
        qx, qy = rng.integers(0, 30, size=2).astype(float)
        eps = float(rng.choice([1.0, 2.0, 5.0, math.sqrt(2.0), rng.uniform(0.1, 10)]))
        expect = brute(xy, (qx, qy), eps).tolist()
        assert kernels.scan_radius(xy, qx, qy, eps).tolist() == expect
        assert kernels.kd_radius(tree, xy, qx, qy, eps).tolist() == expect


@given(
    st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=1, max_size=60),
    st.tuples(st.integers(-25, 25), st.integers(-25, 25)),
    st.floats(0.01, 30),
    st.floats(0.01, 30),
)
def test_monotone_in_epsilon(pts, q, e1, e2):
    e1, e2 = sorted((e1, e2))
    for kind in ("linear", "kd"):
        b = build(LabeledDataset.from_arrays(pts, pts[::2]), kind)
        small, large = range_query(b, q, e1), range_query(b, q, e2)
        assert set(small[0]) <= set(large[0])
        assert set(small[1]) <= set(large[1])


def test_results_sorted_and_contain_self(kind, rng):
    ds = random_instance(rng, 200)
    b = build(ds, kind)
    for i in range(ds.n):
        x, y = range_query(b, ds.relevant[i], 3.0)
        assert i in x
        assert np.all(np.diff(x) > 0) and np.all(np.diff(y) > 0)


def test_tree_depth_is_logarithmic(rng):
    xy = rng.uniform(0, 1000, size=(10_000, 2))
    tree = KdTree.build(xy, leaf_size=1)
    assert tree.depth() <= math.ceil(math.log2(10_000)) + 2
    assert sorted(tree.perm.tolist()) == list(range(10_000))


def test_tree_depth_with_duplicates():
    xy = np.zeros((1000, 2))
    tree = KdTree.build(xy, leaf_size=8)
    assert tree.depth() <= math.ceil(math.log2(1000 / 8)) + 2


def test_tree_nodes_partition_points(rng):
    xy = rng.normal(size=(500, 2))
    t = KdTree.build(xy, leaf_size=16)
    for i in range(t.num_nodes):
        idx = t.perm[t.start[i]:t.end[i]]
        x0, y0, x1, y1 = t.bbox[i]
        assert np.all((xy[idx, 0] >= x0) & (xy[idx, 0] <= x1) & (xy[idx, 1] >= y0) & (xy[idx, 1] <= y1))
        if t.left[i] >= 0:
            assert t.start[t.left[i]] == t.start[i] and t.end[t.right[i]] == t.end[i]
            assert t.end[t.left[i]] == t.start[t.right[i]]
        else:
            assert t.end[i] - t.start[i] <= 16


def test_backend_kind_parse():
    assert BackendKind.parse("kd-tree") is BackendKind.KD_TREE
    assert BackendKind.parse("LINEAR") is BackendKind.LINEAR_SCAN
    with pytest.raises(ValueError):
        BackendKind.parse("rtree")
