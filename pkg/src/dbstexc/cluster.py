"""DBSCAN, DBSTexC and fuzzy DBSTexC over a :class:`LabeledDataset`.

DBSTexC grows clusters from relevant points only.  A relevant point ``p`` is
core when its eps-neighbourhood holds at least ``n_min`` relevant points
(``p`` itself included) and at most ``n_max`` irrelevant ones.  Clusters are
expanded through core points; once the relevant frontier of a cluster is
exhausted, every irrelevant point seen in a core neighbourhood joins it too.

Relevant points are visited in index order and the frontier is FIFO, so runs
are reproducible.  Which cluster a border point ends up in depends on that
order (as in any DBSCAN-family algorithm); the core points and their
partition do not.
"""

from __future__ import annotations

from collections import deque

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .index import RangeQueryBackend
from .model import NOISE, ClusteringResult, ClusterParams, FuzzyParams, KTooLarge, LabeledDataset


def is_core(p: int, backend: RangeQueryBackend, params: ClusterParams) -> bool:
    x_eps, y_eps = backend.range_query(backend.relevant_xy[p], params.epsilon)
    return len(x_eps) >= params.n_min and len(y_eps) <= params.n_max


def _run(dataset, backend, epsilon, min_rel, max_irr, kernels=None):
    if backend.dataset is not dataset and (
        backend.dataset.n != dataset.n or backend.dataset.m != dataset.m
    ):
        raise ValueError("backend was built for a different dataset")
    k = kernels or _kernels
    rel_tree, irr_tree = backend.tree_tuples()
    return k.expand_all(
        backend.relevant_xy,
        backend.irrelevant_xy,
        float(epsilon),
        int(min_rel),
        int(max_irr),
        backend.kernel_kind,
        rel_tree,
        irr_tree,
    )


def dbstexc(dataset: LabeledDataset, backend: RangeQueryBackend, params: ClusterParams, kernels=None) -> ClusteringResult:
    """Crisp DBSTexC clustering.

    ``kernels`` selects a kernel module explicitly (``_pykernels`` or
    ``_ckernels``); by default the compiled one is used when available.
    """
    lx, ly, core, counts, _, _, c, nq = _run(dataset, backend, params.epsilon, params.n_min, params.n_max, kernels)
    return ClusteringResult(
        labels=np.concatenate([lx, ly]),
        core_flags=core,
        num_clusters=c,
        range_queries=nq,
        neighbor_counts=counts,
    )


def dbscan(dataset: LabeledDataset, backend: RangeQueryBackend, epsilon: float, n_min: int, kernels=None) -> ClusteringResult:
    """Classic DBSCAN over the relevant points alone.

    Irrelevant points (if the dataset has any) are ignored and keep the
    ``NOISE`` label.  This is the textbook seed-queue formulation, written
    independently of the DBSTexC expansion so the two can be checked
    against each other; it visits points in the same index order, so on a
    dataset without irrelevant points both give identical labels.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    k = kernels or _kernels
    X = backend.relevant_xy
    tree = backend.tree_tuples()[0]
    n = len(X)
    queries = 0

    def neighbours(i):
        nonlocal queries
        queries += 1
        if tree is None:
            return k.scan_radius(X, X[i, 0], X[i, 1], float(epsilon))
        return k.kd_radius(tree, X, X[i, 0], X[i, 1], float(epsilon))

    unseen = 0
    labels = np.full(n, unseen, dtype=np.int64)
    core = np.zeros(n, dtype=bool)
    counts = np.zeros((n, 2), dtype=np.int64)
    c = 0
    for i in range(n):
        if labels[i] != unseen:
            continue
        nb = neighbours(i)
        counts[i, 0] = len(nb)
        if len(nb) < n_min:
            labels[i] = NOISE
            continue
        c += 1
        labels[i] = c
        core[i] = True
        seeds = deque(nb.tolist())
        while seeds:
            j = seeds.popleft()
            if labels[j] == NOISE:
                # already queried and not core: a border point
                labels[j] = c
            if labels[j] != unseen:
                continue
            labels[j] = c
            nb = neighbours(j)
            counts[j, 0] = len(nb)
            if len(nb) >= n_min:
                core[j] = True
                seeds.extend(nb.tolist())
    labels = np.concatenate([labels, np.full(dataset.m, NOISE, dtype=np.int64)])
    return ClusteringResult(labels, core, c, range_queries=queries, neighbor_counts=counts)


def dbscan_with_coverage(dataset: LabeledDataset, backend: RangeQueryBackend, epsilon: float, n_min: int, kernels=None) -> ClusteringResult:
    """DBSCAN whose clusters also absorb the irrelevant points they cover.

    Relevant labels equal :func:`dbscan`; each irrelevant point within
    ``epsilon`` of a core point is counted as a member of that core's
    cluster.  This is how a DBSCAN clustering is scored against irrelevant
    points, and equals DBSTexC with ``n_max = m``.
    """
    return dbstexc(dataset, backend, ClusterParams(epsilon, n_min, dataset.m), kernels)


def j_re(count, fp: FuzzyParams):
    """Relevant-side membership: 0 up to ``n_min1``, 1 from ``n_min2``, linear between."""
    count = np.asarray(count, dtype=np.float64)
    if fp.n_min1 == fp.n_min2:
        out = np.where(count >= fp.n_min1, 1.0, 0.0)
    else:
        out = np.clip((count - fp.n_min1) / (fp.n_min2 - fp.n_min1), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def j_irre(count, fp: FuzzyParams):
    """Irrelevant-side membership: 1 up to ``n_max1``, 0 from ``n_max2``, linear between."""
    count = np.asarray(count, dtype=np.float64)
    if fp.n_max1 == fp.n_max2:
        out = np.where(count <= fp.n_max1, 1.0, 0.0)
    else:
        out = np.clip((fp.n_max2 - count) / (fp.n_max2 - fp.n_max1), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def fuzzy_score(x_count, y_count, fp: FuzzyParams):
    """Mean of the two memberships for a point's neighbourhood counts."""
    mu = 0.5 * (np.asarray(j_re(x_count, fp)) + np.asarray(j_irre(y_count, fp)))
    return float(mu) if mu.ndim == 0 else mu


def f_dbstexc(dataset: LabeledDataset, backend: RangeQueryBackend, fp: FuzzyParams, kernels=None) -> ClusteringResult:
    """Fuzzy DBSTexC.

    Same expansion as :func:`dbstexc`, but a point is core as soon as it has
    ``>= n_min1`` relevant and ``<= n_max2`` irrelevant neighbours.  Core
    points carry their own fuzzy score; border points and absorbed
    irrelevant points inherit the score of the core point whose
    neighbourhood brought them into the cluster.  Noise scores 0.
    """
    lx, ly, core, counts, src_x, src_y, c, nq = _run(dataset, backend, fp.epsilon, fp.n_min1, fp.n_max2, kernels)
    own = np.zeros(len(lx))
    if len(lx):
        own = fuzzy_score(counts[:, 0], counts[:, 1], fp)
    mu_x = np.zeros(len(lx))
    mu_y = np.zeros(len(ly))
    member_x = lx != NOISE
    mu_x[member_x] = own[src_x[member_x]]
    mu_x[core] = own[core]
    member_y = ly != NOISE
    mu_y[member_y] = own[src_y[member_y]]
    return ClusteringResult(
        labels=np.concatenate([lx, ly]),
        core_flags=core,
        num_clusters=c,
        fuzzy_scores=np.concatenate([mu_x, mu_y]),
        range_queries=nq,
        neighbor_counts=counts,
    )


def knn_distance_profile(points, k: int) -> np.ndarray:
    """Distance from every point to its k-th nearest other point, ascending."""
    if isinstance(points, LabeledDataset):
        xy = np.vstack([points.relevant_xy, points.irrelevant_xy])
    elif isinstance(points, np.ndarray):
        xy = points.reshape(-1, 2).astype(np.float64)
    else:
        xy = np.array([(p.x, p.y) for p in points], dtype=np.float64).reshape(-1, 2)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= len(xy):
        raise KTooLarge(f"k={k} needs more than {len(xy)} points")
    # the nearest hit is the point itself at distance 0
    d, _ = cKDTree(xy).query(xy, k=k + 1)
    return np.sort(d[:, k])
