"""Range queries over the relevant and irrelevant point sets.

Two interchangeable backends answer ``range_query``: an exhaustive linear
scan and a pair of balanced 2-d trees (one per point set, so the relevant
and irrelevant counts come out separately without post-filtering).  Both
include points at distance exactly ``epsilon`` and return indices sorted
ascending, so they agree on every query.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .model import LabeledDataset, PlanarPoint

LEAF_SIZE = 16


class BackendKind(enum.Enum):
    LINEAR_SCAN = "linear"
    KD_TREE = "kd"

    @classmethod
    def parse(cls, value) -> "BackendKind":
        if isinstance(value, cls):
            return value
        aliases = {"linear": cls.LINEAR_SCAN, "linearscan": cls.LINEAR_SCAN, "scan": cls.LINEAR_SCAN,
                   "kd": cls.KD_TREE, "kdtree": cls.KD_TREE, "kd-tree": cls.KD_TREE}
        try:
            return aliases[str(value).lower().replace("_", "")]
        except KeyError:
            raise ValueError(f"unknown backend {value!r}; expected 'linear' or 'kd'") from None


@dataclass(frozen=True, eq=False)
class KdTree:
    """Flat 2-d tree.

    Node ``i`` covers ``perm[start[i]:end[i]]`` and has bounding box
    ``bbox[i] = (xmin, ymin, xmax, ymax)``.  Leaves have ``left == -1``.
    Inner nodes split at the median along their wider side; the left child
    holds coordinates ``<=`` the split value, the right child ``>=``.
    """

    perm: np.ndarray
    start: np.ndarray
    end: np.ndarray
    left: np.ndarray
    right: np.ndarray
    bbox: np.ndarray

    def as_tuple(self):
        return (self.perm, self.start, self.end, self.left, self.right, self.bbox)

    @property
    def num_nodes(self) -> int:
        return len(self.start)

    def depth(self) -> int:
        if self.num_nodes == 0:
            return 0
        depth = np.zeros(self.num_nodes, dtype=np.int64)
        for i in range(self.num_nodes):  # children always follow their parent
            if self.left[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) + 1

    @classmethod
    def build(cls, xy: np.ndarray, leaf_size: int = LEAF_SIZE) -> "KdTree":
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        n = len(xy)
        perm = np.arange(n, dtype=np.int64)
        start, end, left, right, bbox = [], [], [], [], []
        if n:
            start.append(0); end.append(n); left.append(-1); right.append(-1); bbox.append(None)
        todo = [0] if n else []
        while todo:
            node = todo.pop()
            s, e = start[node], end[node]
            pts = xy[perm[s:e]]
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            bbox[node] = (lo[0], lo[1], hi[0], hi[1])
            if e - s <= leaf_size:
                continue
            dim = 0 if hi[0] - lo[0] >= hi[1] - lo[1] else 1
            mid = (s + e) // 2
            order = np.argpartition(pts[:, dim], mid - s, kind="introselect")
            perm[s:e] = perm[s:e][order]
            for cs, ce in ((s, mid), (mid, e)):
                start.append(cs); end.append(ce); left.append(-1); right.append(-1); bbox.append(None)
            left[node], right[node] = len(start) - 2, len(start) - 1
            todo.extend((left[node], right[node]))
        return cls(
            perm,
            np.asarray(start, dtype=np.int64),
            np.asarray(end, dtype=np.int64),
            np.asarray(left, dtype=np.int64),
            np.asarray(right, dtype=np.int64),
            np.asarray(bbox, dtype=np.float64).reshape(-1, 4),
        )


class RangeQueryBackend:
    """Immutable range-query index over a :class:`LabeledDataset`.

    ``queries`` counts calls to :meth:`range_query`; it is the only mutable
    attribute and is not used by the clustering runs, which report their own
    count in :attr:`ClusteringResult.range_queries`.
    """

    def __init__(self, dataset: LabeledDataset, kind=BackendKind.KD_TREE, leaf_size: int = LEAF_SIZE):
        self.dataset = dataset
        self.kind = BackendKind.parse(kind)
        self.relevant_xy = dataset.relevant_xy
        self.irrelevant_xy = dataset.irrelevant_xy
        self.relevant_tree: Optional[KdTree] = None
        self.irrelevant_tree: Optional[KdTree] = None
        if self.kind is BackendKind.KD_TREE:
            self.relevant_tree = KdTree.build(self.relevant_xy, leaf_size)
            self.irrelevant_tree = KdTree.build(self.irrelevant_xy, leaf_size)
        self.queries = 0

    @property
    def kernel_kind(self) -> int:
        return 0 if self.kind is BackendKind.LINEAR_SCAN else 1

    def tree_tuples(self):
        if self.kind is BackendKind.LINEAR_SCAN:
            return None, None
        return self.relevant_tree.as_tuple(), self.irrelevant_tree.as_tuple()

    def _one(self, xy, tree, qx, qy, eps):
        if self.kind is BackendKind.LINEAR_SCAN:
            return _kernels.scan_radius(xy, qx, qy, eps)
        return _kernels.kd_radius(tree.as_tuple(), xy, qx, qy, eps)

    def range_query(self, p, epsilon: float):
        """Indices of relevant and irrelevant points within ``epsilon`` of ``p``.

        ``p`` is a :class:`PlanarPoint` or an ``(x, y)`` pair.  Returns two
        ascending int arrays ``(x_eps, y_eps)``.
        """
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        qx, qy = (p.x, p.y) if isinstance(p, PlanarPoint) else (float(p[0]), float(p[1]))
        self.queries += 1
        return (
            self._one(self.relevant_xy, self.relevant_tree, qx, qy, epsilon),
            self._one(self.irrelevant_xy, self.irrelevant_tree, qx, qy, epsilon),
        )


def build(dataset: LabeledDataset, kind=BackendKind.KD_TREE, leaf_size: int = LEAF_SIZE) -> RangeQueryBackend:
    return RangeQueryBackend(dataset, kind, leaf_size)


def range_query(backend: RangeQueryBackend, p, epsilon: float):
    return backend.range_query(p, epsilon)
