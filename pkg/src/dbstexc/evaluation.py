"""Precision/recall/F1, covered area and the area-weighted F1 score.

The score of a clustering is ``area_norm ** alpha * f1`` where ``area_norm``
is the area covered by the clusters divided by the area of the query-region
disk.  ``alpha = 0`` gives plain F1 (``0 ** 0`` is taken as 1).
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .cluster import dbscan_with_coverage, dbstexc, f_dbstexc
from .geo import DEFAULT_RESOLUTION, Projection, Raster, convex_hull, polygon_area
from .index import RangeQueryBackend
from .ingest import QueryRegion
from .model import NOISE, ClusteringResult, ClusterParams, FuzzyParams, LabeledDataset

ALGORITHMS = ("dbscan", "dbstexc", "f_dbstexc")

SWEEP_HEADER = [
    "algorithm", "epsilon", "n_min", "n_max", "n_min1", "n_min2", "n_max1", "n_max2",
    "alpha", "tp", "fp", "fn", "precision", "recall", "f1", "area_m2", "area_norm", "score",
]


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    area_m2: float
    area_norm: float
    alpha: float
    score: float


def member_mask(result: ClusteringResult, tau: float = 0.0) -> np.ndarray:
    """Points counted as clustered: labeled, and with ``mu >= tau`` for fuzzy results."""
    mask = result.labels != NOISE
    if tau > 0 and result.fuzzy_scores is not None:
        mask &= result.fuzzy_scores >= tau
    return mask


def confusion(result: ClusteringResult, dataset: LabeledDataset, tau: float = 0.0) -> tuple[int, int, int]:
    if len(result.labels) != dataset.n + dataset.m:
        raise ValueError("result and dataset sizes differ")
    mask = member_mask(result, tau)
    tp = int(np.count_nonzero(mask[: dataset.n]))
    fp = int(np.count_nonzero(mask[dataset.n:]))
    return tp, fp, dataset.n - tp


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def cluster_shapes(result: ClusteringResult, dataset: LabeledDataset, epsilon: float, tau: float = 0.0):
    """Yield ``(label, kind, shape, members)`` per cluster.

    ``kind`` is ``"hull"`` with a CCW vertex array, or ``"disk"`` with
    ``(cx, cy, epsilon)`` for clusters whose members do not span a
    triangle.
    """
    xy = np.vstack([dataset.relevant_xy, dataset.irrelevant_xy])
    mask = member_mask(result, tau)
    for label in range(1, result.num_clusters + 1):
        members = np.flatnonzero((result.labels == label) & mask)
        if len(members) == 0:
            continue
        pts = xy[members]
        hull = convex_hull(pts) if len(pts) >= 3 else pts
        if len(hull) >= 3 and polygon_area(hull) > 0:
            yield label, "hull", hull, members
        else:
            cx, cy = pts.mean(axis=0)
            yield label, "disk", (float(cx), float(cy), float(epsilon)), members


def cluster_area(
    result: ClusteringResult,
    dataset: LabeledDataset,
    region: QueryRegion,
    epsilon: float,
    resolution: float = DEFAULT_RESOLUTION,
    tau: float = 0.0,
) -> float:
    """Area of the union of cluster hulls inside the query-region disk, in m^2."""
    cx, cy = map(float, Projection.at(*dataset.projection_origin).forward(*region.center))
    r = region.radius
    raster = Raster((cx - r, cy - r, cx + r, cy + r), resolution)
    for _, kind, shape, _ in cluster_shapes(result, dataset, epsilon, tau):
        if kind == "hull":
            raster.add_convex(shape)
        else:
            raster.add_disk(*shape)
    raster.clip_disk(cx, cy, r)
    return raster.area


def area_score(area_norm: float, f1: float, alpha: float) -> float:
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha == 0:
        return f1
    return area_norm**alpha * f1


def report(tp, fp, fn, area_m2, region_radius, alpha) -> EvalReport:
    precision, recall, f1 = prf(tp, fp, fn)
    area_norm = min(1.0, area_m2 / (math.pi * region_radius**2))
    return EvalReport(tp, fp, fn, precision, recall, f1, area_m2, area_norm, float(alpha),
                      area_score(area_norm, f1, alpha))


def score(
    result: ClusteringResult,
    dataset: LabeledDataset,
    region: QueryRegion,
    alpha: float,
    epsilon: float,
    resolution: float = DEFAULT_RESOLUTION,
    tau: float = 0.0,
) -> EvalReport:
    """Full evaluation of one clustering at area exponent ``alpha``."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    tp, fp, fn = confusion(result, dataset, tau)
    area = cluster_area(result, dataset, region, epsilon, resolution, tau)
    return report(tp, fp, fn, area, region.radius, alpha)


# -- sweeps -----------------------------------------------------------------------


@dataclass
class SweepSpec:
    """Parameter grids.  ``n_max`` entries may be the string ``"m"`` for the irrelevant count."""

    epsilons: Sequence[float]
    n_mins: Sequence[int] = ()
    n_maxs: Sequence = ()
    n_min1s: Sequence[int] = ()
    n_min2s: Sequence[int] = ()
    n_max1s: Sequence = ()
    n_max2s: Sequence = ()
    alphas: Sequence[float] = (0.0, 0.5, 0.75, 1.0)

    def __post_init__(self):
        if not self.epsilons or not self.alphas:
            raise ValueError("sweep grids must be non-empty")

    def cells(self, algorithm: str, m: int) -> list[dict]:
        res = lambda v: m if v == "m" else int(v)  # noqa: E731
        if algorithm == "dbscan":
            if not self.n_mins:
                raise ValueError("dbscan sweep needs n_min values")
            return [{"epsilon": float(e), "n_min": int(a)} for e, a in itertools.product(self.epsilons, self.n_mins)]
        if algorithm == "dbstexc":
            if not self.n_mins or not self.n_maxs:
                raise ValueError("dbstexc sweep needs n_min and n_max values")
            grid = itertools.product(self.epsilons, self.n_mins, sorted({res(v) for v in self.n_maxs}))
            return [{"epsilon": float(e), "n_min": int(a), "n_max": b} for e, a, b in grid]
        if algorithm == "f_dbstexc":
            if not (self.n_min1s and self.n_min2s and self.n_max1s and self.n_max2s):
                raise ValueError("f_dbstexc sweep needs n_min1, n_min2, n_max1 and n_max2 values")
            grid = itertools.product(
                self.epsilons, self.n_min1s, self.n_min2s,
                sorted({res(v) for v in self.n_max1s}), sorted({res(v) for v in self.n_max2s}),
            )
            return [
                {"epsilon": float(e), "n_min1": int(a), "n_min2": int(b), "n_max1": c, "n_max2": d}
                for e, a, b, c, d in grid
                if a <= b and c <= d
            ]
        raise ValueError(f"unknown algorithm {algorithm!r}")


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    params: dict
    report: EvalReport

    def as_csv(self) -> list:
        p = self.params
        r = self.report
        cols = [self.algorithm] + [_fmt(p.get(k)) for k in SWEEP_HEADER[1:8]]
        cols += [_fmt(r.alpha), r.tp, r.fp, r.fn] + [_fmt(v) for v in (r.precision, r.recall, r.f1, r.area_m2, r.area_norm, r.score)]
        return cols

    def key(self) -> tuple:
        p = self.params
        return (
            ALGORITHMS.index(self.algorithm),
            self.report.alpha,
            p["epsilon"],
            p.get("n_min", p.get("n_min1", 0)),
            p.get("n_min2", 0),
            p.get("n_max", p.get("n_max1", 0)),
            p.get("n_max2", 0),
        )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def best(self) -> list[SweepRow]:
        """Highest-scoring row per (algorithm, alpha).

        Ties go to the smaller epsilon, then the smaller n_min, then the
        larger n_max, then the parameter tuple in lexicographic order.
        """
        out = {}
        for row in self.rows:
            k = (row.algorithm, row.report.alpha)
            if k not in out or _rank(row) < _rank(out[k]):
                out[k] = row
        return sorted(out.values(), key=SweepRow.key)

    def best_score(self, algorithm: str, alpha: float) -> float:
        return max(r.report.score for r in self.rows if r.algorithm == algorithm and r.report.alpha == alpha)

    def write_csv(self, path, rows: Optional[Iterable[SweepRow]] = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\r\n")
            w.writerow(SWEEP_HEADER)
            for row in rows if rows is not None else self.rows:
                w.writerow(row.as_csv())


def _rank(row: SweepRow) -> tuple:
    p = row.params
    n_min = p.get("n_min", p.get("n_min1", 0))
    n_max = p.get("n_max", p.get("n_max2", 0))
    lex = tuple(p.get(k, 0) for k in ("n_min1", "n_min2", "n_max1", "n_max2"))
    return (-row.report.score, p["epsilon"], n_min, -n_max, lex)


def run_algorithm(algorithm: str, dataset, backend, params: dict, kernels=None) -> ClusteringResult:
    """Run one of ``dbscan``, ``dbstexc``, ``f_dbstexc`` with a parameter dict.

    DBSCAN is scored with the irrelevant points its clusters cover counted as
    members (see :func:`dbscan_with_coverage`).
    """
    if algorithm == "dbscan":
        return dbscan_with_coverage(dataset, backend, params["epsilon"], params["n_min"], kernels)
    if algorithm == "dbstexc":
        return dbstexc(dataset, backend, ClusterParams(params["epsilon"], params["n_min"], params["n_max"]), kernels)
    if algorithm == "f_dbstexc":
        fp = FuzzyParams(params["epsilon"], params["n_min1"], params["n_min2"], params["n_max1"], params["n_max2"])
        return f_dbstexc(dataset, backend, fp, kernels)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def sweep(
    dataset: LabeledDataset,
    backend: RangeQueryBackend,
    spec: SweepSpec,
    algorithm: str,
    region: QueryRegion,
    resolution: float = DEFAULT_RESOLUTION,
    tau: float = 0.0,
    workers: int = 1,
) -> SweepResult:
    """Evaluate every grid cell of ``algorithm`` at every alpha."""
    cells = spec.cells(algorithm, dataset.m)

    def evaluate(params):
        result = run_algorithm(algorithm, dataset, backend, params)
        tp, fp, fn = confusion(result, dataset, tau)
        area = cluster_area(result, dataset, region, params["epsilon"], resolution, tau)
        return [SweepRow(algorithm, params, report(tp, fp, fn, area, region.radius, a)) for a in spec.alphas]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(evaluate, cells))
    else:
        chunks = [evaluate(c) for c in cells]
    rows = sorted(itertools.chain.from_iterable(chunks), key=SweepRow.key)
    return SweepResult(rows)
