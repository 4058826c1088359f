"""Synthetic datasets, a brute-force clustering oracle, and the runtime benchmark."""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .index import BackendKind, build
from .model import ClusterParams, InstanceTooLarge, InvariantViolation, LabeledDataset

DEFAULT_ORIGIN = (51.5073, -0.1657)
ORACLE_LIMIT = 10_000


@dataclass(frozen=True)
class Blob:
    center: tuple[float, float]
    stddev: float
    count: int

    def __post_init__(self):
        if self.stddev <= 0:
            raise ValueError("blob stddev must be positive")
        if self.count < 0:
            raise ValueError("blob count must be >= 0")


@dataclass(frozen=True)
class GenSpec:
    seed: int
    region_radius: float
    relevant_blobs: tuple[Blob, ...] = ()
    irrelevant_blobs: tuple[Blob, ...] = ()
    uniform_noise: tuple[int, int] = (0, 0)
    origin: tuple[float, float] = DEFAULT_ORIGIN

    def __post_init__(self):
        object.__setattr__(self, "relevant_blobs", tuple(_blob(b) for b in self.relevant_blobs))
        object.__setattr__(self, "irrelevant_blobs", tuple(_blob(b) for b in self.irrelevant_blobs))
        object.__setattr__(self, "uniform_noise", tuple(int(c) for c in self.uniform_noise))
        if min(self.uniform_noise) < 0:
            raise ValueError("uniform noise counts must be >= 0")
        if self.region_radius <= 0:
            raise ValueError("region_radius must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "GenSpec":
        return cls(
            seed=int(d["seed"]),
            region_radius=float(d["region_radius"]),
            relevant_blobs=tuple(d.get("relevant_blobs", ())),
            irrelevant_blobs=tuple(d.get("irrelevant_blobs", ())),
            uniform_noise=tuple(d.get("uniform_noise", (0, 0))),
            origin=tuple(d.get("origin", DEFAULT_ORIGIN)),
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _blob(b) -> Blob:
    if isinstance(b, Blob):
        return b
    if isinstance(b, dict):
        return Blob(tuple(map(float, b["center"])), float(b["stddev"]), int(b["count"]))
    center, stddev, count = b
    return Blob(tuple(map(float, center)), float(stddev), int(count))


def _uniform_disk(rng, count, radius):
    r = radius * np.sqrt(rng.random(count))
    t = rng.random(count) * 2.0 * np.pi
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def _gaussian_in_disk(rng, blob: Blob, radius):
    # points falling outside the region are redrawn
    out = np.empty((0, 2))
    while len(out) < blob.count:
        pts = rng.normal(blob.center, blob.stddev, size=(blob.count - len(out), 2))
        out = np.vstack([out, pts[np.hypot(pts[:, 0], pts[:, 1]) <= radius]])
    return out


def generate(spec: GenSpec) -> LabeledDataset:
    """Gaussian blobs plus uniform noise inside the region disk, reproducible from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    parts = {True: [], False: []}
    for relevant, blobs in ((True, spec.relevant_blobs), (False, spec.irrelevant_blobs)):
        for b in blobs:
            parts[relevant].append(_gaussian_in_disk(rng, b, spec.region_radius))
    parts[True].append(_uniform_disk(rng, spec.uniform_noise[0], spec.region_radius))
    parts[False].append(_uniform_disk(rng, spec.uniform_noise[1], spec.region_radius))
    return LabeledDataset.from_arrays(np.vstack(parts[True]), np.vstack(parts[False]), spec.origin)


def heterogeneity_spec(seed: int = 7) -> GenSpec:
    """A POI whose dense relevant core sits under a dense irrelevant blob.

    Relevant posts form a dense blob at the centre and a wide, moderately
    dense blob to the east.  A much denser blob of irrelevant posts covers
    the central one and uniform irrelevant background fills the region.
    Any DBSCAN setting that reaches the eastern blob also clusters the
    centre together with its irrelevant crowd.
    """
    return GenSpec(
        seed=seed,
        region_radius=2000.0,
        relevant_blobs=(
            Blob((0.0, 0.0), 100.0, 250),
            Blob((700.0, 0.0), 400.0, 400),
        ),
        irrelevant_blobs=(Blob((0.0, 0.0), 200.0, 2500),),
        uniform_noise=(30, 600),
    )


# -- oracle -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OraclePartition:
    core_flags: np.ndarray
    components: np.ndarray  # component id per relevant point, -1 for non-core

    def core_partition(self) -> frozenset:
        """Set of frozensets of core indices, one per cluster."""
        groups: dict[int, set] = {}
        for i, c in enumerate(self.components):
            if c >= 0:
                groups.setdefault(int(c), set()).add(i)
        return frozenset(frozenset(g) for g in groups.values())


def oracle_cluster(dataset: LabeledDataset, params: ClusterParams) -> OraclePartition:
    """Exhaustive core test plus connected components of the core eps-graph."""
    n, m = dataset.n, dataset.m
    if n + m > ORACLE_LIMIT:
        raise InstanceTooLarge(f"oracle is quadratic; {n + m} points exceeds {ORACLE_LIMIT}")
    X, Y = dataset.relevant_xy, dataset.irrelevant_xy
    e2 = params.epsilon * params.epsilon
    dxx = X[:, None, :] - X[None, :, :]
    near_x = dxx[..., 0] * dxx[..., 0] + dxx[..., 1] * dxx[..., 1] <= e2
    if m:
        dxy = X[:, None, :] - Y[None, :, :]
        y_counts = np.count_nonzero(dxy[..., 0] * dxy[..., 0] + dxy[..., 1] * dxy[..., 1] <= e2, axis=1)
    else:
        y_counts = np.zeros(n, dtype=np.int64)
    core = (near_x.sum(axis=1) >= params.n_min) & (y_counts <= params.n_max)
    comp = np.full(n, -1, dtype=np.int64)
    idx = np.flatnonzero(core)
    if len(idx):
        sub = near_x[np.ix_(idx, idx)]
        rows, cols = np.nonzero(sub)
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(idx), len(idx)))
        _, lab = connected_components(graph, directed=False)
        comp[idx] = lab
    return OraclePartition(core, comp)


def core_partition(result) -> frozenset:
    """Core-point partition of a :class:`ClusteringResult`, comparable to the oracle's."""
    labels = result.relevant_labels
    groups: dict[int, set] = {}
    for i in np.flatnonzero(result.core_flags):
        groups.setdefault(int(labels[i]), set()).add(int(i))
    return frozenset(frozenset(g) for g in groups.values())


# -- benchmark ----------------------------------------------------------------


@dataclass
class BenchRow:
    n: int
    m: int
    regime: str
    median_seconds: float
    backend: str
    range_queries: int


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    slopes: dict[str, float] = field(default_factory=dict)
    split_n: Optional[int] = None
    implementation: str = ""

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\r\n")
            w.writerow(["n", "m", "median_seconds", "backend"])
            for r in self.rows:
                w.writerow([r.n, r.m, repr(r.median_seconds), r.backend])

    def summary(self) -> dict:
        return {
            "slopes": self.slopes,
            "split_n": self.split_n,
            "implementation": self.implementation,
            "regimes": {
                reg: [{"n": r.n, "m": r.m, "median_seconds": r.median_seconds} for r in self.rows if r.regime == reg]
                for reg in self.slopes
            },
        }

    def write_summary(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.summary(), f, indent=2, sort_keys=True)
            f.write("\n")


DEFAULT_SIZES = [(n, n, "m=n") for n in (1000, 2000, 4000, 8000)] + [
    (n, round(n**1.5), "m=n^1.5") for n in (250, 500, 1000, 2000)
]


def fit_loglog_slope(ns, times) -> float:
    """Least-squares slope of log(time) against log(n)."""
    slope, _ = np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(times, float)), 1)
    return float(slope)


def _normalise_sizes(sizes):
    out = []
    for s in sizes:
        if len(s) == 2:
            out.append((int(s[0]), int(s[1]), "all"))
        else:
            out.append((int(s[0]), int(s[1]), str(s[2])))
    for reg in dict.fromkeys(r for _, _, r in out):
        ns = [n for n, _, r in out if r == reg]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError(f"sizes of regime {reg!r} must be strictly increasing in n")
    return out


def read_sizes(path) -> list:
    """Read a sizes file: CSV with header ``n,m`` and an optional ``regime`` column."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    sizes = []
    for line_no, row in enumerate(rows, start=2):
        try:
            sizes.append((int(row["n"]), int(row["m"]), (row.get("regime") or "all").strip()))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"line {line_no}: bad sizes row {row!r}: {exc}") from None
    return sizes


def time_worst_case(n: int, m: int, trials: int, kind, seed: int = 0, region_radius: float = 1000.0, kernels=None):
    """Median wall time of DBSTexC at eps = region radius, n_min = 1, n_max = m.

    One warm-up run is discarded.  Every run is checked to issue exactly
    ``n`` range queries.
    """
    from .cluster import dbstexc

    ds = generate(GenSpec(seed=seed, region_radius=region_radius, uniform_noise=(n, m)))
    params = ClusterParams(region_radius, 1, m)
    times = []
    for t in range(trials + 1):
        start = time.perf_counter()
        backend = build(ds, kind)
        result = dbstexc(ds, backend, params, kernels)
        elapsed = time.perf_counter() - start
        if result.range_queries != n:
            raise InvariantViolation(f"{result.range_queries} range queries for n={n}")
        if t:
            times.append(elapsed)
    return statistics.median(times), n


def run_bench(sizes: Sequence = DEFAULT_SIZES, trials: int = 3, kind=BackendKind.LINEAR_SCAN,
              seed: int = 0, kernels=None) -> BenchReport:
    from . import _kernels

    kind = BackendKind.parse(kind)
    sizes = _normalise_sizes(sizes)
    impl = kernels or _kernels.active
    report = BenchReport(implementation="python" if impl.__name__.endswith("_pykernels") else "compiled")
    for n, m, regime in sizes:
        median, nq = time_worst_case(n, m, trials, kind, seed, kernels=kernels)
        report.rows.append(BenchRow(n, m, regime, median, kind.value, nq))
    regimes = list(dict.fromkeys(r.regime for r in report.rows))
    for reg in regimes:
        rows = [r for r in report.rows if r.regime == reg]
        if len(rows) >= 2:
            report.slopes[reg] = fit_loglog_slope([r.n for r in rows], [r.median_seconds for r in rows])
    if len(regimes) > 1:
        report.split_n = next(r.n for r in report.rows if r.regime == regimes[1])
    return report
