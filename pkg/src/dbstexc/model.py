"""Domain types shared by every stage of the pipeline.

Records come in as :class:`TweetRecord`, get projected into a local planar
frame (:class:`PlanarPoint`) and split into the POI-relevant set and the
POI-irrelevant set of a :class:`LabeledDataset`.  Clustering runs produce a
:class:`ClusteringResult` whose label arrays are indexed over the relevant
points first and the irrelevant points second.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

#: Label of points that belong to no cluster.  Cluster labels start at 1.
NOISE = -1


class DbstexcError(Exception):
    """Base class of every error raised by the package."""


class OutOfRangeCoordinate(DbstexcError, ValueError):
    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class MalformedText(DbstexcError, ValueError):
    pass


class ParseError(DbstexcError, ValueError):
    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class EmptyRelevantSet(DbstexcError, ValueError):
    pass


class KTooLarge(DbstexcError, ValueError):
    pass


class InstanceTooLarge(DbstexcError, ValueError):
    pass


class InvariantViolation(DbstexcError, RuntimeError):
    """A computed result broke one of its structural guarantees."""


class Relevance(enum.Enum):
    RELEVANT = "relevant"
    IRRELEVANT = "irrelevant"


@dataclass(frozen=True)
class TweetRecord:
    id: str
    text: str
    lat: float
    lon: float
    user_id: Optional[str] = None
    created_at: Optional[datetime] = None


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    y: float
    source_index: int = -1


def validate_record(r: TweetRecord) -> TweetRecord:
    """Return ``r`` unchanged if its coordinates and text are well formed."""
    for name, value, bound in (("lat", r.lat, 90.0), ("lon", r.lon, 180.0)):
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise OutOfRangeCoordinate(f"{name}={value!r} is not a finite number")
        if not -bound <= value <= bound:
            raise OutOfRangeCoordinate(f"{name}={value!r} outside [-{bound:g}, {bound:g}]")
    if not isinstance(r.text, str):
        raise MalformedText(f"text of record {r.id!r} is not a string")
    try:
        r.text.encode("utf-8")
    except UnicodeEncodeError as exc:  # lone surrogates
        raise MalformedText(f"text of record {r.id!r} is not valid UTF-8: {exc}") from None
    for name, value in (("id", r.id), ("text", r.text), ("user_id", r.user_id)):
        # NUL cannot travel through CSV and never occurs in real posts
        if value is not None and "\x00" in str(value):
            raise MalformedText(f"{name} of record {r.id!r} contains a NUL character")
    return r


def _as_xy(points: Sequence[PlanarPoint]) -> np.ndarray:
    if len(points) == 0:
        return np.empty((0, 2), dtype=np.float64)
    return np.array([(p.x, p.y) for p in points], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Relevant set (size ``n``) and irrelevant set (size ``m``) in meters.

    ``relevant_xy`` and ``irrelevant_xy`` are read-only ``(k, 2)`` float arrays
    mirroring the point lists; the algorithms work on those.
    """

    relevant: tuple[PlanarPoint, ...]
    irrelevant: tuple[PlanarPoint, ...]
    projection_origin: tuple[float, float] = (0.0, 0.0)
    relevant_xy: np.ndarray = field(init=False, repr=False)
    irrelevant_xy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "relevant", tuple(self.relevant))
        object.__setattr__(self, "irrelevant", tuple(self.irrelevant))
        clash = {p.source_index for p in self.relevant}.intersection(
            p.source_index for p in self.irrelevant
        )
        clash.discard(-1)
        if clash:
            raise ValueError(f"points {sorted(clash)[:5]} are both relevant and irrelevant")
        for name, pts in (("relevant_xy", self.relevant), ("irrelevant_xy", self.irrelevant)):
            xy = _as_xy(pts)
            if not np.all(np.isfinite(xy)):
                raise ValueError("planar coordinates must be finite")
            xy.setflags(write=False)
            object.__setattr__(self, name, xy)

    @classmethod
    def from_arrays(cls, relevant_xy, irrelevant_xy=None, projection_origin=(0.0, 0.0)):
        """Build a dataset from coordinate arrays; source indices run over X then Y."""
        rel = np.asarray(relevant_xy, dtype=np.float64).reshape(-1, 2)
        irr = np.asarray(irrelevant_xy if irrelevant_xy is not None else [], dtype=np.float64).reshape(-1, 2)
        n = len(rel)
        return cls(
            tuple(PlanarPoint(float(x), float(y), i) for i, (x, y) in enumerate(rel)),
            tuple(PlanarPoint(float(x), float(y), n + j) for j, (x, y) in enumerate(irr)),
            projection_origin,
        )

    @property
    def n(self) -> int:
        return len(self.relevant)

    @property
    def m(self) -> int:
        return len(self.irrelevant)

    def homogeneous(self) -> "LabeledDataset":
        """The same relevant points with the irrelevant set dropped."""
        return LabeledDataset(self.relevant, (), self.projection_origin)


@dataclass(frozen=True)
class ClusterParams:
    epsilon: float
    n_min: int
    n_max: int

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a positive finite distance, got {self.epsilon!r}")
        if int(self.n_min) != self.n_min or self.n_min < 1:
            raise ValueError(f"n_min must be an integer >= 1, got {self.n_min!r}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValueError(f"n_max must be an integer >= 0, got {self.n_max!r}")


@dataclass(frozen=True)
class FuzzyParams:
    epsilon: float
    n_min1: int
    n_min2: int
    n_max1: int
    n_max2: int

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a positive finite distance, got {self.epsilon!r}")
        if not 1 <= self.n_min1 <= self.n_min2:
            raise ValueError(f"need 1 <= n_min1 <= n_min2, got {self.n_min1}, {self.n_min2}")
        if not 0 <= self.n_max1 <= self.n_max2:
            raise ValueError(f"need 0 <= n_max1 <= n_max2, got {self.n_max1}, {self.n_max2}")

    @classmethod
    def crisp(cls, params: ClusterParams) -> "FuzzyParams":
        """Degenerate fuzzy parameters equivalent to ``params``."""
        return cls(params.epsilon, params.n_min, params.n_min, params.n_max, params.n_max)


@dataclass(frozen=True, eq=False)
class ClusteringResult:
    """Outcome of one clustering run.

    Attributes
    ----------
    labels : ndarray of int, shape (n + m,)
        Cluster label per point, relevant points first.  ``NOISE`` (-1) marks
        points outside every cluster; clusters are numbered 1..num_clusters.
    core_flags : ndarray of bool, shape (n,)
        Whether each relevant point passed the core test.
    num_clusters : int
    fuzzy_scores : ndarray of float, shape (n + m,), optional
        Membership score per point; only set by the fuzzy algorithm.  Noise
        points score 0.
    range_queries : int
        Number of range queries issued during the run.
    neighbor_counts : ndarray of int, shape (n, 2), optional
        ``|X_eps(p)|`` and ``|Y_eps(p)|`` for every relevant point.
    """

    labels: np.ndarray
    core_flags: np.ndarray
    num_clusters: int
    fuzzy_scores: Optional[np.ndarray] = None
    range_queries: int = 0
    neighbor_counts: Optional[np.ndarray] = None

    def __post_init__(self):
        for arr in (self.labels, self.core_flags, self.fuzzy_scores, self.neighbor_counts):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.core_flags)

    @property
    def relevant_labels(self) -> np.ndarray:
        return self.labels[: self.n]

    @property
    def irrelevant_labels(self) -> np.ndarray:
        return self.labels[self.n:]

    def check(self) -> "ClusteringResult":
        """Raise :class:`InvariantViolation` if the result is malformed."""
        labels = self.labels
        if np.any(self.relevant_labels[self.core_flags] == NOISE):
            raise InvariantViolation("a core point is labeled NOISE")
        used = np.unique(labels[labels != NOISE])
        if not np.array_equal(used, np.arange(1, self.num_clusters + 1)):
            raise InvariantViolation(f"labels {used.tolist()} are not contiguous 1..{self.num_clusters}")
        if np.any((labels != NOISE) & (labels < 1)):
            raise InvariantViolation("negative label other than NOISE")
        if self.fuzzy_scores is not None:
            mu = self.fuzzy_scores
            if len(mu) != len(labels) or np.any(mu < 0) or np.any(mu > 1):
                raise InvariantViolation("fuzzy scores must lie in [0, 1] for every point")
        return self
