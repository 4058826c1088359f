"""Text-aware density clustering of geo-tagged posts (DBSTexC and its fuzzy variant)."""

from ._kernels import IMPLEMENTATION
from .cluster import dbscan, dbscan_with_coverage, dbstexc, f_dbstexc, fuzzy_score, j_irre, j_re, knn_distance_profile
from .evaluation import SweepSpec, score, sweep
from .index import BackendKind, RangeQueryBackend, build, range_query
from .ingest import PoiSpec, QueryRegion, assemble_dataset, parse_records
from .model import (
    NOISE,
    ClusteringResult,
    ClusterParams,
    FuzzyParams,
    LabeledDataset,
    PlanarPoint,
    Relevance,
    TweetRecord,
)

__version__ = "0.1.0"
