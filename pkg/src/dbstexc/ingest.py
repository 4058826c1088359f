"""Reading post files, keyword relevance, and query-region construction.

Input files are CSV (header ``id,text,lat,lon[,user_id,created_at]``,
RFC 4180 quoting) or JSONL (one object per line with the same keys).
``created_at`` is ISO-8601 in UTC.  Unknown columns/keys are ignored.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geo import Projection
from .model import (
    EmptyRelevantSet,
    LabeledDataset,
    MalformedText,
    OutOfRangeCoordinate,
    ParseError,
    PlanarPoint,
    Relevance,
    TweetRecord,
    validate_record,
)

log = logging.getLogger(__name__)

CSV_FIELDS = ["id", "text", "lat", "lon", "user_id", "created_at"]
DEFAULT_ETA = 0.07
DEFAULT_R0 = 500.0
DEFAULT_STEP = 100.0


class InsufficientPrecisionWarning(UserWarning):
    """Even the smallest query radius falls below the precision threshold."""


class MissingMetadataWarning(UserWarning):
    """Records lack the user id or timestamp needed for a filter."""


@dataclass(frozen=True)
class PoiSpec:
    name: str
    center: tuple[float, float]
    queries: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.queries or any(not q for q in self.queries):
            raise ValueError("a POI needs at least one non-empty search query")
        lat, lon = self.center
        if not (-90 <= lat <= 90 and -180 <= lon <= 180):
            raise OutOfRangeCoordinate(f"POI center {self.center} out of range")


@dataclass(frozen=True)
class QueryRegion:
    center: tuple[float, float]
    radius: float
    precision_at_radius: float


# -- parsing --------------------------------------------------------------------


def _parse_time(value, line_no) -> Optional[datetime]:
    if value is None or value == "":
        return None
    try:
        text = str(value)
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise ParseError(f"created_at {value!r} is not ISO-8601", line_no) from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_time(ts: Optional[datetime]) -> str:
    if ts is None:
        return ""
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _coord(value, name, line_no) -> float:
    if isinstance(value, bool):
        raise ParseError(f"{name}={value!r} is not a number", line_no)
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{name}={value!r} is not a number", line_no) from None
    if not math.isfinite(out):
        raise ParseError(f"{name}={value!r} is not finite", line_no)
    return out


def _record(row: dict, line_no: int) -> TweetRecord:
    missing = [k for k in ("id", "text", "lat", "lon") if row.get(k) is None]
    if missing:
        raise ParseError(f"missing field(s) {', '.join(missing)}", line_no)
    text = row["text"]
    if not isinstance(text, str):
        raise ParseError(f"text must be a string, got {type(text).__name__}", line_no)
    user = row.get("user_id")
    rec = TweetRecord(
        id=str(row["id"]),
        text=text,
        lat=_coord(row["lat"], "lat", line_no),
        lon=_coord(row["lon"], "lon", line_no),
        user_id=None if user in (None, "") else str(user),
        created_at=_parse_time(row.get("created_at"), line_no),
    )
    try:
        return validate_record(rec)
    except OutOfRangeCoordinate as exc:
        raise OutOfRangeCoordinate(str(exc), line_no) from None
    except MalformedText as exc:
        raise ParseError(str(exc), line_no) from None


def _read_text(path) -> str:
    data = Path(path).read_bytes()
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        line_no = data[: exc.start].count(b"\n") + 1
        raise ParseError(f"invalid UTF-8: {exc.reason}", line_no) from None


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    return "csv"


def parse_records(path, format: Optional[str] = None) -> list[TweetRecord]:
    """Read and validate every record of a CSV or JSONL file, in file order."""
    fmt = (format or infer_format(path)).lower()
    text = _read_text(path)
    records = []
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text, newline=""))
        if reader.fieldnames is None:
            return []
        missing = {"id", "text", "lat", "lon"} - set(reader.fieldnames)
        if missing:
            raise ParseError(f"CSV header lacks {', '.join(sorted(missing))}", 1)
        try:
            for row in reader:
                if None in row:
                    raise ParseError("row has more fields than the header", reader.line_num)
                records.append(_record(row, reader.line_num))
        except csv.Error as exc:
            raise ParseError(str(exc), reader.line_num) from None
    elif fmt == "jsonl":
        # only "\n" ends a record; str.splitlines would also split on U+2028 etc.
        for line_no, line in enumerate(text.split("\n"), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
            if not isinstance(obj, dict):
                raise ParseError("each JSONL line must be an object", line_no)
            records.append(_record(obj, line_no))
    else:
        raise ValueError(f"unknown format {fmt!r}; expected 'csv' or 'jsonl'")
    seen = set()
    for r in records:
        if r.id in seen:
            raise ParseError(f"duplicate record id {r.id!r}")
        seen.add(r.id)
    return records


def write_records(records: Sequence[TweetRecord], path, format: Optional[str] = None) -> None:
    """Write records so that :func:`parse_records` reads them back unchanged."""
    fmt = (format or infer_format(path)).lower()
    for r in records:
        validate_record(r)
    with open(path, "w", newline="", encoding="utf-8") as f:
        if fmt == "csv":
            # RFC 4180 line ends; with "\n" alone a lone "\r" would go unquoted
            w = csv.writer(f, lineterminator="\r\n")
            w.writerow(CSV_FIELDS)
            for r in records:
                w.writerow([r.id, r.text, repr(r.lat), repr(r.lon), r.user_id or "", format_time(r.created_at)])
        elif fmt == "jsonl":
            for r in records:
                obj = {"id": r.id, "text": r.text, "lat": r.lat, "lon": r.lon}
                if r.user_id is not None:
                    obj["user_id"] = r.user_id
                if r.created_at is not None:
                    obj["created_at"] = format_time(r.created_at)
                f.write(json.dumps(obj, ensure_ascii=False) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")


# -- preprocessing ----------------------------------------------------------------


def filter_consecutive_posts(records: Sequence[TweetRecord], limit: int = 3) -> list[TweetRecord]:
    """Drop bursts of more than ``limit`` consecutive posts by one user at one spot.

    Posts of each user are ordered by ``created_at``; every maximal run of
    consecutive posts at identical coordinates longer than ``limit`` is
    removed whole.  Without user ids and timestamps on every record the
    input is returned unchanged.
    """
    records = list(records)
    if any(r.user_id is None or r.created_at is None for r in records):
        if records:
            warnings.warn(
                "records lack user_id/created_at; consecutive-post filter skipped",
                MissingMetadataWarning,
                stacklevel=2,
            )
        return records
    by_user = defaultdict(list)
    for i, r in enumerate(records):
        by_user[r.user_id].append(i)
    drop = set()
    for idxs in by_user.values():
        idxs.sort(key=lambda i: records[i].created_at)
        run = [idxs[0]]
        for i in idxs[1:] + [None]:
            if i is not None and (records[i].lat, records[i].lon) == (records[run[0]].lat, records[run[0]].lon):
                run.append(i)
                continue
            if len(run) > limit:
                drop.update(run)
            if i is not None:
                run = [i]
    return [r for i, r in enumerate(records) if i not in drop]


def classify(record: TweetRecord, poi: PoiSpec, case_sensitive: bool = True) -> Relevance:
    """Relevant iff any of the POI's queries occurs in the text as a substring."""
    text = record.text
    queries = poi.queries
    if not case_sensitive:
        text = text.casefold()
        queries = [q.casefold() for q in queries]
    if any(q in text for q in queries):
        return Relevance.RELEVANT
    return Relevance.IRRELEVANT


# -- query region -------------------------------------------------------------------


def _precision_curve(dists, relevant, radii):
    order = np.argsort(dists, kind="stable")
    d = dists[order]
    cum_rel = np.concatenate([[0], np.cumsum(relevant[order])])
    total = np.searchsorted(d, radii, side="right")
    rel = cum_rel[total]
    with np.errstate(invalid="ignore", divide="ignore"):
        prec = np.where(total > 0, rel / np.maximum(total, 1), 1.0)
    return prec


def build_query_region(
    records,
    center: tuple[float, float],
    eta: float = DEFAULT_ETA,
    r0: float = DEFAULT_R0,
    step: float = DEFAULT_STEP,
    projection: Optional[Projection] = None,
) -> QueryRegion:
    """Grow a circle around ``center`` while its precision stays at least ``eta``.

    ``records`` is a sequence of ``(PlanarPoint, Relevance)`` pairs.  Radii
    ``r0, r0 + step, ...`` are tried in turn, capped at the distance of the
    farthest record; the last radius before precision first drops below
    ``eta`` is returned.  A disk holding no record counts as precision 1.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if r0 <= 0 or step <= 0:
        raise ValueError("r0 and step must be positive")
    pairs = list(records)
    relevant = np.array([rel is Relevance.RELEVANT for _, rel in pairs], dtype=bool)
    if not relevant.any():
        raise EmptyRelevantSet("no relevant record to build a query region around")
    proj = projection or Projection.at(*center)
    cx, cy = proj.forward(center[0], center[1])
    xy = np.array([(p.x, p.y) for p, _ in pairs], dtype=np.float64)
    dists = np.hypot(xy[:, 0] - cx, xy[:, 1] - cy)
    cap = float(dists.max())

    count = max(1, int(math.ceil((cap - r0) / step)) + 1) if cap > r0 else 1
    radii = r0 + step * np.arange(count, dtype=np.float64)
    if cap > r0:
        radii = np.minimum(radii, cap)
    prec = _precision_curve(dists, relevant, radii)
    failing = np.flatnonzero(prec < eta)
    if len(failing) == 0:
        k = len(radii) - 1
    elif failing[0] == 0:
        warnings.warn(
            f"precision {prec[0]:.4f} at the initial radius {r0:g} m is below eta={eta:g}",
            InsufficientPrecisionWarning,
            stacklevel=2,
        )
        k = 0
    else:
        k = failing[0] - 1
    return QueryRegion((float(center[0]), float(center[1])), float(radii[k]), float(prec[k]))


def assemble_dataset(
    records: Sequence[TweetRecord],
    poi: PoiSpec,
    eta: float = DEFAULT_ETA,
    proj: Optional[Projection] = None,
    r0: float = DEFAULT_R0,
    step: float = DEFAULT_STEP,
    case_sensitive: bool = True,
) -> tuple[LabeledDataset, QueryRegion]:
    """Classify, project, build the query region and keep the records inside it.

    ``source_index`` of every planar point is the record's position in
    ``records``.
    """
    records = list(records)
    if not records:
        raise EmptyRelevantSet("no records to cluster")
    proj = proj or Projection.at(*poi.center)
    lat = np.array([r.lat for r in records])
    lon = np.array([r.lon for r in records])
    xs, ys = proj.forward(lat, lon)
    points = [PlanarPoint(float(x), float(y), i) for i, (x, y) in enumerate(zip(xs, ys))]
    rel = [classify(r, poi, case_sensitive) for r in records]
    region = build_query_region(list(zip(points, rel)), poi.center, eta, r0, step, proj)
    cx, cy = proj.forward(poi.center[0], poi.center[1])
    inside = np.hypot(xs - cx, ys - cy) <= region.radius
    relevant = [p for p, r, k in zip(points, rel, inside) if k and r is Relevance.RELEVANT]
    irrelevant = [p for p, r, k in zip(points, rel, inside) if k and r is Relevance.IRRELEVANT]
    log.info("query region %.0f m: %d relevant, %d irrelevant", region.radius, len(relevant), len(irrelevant))
    return LabeledDataset(relevant, irrelevant, proj.origin), region
