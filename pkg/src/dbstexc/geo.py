"""Local planar frame, distances and areas.

All clustering happens in meters on an equirectangular plane centred on the
POI.  Query regions are at most a few tens of kilometres across, so the
distortion of this projection is negligible there, and using one frame for
both distances and areas keeps the two consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import OutOfRangeCoordinate, PlanarPoint

METERS_PER_DEG_LAT = 111_320.0
DEFAULT_RESOLUTION = 10.0


def _check_latlon(lat, lon):
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise OutOfRangeCoordinate(f"lat={lat!r} outside [-90, 90]")
    if not (math.isfinite(lon) and -180.0 <= lon <= 180.0):
        raise OutOfRangeCoordinate(f"lon={lon!r} outside [-180, 180]")


@dataclass(frozen=True)
class Projection:
    origin_lat: float
    origin_lon: float
    meters_per_deg_lat: float
    meters_per_deg_lon: float

    @classmethod
    def at(cls, origin_lat: float, origin_lon: float, meters_per_deg_lat: float = METERS_PER_DEG_LAT):
        _check_latlon(origin_lat, origin_lon)
        return cls(
            float(origin_lat),
            float(origin_lon),
            meters_per_deg_lat,
            meters_per_deg_lat * math.cos(math.radians(origin_lat)),
        )

    @property
    def origin(self) -> tuple[float, float]:
        return (self.origin_lat, self.origin_lon)

    def forward(self, lat, lon):
        """Vectorised projection of degree arrays to ``(x, y)`` meter arrays."""
        lat = np.asarray(lat, dtype=np.float64)
        lon = np.asarray(lon, dtype=np.float64)
        return (lon - self.origin_lon) * self.meters_per_deg_lon, (lat - self.origin_lat) * self.meters_per_deg_lat

    def inverse(self, x, y):
        """Vectorised inverse: planar meters back to ``(lat, lon)`` degrees."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.origin_lat + y / self.meters_per_deg_lat, self.origin_lon + x / self.meters_per_deg_lon


def project(p: tuple[float, float], proj: Projection, source_index: int = -1) -> PlanarPoint:
    lat, lon = float(p[0]), float(p[1])
    _check_latlon(lat, lon)
    return PlanarPoint(
        (lon - proj.origin_lon) * proj.meters_per_deg_lon,
        (lat - proj.origin_lat) * proj.meters_per_deg_lat,
        source_index,
    )


def dist(p: PlanarPoint, q: PlanarPoint) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


def _xy(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=np.float64).reshape(-1, 2)
    pts = list(points)
    if pts and isinstance(pts[0], PlanarPoint):
        return np.array([(p.x, p.y) for p in pts], dtype=np.float64)
    return np.asarray(pts, dtype=np.float64).reshape(-1, 2)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> np.ndarray:
    """Counter-clockwise hull vertices of ``points`` (monotone chain).

    Collinear boundary points are dropped.  Degenerate inputs give a single
    vertex (all points coincide) or the two endpoints of a segment.
    """
    xy = _xy(points)
    if len(xy) == 0:
        raise ValueError("convex_hull needs at least one point")
    pts = sorted(set(map(tuple, xy.tolist())))
    if len(pts) <= 2:
        return np.array(pts, dtype=np.float64)

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return np.array(hull, dtype=np.float64)


def polygon_area(polygon) -> float:
    """Shoelace area; zero for points and segments."""
    xy = _xy(polygon)
    if len(xy) < 3:
        return 0.0
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def disk_polygon(cx: float, cy: float, r: float, segments: int = 64) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])


class Raster:
    """Boolean cell grid used to measure the area of unions of shapes.

    A cell counts as covered when its centre lies inside a shape (boundary
    included).  The grid spans ``bounds = (xmin, ymin, xmax, ymax)``.
    """

    def __init__(self, bounds, resolution: float = DEFAULT_RESOLUTION):
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        xmin, ymin, xmax, ymax = map(float, bounds)
        self.resolution = float(resolution)
        self.x0, self.y0 = xmin, ymin
        nx = max(1, int(math.ceil((xmax - xmin) / resolution - 1e-9)))
        ny = max(1, int(math.ceil((ymax - ymin) / resolution - 1e-9)))
        self.covered = np.zeros((ny, nx), dtype=bool)

    def _window(self, xmin, ymin, xmax, ymax):
        res = self.resolution
        ny, nx = self.covered.shape
        i0 = max(0, int(math.floor((xmin - self.x0) / res - 0.5)))
        i1 = min(nx, int(math.ceil((xmax - self.x0) / res - 0.5)) + 1)
        j0 = max(0, int(math.floor((ymin - self.y0) / res - 0.5)))
        j1 = min(ny, int(math.ceil((ymax - self.y0) / res - 0.5)) + 1)
        if i0 >= i1 or j0 >= j1:
            return None
        cx = self.x0 + (np.arange(i0, i1) + 0.5) * res
        cy = self.y0 + (np.arange(j0, j1) + 0.5) * res
        return (slice(j0, j1), slice(i0, i1)), cx[None, :], cy[:, None]

    def add_convex(self, polygon) -> None:
        poly = _xy(polygon)
        if len(poly) < 3 or polygon_area(poly) == 0.0:
            return
        if _signed_area(poly) < 0:
            poly = poly[::-1]
        win = self._window(*poly.min(axis=0), *poly.max(axis=0))
        if win is None:
            return
        sl, gx, gy = win
        inside = np.ones((gy.shape[0], gx.shape[1]), dtype=bool)
        scale = float(np.abs(poly).max()) + 1.0
        for (ax, ay), (bx, by) in zip(poly, np.roll(poly, -1, axis=0)):
            cross = (bx - ax) * (gy - ay) - (by - ay) * (gx - ax)
            inside &= cross >= -1e-12 * scale * scale
        self.covered[sl] |= inside

    def add_disk(self, cx: float, cy: float, r: float) -> None:
        win = self._window(cx - r, cy - r, cx + r, cy + r)
        if win is None:
            return
        sl, gx, gy = win
        self.covered[sl] |= (gx - cx) ** 2 + (gy - cy) ** 2 <= r * r

    def clip_disk(self, cx: float, cy: float, r: float) -> None:
        ny, nx = self.covered.shape
        gx = self.x0 + (np.arange(nx) + 0.5) * self.resolution
        gy = self.y0 + (np.arange(ny) + 0.5) * self.resolution
        self.covered &= (gx[None, :] - cx) ** 2 + (gy[:, None] - cy) ** 2 <= r * r

    @property
    def area(self) -> float:
        return float(np.count_nonzero(self.covered)) * self.resolution**2


def _signed_area(xy):
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_union_area(
    polygons: Sequence, resolution: float = DEFAULT_RESOLUTION, bounds: Iterable[float] | None = None
) -> float:
    """Area of the union of convex polygons, overlaps counted once.

    The union is rasterised on a grid of ``resolution`` sized cells covering
    ``bounds`` (by default the joint bounding box of the polygons).
    """
    polys = [_xy(p) for p in polygons]
    polys = [p for p in polys if len(p) >= 3]
    if not polys:
        return 0.0
    if bounds is None:
        allpts = np.vstack(polys)
        bounds = (*allpts.min(axis=0), *allpts.max(axis=0))
    raster = Raster(bounds, resolution)
    for p in polys:
        raster.add_convex(p)
    return raster.area
