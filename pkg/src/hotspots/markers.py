"""
Zoom-dependent marker clustering.

Two points are ``zoom_distance`` apart: the Euclidean distance of their
scaled pixel coordinates divided by ``2 ** (zoom_max - zoom_current)``.
Points are placed greedily in input order; each joins the earliest cluster
whose founder is within ``radius_px``, otherwise it founds a new one.
Founders never move.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _accel
from ._accel import njit
from .errors import ParameterError
from .geo import MAX_ZOOM, PROJECTIONS, GeoPoint, Points, as_latlon, default_scale_c, project_pixels


@dataclass(frozen=True)
class MarkerParams:
    zoom_current: int = MAX_ZOOM
    zoom_max: int = MAX_ZOOM
    radius_px: float = 80.0
    scale_c: Optional[float] = None  # None: full world width in pixels per degree at zoom_max
    projection: str = "equirectangular"

    def __post_init__(self):
        for name in ("zoom_current", "zoom_max"):
            v = getattr(self, name)
            if int(v) != v or not (0 <= v <= MAX_ZOOM):
                raise ParameterError(f"{name} must be an integer in [0, {MAX_ZOOM}], got {v}")
        if self.zoom_current > self.zoom_max:
            raise ParameterError(
                f"zoom_current ({self.zoom_current}) must not exceed zoom_max ({self.zoom_max})"
            )
        if not (self.radius_px > 0 and math.isfinite(self.radius_px)):
            raise ParameterError(f"radius_px must be > 0, got {self.radius_px}")
        if self.scale_c is not None and not (self.scale_c > 0 and math.isfinite(self.scale_c)):
            raise ParameterError(f"scale_c must be > 0, got {self.scale_c}")
        if self.projection not in PROJECTIONS:
            raise ParameterError(f"projection must be one of {PROJECTIONS}, got {self.projection!r}")

    @property
    def resolved_scale_c(self) -> float:
        return default_scale_c(self.zoom_max) if self.scale_c is None else float(self.scale_c)

    @property
    def divisor(self) -> float:
        return 2.0 ** (self.zoom_max - self.zoom_current)

    def at_zoom(self, zoom: int) -> "MarkerParams":
        return MarkerParams(zoom, self.zoom_max, self.radius_px, self.scale_c, self.projection)


@dataclass(frozen=True)
class MarkerCluster:
    founder: GeoPoint
    members: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class MarkerClusterSet:
    clusters: tuple[MarkerCluster, ...]
    zoom_current: int

    @property
    def counts(self) -> list[int]:
        return [c.count for c in self.clusters]


def _max_zoom_pixels(lat, lon, params: MarkerParams):
    # web_mercator is projected at zoom_max so the shift below maps it to zoom_current
    return project_pixels(lat, lon, params.zoom_max, params.projection, params.resolved_scale_c)


def zoom_distance(a: GeoPoint, b: GeoPoint, params: MarkerParams) -> float:
    """Pixel distance at ``params.zoom_current`` (real division, no truncation)."""
    px, py = _max_zoom_pixels(np.array([a.lat, b.lat]), np.array([a.lon, b.lon]), params)
    dx = px[0] - px[1]
    dy = py[0] - py[1]
    return float(np.sqrt(dx * dx + dy * dy)) / params.divisor


def zoom_distances(lat, lon, i: int, params: MarkerParams) -> np.ndarray:
    """Vectorised ``zoom_distance`` from point ``i`` to every point."""
    px, py = _max_zoom_pixels(np.asarray(lat), np.asarray(lon), params)
    dx = px[i] - px
    dy = py[i] - py
    return np.sqrt(dx * dx + dy * dy) / params.divisor


@njit
def _greedy_numba(px, py, divisor, radius, cell):
    n = px.size
    gx = np.floor((px - px.min()) / divisor / cell).astype(np.int64)
    gy = np.floor((py - py.min()) / divisor / cell).astype(np.int64)
    x_min = gx.min()
    y_min = gy.min()
    stride = gy.max() - y_min + 1
    flat = (gx - x_min) * stride + (gy - y_min)
    keys = np.unique(flat)
    slot = np.searchsorted(keys, flat)
    head = np.full(keys.size, -1, dtype=np.int64)
    tail = np.full(keys.size, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    founder = np.empty(n, dtype=np.int64)
    assign = np.empty(n, dtype=np.int64)
    nclusters = 0
    for p in range(n):
        best = -1
        for ox in range(-1, 2):
            for oy in range(-1, 2):
                cx = gx[p] + ox
                cy = gy[p] + oy
                if cy < y_min or cy >= y_min + stride or cx < x_min:
                    continue
                key = (cx - x_min) * stride + (cy - y_min)
                k = np.searchsorted(keys, key)
                if k == keys.size or keys[k] != key:
                    continue
                c = head[k]
                while c != -1:
                    if best != -1 and c >= best:
                        break
                    f = founder[c]
                    dx = px[f] - px[p]
                    dy = py[f] - py[p]
                    d = math.sqrt(dx * dx + dy * dy) / divisor
                    if d <= radius:
                        best = c
                        break
                    c = nxt[c]
        if best == -1:
            best = nclusters
            founder[best] = p
            k = slot[p]
            if head[k] == -1:
                head[k] = best
            else:
                nxt[tail[k]] = best
            tail[k] = best
            nclusters += 1
        assign[p] = best
    return assign, founder[:nclusters]


def _greedy_numpy(px, py, divisor, radius, cell):
    n = px.size
    fx = np.empty(n)
    fy = np.empty(n)
    founder = []
    assign = np.empty(n, dtype=np.int64)
    for p in range(n):
        k = len(founder)
        if k:
            dx = fx[:k] - px[p]
            dy = fy[:k] - py[p]
            d = np.sqrt(dx * dx + dy * dy) / divisor
            hit = np.flatnonzero(d <= radius)
            if hit.size:
                assign[p] = hit[0]
                continue
        fx[k], fy[k] = px[p], py[p]
        founder.append(p)
        assign[p] = k
    return assign, np.asarray(founder, dtype=np.int64)


def cluster_markers(points: Points, params: MarkerParams) -> MarkerClusterSet:
    lat, lon = as_latlon(points)
    if lat.size == 0:
        return MarkerClusterSet((), params.zoom_current)
    px, py = _max_zoom_pixels(lat, lon, params)
    px = np.ascontiguousarray(px, dtype=np.float64)
    py = np.ascontiguousarray(py, dtype=np.float64)
    divisor = params.divisor
    radius = float(params.radius_px)
    # grid cell >= radius keeps the 3x3 scan exact; the floor keeps cell ids in int64 range
    span = max(np.ptp(px), np.ptp(py)) / divisor
    cell = max(radius * (1.0 + 1e-9), span / 2.0**20, 1e-300)
    kernel = _greedy_numba if _accel.use_numba() else _greedy_numpy
    assign, founders = kernel(px, py, divisor, radius, cell)
    order = np.argsort(assign, kind="stable")
    bounds = np.searchsorted(assign[order], np.arange(founders.size + 1))
    clusters = tuple(
        MarkerCluster(
            GeoPoint(float(lat[f]), float(lon[f])),
            tuple(int(m) for m in order[bounds[c] : bounds[c + 1]]),
        )
        for c, f in enumerate(founders)
    )
    return MarkerClusterSet(clusters, params.zoom_current)
