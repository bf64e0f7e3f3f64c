"""
Geodesy helpers shared by the spatial modules.

Coordinates are decimal degrees throughout.  Functions that take a point set
accept either a sequence of :class:`GeoPoint` or an ``(n, 2)`` array of
``[lat, lon]`` rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ._accel import njit
from .errors import EmptyInputError, ParameterError, ProjectionDomainError

EARTH_RADIUS_KM = 6371.0088
KM_PER_DEG = math.pi * EARTH_RADIUS_KM / 180.0
TILE_SIZE = 256
MAX_ZOOM = 22
MERCATOR_MAX_LAT = 85.05113
MIN_BOX_SPAN = 0.001
PROJECTIONS = ("equirectangular", "web_mercator")


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not (-90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinate out of range ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class BBox:
    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float

    def __post_init__(self):
        if self.min_lat > self.max_lat or self.min_lon > self.max_lon:
            raise ParameterError(f"inverted bounding box {self}")

    def contains(self, lat, lon):
        return self.min_lat <= lat <= self.max_lat and self.min_lon <= lon <= self.max_lon

    @property
    def center(self):
        return (0.5 * (self.min_lat + self.max_lat), 0.5 * (self.min_lon + self.max_lon))


@dataclass(frozen=True)
class PixelPoint:
    px: float
    py: float
    zoom: int


Points = Union[Sequence[GeoPoint], np.ndarray]


def as_latlon(points: Points) -> tuple[np.ndarray, np.ndarray]:
    """Return contiguous float64 ``(lat, lon)`` arrays for any accepted point set."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=np.float64)
        if arr.size == 0:
            return np.empty(0), np.empty(0)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"expected an (n, 2) [lat, lon] array, got shape {arr.shape}")
        return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])
    lat = np.fromiter((p.lat for p in points), dtype=np.float64)
    lon = np.fromiter((p.lon for p in points), dtype=np.float64)
    return lat, lon


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in kilometres on a sphere of mean Earth radius."""
    return _haversine_deg(a.lat, a.lon, b.lat, b.lon)


@njit
def _haversine_deg(lat1, lon1, lat2, lon2):
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    s_lat = math.sin(0.5 * (p2 - p1))
    s_lon = math.sin(0.5 * math.radians(lon2 - lon1))
    h = s_lat * s_lat + math.cos(p1) * math.cos(p2) * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


@njit
def haversine_rad(lat1, cos1, lon1, lat2, cos2, lon2):
    """Scalar kernel on pre-converted radians with cached ``cos(lat)``."""
    s_lat = math.sin(0.5 * (lat2 - lat1))
    s_lon = math.sin(0.5 * (lon2 - lon1))
    h = s_lat * s_lat + cos1 * cos2 * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


def haversine_km_arrays(lat1, lon1, lat2, lon2):
    """Vectorised haversine in km; inputs broadcast like numpy arrays."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    s_lat = np.sin(0.5 * (p2 - p1))
    s_lon = np.sin(0.5 * np.radians(np.subtract(lon2, lon1)))
    h = s_lat * s_lat + np.cos(p1) * np.cos(p2) * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(1.0, h)))


def default_scale_c(zoom_max: int = MAX_ZOOM) -> float:
    """Pixels per degree of the full world width at ``zoom_max``."""
    return TILE_SIZE * 2.0**zoom_max / 360.0


def _check_projection(zoom, projection, scale_c):
    if not (0 <= zoom <= MAX_ZOOM) or int(zoom) != zoom:
        raise ParameterError(f"zoom must be an integer in [0, {MAX_ZOOM}], got {zoom}")
    if projection not in PROJECTIONS:
        raise ParameterError(f"projection must be one of {PROJECTIONS}, got {projection!r}")
    if projection == "equirectangular" and not (scale_c > 0 and math.isfinite(scale_c)):
        raise ParameterError(f"scale_c must be a positive finite number, got {scale_c}")


def project_pixels(lat, lon, zoom: int, projection: str = "equirectangular", scale_c: float | None = None):
    """Vectorised :func:`project_pixel`; returns ``(px, py)`` arrays.

    ``equirectangular`` multiplies raw degrees by ``scale_c`` and ignores
    ``zoom``.  ``web_mercator`` uses 256-px tiles at ``zoom`` with y growing
    southwards and ignores ``scale_c``.
    """
    if scale_c is None:
        scale_c = default_scale_c()
    _check_projection(zoom, projection, scale_c)
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    if projection == "equirectangular":
        return lon * scale_c, lat * scale_c
    if lat.size and np.max(np.abs(lat)) >= MERCATOR_MAX_LAT:
        raise ProjectionDomainError(
            f"web_mercator is undefined for |lat| >= {MERCATOR_MAX_LAT} (got {np.max(np.abs(lat))})"
        )
    world = TILE_SIZE * 2.0**zoom
    phi = np.radians(lat)
    px = (lon + 180.0) / 360.0 * world
    py = (1.0 - np.log(np.tan(phi) + 1.0 / np.cos(phi)) / math.pi) * 0.5 * world
    return px, py


def project_pixel(p: GeoPoint, zoom: int, projection: str = "equirectangular", scale_c: float | None = None) -> PixelPoint:
    px, py = project_pixels(np.array([p.lat]), np.array([p.lon]), zoom, projection, scale_c)
    return PixelPoint(float(px[0]), float(py[0]), int(zoom))


def bounding_box(points: Points, padding_fraction: float = 0.0) -> BBox:
    """Smallest box holding ``points``, widened by ``padding_fraction`` of each span.

    Zero-span sides are widened to a span of ``MIN_BOX_SPAN`` degrees first.
    """
    if padding_fraction < 0 or not math.isfinite(padding_fraction):
        raise ParameterError(f"padding_fraction must be >= 0, got {padding_fraction}")
    lat, lon = as_latlon(points)
    if lat.size == 0:
        raise EmptyInputError("bounding_box needs at least one point")
    sides = []
    for lo, hi in ((lat.min(), lat.max()), (lon.min(), lon.max())):
        lo, hi = float(lo), float(hi)
        if hi - lo == 0.0:
            lo, hi = lo - 0.5 * MIN_BOX_SPAN, hi + 0.5 * MIN_BOX_SPAN
        pad = (hi - lo) * padding_fraction
        sides.append((lo - pad, hi + pad))
    (min_lat, max_lat), (min_lon, max_lon) = sides
    return BBox(min_lat, max_lat, min_lon, max_lon)
