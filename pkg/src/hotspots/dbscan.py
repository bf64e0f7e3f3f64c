"""
Density-based clustering on great-circle distances with a uniform grid index.

A point is core when at least ``min_pts`` points (itself included) lie within
``eps_km``.  Clusters grow from cores in input order through a FIFO
frontier, so for a fixed input order the labels are deterministic and a
border point reachable from two clusters belongs to the one that got there
first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .geo import (
    EARTH_RADIUS_KM,
    KM_PER_DEG,
    BBox,
    GeoPoint,
    Points,
    as_latlon,
    haversine_rad,
)
from .errors import ParameterError

NOISE = -1
# cells are widened by this factor so floor() round-off never splits an eps pair
_SLACK = 1.0 + 1e-9


@dataclass(frozen=True)
class DbscanParams:
    eps_km: float = 0.05
    min_pts: int = 300

    def __post_init__(self):
        if not (self.eps_km > 0 and math.isfinite(self.eps_km)):
            raise ParameterError(f"eps_km must be > 0, got {self.eps_km}")
        if int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ParameterError(f"min_pts must be an integer >= 1, got {self.min_pts}")


@dataclass(frozen=True, eq=False)
class SpatialIndex:
    """Points bucketed into square cells of a local equirectangular plane.

    The plane is anchored at the point-set centroid; longitude is scaled by
    ``cos(centroid lat)``.  Points are stored cell by cell (``order``), with
    ``starts[k]:starts[k + 1]`` delimiting cell ``keys[k]``.
    """

    cell_size_km: float
    lat0: float
    lon0: float
    km_per_deg_lon: float
    max_abs_lat: float
    cell_x: np.ndarray
    cell_y: np.ndarray
    x_min: int
    x_max: int
    y_min: int
    y_max: int
    keys: np.ndarray
    starts: np.ndarray
    order: np.ndarray

    @property
    def stride(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def grid(self) -> dict[tuple[int, int], list[int]]:
        out = {}
        for k in range(len(self.keys)):
            members = self.order[self.starts[k] : self.starts[k + 1]]
            i = int(members[0])
            out[(int(self.cell_x[i]), int(self.cell_y[i]))] = [int(m) for m in members]
        return out

    def __len__(self):
        return len(self.cell_x)

    def reach(self, eps_km: float) -> tuple[int, int]:
        """Cells to scan either side of the query cell along (x, y) for ``eps_km``.

        Latitude differences never exceed the great-circle distance, so y
        needs ``ceil(eps / cell)``.  Longitude spans can exceed it away from
        the anchor latitude; the bound uses the highest |lat| in the set.
        """
        if eps_km > self.cell_size_km:
            raise ParameterError(
                f"eps_km={eps_km} exceeds the index cell size {self.cell_size_km}; rebuild the index"
            )
        ky = max(1, math.ceil(eps_km * _SLACK / self.cell_size_km))
        x_span = self.x_max - self.x_min
        cos_max = math.cos(math.radians(self.max_abs_lat))
        ratio = math.sin(eps_km / (2.0 * EARTH_RADIUS_KM)) / cos_max if cos_max > 0 else math.inf
        if ratio >= 1.0:
            return max(x_span, 0), ky
        dlon_deg = math.degrees(2.0 * math.asin(ratio))
        kx = math.ceil(dlon_deg * self.km_per_deg_lon * _SLACK / self.cell_size_km)
        return min(kx, max(x_span, 0)), ky


@dataclass(frozen=True, eq=False)
class Clustering:
    labels: np.ndarray
    core_flags: np.ndarray
    cluster_count: int

    @property
    def noise_count(self) -> int:
        return int(np.count_nonzero(self.labels == NOISE))

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.cluster_count)


@dataclass(frozen=True)
class ClusterSummary:
    cluster_id: int
    member_count: int
    centroid: GeoPoint
    bbox: BBox


def build_index(points: Points, cell_size_km: float) -> SpatialIndex:
    if not (cell_size_km > 0 and math.isfinite(cell_size_km)):
        raise ParameterError(f"cell_size_km must be > 0, got {cell_size_km}")
    lat, lon = as_latlon(points)
    n = lat.size
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return SpatialIndex(cell_size_km, 0.0, 0.0, KM_PER_DEG, 0.0, empty, empty, 0, -1, 0, -1,
                            empty, np.zeros(1, dtype=np.int64), empty)
    lat0 = float(lat.mean())
    lon0 = float(lon.mean())
    km_per_deg_lon = KM_PER_DEG * max(math.cos(math.radians(lat0)), 0.0)
    cell_x = np.floor((lon - lon0) * km_per_deg_lon / cell_size_km).astype(np.int64)
    cell_y = np.floor((lat - lat0) * KM_PER_DEG / cell_size_km).astype(np.int64)
    x_min, x_max = int(cell_x.min()), int(cell_x.max())
    y_min, y_max = int(cell_y.min()), int(cell_y.max())
    stride = y_max - y_min + 1
    flat = (cell_x - x_min) * stride + (cell_y - y_min)
    order = np.argsort(flat, kind="stable").astype(np.int64)
    keys, starts = np.unique(flat[order], return_index=True)
    starts = np.append(starts, n).astype(np.int64)
    return SpatialIndex(
        cell_size_km, lat0, lon0, km_per_deg_lon, float(np.abs(lat).max()),
        cell_x, cell_y, x_min, x_max, y_min, y_max,
        keys.astype(np.int64), starts, order,
    )


# ---------------------------------------------------------------- kernels


@njit
def _neighbors_into(q, latr, lonr, cosl, cell_x, cell_y, keys, starts, order,
                    x_min, x_max, y_min, y_max, kx, ky, eps, buf, cap):
    """Write indices within ``eps`` of ``q`` into ``buf``; stop once ``cap`` are found."""
    stride = y_max - y_min + 1
    cx = cell_x[q]
    cy = cell_y[q]
    m = 0
    for gx in range(max(cx - kx, x_min), min(cx + kx, x_max) + 1):
        for gy in range(max(cy - ky, y_min), min(cy + ky, y_max) + 1):
            key = (gx - x_min) * stride + (gy - y_min)
            k = np.searchsorted(keys, key)
            if k == keys.size or keys[k] != key:
                continue
            for s in range(starts[k], starts[k + 1]):
                j = order[s]
                d = haversine_rad(latr[q], cosl[q], lonr[q], latr[j], cosl[j], lonr[j])
                if d <= eps:
                    buf[m] = j
                    m += 1
                    if m >= cap:
                        return m
    return m


@njit
def _dbscan_numba(latr, lonr, cosl, cell_x, cell_y, keys, starts, order,
                  x_min, x_max, y_min, y_max, kx, ky, eps, min_pts):
    n = latr.size
    buf = np.empty(n, dtype=np.int64)
    core = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        m = _neighbors_into(i, latr, lonr, cosl, cell_x, cell_y, keys, starts, order,
                            x_min, x_max, y_min, y_max, kx, ky, eps, buf, min_pts)
        core[i] = m >= min_pts
    labels = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    cid = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cid
        head = 0
        tail = 1
        queue[0] = i
        while head < tail:
            q = queue[head]
            head += 1
            m = _neighbors_into(q, latr, lonr, cosl, cell_x, cell_y, keys, starts, order,
                                x_min, x_max, y_min, y_max, kx, ky, eps, buf, n + 1)
            for t in range(m):
                r = buf[t]
                if labels[r] == -1:
                    labels[r] = cid
                    if core[r]:
                        queue[tail] = r
                        tail += 1
        cid += 1
    return labels, core, cid


def _hav_rad_np(lat1, cos1, lon1, lat2, cos2, lon2):
    s_lat = np.sin(0.5 * (lat2 - lat1))
    s_lon = np.sin(0.5 * (lon2 - lon1))
    h = s_lat * s_lat + cos1 * cos2 * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(1.0, h)))


class _NumpyQuery:
    """Per-query candidate gathering for the numpy path."""

    def __init__(self, index: SpatialIndex, latr, lonr, cosl, eps):
        self.index = index
        self.latr, self.lonr, self.cosl = latr, lonr, cosl
        self.eps = eps
        self.kx, self.ky = index.reach(eps)
        self.slot = {int(k): i for i, k in enumerate(index.keys)}
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def candidates(self, cx, cy):
        got = self._cache.get((cx, cy))
        if got is not None:
            return got
        ix = self.index
        parts = []
        for gx in range(max(cx - self.kx, ix.x_min), min(cx + self.kx, ix.x_max) + 1):
            for gy in range(max(cy - self.ky, ix.y_min), min(cy + self.ky, ix.y_max) + 1):
                k = self.slot.get((gx - ix.x_min) * ix.stride + (gy - ix.y_min))
                if k is not None:
                    parts.append(ix.order[ix.starts[k] : ix.starts[k + 1]])
        got = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
        if len(self._cache) < 4096:
            self._cache[(cx, cy)] = got
        return got

    def __call__(self, q):
        cand = self.candidates(int(self.index.cell_x[q]), int(self.index.cell_y[q]))
        d = _hav_rad_np(self.latr[q], self.cosl[q], self.lonr[q],
                        self.latr[cand], self.cosl[cand], self.lonr[cand])
        return cand[d <= self.eps]


def _dbscan_numpy(index, latr, lonr, cosl, eps, min_pts):
    n = latr.size
    query = _NumpyQuery(index, latr, lonr, cosl, eps)
    core = np.zeros(n, dtype=bool)
    for i in range(n):
        core[i] = query(i).size >= min_pts
    labels = np.full(n, NOISE, dtype=np.int64)
    cid = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cid
        queue = [i]
        head = 0
        while head < len(queue):
            hood = query(queue[head])
            head += 1
            fresh = hood[labels[hood] == NOISE]
            labels[fresh] = cid
            queue.extend(int(r) for r in fresh if core[r])
        cid += 1
    return labels, core, cid


# ---------------------------------------------------------------- public API


def _radians(points):
    lat, lon = as_latlon(points)
    latr = np.radians(lat)
    return latr, np.radians(lon), np.cos(latr)


def neighbors(index: SpatialIndex, points: Points, q: int, eps_km: float) -> list[int]:
    """Indices within ``eps_km`` of point ``q`` (itself included), ascending."""
    if not eps_km > 0:
        raise ParameterError(f"eps_km must be > 0, got {eps_km}")
    latr, lonr, cosl = _radians(points)
    if len(index) != latr.size:
        raise ParameterError("index was built for a different point set")
    if not _accel.use_numba():
        return sorted(int(j) for j in _NumpyQuery(index, latr, lonr, cosl, float(eps_km))(q))
    kx, ky = index.reach(eps_km)
    buf = np.empty(latr.size, dtype=np.int64)
    m = _neighbors_into(q, latr, lonr, cosl, index.cell_x, index.cell_y, index.keys,
                        index.starts, index.order, index.x_min, index.x_max,
                        index.y_min, index.y_max, kx, ky, float(eps_km), buf, latr.size + 1)
    return sorted(int(j) for j in buf[:m])


def dbscan(points: Points, params: DbscanParams = DbscanParams(), index: SpatialIndex | None = None) -> Clustering:
    """Cluster ``points``; labels are cluster ids ``0..k-1`` or ``NOISE``."""
    latr, lonr, cosl = _radians(points)
    n = latr.size
    if n == 0:
        return Clustering(np.empty(0, dtype=np.int64), np.empty(0, dtype=bool), 0)
    if index is None:
        index = build_index(points, params.eps_km * _SLACK)
    elif len(index) != n:
        raise ParameterError("index was built for a different point set")
    eps = float(params.eps_km)
    if _accel.use_numba():
        kx, ky = index.reach(eps)
        labels, core, count = _dbscan_numba(
            latr, lonr, cosl, index.cell_x, index.cell_y, index.keys, index.starts, index.order,
            index.x_min, index.x_max, index.y_min, index.y_max, kx, ky, eps, int(params.min_pts),
        )
    else:
        labels, core, count = _dbscan_numpy(index, latr, lonr, cosl, eps, int(params.min_pts))
    return Clustering(np.asarray(labels, dtype=np.int64), np.asarray(core, dtype=bool), int(count))


def cluster_summary(points: Points, clustering: Clustering) -> list[ClusterSummary]:
    """Member count, mean-coordinate centroid and bounding box per cluster."""
    lat, lon = as_latlon(points)
    labels = clustering.labels
    out = []
    for cid in range(clustering.cluster_count):
        mask = labels == cid
        if not mask.any():
            continue
        clat, clon = lat[mask], lon[mask]
        out.append(
            ClusterSummary(
                cid,
                int(mask.sum()),
                GeoPoint(float(clat.mean()), float(clon.mean())),
                BBox(float(clat.min()), float(clat.max()), float(clon.min()), float(clon.max())),
            )
        )
    return out
