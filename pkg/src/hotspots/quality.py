"""Silhouette validation of a clustering; noise points are left out."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _accel
from ._accel import njit
from .dbscan import NOISE, Clustering
from .errors import EmptyInputError, UndefinedScoreError
from .geo import EARTH_RADIUS_KM, GeoPoint, Points, as_latlon, haversine_rad

Metric = Union[str, Callable[[GeoPoint, GeoPoint], float]]

_ROW_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class SilhouetteResult:
    mean_score: float
    per_point: np.ndarray
    # input positions of the scored points, aligned with per_point
    point_indices: np.ndarray
    excluded_noise: int

    def to_dict(self) -> dict:
        return {
            "defined": True,
            "mean_score": self.mean_score,
            "scored_points": int(self.per_point.size),
            "excluded_noise": self.excluded_noise,
        }


@njit
def _cluster_sums_numba(latr, lonr, cosl, lab, k):
    n = latr.size
    sums = np.zeros((n, k))
    for i in range(n):
        for j in range(i + 1, n):
            d = haversine_rad(latr[i], cosl[i], lonr[i], latr[j], cosl[j], lonr[j])
            sums[i, lab[j]] += d
            sums[j, lab[i]] += d
    return sums


def _cluster_sums_numpy(latr, lonr, cosl, lab, k):
    n = latr.size
    onehot = np.zeros((n, k))
    onehot[np.arange(n), lab] = 1.0
    sums = np.empty((n, k))
    for lo in range(0, n, _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, n)
        s_lat = np.sin(0.5 * (latr[None, :] - latr[lo:hi, None]))
        s_lon = np.sin(0.5 * (lonr[None, :] - lonr[lo:hi, None]))
        h = s_lat * s_lat + cosl[lo:hi, None] * cosl[None, :] * s_lon * s_lon
        d = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(1.0, h)))
        sums[lo:hi] = d @ onehot
    return sums


def _cluster_sums_callable(lat, lon, lab, k, metric):
    n = lat.size
    pts = [GeoPoint(float(a), float(b)) for a, b in zip(lat, lon)]
    sums = np.zeros((n, k))
    for i in range(n):
        for j in range(i + 1, n):
            d = float(metric(pts[i], pts[j]))
            sums[i, lab[j]] += d
            sums[j, lab[i]] += d
    return sums


def _scores_from_sums(sums, lab, sizes):
    n, k = sums.shape
    rows = np.arange(n)
    own = sizes[lab]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = sums[rows, lab] / (own - 1)
        means = sums / sizes[None, :]
    means[rows, lab] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 0, (b - a) / denom, 0.0)
    s[own == 1] = 0.0
    return s


def silhouette(points: Points, clustering: Clustering, metric: Metric = "haversine") -> SilhouetteResult:
    """Mean silhouette over clustered points.

    ``metric`` is ``"haversine"`` (km, the clustering geometry) or any
    callable taking two :class:`GeoPoint` and returning a distance.
    Singleton clusters score 0.
    """
    lat, lon = as_latlon(points)
    labels = np.asarray(clustering.labels)
    if lat.size == 0 or labels.size == 0:
        raise EmptyInputError("silhouette of an empty clustering is undefined")
    keep = np.flatnonzero(labels != NOISE)
    excluded = int(labels.size - keep.size)
    present, lab = np.unique(labels[keep], return_inverse=True)
    k = present.size
    if k < 2:
        raise UndefinedScoreError(f"silhouette needs at least 2 clusters besides noise, found {k}")
    lab = lab.astype(np.int64)
    sizes = np.bincount(lab, minlength=k).astype(np.float64)
    lat, lon = lat[keep], lon[keep]

    if callable(metric):
        sums = _cluster_sums_callable(lat, lon, lab, k, metric)
    elif metric == "haversine":
        latr = np.radians(lat)
        lonr = np.radians(lon)
        cosl = np.cos(latr)
        kernel = _cluster_sums_numba if _accel.use_numba() else _cluster_sums_numpy
        sums = kernel(latr, lonr, cosl, lab, k)
    else:
        raise ValueError(f"unknown metric {metric!r}")

    s = _scores_from_sums(sums, lab, sizes)
    return SilhouetteResult(float(s.mean()), s, keep, excluded)
