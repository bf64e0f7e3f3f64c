"""
File writers for the spatial outputs: GeoJSON for clusters and markers,
ESRI ASCII grid and plain PGM (P2) for rasters.
"""
from __future__ import annotations

import json
import math
from typing import IO, Sequence

import numpy as np

from .dbscan import NOISE, Clustering, ClusterSummary
from .geo import Points, as_latlon
from .heatmap import Raster
from .markers import MarkerClusterSet

NODATA = -9999
PGM_MAX = 65535


def _point(lat, lon, properties):
    return {
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": [float(lon), float(lat)]},
        "properties": properties,
    }


def clusters_geojson(points: Points, clustering: Clustering, summary: Sequence[ClusterSummary]) -> dict:
    """One feature per input point, then one per cluster centroid."""
    lat, lon = as_latlon(points)
    features = [
        _point(lat[i], lon[i], {
            "kind": "point",
            "index": i,
            "cluster_id": int(clustering.labels[i]),
            "is_core": bool(clustering.core_flags[i]),
        })
        for i in range(lat.size)
    ]
    for s in summary:
        f = _point(s.centroid.lat, s.centroid.lon, {
            "kind": "centroid",
            "cluster_id": s.cluster_id,
            "member_count": s.member_count,
        })
        f["bbox"] = [s.bbox.min_lon, s.bbox.min_lat, s.bbox.max_lon, s.bbox.max_lat]
        features.append(f)
    return {
        "type": "FeatureCollection",
        "noise_label": NOISE,
        "cluster_count": clustering.cluster_count,
        "features": features,
    }


def markers_geojson(markers: MarkerClusterSet) -> dict:
    return {
        "type": "FeatureCollection",
        "features": [
            _point(c.founder.lat, c.founder.lon, {"count": c.count, "zoom": markers.zoom_current})
            for c in markers.clusters
        ],
    }


def dump_json(obj, stream: IO[str]) -> None:
    json.dump(obj, stream, indent=2, allow_nan=False)
    stream.write("\n")


def _fmt(v: float) -> str:
    return format(float(v), ".10g")


def write_esri_ascii(raster: Raster, stream: IO[str]) -> None:
    """Arc/Info ASCII grid; rows run north to south.

    Square cells get a ``cellsize`` line; otherwise ``dx``/``dy`` lines are
    written instead (the GDAL extension).
    """
    box = raster.bbox
    dx, dy = raster.cell_width, raster.cell_height
    lines = [
        f"ncols {raster.width}",
        f"nrows {raster.height}",
        f"xllcorner {_fmt(box.min_lon)}",
        f"yllcorner {_fmt(box.min_lat)}",
    ]
    if math.isclose(dx, dy, rel_tol=1e-9, abs_tol=0.0):
        lines.append(f"cellsize {_fmt(dx)}")
    else:
        lines += [f"dx {_fmt(dx)}", f"dy {_fmt(dy)}"]
    lines.append(f"NODATA_value {NODATA}")
    stream.write("\n".join(lines) + "\n")
    for row in raster.values:
        stream.write(" ".join(_fmt(v) for v in row) + "\n")


def read_esri_ascii(stream: IO[str]) -> tuple[dict, np.ndarray]:
    header = {}
    while True:
        pos = stream.tell()
        line = stream.readline()
        parts = line.split()
        if len(parts) == 2 and parts[0][0].isalpha():
            header[parts[0].lower()] = float(parts[1])
        else:
            stream.seek(pos)
            break
    values = np.loadtxt(stream, ndmin=2)
    return header, values.reshape(int(header["nrows"]), int(header["ncols"]))


def pgm_levels(raster: Raster) -> np.ndarray:
    peak = raster.values.max() if raster.values.size else 0.0
    if peak <= 0:
        return np.zeros(raster.values.shape, dtype=np.int64)
    return np.rint(raster.values / peak * PGM_MAX).astype(np.int64)


def write_pgm(raster: Raster, stream: IO[str], per_line: int = 12) -> None:
    """Plain graymap scaled so the raster maximum maps to 65535."""
    levels = pgm_levels(raster).ravel()
    stream.write(f"P2\n{raster.width} {raster.height}\n{PGM_MAX}\n")
    for lo in range(0, levels.size, per_line):
        stream.write(" ".join(str(v) for v in levels[lo : lo + per_line]) + "\n")


def read_pgm(stream: IO[str]) -> np.ndarray:
    tokens = []
    for line in stream:
        tokens += line.split("#", 1)[0].split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM (P2) file")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array([int(t) for t in tokens[4:]], dtype=np.int64).reshape(h, w)
