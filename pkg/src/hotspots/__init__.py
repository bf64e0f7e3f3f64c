"""Hotspot mining for geolocated event records (crash data and the like)."""
__version__ = "0.1.0"

from ._accel import backend, set_backend
from .dbscan import NOISE, Clustering, DbscanParams, build_index, cluster_summary, dbscan, neighbors
from .geo import BBox, GeoPoint, PixelPoint, bounding_box, haversine_km, project_pixel
from .heatmap import HeatmapParams, Raster, kernel_value, render
from .ingest import CleanReport, EventRecord, SchemaMap, detect_quality, load_records
from .markers import MarkerClusterSet, MarkerParams, cluster_markers, zoom_distance
from .quality import SilhouetteResult, silhouette
from .temporal import aggregate_feature, aggregate_hour, aggregate_month_day, weekday_shares

__all__ = [
    "BBox", "CleanReport", "Clustering", "DbscanParams", "EventRecord", "GeoPoint",
    "HeatmapParams", "MarkerClusterSet", "MarkerParams", "NOISE", "PixelPoint", "Raster",
    "SchemaMap", "SilhouetteResult", "aggregate_feature", "aggregate_hour",
    "aggregate_month_day", "backend", "bounding_box", "build_index", "cluster_markers",
    "cluster_summary", "dbscan", "detect_quality", "haversine_km", "kernel_value",
    "load_records", "neighbors", "project_pixel", "render", "set_backend", "silhouette",
    "weekday_shares", "zoom_distance",
]
