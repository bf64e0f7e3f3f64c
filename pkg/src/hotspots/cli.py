"""
Command line pipeline.  Every stage reads and writes files in ``--out-dir``
so stages can be re-run independently::

    hotspots clean    --input crashes.csv --config schema.cfg --out-dir out
    hotspots cluster  --out-dir out --eps-km 0.05 --min-pts 300
    hotspots heatmap  --out-dir out --alpha 1e-4 --grid 512x512
    hotspots markers  --out-dir out --zooms 5-22 --radius-px 80
    hotspots temporal --out-dir out
    hotspots report   --out-dir out

``hotspots run`` chains all six.  Exit codes: 0 ok, 1 usage/config error,
2 data error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .dbscan import DbscanParams, cluster_summary, dbscan
from .errors import ConfigError, DataError, HotspotError, InputError, ParameterError
from .export import clusters_geojson, dump_json, markers_geojson, write_esri_ascii, write_pgm
from .fixtures import FIXTURE_CONFIG, fixture_records, write_raw_csv
from .geo import MAX_ZOOM, PROJECTIONS, BBox, bounding_box
from .heatmap import KERNEL_SPACES, HeatmapParams, render
from .ingest import MONTH_NAMES, WEEKDAY_NAMES, SchemaMap, detect_quality, load_records, read_canonical, records_latlon, write_records
from .markers import MarkerParams, cluster_markers
from .quality import silhouette
from .temporal import (
    aggregate_feature,
    aggregate_hour,
    aggregate_month_day,
    write_feature_csv,
    write_hour_csv,
    write_month_day_csv,
)

log = logging.getLogger("hotspots")

RECORDS = "records.csv"
CLEAN_REPORT = "clean_report.json"
CLUSTERS = "clusters.geojson"
SILHOUETTE = "silhouette.json"
HEAT_ASC = "heatmap.asc"
HEAT_PGM = "heatmap.pgm"
HEAT_META = "heatmap.json"
MARKER_DIR = "markers"
MARKER_META = "markers.json"
MONTH_DAY = "month_day.csv"
HOURLY = "hourly.csv"
TEMPORAL_META = "temporal.json"
MANIFEST = "manifest.json"


@dataclass
class RunConfig:
    input: Optional[str] = None
    out_dir: str = "out"
    lat_col: str = "lat"
    lon_col: str = "lon"
    month_col: Optional[str] = None
    weekday_col: Optional[str] = None
    hour_col: Optional[str] = None
    features: list = field(default_factory=list)  # [(canonical name, column)]
    delimiter: str = ","
    eps_km: float = 0.05
    min_pts: int = 300
    alpha: float = 1e-4
    grid: tuple = (512, 512)
    bbox: Optional[tuple] = None  # (min_lat, max_lat, min_lon, max_lon)
    padding: float = 0.05
    kernel_space: str = "degrees"
    zooms: tuple = tuple(range(5, MAX_ZOOM + 1))
    zoom_max: int = MAX_ZOOM
    radius_px: float = 80.0
    projection: str = "equirectangular"
    scale_c: Optional[float] = None
    seed: int = 0
    # externally reported marker counts, copied into the manifest for comparison only
    reference_marker_counts: tuple = ()

    def schema(self) -> SchemaMap:
        return SchemaMap(self.lat_col, self.lon_col, self.month_col, self.weekday_col,
                         self.hour_col, tuple(self.features))

    def dbscan_params(self) -> DbscanParams:
        return DbscanParams(self.eps_km, self.min_pts)

    def marker_params(self, zoom: int) -> MarkerParams:
        return MarkerParams(zoom, self.zoom_max, self.radius_px, self.scale_c, self.projection)

    def validate(self) -> None:
        self.schema()
        self.dbscan_params()
        HeatmapParams(self.alpha, self.grid[0], self.grid[1], kernel_space=self.kernel_space)
        if not self.zooms:
            raise ParameterError("zooms must list at least one zoom level")
        for z in self.zooms:
            self.marker_params(z)
        if not (self.padding >= 0 and math.isfinite(self.padding)):
            raise ParameterError(f"padding must be >= 0, got {self.padding}")
        if self.bbox is not None:
            BBox(*self.bbox)
        if len(self.delimiter) != 1:
            raise ConfigError(f"delimiter must be a single character, got {self.delimiter!r}")


# ---------------------------------------------------------------- config parsing


def _parse_grid(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ConfigError(f"grid must look like WIDTHxHEIGHT, got {text!r}") from None


def _parse_zooms(text):
    zooms = set()
    try:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-"))
                zooms.update(range(lo, hi + 1))
            else:
                zooms.add(int(part))
    except ValueError:
        raise ConfigError(f"zooms must be a list like '5-22' or '10,12,14', got {text!r}") from None
    return tuple(sorted(zooms))


def _parse_counts(text):
    try:
        counts = tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"reference-marker-counts must be integers like '120,95', got {text!r}") from None
    if any(c < 0 for c in counts):
        raise ConfigError(f"reference-marker-counts must be >= 0, got {text!r}")
    return counts


def _parse_feature(text):
    name, sep, col = text.partition("=")
    if not sep or not name.strip() or not col.strip():
        raise ConfigError(f"feature must look like NAME=COLUMN, got {text!r}")
    return name.strip(), col.strip()


def _parse_bbox(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != 4:
        raise ConfigError(f"bbox must be MIN_LAT,MAX_LAT,MIN_LON,MAX_LON, got {text!r}")
    return vals


def _number(kind, name):
    def conv(text):
        try:
            return kind(text)
        except ValueError:
            raise ConfigError(f"{name}: expected {kind.__name__}, got {text!r}") from None
    return conv


# key -> (RunConfig attribute, converter); keys double as long flag names
OPTIONS = {
    "input": ("input", str),
    "out-dir": ("out_dir", str),
    "lat-col": ("lat_col", str),
    "lon-col": ("lon_col", str),
    "month-col": ("month_col", str),
    "weekday-col": ("weekday_col", str),
    "hour-col": ("hour_col", str),
    "delimiter": ("delimiter", str),
    "eps-km": ("eps_km", _number(float, "eps-km")),
    "min-pts": ("min_pts", _number(int, "min-pts")),
    "alpha": ("alpha", _number(float, "alpha")),
    "grid": ("grid", _parse_grid),
    "bbox": ("bbox", _parse_bbox),
    "padding": ("padding", _number(float, "padding")),
    "kernel-space": ("kernel_space", str),
    "zooms": ("zooms", _parse_zooms),
    "zoom-max": ("zoom_max", _number(int, "zoom-max")),
    "radius-px": ("radius_px", _number(float, "radius-px")),
    "projection": ("projection", str),
    "scale-c": ("scale_c", _number(float, "scale-c")),
    "seed": ("seed", _number(int, "seed")),
    "reference-marker-counts": ("reference_marker_counts", _parse_counts),
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``feature`` may repeat."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lower().replace("_", "-"), value.strip()
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        if key == "feature":
            values.setdefault("features", []).append(_parse_feature(value))
        elif key in OPTIONS:
            attr, conv = OPTIONS[key]
            values[attr] = conv(value)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for key, (attr, conv) in OPTIONS.items():
        flag = getattr(args, attr, None)
        if flag is not None:
            values[attr] = conv(flag)
    if args.feature:
        values["features"] = [_parse_feature(f) for f in args.feature]
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- helpers


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(out: Path, name: str) -> Path:
    p = out / name
    if not p.exists():
        raise InputError(f"missing upstream artifact {p}; run the stage that produces it first")
    return p


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dump_json(obj, fh)


def _load_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_clean(cfg: RunConfig):
    out = Path(cfg.out_dir)
    records, _ = read_canonical(_require(out, RECORDS))
    return records


# ---------------------------------------------------------------- stages


def cmd_clean(cfg: RunConfig) -> dict:
    """Load the raw file, drop rows without usable coordinates, write records.csv."""
    if not cfg.input:
        raise ConfigError("clean needs --input (or 'input' in the config file)")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        with open(cfg.input, "rb") as fh:
            records, report = load_records(fh, cfg.schema(), cfg.delimiter)
    except OSError as exc:
        raise InputError(f"cannot read {cfg.input}: {exc}") from exc
    with open(out / RECORDS, "w", encoding="utf-8", newline="") as fh:
        write_records(records, fh, [n for n, _ in cfg.features])
    quality = detect_quality(records)
    payload = {
        **report.to_dict(),
        "absent": {"month": quality.month_absent, "weekday": quality.weekday_absent, "hour": quality.hour_absent},
        "input": {"path": str(cfg.input), "sha256": _sha256(cfg.input)},
        "schema": asdict(cfg.schema()),
    }
    _write_json(out / CLEAN_REPORT, payload)
    log.info("clean: %d read, %d retained, %d dropped", report.rows_read, report.rows_retained,
             report.rows_dropped_missing_coords)
    return payload


def cmd_cluster(cfg: RunConfig) -> dict:
    """DBSCAN on cleaned records; writes clusters.geojson and silhouette.json."""
    out = Path(cfg.out_dir)
    records = _load_clean(cfg)
    pts = records_latlon(records)
    params = cfg.dbscan_params()
    clustering = dbscan(pts, params)
    summary = cluster_summary(pts, clustering)
    with open(out / CLUSTERS, "w", encoding="utf-8", newline="\n") as fh:
        dump_json(clusters_geojson(pts, clustering, summary), fh)
    try:
        score = silhouette(pts, clustering).to_dict()
    except DataError as exc:
        score = {"defined": False, "reason": str(exc), "excluded_noise": clustering.noise_count}
    score["params"] = {"eps_km": params.eps_km, "min_pts": params.min_pts}
    score["cluster_count"] = clustering.cluster_count
    score["noise_count"] = clustering.noise_count
    score["cluster_sizes"] = [s.member_count for s in summary]
    _write_json(out / SILHOUETTE, score)
    log.info("cluster: %d clusters, %d noise", clustering.cluster_count, clustering.noise_count)
    return score


def _heat_bbox(cfg: RunConfig, pts) -> BBox:
    if cfg.bbox is not None:
        return BBox(*cfg.bbox)
    if len(pts) == 0:
        return bounding_box(np.zeros((1, 2)))
    return bounding_box(pts, cfg.padding)


def cmd_heatmap(cfg: RunConfig) -> dict:
    """Gaussian kernel raster as ESRI ASCII grid and PGM."""
    out = Path(cfg.out_dir)
    pts = records_latlon(_load_clean(cfg))
    box = _heat_bbox(cfg, pts)
    params = HeatmapParams(cfg.alpha, cfg.grid[0], cfg.grid[1], box, True, kernel_space=cfg.kernel_space)
    raster = render(pts, params)
    with open(out / HEAT_ASC, "w", encoding="ascii", newline="\n") as fh:
        write_esri_ascii(raster, fh)
    with open(out / HEAT_PGM, "w", encoding="ascii", newline="\n") as fh:
        write_pgm(raster, fh)
    peak = np.unravel_index(int(np.argmax(raster.values)), raster.values.shape)
    meta = {
        "params": {"alpha": params.alpha, "width": params.width, "height": params.height,
                   "kernel_space": params.kernel_space, "cutoff_sigmas": params.cutoff_sigmas,
                   "normalize": params.normalize},
        "bbox": asdict(box),
        "peak_cell": {"row": int(peak[0]), "col": int(peak[1])} if raster.values.max() > 0 else None,
    }
    _write_json(out / HEAT_META, meta)
    return meta


def cmd_markers(cfg: RunConfig) -> dict:
    """Zoom-dependent marker clusters, one GeoJSON per zoom."""
    out = Path(cfg.out_dir)
    pts = records_latlon(_load_clean(cfg))
    (out / MARKER_DIR).mkdir(exist_ok=True)
    per_zoom = {}
    for z in cfg.zooms:
        params = cfg.marker_params(z)
        ms = cluster_markers(pts, params)
        counts = ms.counts
        if sum(counts) != len(pts):
            raise DataError(f"marker counts at zoom {z} do not add up to {len(pts)}")
        name = f"{MARKER_DIR}/zoom_{z:02d}.geojson"
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            dump_json(markers_geojson(ms), fh)
        per_zoom[str(z)] = {"file": name, "markers": len(counts), "largest": max(counts, default=0),
                            "total": sum(counts)}
    meta = {
        "params": {"zoom_max": cfg.zoom_max, "radius_px": cfg.radius_px, "projection": cfg.projection,
                   "scale_c": cfg.marker_params(cfg.zooms[0]).resolved_scale_c},
        "zooms": per_zoom,
    }
    _write_json(out / MARKER_META, meta)
    return meta


def _feature_file(name: str) -> str:
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in name)
    return f"feature_{safe}.csv"


def cmd_temporal(cfg: RunConfig) -> dict:
    """Month x weekday, hourly and per-feature CSV tables."""
    out = Path(cfg.out_dir)
    records = _load_clean(cfg)
    table = aggregate_month_day(records)
    hours = aggregate_hour(records)
    with open(out / MONTH_DAY, "w", encoding="utf-8", newline="") as fh:
        write_month_day_csv(table, fh)
    with open(out / HOURLY, "w", encoding="utf-8", newline="") as fh:
        write_hour_csv(hours, fh)
    features = {}
    names = [n for n, _ in cfg.features]
    for name in names:
        breakdown = aggregate_feature(records, name, names)
        fname = _feature_file(name)
        with open(out / fname, "w", encoding="utf-8", newline="") as fh:
            write_feature_csv(breakdown, fh)
        top = breakdown.top
        features[name] = {
            "file": fname,
            "total": breakdown.total,
            "excluded": breakdown.excluded,
            "top": None if top is None else {"category": top[0], "count": top[1], "percentage": top[2]},
        }
    total = table.grand_total
    meta = {
        "month_day": {"file": MONTH_DAY, "total": total, "excluded": table.excluded,
                      "max_month": MONTH_NAMES[int(np.argmax(table.row_totals))] if total else None,
                      "max_weekday": WEEKDAY_NAMES[int(np.argmax(table.column_totals))] if total else None},
        "hourly": {"file": HOURLY, "total": hours.total, "excluded": hours.excluded,
                   "max_hour": hours.peak_hour},
        "features": features,
    }
    _write_json(out / TEMPORAL_META, meta)
    return meta


def cmd_report(cfg: RunConfig) -> dict:
    """Collect stage outputs into manifest.json."""
    out = Path(cfg.out_dir)
    clean = _load_json(_require(out, CLEAN_REPORT))
    sil = _load_json(_require(out, SILHOUETTE))
    _require(out, CLUSTERS)
    heat = _load_json(_require(out, HEAT_META))
    _require(out, HEAT_ASC)
    _require(out, HEAT_PGM)
    marks = _load_json(_require(out, MARKER_META))
    temporal = _load_json(_require(out, TEMPORAL_META))
    for z in marks["zooms"].values():
        _require(out, z["file"])
    for f in temporal["features"].values():
        _require(out, f["file"])
    _require(out, MONTH_DAY)
    _require(out, HOURLY)

    artifacts = []
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name != MANIFEST:
            rel = p.relative_to(out).as_posix()
            artifacts.append({"path": rel, "bytes": p.stat().st_size, "sha256": _sha256(p)})
    manifest = {
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "tool_version": __version__,
        "input": clean["input"],
        "parameters": {
            "schema": clean["schema"],
            "dbscan": sil["params"],
            "heatmap": {**heat["params"], "bbox": heat["bbox"]},
            "markers": {**marks["params"], "zooms": [int(z) for z in marks["zooms"]]},
            "seed": cfg.seed,
        },
        "headline": {
            "rows_read": clean["rows_read"],
            "rows_retained": clean["rows_retained"],
            "rows_dropped_missing_coords": clean["rows_dropped_missing_coords"],
            "duplicate_coordinate_rows": clean["duplicate_coordinate_rows"],
            "cluster_count": sil["cluster_count"],
            "noise_count": sil["noise_count"],
            "cluster_sizes": sil["cluster_sizes"],
            "silhouette_mean": sil.get("mean_score"),
            "max_month": temporal["month_day"]["max_month"],
            "max_weekday": temporal["month_day"]["max_weekday"],
            "max_hour": temporal["hourly"]["max_hour"],
            "top_feature": {k: v["top"] for k, v in temporal["features"].items()},
            "largest_marker_by_zoom": {z: v["largest"] for z, v in marks["zooms"].items()},
        },
        "reference": {"marker_counts": list(cfg.reference_marker_counts)},
        "artifacts": artifacts,
    }
    _write_json(out / MANIFEST, manifest)
    return manifest


def cmd_run(cfg: RunConfig) -> dict:
    """Run clean, cluster, heatmap, markers, temporal and report in order."""
    for stage in (cmd_clean, cmd_cluster, cmd_heatmap, cmd_markers, cmd_temporal):
        stage(cfg)
    return cmd_report(cfg)


def cmd_fixture(cfg: RunConfig) -> dict:
    """Write the seeded synthetic table (to --input) plus a matching config."""
    if not cfg.input:
        raise ConfigError("fixture needs --input naming the CSV to create")
    path = Path(cfg.input)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = fixture_records(cfg.seed)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_raw_csv(records, fh)
    cfg_path = path.with_suffix(".cfg")
    cfg_path.write_text(FIXTURE_CONFIG, encoding="utf-8")
    return {"rows": len(records), "csv": str(path), "config": str(cfg_path)}


STAGES = {
    "clean": cmd_clean,
    "cluster": cmd_cluster,
    "heatmap": cmd_heatmap,
    "markers": cmd_markers,
    "temporal": cmd_temporal,
    "report": cmd_report,
    "run": cmd_run,
    "fixture": cmd_fixture,
}


# ---------------------------------------------------------------- argparse


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("pipeline options (override --config)")
    g.add_argument("--input", help="raw delimited input file")
    g.add_argument("--config", help="flat 'key = value' file mirroring these flags")
    g.add_argument("--out-dir", dest="out_dir")
    g.add_argument("--lat-col", dest="lat_col")
    g.add_argument("--lon-col", dest="lon_col")
    g.add_argument("--month-col", dest="month_col")
    g.add_argument("--weekday-col", dest="weekday_col")
    g.add_argument("--hour-col", dest="hour_col")
    g.add_argument("--feature", action="append", metavar="NAME=COLUMN",
                   help="categorical feature column (repeatable)")
    g.add_argument("--delimiter")
    g.add_argument("--eps-km", dest="eps_km", help="DBSCAN radius in km (default 0.05)")
    g.add_argument("--min-pts", dest="min_pts", help="DBSCAN core threshold, self included (default 300)")
    g.add_argument("--alpha", help="kernel width, squared degrees (default 1e-4)")
    g.add_argument("--grid", help="raster size WIDTHxHEIGHT (default 512x512)")
    g.add_argument("--bbox", help="raster box MIN_LAT,MAX_LAT,MIN_LON,MAX_LON")
    g.add_argument("--padding", help="bbox padding fraction when --bbox is absent (default 0.05)")
    g.add_argument("--kernel-space", dest="kernel_space", choices=KERNEL_SPACES)
    g.add_argument("--zooms", help="marker zoom levels, e.g. 5-22 or 10,14,18")
    g.add_argument("--zoom-max", dest="zoom_max")
    g.add_argument("--radius-px", dest="radius_px", help="marker merge radius in pixels (default 80)")
    g.add_argument("--projection", choices=PROJECTIONS)
    g.add_argument("--scale-c", dest="scale_c", help="pixels per degree for equirectangular markers")
    g.add_argument("--seed")
    g.add_argument("--reference-marker-counts", dest="reference_marker_counts", metavar="N,N",
                   help="expected marker counts to record in the manifest (not checked)")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="hotspots", description="Crash hotspot mining pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in STAGES.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).splitlines()[0])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        result = STAGES[args.command](cfg)
    except HotspotError as exc:
        print(f"hotspots {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"hotspots {args.command}: {exc}", file=sys.stderr)
        return 3
    if args.command in ("clean", "fixture"):
        print(json.dumps({k: v for k, v in result.items() if k != "schema"}, indent=2))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
