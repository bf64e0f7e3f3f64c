"""
Load delimited event tables into canonical records.

Only rows with a usable coordinate pair survive.  Duplicated coordinates are
kept on purpose (several crashes can share one location); everything else
that is missing stays absent on the record.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigError, InputError, SchemaError

MONTH_NAMES = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)
# 0 = Sunday, matching the column order of the month x weekday table
WEEKDAY_NAMES = ("Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday")

_MONTH_LOOKUP = {n.lower(): i + 1 for i, n in enumerate(MONTH_NAMES)}
_MONTH_LOOKUP.update({n[:3].lower(): i + 1 for i, n in enumerate(MONTH_NAMES)})
_WEEKDAY_LOOKUP = {n.lower(): i for i, n in enumerate(WEEKDAY_NAMES)}
_WEEKDAY_LOOKUP.update({n[:3].lower(): i for i, n in enumerate(WEEKDAY_NAMES)})

CANONICAL_COLUMNS = ("lat", "lon", "month", "weekday", "hour")


@dataclass(frozen=True)
class SchemaMap:
    latitude_column: str
    longitude_column: str
    month_column: Optional[str] = None
    weekday_column: Optional[str] = None
    hour_column: Optional[str] = None
    feature_columns: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.latitude_column or not self.longitude_column:
            raise ConfigError("latitude and longitude column names must be non-empty")
        if self.latitude_column == self.longitude_column:
            raise ConfigError(
                f"latitude and longitude must be distinct columns, both are {self.latitude_column!r}"
            )
        object.__setattr__(self, "feature_columns", tuple(tuple(p) for p in self.feature_columns))
        names = [n for n, _ in self.feature_columns]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate canonical feature names in {names}")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.feature_columns)

    def required_columns(self) -> list[str]:
        cols = [self.latitude_column, self.longitude_column]
        cols += [c for c in (self.month_column, self.weekday_column, self.hour_column) if c]
        cols += [c for _, c in self.feature_columns]
        return cols


@dataclass(frozen=True)
class EventRecord:
    lat: float
    lon: float
    month: Optional[int] = None
    weekday: Optional[int] = None
    hour: Optional[int] = None
    features: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")
        for name, lo, hi in (("month", 1, 12), ("weekday", 0, 6), ("hour", 0, 23)):
            v = getattr(self, name)
            if v is not None and not (lo <= v <= hi):
                raise ValueError(f"{name} must lie in [{lo}, {hi}], got {v}")


@dataclass(frozen=True)
class CleanReport:
    rows_read: int
    rows_dropped_missing_coords: int
    rows_retained: int
    duplicate_coordinate_rows: int
    # subset of rows_dropped_missing_coords: parsed but outside lat/lon range
    rows_out_of_range: int = 0

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_dropped_missing_coords": self.rows_dropped_missing_coords,
            "rows_retained": self.rows_retained,
            "duplicate_coordinate_rows": self.duplicate_coordinate_rows,
            "rows_out_of_range": self.rows_out_of_range,
        }


@dataclass(frozen=True)
class QualitySummary:
    records: int
    month_absent: int
    weekday_absent: int
    hour_absent: int


def _blank(value) -> bool:
    return value is None or not value.strip()


def _parse_coordinate(value):
    if _blank(value):
        return None
    try:
        v = float(value)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _parse_int(value, lo, hi, names=None):
    if _blank(value):
        return None
    text = value.strip()
    if names is not None and text.lower() in names:
        return names[text.lower()]
    try:
        f = float(text)
    except ValueError:
        return None
    if not f.is_integer() or not (lo <= f <= hi):
        return None
    return int(f)


def _parse_hour(value):
    if not _blank(value) and ":" in value:
        value = value.split(":", 1)[0]
    return _parse_int(value, 0, 23)


def load_records(
    source: IO, schema: SchemaMap, delimiter: str = ","
) -> tuple[list[EventRecord], CleanReport]:
    """Parse a delimited byte (or text) stream into cleaned records.

    Parameters
    ----------
    source : binary or text stream
        Delimited text with a header row.  Bytes are decoded as UTF-8, a
        leading BOM is ignored.
    schema : SchemaMap
        Which source columns feed the canonical fields.
    delimiter : str
        Field separator.

    Returns
    -------
    records, report
        Records in input order and the drop/duplicate accounting.
    """
    try:
        text = source if isinstance(source, io.TextIOBase) else io.TextIOWrapper(
            source, encoding="utf-8-sig", newline=""
        )
        reader = csv.reader(text, delimiter=delimiter)
        header = next(reader, None)
    except (OSError, UnicodeDecodeError, csv.Error, AttributeError, TypeError) as exc:
        raise InputError(f"cannot read input stream: {exc}") from exc
    if header is None:
        raise InputError("input stream is empty (no header row)")
    header = [h.strip() for h in header]
    position = {name: i for i, name in reversed(list(enumerate(header)))}
    for col in schema.required_columns():
        if col not in position:
            raise SchemaError(f"column {col!r} not found in header {header}")

    def getter(col):
        if col is None:
            return lambda row: None
        i = position[col]
        return lambda row: row[i] if i < len(row) else None

    get_lat, get_lon = getter(schema.latitude_column), getter(schema.longitude_column)
    get_month, get_weekday = getter(schema.month_column), getter(schema.weekday_column)
    get_hour = getter(schema.hour_column)
    feature_getters = [(name, getter(col)) for name, col in schema.feature_columns]

    records: list[EventRecord] = []
    seen: set[tuple[float, float]] = set()
    rows_read = dropped = out_of_range = duplicates = 0
    line = 1
    try:
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            rows_read += 1
            lat = _parse_coordinate(get_lat(row))
            lon = _parse_coordinate(get_lon(row))
            if lat is None or lon is None:
                dropped += 1
                continue
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                dropped += 1
                out_of_range += 1
                continue
            features = {}
            for name, get in feature_getters:
                v = get(row)
                if not _blank(v):
                    features[name] = v.strip()
            records.append(
                EventRecord(
                    lat,
                    lon,
                    month=_parse_int(get_month(row), 1, 12, _MONTH_LOOKUP),
                    weekday=_parse_int(get_weekday(row), 0, 6, _WEEKDAY_LOOKUP),
                    hour=_parse_hour(get_hour(row)),
                    features=features,
                )
            )
            key = (lat, lon)
            if key in seen:
                duplicates += 1
            else:
                seen.add(key)
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise InputError(f"cannot read input stream near line {line}: {exc}") from exc

    report = CleanReport(rows_read, dropped, len(records), duplicates, out_of_range)
    return records, report


def detect_quality(records: Iterable[EventRecord]) -> QualitySummary:
    n = month = weekday = hour = 0
    for r in records:
        n += 1
        month += r.month is None
        weekday += r.weekday is None
        hour += r.hour is None
    return QualitySummary(n, month, weekday, hour)


def canonical_schema(feature_names: Sequence[str] = ()) -> SchemaMap:
    """Schema that reads back what :func:`write_records` wrote."""
    return SchemaMap("lat", "lon", "month", "weekday", "hour", tuple((n, n) for n in feature_names))


def feature_names_of(records: Iterable[EventRecord]) -> list[str]:
    names: dict[str, None] = {}
    for r in records:
        for k in r.features:
            names.setdefault(k)
    return list(names)


def write_records(records: Sequence[EventRecord], stream: IO[str], feature_names: Sequence[str] | None = None) -> None:
    """Write records as canonical CSV (floats via ``repr`` so they round-trip)."""
    if feature_names is None:
        feature_names = feature_names_of(records)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([*CANONICAL_COLUMNS, *feature_names])
    for r in records:
        writer.writerow(
            [
                repr(r.lat),
                repr(r.lon),
                "" if r.month is None else r.month,
                "" if r.weekday is None else r.weekday,
                "" if r.hour is None else r.hour,
                *(r.features.get(n, "") for n in feature_names),
            ]
        )


def read_canonical(path) -> tuple[list[EventRecord], CleanReport]:
    """Load a file produced by :func:`write_records`."""
    try:
        with open(path, "rb") as fh:
            header = fh.readline().decode("utf-8-sig").strip()
            fh.seek(0)
            names = next(csv.reader([header])) if header else []
            missing = [c for c in CANONICAL_COLUMNS if c not in names]
            if missing:
                raise SchemaError(f"{path}: not a canonical records file, missing columns {missing}")
            features = [n for n in names if n not in CANONICAL_COLUMNS]
            return load_records(fh, canonical_schema(features))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def records_latlon(records: Sequence[EventRecord]) -> np.ndarray:
    """``(n, 2)`` array of ``[lat, lon]`` rows."""
    out = np.empty((len(records), 2), dtype=np.float64)
    for i, r in enumerate(records):
        out[i, 0] = r.lat
        out[i, 1] = r.lon
    return out
