"""Month x weekday, hour-of-day and categorical breakdowns of event records."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .ingest import MONTH_NAMES, WEEKDAY_NAMES, EventRecord

PERCENT_DECIMALS = 3


def percent(count, total):
    return round(100.0 * count / total, PERCENT_DECIMALS)


@dataclass(frozen=True, eq=False)
class MonthDayTable:
    counts: np.ndarray  # (12, 7): month January..December x weekday Sunday..Saturday
    excluded: int = 0

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def column_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def grand_total(self) -> int:
        return int(self.counts.sum())

    def cell(self, month: int, weekday: int) -> int:
        """``month`` is 1-12, ``weekday`` is 0 (Sunday) to 6."""
        return int(self.counts[month - 1, weekday])


@dataclass(frozen=True, eq=False)
class HourHistogram:
    counts: np.ndarray  # (24,)
    excluded: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def peak_hour(self) -> Optional[int]:
        return int(np.argmax(self.counts)) if self.total else None


@dataclass(frozen=True)
class FeatureBreakdown:
    feature: str
    rows: tuple[tuple[str, int, float], ...]
    total: int
    excluded: int = 0

    @property
    def top(self):
        return self.rows[0] if self.rows else None


def aggregate_month_day(records: Iterable[EventRecord]) -> MonthDayTable:
    counts = np.zeros((12, 7), dtype=np.int64)
    excluded = 0
    for r in records:
        if r.month is None or r.weekday is None:
            excluded += 1
        else:
            counts[r.month - 1, r.weekday] += 1
    return MonthDayTable(counts, excluded)


def weekday_shares(table: MonthDayTable) -> np.ndarray:
    """Share of each weekday (Sunday first) in percent, rounded to 3 decimals."""
    total = table.grand_total
    if total <= 0:
        raise DataError("weekday shares are undefined for an empty table")
    return np.round(100.0 * table.column_totals / total, PERCENT_DECIMALS)


def aggregate_hour(records: Iterable[EventRecord]) -> HourHistogram:
    counts = np.zeros(24, dtype=np.int64)
    excluded = 0
    for r in records:
        if r.hour is None:
            excluded += 1
        else:
            counts[r.hour] += 1
    return HourHistogram(counts, excluded)


def aggregate_feature(
    records: Iterable[EventRecord], feature: str, known_features: Optional[Sequence[str]] = None
) -> FeatureBreakdown:
    """Counts per category, sorted by count descending then name.

    ``known_features`` lists the schema's canonical feature names; when it is
    omitted a name is accepted if at least one record carries it.
    """
    if known_features is not None and feature not in known_features:
        raise SchemaError(f"unknown feature {feature!r}; known: {list(known_features)}")
    tally: Counter[str] = Counter()
    seen = excluded = 0
    for r in records:
        seen += 1
        v = r.features.get(feature)
        if v is None:
            excluded += 1
        else:
            tally[v] += 1
    if known_features is None and seen and not tally:
        raise SchemaError(f"no record carries feature {feature!r}")
    total = sum(tally.values())
    rows = tuple(
        (cat, n, percent(n, total)) for cat, n in sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))
    )
    return FeatureBreakdown(feature, rows, total, excluded)


# ---------------------------------------------------------------- CSV


def write_month_day_csv(table: MonthDayTable, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["Months", *WEEKDAY_NAMES, "total cases"])
    for m, name in enumerate(MONTH_NAMES):
        row = [int(v) for v in table.counts[m]]
        w.writerow([name, *row, sum(row)])


def read_month_day_csv(stream: IO[str]) -> MonthDayTable:
    reader = csv.reader(stream)
    header = next(reader)
    if header[1:8] != list(WEEKDAY_NAMES):
        raise SchemaError(f"unexpected month-day header {header}")
    counts = np.zeros((12, 7), dtype=np.int64)
    for row in reader:
        if not row:
            continue
        m = MONTH_NAMES.index(row[0])
        counts[m] = [int(v) for v in row[1:8]]
        if len(row) > 8 and int(row[8]) != counts[m].sum():
            raise DataError(f"row total mismatch for {row[0]}")
    return MonthDayTable(counts)


def write_hour_csv(hist: HourHistogram, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["hour", "count"])
    for h, n in enumerate(hist.counts):
        w.writerow([h, int(n)])


def write_feature_csv(breakdown: FeatureBreakdown, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["category", "count", "percentage"])
    for cat, n, pct in breakdown.rows:
        w.writerow([cat, n, f"{pct:.{PERCENT_DECIMALS}f}"])
