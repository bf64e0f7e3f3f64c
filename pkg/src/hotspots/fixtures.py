"""
Synthetic crash table built around a published month x weekday count grid.

The grid fixes month/weekday exactly; coordinates, hours and the road
relation category are drawn from a seeded generator, so the same seed
always yields the same file.
"""
from __future__ import annotations

import csv
from typing import IO

import numpy as np

from .ingest import MONTH_NAMES, WEEKDAY_NAMES, EventRecord

# rows January..December, columns Sunday..Saturday
MONTH_DAY_COUNTS = np.array(
    [
        [246, 352, 469, 379, 406, 438, 317],
        [259, 327, 351, 371, 374, 402, 362],
        [268, 398, 380, 374, 419, 413, 402],
        [257, 367, 386, 401, 391, 425, 405],
        [309, 333, 382, 381, 445, 437, 381],
        [287, 352, 345, 328, 368, 416, 373],
        [303, 340, 363, 355, 341, 383, 356],
        [342, 378, 346, 382, 382, 495, 402],
        [306, 408, 446, 425, 414, 519, 487],
        [340, 507, 534, 578, 506, 599, 511],
        [333, 528, 489, 532, 480, 508, 448],
        [276, 452, 445, 478, 503, 566, 444],
    ],
    dtype=np.int64,
)
MONTH_TOTALS = np.array([2607, 2446, 2654, 2632, 2668, 2469, 2441, 2727, 3005, 3575, 3318, 3164])

CENTER = (35.2271, -80.8431)
# (lat offset, lon offset, sigma deg, share of points)
HOTSPOTS = (
    (0.000, 0.000, 0.0006, 0.09),
    (0.012, -0.018, 0.0005, 0.06),
    (-0.021, 0.009, 0.0007, 0.05),
    (0.030, 0.025, 0.0005, 0.04),
    (-0.008, -0.035, 0.0006, 0.04),
    (0.045, -0.004, 0.0008, 0.03),
)
# hour weights, peaked in the early evening
HOUR_WEIGHTS = np.array(
    [14, 10, 8, 6, 4, 4, 9, 17, 22, 20, 21, 24, 28, 30, 33, 40, 46, 50, 64, 52, 44, 38, 28, 20],
    dtype=np.float64,
)
ROAD_RELATION = (
    ("Non-Intersection", 0.43),
    ("Non-Roadway", 0.30),
    ("Intersection-Related", 0.09),
    ("Intersection", 0.18),
)
RAW_COLUMNS = ("Latitude", "Longitude", "CrashMonth", "CrashDay", "CrashHour", "RoadRelation")


def fixture_records(seed: int = 0) -> list[EventRecord]:
    """Expand the count grid into one record per event."""
    rng = np.random.default_rng(seed)
    months, days = [], []
    for m in range(12):
        for d in range(7):
            k = int(MONTH_DAY_COUNTS[m, d])
            months += [m + 1] * k
            days += [d] * k
    n = len(months)

    lat = np.empty(n)
    lon = np.empty(n)
    which = rng.choice(len(HOTSPOTS) + 1, size=n, p=[s[3] for s in HOTSPOTS] + [1 - sum(s[3] for s in HOTSPOTS)])
    for h, (dlat, dlon, sigma, _) in enumerate(HOTSPOTS):
        sel = which == h
        lat[sel] = CENTER[0] + dlat + rng.normal(0, sigma, sel.sum())
        lon[sel] = CENTER[1] + dlon + rng.normal(0, sigma, sel.sum())
    bg = which == len(HOTSPOTS)
    lat[bg] = CENTER[0] + rng.uniform(-0.15, 0.15, bg.sum())
    lon[bg] = CENTER[1] + rng.uniform(-0.2, 0.2, bg.sum())
    lat = np.round(lat, 6)
    lon = np.round(lon, 6)

    hours = rng.choice(24, size=n, p=HOUR_WEIGHTS / HOUR_WEIGHTS.sum())
    cats = rng.choice(len(ROAD_RELATION), size=n, p=[p for _, p in ROAD_RELATION])
    return [
        EventRecord(
            float(lat[i]), float(lon[i]), months[i], days[i], int(hours[i]),
            {"road_relation": ROAD_RELATION[cats[i]][0]},
        )
        for i in range(n)
    ]


def write_raw_csv(records, stream: IO[str]) -> None:
    """Write records the way a raw export would: named months and days."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(RAW_COLUMNS)
    for r in records:
        w.writerow([
            f"{r.lat:.6f}",
            f"{r.lon:.6f}",
            MONTH_NAMES[r.month - 1] if r.month else "",
            WEEKDAY_NAMES[r.weekday] if r.weekday is not None else "",
            "" if r.hour is None else r.hour,
            r.features.get("road_relation", ""),
        ])


FIXTURE_CONFIG = """\
# schema for files written by `hotspots fixture`
lat-col = Latitude
lon-col = Longitude
month-col = CrashMonth
weekday-col = CrashDay
hour-col = CrashHour
feature = road_relation=RoadRelation
"""
