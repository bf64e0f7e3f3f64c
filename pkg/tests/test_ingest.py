import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hotspots.errors import ConfigError, InputError, SchemaError
from hotspots.fixtures import MONTH_DAY_COUNTS
from hotspots.ingest import (
    EventRecord,
    SchemaMap,
    canonical_schema,
    detect_quality,
    load_records,
    write_records,
)

SCHEMA = SchemaMap("Lat", "Lon", "Month", "Day", "Hour", (("road", "Road"),))


def load(text, schema=SCHEMA, **kw):
    return load_records(io.BytesIO(text.encode()), schema, **kw)


def test_empty_longitude_row_dropped():
    recs, rep = load("Lat,Lon,Month,Day,Hour,Road\n1,2,1,0,3,A\n3,,1,0,3,A\n5,6,,,,\n")
    assert len(recs) == 2
    assert rep.rows_dropped_missing_coords == 1
    assert rep.rows_read == 3 and rep.rows_retained == 2


def test_duplicates_retained_and_counted():
    recs, rep = load("Lat,Lon,Month,Day,Hour,Road\n1.5,2.5,1,0,3,A\n1.5,2.5,2,1,4,B\n")
    assert len(recs) == 2
    assert rep.duplicate_coordinate_rows == 1


@pytest.mark.parametrize("bad", ["", "   ", "abc", "nan", "inf"])
def test_missing_coordinate_encodings(bad):
    recs, rep = load(f"Lat,Lon,Month,Day,Hour,Road\n{bad},2,1,0,3,A\n")
    assert recs == [] and rep.rows_dropped_missing_coords == 1


def test_out_of_range_dropped_and_counted_separately():
    recs, rep = load("Lat,Lon,Month,Day,Hour,Road\n250,2,1,0,3,A\n1,-200,1,0,3,A\n1,2,1,0,3,A\n")
    assert len(recs) == 1
    assert rep.rows_dropped_missing_coords == 2
    assert rep.rows_out_of_range == 2


def test_absent_fields_never_fabricated():
    (r,), _ = load("Lat,Lon,Month,Day,Hour,Road\n1,2,,x,25,\n")
    assert r.month is None and r.weekday is None and r.hour is None
    assert r.features == {}


def test_named_and_numeric_temporal_fields():
    recs, _ = load(
        "Lat,Lon,Month,Day,Hour,Road\n"
        "1,2,October,Friday,18,Non-Intersection\n"
        "1,2,10,5,18:40,X\n"
        "1,2,oct,fri,6.0,X\n"
    )
    assert {(r.month, r.weekday, r.hour) for r in recs} == {(10, 5, 18), (10, 5, 6)}
    assert recs[0].features == {"road": "Non-Intersection"}


def test_missing_schema_column_named():
    with pytest.raises(SchemaError, match="Hour"):
        load("Lat,Lon,Month,Day,Road\n1,2,1,1,A\n")


def test_unreadable_stream():
    class Broken(io.RawIOBase):
        def readable(self):
            return True

        def readinto(self, b):
            raise OSError("device gone")

    with pytest.raises(InputError):
        load_records(io.BufferedReader(Broken()), SCHEMA)
    with pytest.raises(InputError):
        load_records(io.BytesIO(b"\xff\xfe\x00bad"), SCHEMA)
    with pytest.raises(InputError):
        load_records(io.BytesIO(b""), SCHEMA)


def test_custom_delimiter_and_bom():
    recs, _ = load_records(io.BytesIO("﻿Lat;Lon\n1;2\n".encode()), SchemaMap("Lat", "Lon"), delimiter=";")
    assert recs == [EventRecord(1.0, 2.0)]


def test_schema_invariants():
    with pytest.raises(ConfigError):
        SchemaMap("a", "a")
    with pytest.raises(ConfigError):
        SchemaMap("", "b")


def test_order_preserved():
    rows = "".join(f"{i % 80},{i % 170},,,,\n" for i in range(50))
    recs, _ = load("Lat,Lon,Month,Day,Hour,Road\n" + rows)
    assert [(r.lat, r.lon) for r in recs] == [(float(i % 80), float(i % 170)) for i in range(50)]


coord = st.one_of(st.floats(-90, 90, allow_nan=False).map(repr), st.sampled_from(["", " ", "x", "999"]))


@given(st.lists(st.tuples(coord, coord), max_size=30))
def test_conservation_and_idempotence(rows):
    text = "Lat,Lon\n" + "".join(f"{a},{b}\n" for a, b in rows)
    recs, rep = load_records(io.BytesIO(text.encode()), SchemaMap("Lat", "Lon"))
    assert rep.rows_read == rep.rows_retained + rep.rows_dropped_missing_coords
    assert rep.duplicate_coordinate_rows <= rep.rows_retained
    buf = io.StringIO()
    write_records(recs, buf)
    again, rep2 = load_records(io.BytesIO(buf.getvalue().encode()), canonical_schema())
    assert again == recs
    assert rep2.rows_dropped_missing_coords == 0


def test_canonical_round_trip_with_features():
    recs = [EventRecord(1.25, -3.5, 2, 0, 23, {"road": "A,B"}), EventRecord(0.1, 0.2, None, 6, None, {})]
    buf = io.StringIO()
    write_records(recs, buf, ["road"])
    again, _ = load_records(io.BytesIO(buf.getvalue().encode()), canonical_schema(["road"]))
    assert again == recs


def test_detect_quality_counts():
    assert detect_quality([]) == detect_quality([]).__class__(0, 0, 0, 0)
    recs = [EventRecord(0, 0, 1, 1, None if i < 2 else 5) for i in range(5)]
    q = detect_quality(recs)
    assert q.hour_absent == 2 and q.month_absent == 0 and q.records == 5


def test_detect_quality_fixture_has_no_absences():
    recs = [
        EventRecord(0.0, 0.0, m + 1, d, 12)
        for m in range(12)
        for d in range(7)
        for _ in range(int(MONTH_DAY_COUNTS[m, d]))
    ]
    q = detect_quality(recs)
    assert q.records == 33706
    assert (q.month_absent, q.weekday_absent, q.hour_absent) == (0, 0, 0)
