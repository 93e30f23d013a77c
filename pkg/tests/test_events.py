"""Event model and stream I/O: layout, round trips, validation."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evfreq.errors import DataError, FormatError, OrderingError
from evfreq.events import (EVENT_DTYPE, Event, EventArray, StreamHeader,
                           naive_reconstruct, read_events, write_events)


def make_array(t, x, y, p):
    return EventArray.from_arrays(np.asarray(t, np.uint64), np.asarray(x, np.uint16),
                                  np.asarray(y, np.uint16), np.asarray(p, np.int8))


def test_record_layout_is_13_bytes_packed():
    assert EVENT_DTYPE.itemsize == 13
    assert [EVENT_DTYPE[n].itemsize for n in EVENT_DTYPE.names] == [8, 2, 2, 1]


def test_header_validation():
    StreamHeader(640, 480).validate()
    with pytest.raises(FormatError):
        StreamHeader(0, 480).validate()
    with pytest.raises(FormatError):
        StreamHeader(640, 480, magic=b"XXXX").validate()
    with pytest.raises(FormatError):
        StreamHeader(640, 480, version=99).validate()


def test_binary_round_trip_and_byte_count(tmp_path):
    ev = make_array([0, 5, 5, 9], [1, 2, 2, 3], [0, 0, 1, 1], [1, -1, 1, -1])
    path = str(tmp_path / "s.fcev")
    n = write_events(StreamHeader(4, 2), ev, path)
    assert n == 10 + 4 * 13  # 10-byte header + packed records
    header, back = read_events(path)
    assert (header.width, header.height) == (4, 2)
    assert back == ev


def test_csv_round_trip(tmp_path):
    ev = make_array([0, 5, 9], [1, 2, 3], [0, 1, 1], [1, -1, 1])
    path = str(tmp_path / "s.csv")
    write_events(StreamHeader(4, 2), ev, path, fmt="csv")
    first = open(path).readline()
    assert first.startswith("#") and "width=4" in first and "height=2" in first
    header, back = read_events(path)
    assert (header.width, header.height) == (4, 2)
    assert back == ev


def test_empty_stream_round_trip(tmp_path):
    for fmt, name in (("binary", "e.fcev"), ("csv", "e.csv")):
        path = str(tmp_path / name)
        write_events(StreamHeader(2, 2), EventArray.empty(), path, fmt=fmt)
        _, back = read_events(path)
        assert len(back) == 0


def test_read_sniffs_format():
    ev = make_array([1], [0], [0], [1])
    for fmt in ("binary", "csv"):
        buf = io.BytesIO()
        write_events(StreamHeader(1, 1), ev, buf, fmt=fmt)
        buf.seek(0)
        _, back = read_events(buf)
        assert back == ev
    with pytest.raises(FormatError):
        read_events(io.BytesIO(b"garbage everywhere"))


def test_truncated_binary_rejected(tmp_path):
    ev = make_array([0, 5], [0, 1], [0, 0], [1, -1])
    path = str(tmp_path / "t.fcev")
    write_events(StreamHeader(2, 1), ev, path)
    blob = open(path, "rb").read()
    with pytest.raises(FormatError):
        read_events(io.BytesIO(blob[:-3]))  # mid-record cut


def test_validate_reports_offending_record_index():
    ev = make_array([0, 1, 2], [0, 9, 0], [0, 0, 0], [1, 1, -1])
    with pytest.raises(DataError) as exc:
        ev.validate(4, 4)
    assert exc.value.index == 1

    ev = make_array([0, 1], [0, 0], [0, 0], [1, 0])
    with pytest.raises(DataError):
        ev.validate(4, 4)

    ev = make_array([5, 4], [0, 0], [0, 0], [1, -1])
    with pytest.raises(OrderingError) as exc:
        ev.validate(4, 4)
    assert exc.value.index == 1


def test_write_validates_before_touching_sink(tmp_path):
    path = str(tmp_path / "never.fcev")
    bad = make_array([0], [99], [0], [1])
    with pytest.raises(DataError):
        write_events(StreamHeader(4, 4), bad, path)
    assert not (tmp_path / "never.fcev").exists()


def test_event_array_accessors_and_equality():
    ev = make_array([0, 3], [1, 2], [0, 1], [1, -1])
    assert ev[0] == Event(0, 1, 0, 1)
    assert list(ev.p) == [1, -1]
    assert ev[0:1] == make_array([0], [1], [0], [1])
    assert ev == make_array([0, 3], [1, 2], [0, 1], [1, -1])
    assert ev != ev[0:1]


def test_naive_reconstruct_is_polarity_cumsum():
    ev = make_array([0, 1, 2, 3], [0, 0, 0, 0], [0, 0, 0, 0], [1, 1, -1, -1])
    t, l = naive_reconstruct(ev)
    assert list(t) == [0, 1, 2, 3]
    assert list(l) == [1, 2, 1, 0]


events_strategy = st.lists(
    st.tuples(st.integers(0, 2**40), st.integers(0, 31), st.integers(0, 23),
              st.sampled_from([-1, 1])),
    max_size=200,
)


@settings(max_examples=60, deadline=None)
@given(events_strategy, st.sampled_from(["binary", "csv"]))
def test_round_trip_any_sorted_stream(raw, fmt):
    raw.sort(key=lambda r: r[0])
    ev = make_array(*zip(*raw)) if raw else EventArray.empty()
    buf = io.BytesIO()
    write_events(StreamHeader(32, 24), ev, buf, fmt=fmt)
    buf.seek(0)
    header, back = read_events(buf)
    assert back == ev
    assert (header.width, header.height) == (32, 24)
