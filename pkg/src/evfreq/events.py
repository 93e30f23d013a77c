"""Event data model and bit-exact stream I/O.

Two on-disk containers are supported:

* binary "FCEV" v1: 10 byte header (magic ``FCEV``, version u16 LE,
  width u16 LE, height u16 LE) followed by packed 13-byte records
  (t_us u64 LE, x u16 LE, y u16 LE, polarity i8).
* CSV: first line ``# width=W height=H``, second line ``t_us,x,y,p``,
  then one event per line with p in {-1, 1}.

Timestamps must be globally non-decreasing within a stream.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError, OrderingError

MAGIC = b"FCEV"
VERSION = 1

# packed little-endian record layout, 13 bytes per event
EVENT_DTYPE = np.dtype([("t_us", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "<i1")])
assert EVENT_DTYPE.itemsize == 13

CSV_COLUMNS = "t_us,x,y,p"


@dataclass
class Event:
    t_us: int
    x: int
    y: int
    polarity: int


@dataclass
class StreamHeader:
    width: int
    height: int
    magic: bytes = MAGIC
    version: int = VERSION

    def validate(self):
        if self.magic != MAGIC:
            raise FormatError(f"bad magic {self.magic!r}")
        if self.version != VERSION:
            raise FormatError(f"unsupported version {self.version}")
        if self.width < 1 or self.height < 1:
            raise FormatError(f"bad dimensions {self.width}x{self.height}")


class EventArray:
    """Column-oriented event container backed by a packed numpy record array."""

    def __init__(self, records: np.ndarray):
        if records.dtype != EVENT_DTYPE:
            records = records.astype(EVENT_DTYPE)
        self.records = records

    @classmethod
    def empty(cls) -> "EventArray":
        return cls(np.empty(0, dtype=EVENT_DTYPE))

    @classmethod
    def from_arrays(cls, t_us, x, y, p) -> "EventArray":
        rec = np.empty(len(t_us), dtype=EVENT_DTYPE)
        rec["t_us"] = t_us
        rec["x"] = x
        rec["y"] = y
        rec["p"] = p
        return cls(rec)

    @classmethod
    def from_events(cls, events) -> "EventArray":
        events = list(events)
        rec = np.empty(len(events), dtype=EVENT_DTYPE)
        for i, e in enumerate(events):
            rec[i] = (e.t_us, e.x, e.y, e.polarity)
        return cls(rec)

    @property
    def t_us(self):
        return self.records["t_us"]

    @property
    def x(self):
        return self.records["x"]

    @property
    def y(self):
        return self.records["y"]

    @property
    def p(self):
        return self.records["p"]

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        if isinstance(i, slice) or isinstance(i, np.ndarray):
            return EventArray(self.records[i])
        r = self.records[i]
        return Event(int(r["t_us"]), int(r["x"]), int(r["y"]), int(r["p"]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, EventArray):
            return NotImplemented
        return np.array_equal(self.records, other.records)

    def validate(self, width, height):
        """Raise on out-of-bounds coordinates, bad polarity, or time regression."""
        rec = self.records
        bad = np.flatnonzero((rec["x"] >= width) | (rec["y"] >= height))
        if bad.size:
            i = int(bad[0])
            raise DataError(
                f"coordinate ({rec['x'][i]},{rec['y'][i]}) outside {width}x{height}",
                index=i,
            )
        bad = np.flatnonzero(np.abs(rec["p"]) != 1)
        if bad.size:
            i = int(bad[0])
            raise DataError(f"polarity {rec['p'][i]} not in {{-1,1}}", index=i)
        t = rec["t_us"]
        if len(t) > 1:
            reg = np.flatnonzero(np.diff(t.astype(np.int64)) < 0)
            if reg.size:
                i = int(reg[0]) + 1
                raise OrderingError(f"timestamp regression {t[i-1]} -> {t[i]}", index=i)


def _open(source, mode):
    if isinstance(source, (str, bytes)) and not isinstance(source, bytes):
        return open(source, mode), True
    return source, False


def read_events(source):
    """Read a binary FCEV or CSV event stream.

    ``source`` may be a path or a binary file-like object. Returns
    ``(StreamHeader, EventArray)``.
    """
    f, owned = _open(source, "rb")
    try:
        head = f.read(4)
        if head == MAGIC:
            return _read_binary(f)
        if head[:1] == b"#":
            return _read_csv(io.TextIOWrapper(io.BytesIO(head + f.read()), "ascii"))
        raise FormatError(f"unrecognized stream header {head!r}")
    finally:
        if owned:
            f.close()


def _read_binary(f):
    rest = f.read(6)
    if len(rest) != 6:
        raise FormatError("truncated binary header")
    version = int.from_bytes(rest[0:2], "little")
    width = int.from_bytes(rest[2:4], "little")
    height = int.from_bytes(rest[4:6], "little")
    header = StreamHeader(width, height, MAGIC, version)
    header.validate()
    body = f.read()
    if len(body) % EVENT_DTYPE.itemsize:
        raise FormatError(f"body size {len(body)} not a multiple of record size")
    events = EventArray(np.frombuffer(body, dtype=EVENT_DTYPE).copy())
    events.validate(width, height)
    return header, events


def _read_csv(f):
    first = f.readline().strip()
    try:
        fields = dict(kv.split("=") for kv in first.lstrip("#").split())
        width, height = int(fields["width"]), int(fields["height"])
    except (ValueError, KeyError) as e:
        raise FormatError(f"bad CSV sidecar line {first!r}") from e
    header = StreamHeader(width, height)
    header.validate()
    cols = f.readline().strip()
    if cols != CSV_COLUMNS:
        raise FormatError(f"bad CSV column line {cols!r}")
    body = f.read().strip()
    if not body:
        return header, EventArray.empty()
    try:
        data = np.loadtxt(io.StringIO(body), delimiter=",", dtype=np.int64, ndmin=2)
    except ValueError as e:
        raise DataError(f"malformed CSV body: {e}") from e
    if data.shape[1] != 4:
        raise DataError(f"expected 4 CSV columns, got {data.shape[1]}")
    if np.any(data[:, :3] < 0):
        raise DataError("negative timestamp or coordinate", index=int(np.argmax(np.any(data[:, :3] < 0, axis=1))))
    events = EventArray.from_arrays(data[:, 0], data[:, 1], data[:, 2], data[:, 3])
    events.validate(width, height)
    return header, events


def write_events(header: StreamHeader, events, sink, fmt="binary"):
    """Write events to ``sink`` (path or binary file-like). Returns byte count.

    Validates all invariants before any bytes are written, so a failed call
    leaves the sink untouched.
    """
    header.validate()
    if not isinstance(events, EventArray):
        events = EventArray.from_events(events)
    events.validate(header.width, header.height)
    if fmt == "binary":
        blob = (
            MAGIC
            + header.version.to_bytes(2, "little")
            + header.width.to_bytes(2, "little")
            + header.height.to_bytes(2, "little")
            + events.records.tobytes()
        )
    elif fmt == "csv":
        lines = [f"# width={header.width} height={header.height}", CSV_COLUMNS]
        rec = events.records
        lines.extend(
            f"{rec['t_us'][i]},{rec['x'][i]},{rec['y'][i]},{rec['p'][i]}"
            for i in range(len(rec))
        )
        blob = ("\n".join(lines) + "\n").encode("ascii")
    else:
        raise FormatError(f"unknown format {fmt!r}")
    f, owned = _open(sink, "wb")
    try:
        f.write(blob)
    finally:
        if owned:
            f.close()
    return len(blob)


def naive_reconstruct(events):
    """Running sum of polarities for a single-pixel stream.

    Diagnostic only; returns ``(t_us, values)`` arrays, one sample per event.
    """
    if not isinstance(events, EventArray):
        events = EventArray.from_events(events)
    return events.t_us.copy(), np.cumsum(events.p.astype(np.int64))
