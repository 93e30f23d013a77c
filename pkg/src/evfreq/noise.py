"""Streaming dark-noise triplet filter.

Dark noise shows up as a leading event followed, some time later, by an
OFF/ON pair only microseconds apart. The filter delays each pixel's stream
by two events; when the incoming event is ON, the buffered predecessor is
OFF and less than ``pair_gap_max_us`` older, and the event before that is
at least ``pre_gap_min_us`` earlier, the OFF/ON pair is dropped. The
pre-gap condition keeps genuine >~33 kHz signals (dense alternating
events) untouched. Only the pair is removed; the leading event may be
signal and is eventually emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OrderingError
from .events import EventArray


@dataclass
class NoiseFilterParams:
    pair_gap_max_us: int = 15
    pre_gap_min_us: int = 15

    def __post_init__(self):
        if self.pair_gap_max_us < 0 or self.pre_gap_min_us <= 0:
            raise ConfigError("noise filter gaps must be positive")


@dataclass
class NoiseFilterState:
    """Two-slot delay buffer for one pixel."""

    buf: list = field(default_factory=list)
    t_before_us: int | None = None  # timestamp of the event preceding buf[0]

    def last_t(self):
        if self.buf:
            return self.buf[-1].t_us
        return self.t_before_us


def noise_filter_push(state: NoiseFilterState, e, params: NoiseFilterParams):
    """Feed one event; returns the (possibly empty) list of emitted events."""
    last = state.last_t()
    if last is not None and e.t_us < last:
        raise OrderingError(f"timestamp regression {last} -> {e.t_us} within pixel")
    if len(state.buf) < 2:
        state.buf.append(e)
        return []
    a, b = state.buf
    # pre-gap measured against whichever event precedes the OFF of the pair
    if (e.polarity == 1 and b.polarity == -1
            and e.t_us - b.t_us < params.pair_gap_max_us
            and b.t_us - a.t_us >= params.pre_gap_min_us):
        state.buf = [a]
        return []
    state.buf = [b, e]
    state.t_before_us = a.t_us
    return [a]


def noise_filter_flush(state: NoiseFilterState):
    """Emit whatever is still buffered, in order; leaves the state empty."""
    out = state.buf
    if out:
        state.t_before_us = out[-1].t_us
    state.buf = []
    return out


def filter_stream(events: EventArray, params: NoiseFilterParams) -> EventArray:
    """Apply the triplet filter per pixel to a whole stream, flushing at the end.

    The output is a subsequence of the input in the original global order.
    """
    if not isinstance(events, EventArray):
        events = EventArray.from_events(events)
    n = len(events)
    if n == 0:
        return events
    t = events.t_us.astype(np.int64)
    p = events.p.astype(np.int64)
    pix = events.y.astype(np.int64) << 16 | events.x.astype(np.int64)
    keep = _triplet_keep_mask(t, p, pix, params.pair_gap_max_us, params.pre_gap_min_us)
    return EventArray(events.records[keep])


def _triplet_keep_mask(t, p, pix, pair_gap_max, pre_gap_min):
    """Vectorized-in-python drop mask; mirrors push/flush exactly."""
    n = t.size
    keep = np.ones(n, dtype=bool)
    # per-pixel indices of the two pending events and the one before those
    pend = {}
    for i in range(n):
        key = pix[i]
        buf = pend.get(key)
        if buf is None:
            buf = pend[key] = []
        if len(buf) < 2:
            buf.append(i)
            continue
        a, b = buf
        if t[i] < t[b]:
            raise OrderingError(f"timestamp regression within pixel", index=i)
        if (p[i] == 1 and p[b] == -1
                and t[i] - t[b] < pair_gap_max
                and t[b] - t[a] >= pre_gap_min):
            keep[b] = False
            keep[i] = False
            buf.pop()  # drop b, keep a pending
        else:
            buf[0] = b
            buf[1] = i
    return keep
