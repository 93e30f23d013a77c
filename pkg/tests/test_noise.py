"""Streaming dark-noise triplet filter."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evfreq.errors import OrderingError
from evfreq.events import Event, EventArray
from evfreq.noise import (NoiseFilterParams, NoiseFilterState, filter_stream,
                          noise_filter_flush, noise_filter_push)


def ev(t, p, x=0, y=0):
    return Event(t, x, y, p)


def push_all(events, params=None):
    params = params or NoiseFilterParams()
    state = NoiseFilterState()
    out = []
    for e in events:
        out.extend(noise_filter_push(state, e, params))
    out.extend(noise_filter_flush(state))
    return out


def test_triplet_pair_is_dropped_lead_kept():
    seq = [ev(0, 1), ev(1000, -1), ev(1004, 1), ev(5000, -1)]
    out = push_all(seq)
    assert [e.t_us for e in out] == [0, 5000]  # OFF/ON pair at 1000/1004 dropped


def test_wide_pair_gap_passes():
    seq = [ev(0, 1), ev(1000, -1), ev(1020, 1)]  # 20 us > 15 us
    assert push_all(seq) == seq


def test_small_pre_gap_protects_fast_signals():
    # a genuine fast oscillation: OFF follows its predecessor within 15 us
    seq = [ev(0, 1), ev(10, -1), ev(14, 1), ev(24, -1)]
    assert push_all(seq) == seq


def test_pair_requires_off_then_on():
    seq = [ev(0, 1), ev(1000, 1), ev(1004, -1)]  # wrong polarities
    assert push_all(seq) == seq


def test_two_event_delay_and_flush():
    state = NoiseFilterState()
    params = NoiseFilterParams()
    assert noise_filter_push(state, ev(0, 1), params) == []
    assert noise_filter_push(state, ev(5, -1), params) == []
    out = noise_filter_push(state, ev(30, 1), params)
    assert [e.t_us for e in out] == [0]  # oldest emitted once the buffer is full
    assert [e.t_us for e in noise_filter_flush(state)] == [5, 30]


def test_push_rejects_time_regression():
    state = NoiseFilterState()
    params = NoiseFilterParams()
    noise_filter_push(state, ev(100, 1), params)
    with pytest.raises(OrderingError):
        noise_filter_push(state, ev(50, 1), params)


def test_filter_stream_is_per_pixel(clean_square_1hz):
    # triplet split across two pixels must not match
    seq = [ev(0, 1, x=0), ev(1000, -1, x=1), ev(1004, 1, x=1), ev(5000, -1, x=0)]
    arr = EventArray.from_events(seq)
    out = filter_stream(arr, NoiseFilterParams())
    assert len(out) == 4


def test_no_genuine_events_removed_on_clean_stream(clean_square_1hz):
    out = filter_stream(clean_square_1hz, NoiseFilterParams())
    assert out == clean_square_1hz


def test_stream_matches_scalar_pipeline(rng):
    n = 400
    t = np.cumsum(rng.integers(0, 30, n)).astype(np.uint64)
    p = rng.choice(np.array([-1, 1], np.int8), n)
    x = rng.integers(0, 3, n).astype(np.uint16)
    arr = EventArray.from_arrays(t, x, np.zeros(n, np.uint16), p)
    got = filter_stream(arr, NoiseFilterParams())
    # scalar reference: independent per-pixel state machines, merged by order
    from collections import Counter, defaultdict
    states = defaultdict(NoiseFilterState)
    params = NoiseFilterParams()
    kept = Counter()
    for e in arr:
        for out in noise_filter_push(states[e.x], e, params):
            kept[(out.t_us, out.x, out.polarity)] += 1
    for s in states.values():
        for out in noise_filter_flush(s):
            kept[(out.t_us, out.x, out.polarity)] += 1
    have = Counter(zip(got.t_us.tolist(), got.x.tolist(), got.p.tolist()))
    assert have == kept


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 40), st.sampled_from([-1, 1]),
                          st.integers(0, 2)), max_size=120))
def test_output_is_subsequence_of_input(raw):
    t = np.cumsum([r[0] for r in raw]).astype(np.uint64) if raw else np.empty(0, np.uint64)
    arr = EventArray.from_arrays(t, np.array([r[2] for r in raw], np.uint16),
                                 np.zeros(len(raw), np.uint16),
                                 np.array([r[1] for r in raw], np.int8))
    out = filter_stream(arr, NoiseFilterParams())
    assert len(out) <= len(arr)
    it = iter(arr.records.tolist())
    assert all(r in it for r in out.records.tolist())
