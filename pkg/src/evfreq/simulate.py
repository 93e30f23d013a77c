"""Desk-scale event camera simulator.

Synthesizes event streams with known ground-truth frequency. The pixel
front end works directly in log-brightness: a waveform is sampled on a
fixed grid of ``timestamp_quantum_us`` steps, optionally passed through a
single-pole low pass (the photoreceptor/source-follower model), and
thresholded with reset-by-threshold semantics: every emitted event moves
the reference level by exactly one threshold, so a large jump emits
multiple events at the same (quantized) timestamp.

On top of that sit the dark-noise injector (leading event followed by a
rapid OFF/ON pair) and the readout saturation model (token-bucket drain on
fixed windows with a cyclic row-major scan pointer, so that under uniform
overload every pixel survives at roughly capacity / (width * height)
updates per second).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError
from .events import EventArray

SIGNAL_KINDS = ("square", "triangle", "sine", "exp_sweep", "double_burst")

# normalized double-burst cycle: two rising and two falling sections with
# peaks half a cycle apart and equal initial falling slope, so the two
# polarity transitions land exactly half a period apart; the dip between
# the bursts stays well above the cycle mean
_DB_C = np.array([0.0, 0.2, 0.45, 0.7, 0.83, 1.0])
_DB_W = np.array([-0.5, 0.5, 0.35, 0.5, 0.422, -0.5])


@dataclass
class SignalSpec:
    kind: str
    freq_hz: float
    amplitude: float  # peak-to-peak, log units
    dc: float = 0.0
    phase: float = 0.0
    freq_end_hz: float | None = None  # exp_sweep only
    cycles_per_step: int = 10  # exp_sweep: cycles spent per frequency plateau

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ConfigError(f"unknown signal kind {self.kind!r}")
        if self.freq_hz <= 0 or self.amplitude <= 0:
            raise ConfigError("freq_hz and amplitude must be positive")
        if self.kind == "exp_sweep":
            if self.freq_end_hz is None or self.freq_end_hz <= 0:
                raise ConfigError("exp_sweep needs freq_end_hz > 0")
            if self.cycles_per_step < 1:
                raise ConfigError("cycles_per_step must be >= 1")

    def sweep_plateaus(self):
        """(freq_hz, t_start_us, t_end_us) for each constant-frequency segment.

        The frequency doubles (or halves, for a downward sweep) after every
        ``cycles_per_step`` cycles until it reaches ``freq_end_hz``; the last
        plateau is held indefinitely.
        """
        freqs = [self.freq_hz]
        up = self.freq_end_hz > self.freq_hz
        while (freqs[-1] * 2 <= self.freq_end_hz) if up else (freqs[-1] / 2 >= self.freq_end_hz):
            freqs.append(freqs[-1] * 2 if up else freqs[-1] / 2)
        out = []
        t = 0.0
        for f in freqs:
            dur = self.cycles_per_step / f * 1e6
            out.append((f, t, t + dur))
            t += dur
        return out


@dataclass
class CameraModel:
    c_on: float
    c_off: float
    refractory_us: int = 0
    lowpass_tau_us: float = 0.0  # 0 = front-end low pass disabled
    timestamp_quantum_us: int = 1
    rise_lag_us_mean: float = 0.0  # optional extra lag at dark->rising onsets

    def __post_init__(self):
        if self.c_on <= 0 or self.c_off <= 0:
            raise ConfigError("thresholds must be positive")
        if self.refractory_us < 0 or self.lowpass_tau_us < 0 or self.timestamp_quantum_us < 1:
            raise ConfigError("bad camera timing parameters")


@dataclass
class ReadoutModel:
    capacity_evs: float
    drain_order: str = "row_major"
    window_us: int = 1000

    def __post_init__(self):
        if self.capacity_evs <= 0:
            raise ConfigError("capacity_evs must be positive")
        if self.drain_order != "row_major":
            raise ConfigError(f"unsupported drain order {self.drain_order!r}")


@dataclass
class NoiseSpec:
    trigger_rate_hz: float  # noise episodes per pixel per second
    pair_gap_us_mean: float = 4.0
    episode_delay_us_mean: float = 1000.0

    def __post_init__(self):
        if min(self.trigger_rate_hz, self.pair_gap_us_mean, self.episode_delay_us_mean) < 0:
            raise ConfigError("noise rates and means must be >= 0")


def _cycles_at(spec: SignalSpec, t_us):
    """Elapsed signal cycles (phase / 2 pi) at each time, including phase offset."""
    t = np.asarray(t_us, dtype=np.float64)
    off = spec.phase / (2.0 * math.pi)
    if spec.kind != "exp_sweep":
        return spec.freq_hz * t * 1e-6 + off
    cyc = np.empty_like(t)
    plateaus = spec.sweep_plateaus()
    base = 0.0
    for i, (f, t0, t1) in enumerate(plateaus):
        last = i == len(plateaus) - 1
        m = (t >= t0) & ((t < t1) | last)
        cyc[m] = base + f * (t[m] - t0) * 1e-6
        base += spec.cycles_per_step
    cyc[t < 0] = off
    return cyc + off


def brightness_at(spec: SignalSpec, t_us):
    """Log-brightness of the waveform at ``t_us`` (scalar or array)."""
    scalar = np.isscalar(t_us)
    c = np.mod(_cycles_at(spec, t_us), 1.0)
    a2 = spec.amplitude / 2.0
    if spec.kind in ("square", "exp_sweep"):
        # cosine phase: high half-cycle centered on t = 0
        v = np.where((c < 0.25) | (c >= 0.75), a2, -a2)
    elif spec.kind == "triangle":
        # sine phase: rises from dc, peaks at quarter period
        v = a2 * np.where(c < 0.25, 4 * c, np.where(c < 0.75, 2 - 4 * c, 4 * c - 4))
    elif spec.kind == "sine":
        v = a2 * np.sin(2.0 * math.pi * c)
    else:  # double_burst
        v = spec.amplitude * np.interp(c, _DB_C, _DB_W)
    out = spec.dc + v
    return float(out) if scalar else out


@njit(cache=True)
def _threshold_kernel(lum, t0, quantum, c_on, c_off, refractory, lp_coef,
                      dc, rise_delays, state, out_t, out_p):
    # state: [y, ref, t_last, prev_in, hold_until, onset_idx, hold_val, initialized]
    y = state[0]
    ref = state[1]
    t_last = state[2]
    prev_in = state[3]
    hold_until = state[4]
    onset = int(state[5])
    hold_val = state[6]
    init = state[7] > 0.5
    n_out = 0
    cap = out_t.size
    for i in range(lum.size):
        t = t0 + i * quantum
        x = lum[i]
        if not init:
            y = x
            ref = x
            prev_in = x
            init = True
            continue
        if rise_delays.size > 0:
            # extra response lag when brightness starts rising from darkness
            if x > prev_in and prev_in <= dc and t >= hold_until and onset < rise_delays.size:
                if hold_until < t - quantum:  # new onset, not a continuing hold
                    hold_until = t + rise_delays[onset]
                    hold_val = prev_in
                    onset += 1
            eff = hold_val if t < hold_until else x
        else:
            eff = x
        if lp_coef >= 1.0:
            y = eff
        else:
            y = y + lp_coef * (eff - y)
        while y - ref >= c_on and (t_last < 0 or t - t_last >= refractory):
            if n_out >= cap:
                return -1, y, ref, t_last, prev_in, hold_until, onset, hold_val
            out_t[n_out] = t
            out_p[n_out] = 1
            n_out += 1
            ref += c_on
            t_last = t
            if refractory > 0:
                break
        while ref - y >= c_off and (t_last < 0 or t - t_last >= refractory):
            if n_out >= cap:
                return -1, y, ref, t_last, prev_in, hold_until, onset, hold_val
            out_t[n_out] = t
            out_p[n_out] = -1
            n_out += 1
            ref -= c_off
            t_last = t
            if refractory > 0:
                break
        prev_in = x
    return n_out, y, ref, t_last, prev_in, hold_until, onset, hold_val


def pixel_events(spec: SignalSpec, model: CameraModel, t_start_us, t_end_us, x, y,
                 seed=0) -> EventArray:
    """Events emitted by one pixel observing ``spec`` over [t_start, t_end)."""
    if t_end_us <= t_start_us:
        raise ConfigError("t_end_us must exceed t_start_us")
    q = model.timestamp_quantum_us
    n_steps = int(math.ceil((t_end_us - t_start_us) / q))
    if model.lowpass_tau_us > 0:
        lp_coef = 1.0 - math.exp(-q / model.lowpass_tau_us)
    else:
        lp_coef = 1.0
    if model.rise_lag_us_mean > 0:
        rng = np.random.default_rng(seed)
        # generous bound: one onset per signal cycle plus slack
        n_onsets = int(spec.freq_hz * (t_end_us - t_start_us) * 1e-6) + 16
        rise_delays = rng.exponential(model.rise_lag_us_mean, n_onsets)
    else:
        rise_delays = np.empty(0, dtype=np.float64)

    state = np.array([0.0, 0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0])
    chunk = 1 << 21
    ts, ps = [], []
    for start in range(0, n_steps, chunk):
        n = min(chunk, n_steps - start)
        t0 = t_start_us + start * q
        lum = brightness_at(spec, t0 + q * np.arange(n, dtype=np.float64))
        cap = n + 256
        while True:
            out_t = np.empty(cap, dtype=np.int64)
            out_p = np.empty(cap, dtype=np.int8)
            st = state.copy()
            n_out, *rest = _threshold_kernel(
                lum, int(t0), q, model.c_on, model.c_off, model.refractory_us,
                lp_coef, spec.dc, rise_delays, st, out_t, out_p)
            if n_out >= 0:
                break
            cap *= 4
        state[0:7] = rest
        state[7] = 1.0
        ts.append(out_t[:n_out].copy())
        ps.append(out_p[:n_out].copy())
    t_all = np.concatenate(ts) if ts else np.empty(0, np.int64)
    p_all = np.concatenate(ps) if ps else np.empty(0, np.int8)
    return EventArray.from_arrays(t_all, np.full(t_all.size, x), np.full(t_all.size, y), p_all)


def events_from_waveform(lum_fn, model: CameraModel, t_start_us, t_end_us, x, y):
    """Like pixel_events but for an arbitrary log-brightness callable."""
    q = model.timestamp_quantum_us
    n = int(math.ceil((t_end_us - t_start_us) / q))
    lum = np.asarray(lum_fn(t_start_us + q * np.arange(n, dtype=np.float64)), dtype=np.float64)
    lp_coef = 1.0 - math.exp(-q / model.lowpass_tau_us) if model.lowpass_tau_us > 0 else 1.0
    state = np.array([0.0, 0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0])
    cap = n + 256
    while True:
        out_t = np.empty(cap, dtype=np.int64)
        out_p = np.empty(cap, dtype=np.int8)
        st = state.copy()
        n_out, *_ = _threshold_kernel(
            lum, int(t_start_us), q, model.c_on, model.c_off, model.refractory_us,
            lp_coef, 0.0, np.empty(0, np.float64), st, out_t, out_p)
        if n_out >= 0:
            break
        cap *= 4
    t_all = out_t[:n_out]
    return EventArray.from_arrays(t_all, np.full(t_all.size, x), np.full(t_all.size, y),
                                  out_p[:n_out])


def replicate_uniform(events: EventArray, x0, y0, x1, y1) -> EventArray:
    """Copy a single-pixel stream onto every pixel of [x0,x1) x [y0,y1).

    Events sharing a timestamp come out in row-major pixel order, matching
    the dense scan arrival the readout model expects.
    """
    xs = np.arange(x0, x1, dtype=np.uint16)
    ys = np.arange(y0, y1, dtype=np.uint16)
    npx = xs.size * ys.size
    n = len(events)
    gx, gy = np.meshgrid(xs, ys)  # row-major
    t = np.repeat(events.t_us, npx)
    p = np.repeat(events.p, npx)
    x = np.tile(gx.ravel(), n)
    y = np.tile(gy.ravel(), n)
    order = np.argsort(t, kind="stable")
    return EventArray.from_arrays(t[order], x[order], y[order], p[order])


def inject_dark_noise(events: EventArray, noise: NoiseSpec, seed, *,
                      t_start_us=None, t_end_us=None, pixels=None,
                      return_injected=False):
    """Merge synthetic dark-noise episodes into a stream.

    Each episode is a leading event of random polarity followed, after an
    exponentially distributed delay, by an OFF event and then an ON event in
    rapid succession. Deterministic for a fixed seed.
    """
    if noise.trigger_rate_hz == 0:
        return (events, EventArray.empty()) if return_injected else events
    if t_start_us is None:
        t_start_us = int(events.t_us[0]) if len(events) else 0
    if t_end_us is None:
        if not len(events):
            raise ConfigError("t_end_us required for an empty input stream")
        t_end_us = int(events.t_us[-1])
    if pixels is None:
        if not len(events):
            raise ConfigError("pixels required for an empty input stream")
        pixels = np.unique(np.stack([events.x, events.y], axis=1), axis=0)
    else:
        pixels = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
    rng = np.random.default_rng(seed)
    span_s = (t_end_us - t_start_us) * 1e-6
    recs = []
    for px, py in pixels:
        n_ep = rng.poisson(noise.trigger_rate_hz * span_s)
        if n_ep == 0:
            continue
        lead_t = np.sort(rng.uniform(t_start_us, t_end_us, n_ep))
        lead_p = rng.choice(np.array([-1, 1], np.int8), n_ep)
        delay = rng.exponential(noise.episode_delay_us_mean, n_ep)
        gap = rng.exponential(noise.pair_gap_us_mean, n_ep)
        off_t = np.floor(lead_t + delay).astype(np.int64)
        on_t = np.floor(lead_t + delay + gap).astype(np.int64)
        lead_t = np.floor(lead_t).astype(np.int64)
        keep = on_t <= t_end_us
        for tt, pp in ((lead_t[keep], lead_p[keep]),
                       (off_t[keep], np.full(keep.sum(), -1, np.int8)),
                       (on_t[keep], np.full(keep.sum(), 1, np.int8))):
            recs.append(EventArray.from_arrays(
                tt, np.full(tt.size, px), np.full(tt.size, py), pp).records)
    if not recs:
        return (events, EventArray.empty()) if return_injected else events
    injected = np.concatenate(recs)
    injected = injected[np.argsort(injected["t_us"], kind="stable")]
    merged = np.concatenate([events.records, injected])
    merged = merged[np.argsort(merged["t_us"], kind="stable")]
    if return_injected:
        return EventArray(merged), EventArray(injected)
    return EventArray(merged)


def saturate_readout(events: EventArray, readout: ReadoutModel, width, height) -> EventArray:
    """Drop events exceeding the readout drain capacity.

    Budget is ``capacity_evs`` spread over fixed windows (fractional tokens
    carry over, unused whole tokens do not). In an oversubscribed window
    events are kept in cyclic row-major order starting from a persistent
    scan pointer, which makes the surviving per-pixel rate uniform under
    uniform load. Survivors keep their original order.
    """
    n = len(events)
    if n == 0:
        return events
    t = events.t_us.astype(np.int64)
    win = t // readout.window_us
    pix = events.y.astype(np.int64) * width + events.x.astype(np.int64)
    wh = width * height
    tokens_per_win = readout.capacity_evs * readout.window_us * 1e-6
    keep = np.ones(n, dtype=bool)
    bounds = np.searchsorted(win, np.arange(win[0], win[-1] + 2))
    carry = 0.0
    ptr = 0
    for k in range(bounds.size - 1):
        lo, hi = bounds[k], bounds[k + 1]
        cnt = hi - lo
        budget = int(tokens_per_win + carry)
        carry = tokens_per_win + carry - budget
        if cnt == 0:
            continue
        if cnt <= budget:
            continue
        dist = (pix[lo:hi] - ptr) % wh
        order = np.argsort(dist, kind="stable")
        kept = order[:budget]
        mask = np.zeros(cnt, dtype=bool)
        mask[kept] = True
        keep[lo:hi] = mask
        if budget > 0:
            ptr = int((pix[lo:hi][order[budget - 1]] + 1) % wh)
    return EventArray(events.records[keep])
