"""Full-sensor per-pixel frequency mapping.

Per-pixel state lives in flat float32/int8 arrays (structure-of-arrays,
26 bytes per pixel) so the event-update kernel stays cache friendly. The
update rules favor fast visual response over accuracy:

* raw (non-interpolated) crossing times, both directions;
* half-period bootstrap: the first opposite-sign crossing pair yields
  ``period = 2 * dt`` so a pixel gets an estimate before a full period
  has elapsed; it is replaced by a full same-sign measurement as soon as
  one is available;
* timeout is evaluated only at readout: a pixel with no events for
  ``n_timeout`` periods loses its period estimate (but keeps filter
  state, so re-detection only needs fresh crossings).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .errors import ConfigError, DataError
from .detect import FilterParams
from .events import EventArray

STATUS_INACTIVE = 0
STATUS_ACTIVE_NO_FREQ = 1
STATUS_FREQUENCY = 2

GRAY = (128, 128, 128)


@dataclass
class FreqImageConfig:
    freq_min_hz: float
    freq_max_hz: float
    readout_interval_us: int = 10_000
    n_timeout: int = 2
    activity_window_us: Optional[int] = None  # None = readout_interval_us

    def __post_init__(self):
        if not 0 < self.freq_min_hz < self.freq_max_hz:
            raise ConfigError("need 0 < freq_min_hz < freq_max_hz")
        if self.n_timeout < 1 or self.readout_interval_us < 1:
            raise ConfigError("n_timeout and readout_interval_us must be >= 1")

    @property
    def activity_us(self):
        return self.activity_window_us if self.activity_window_us is not None else self.readout_interval_us


@dataclass
class PixelState:
    """Scalar snapshot of one pixel's detection state (debug/test aid)."""

    l1: float
    l2: float
    p_prev: int
    t_cross_above_us: Optional[float]
    t_cross_below_us: Optional[float]
    period_us: Optional[float]
    period_is_half: bool
    t_last_event_us: Optional[float]


class PixelGrid:
    """Detection state for every sensor pixel."""

    def __init__(self, width, height):
        self.width = width
        self.height = height
        n = width * height
        self.l1 = np.zeros(n, np.float32)
        self.l2 = np.zeros(n, np.float32)
        self.p_prev = np.zeros(n, np.int8)
        self.t_above = np.full(n, -1.0, np.float32)
        self.t_below = np.full(n, -1.0, np.float32)
        self.period = np.full(n, -1.0, np.float32)
        self.half = np.zeros(n, np.uint8)
        self.t_last = np.full(n, -1.0, np.float32)

    @property
    def state_bytes_per_pixel(self):
        arrs = (self.l1, self.l2, self.p_prev, self.t_above, self.t_below,
                self.period, self.half, self.t_last)
        return sum(a.dtype.itemsize for a in arrs)

    def pixel_state(self, x, y) -> PixelState:
        i = y * self.width + x
        opt = lambda v: None if v < 0 else float(v)
        return PixelState(
            float(self.l1[i]), float(self.l2[i]), int(self.p_prev[i]),
            opt(self.t_above[i]), opt(self.t_below[i]), opt(self.period[i]),
            bool(self.half[i]), opt(self.t_last[i]))


@njit(cache=True, nogil=True)
def _update_kernel(t, idx, p, a, b, l1, l2, pp, t_above, t_below, period, half, t_last):
    c = 0.5 * (1.0 + b)
    for k in range(idx.size):
        i = idx[k]
        lp = l1[i]
        ln = np.float32((a + b) * lp - a * b * l2[i] + c * (p[k] - pp[i]))
        l2[i] = lp
        l1[i] = ln
        pp[i] = p[k]
        tk = t[k]
        if lp > 0.0 and ln <= 0.0:
            if t_above[i] >= 0.0:
                d = tk - t_above[i]
                if d > 0.0:
                    period[i] = d
                    half[i] = 0
            elif t_below[i] >= 0.0 and period[i] < 0.0:
                d = 2.0 * (tk - t_below[i])
                if d > 0.0:
                    period[i] = d
                    half[i] = 1
            t_above[i] = tk
        elif lp < 0.0 and ln >= 0.0:
            if t_below[i] >= 0.0:
                d = tk - t_below[i]
                if d > 0.0:
                    period[i] = d
                    half[i] = 0
            elif t_above[i] >= 0.0 and period[i] < 0.0:
                d = 2.0 * (tk - t_above[i])
                if d > 0.0:
                    period[i] = d
                    half[i] = 1
            t_below[i] = tk
        t_last[i] = tk


def update_events(grid: PixelGrid, events: EventArray, params: FilterParams):
    """Feed a batch of (globally ordered) events through the grid."""
    if len(events) == 0:
        return grid
    x = events.x.astype(np.int64)
    y = events.y.astype(np.int64)
    if x.max() >= grid.width or y.max() >= grid.height:
        i = int(np.argmax((x >= grid.width) | (y >= grid.height)))
        raise DataError(f"pixel outside {grid.width}x{grid.height}", index=i)
    idx = (y * grid.width + x).astype(np.int64)
    t = events.t_us.astype(np.float32)
    p = events.p.astype(np.float32)
    _update_kernel(t, idx, p, params.alpha, params.beta,
                   grid.l1, grid.l2, grid.p_prev, grid.t_above, grid.t_below,
                   grid.period, grid.half, grid.t_last)
    return grid


def update_events_sharded(grid: PixelGrid, events: EventArray, params: FilterParams,
                          n_shards=2):
    """Pixel-sharded (by row parity) parallel update; bit-identical to serial.

    Shards touch disjoint pixels and each shard sees its events in stream
    order, so the result matches ``update_events`` exactly.
    """
    if len(events) == 0:
        return grid
    y = events.y.astype(np.int64)
    parts = [events[np.flatnonzero(y % n_shards == s)] for s in range(n_shards)]
    with ThreadPoolExecutor(max_workers=n_shards) as pool:
        futs = [pool.submit(update_events, grid, part, params) for part in parts]
        for f in futs:
            f.result()
    return grid


def image_update(grid: PixelGrid, event, params: FilterParams):
    """Single-event convenience wrapper around the batch kernel."""
    return update_events(grid, EventArray.from_events([event]), params)


@dataclass
class FrequencyImage:
    width: int
    height: int
    freq_hz: np.ndarray  # (height, width) float32, NaN where no frequency
    status: np.ndarray  # (height, width) uint8 STATUS_* codes


def readout(grid: PixelGrid, now_us, config: FreqImageConfig) -> FrequencyImage:
    """Generate a frequency image and apply the readout-time timeout rule."""
    period = grid.period
    has_p = period > 0
    age = np.float32(now_us) - grid.t_last
    timed_out = has_p & (age > config.n_timeout * period)
    freq = np.where(has_p, 1e6 / np.where(has_p, period, 1.0), np.nan)
    inband = has_p & (freq >= config.freq_min_hz) & (freq <= config.freq_max_hz)
    show = inband & ~timed_out
    active = (grid.t_last >= 0) & (age <= config.activity_us)
    status = np.where(show, STATUS_FREQUENCY,
                      np.where(active, STATUS_ACTIVE_NO_FREQ, STATUS_INACTIVE))
    out_freq = np.where(show, freq, np.nan).astype(np.float32)
    # invalidate timed-out estimates; filter state is kept (holdover)
    grid.period[timed_out] = -1.0
    grid.half[timed_out] = 0
    shp = (grid.height, grid.width)
    return FrequencyImage(grid.width, grid.height,
                          out_freq.reshape(shp), status.astype(np.uint8).reshape(shp))


def _color_table():
    """256-entry table sweeping hue from blue (low) to red (high)."""
    h = (1.0 - np.arange(256) / 255.0) * (240.0 / 360.0)
    hp = h * 6.0
    c = 1.0
    xx = c * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    r = np.select([hp < 1, hp < 2, hp < 3, hp < 4, hp < 5], [c, xx, 0, 0, xx], c)
    g = np.select([hp < 1, hp < 2, hp < 3, hp < 4, hp < 5], [xx, c, c, xx, 0], 0)
    b = np.select([hp < 1, hp < 2, hp < 3, hp < 4, hp < 5], [0, 0, xx, c, c], xx)
    return (np.stack([r, g, b], axis=1) * 255).round().astype(np.uint8)


COLOR_TABLE = _color_table()


def colorize(img: FrequencyImage, config: FreqImageConfig) -> np.ndarray:
    """Map a frequency image to an RGB raster (log-scaled color table)."""
    lo = np.log10(config.freq_min_hz)
    hi = np.log10(config.freq_max_hz)
    f = np.where(np.isnan(img.freq_hz), config.freq_min_hz, img.freq_hz)
    pos = (np.log10(np.clip(f, config.freq_min_hz, config.freq_max_hz)) - lo) / (hi - lo)
    idx = np.clip(np.round(pos * 255), 0, 255).astype(np.int64)
    raster = COLOR_TABLE[idx]
    raster[img.status == STATUS_ACTIVE_NO_FREQ] = GRAY
    raster[img.status == STATUS_INACTIVE] = (0, 0, 0)
    return raster


def write_image(raster: np.ndarray, sink, fmt="PPM") -> int:
    """Write an RGB raster as binary PPM (P6, maxval 255). Returns byte count."""
    if fmt != "PPM":
        raise ConfigError(f"unsupported image format {fmt!r}")
    h, w, _ = raster.shape
    blob = f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(raster, dtype=np.uint8).tobytes()
    if isinstance(sink, str):
        with open(sink, "wb") as f:
            f.write(blob)
    else:
        sink.write(blob)
    return len(blob)


def dump_csv(img: FrequencyImage, sink) -> None:
    """Per-pixel dump: x,y,status,freq_hz (empty freq when undetermined)."""
    own = isinstance(sink, str)
    f = open(sink, "w") if own else sink
    try:
        f.write("x,y,status,freq_hz\n")
        for y in range(img.height):
            for x in range(img.width):
                s = int(img.status[y, x])
                fz = img.freq_hz[y, x]
                f.write(f"{x},{y},{s},{'' if np.isnan(fz) else f'{fz:.3f}'}\n")
    finally:
        if own:
            f.close()
