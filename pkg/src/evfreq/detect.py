"""Brightness reconstruction and period measurement for a single pixel.

The reconstruction is a second-order IIR recursion driven purely by event
polarities (uniform sampling in event time, timestamps ignored):

    L_k = (alpha + beta) L_{k-1} - alpha beta L_{k-2}
          + 0.5 (1 + beta) (p_k - p_{k-1})

which is the cascade of an exponential-average detrender (coefficient
alpha, high-pass) and a leaky integrator with unit gain at Nyquist
(coefficient beta, low-pass). Coefficients are designed from a single
cutoff period T_cut expressed in events (omega_cut = 2 pi / T_cut), the
half-power point of both stages.

Periods are then measured from zero-level crossings of the reconstruction,
either raw (timestamp of the first event after the crossing) or linearly
interpolated between the straddling events. The polarity-transition
baseline estimator lives here too for comparison runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from numba import njit
from scipy.signal import lfilter

from .errors import ConfigError
from .events import EventArray


def design_alpha(omega_cut: float) -> float:
    """High-pass coefficient with half-power point at ``omega_cut`` rad/sample."""
    if not 0.0 < omega_cut < math.pi / 2:
        raise ConfigError(f"omega_cut {omega_cut} outside (0, pi/2)")
    return (1.0 - math.sin(omega_cut)) / math.cos(omega_cut)


def design_beta(omega_cut: float) -> float:
    """Low-pass coefficient with half-power point at ``omega_cut`` rad/sample."""
    if not 0.0 < omega_cut <= math.pi:
        raise ConfigError(f"omega_cut {omega_cut} outside (0, pi]")
    phi = 2.0 - math.cos(omega_cut)
    return phi - math.sqrt(phi * phi - 1.0)


def recommend_tcut(n_on: int, n_off: int) -> int:
    """Conservative cutoff period: four times the larger per-cycle event count."""
    if n_on < 0 or n_off < 0 or (n_on == 0 and n_off == 0):
        raise ConfigError(f"bad per-cycle event counts ({n_on}, {n_off})")
    return 4 * max(n_on, n_off)


@dataclass
class FilterParams:
    alpha: float
    beta: float
    t_cut_events: float

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0 and 0.0 <= self.beta < 1.0):
            raise ConfigError(f"coefficients ({self.alpha}, {self.beta}) outside [0, 1)")
        if self.t_cut_events <= 2.0:
            raise ConfigError(f"t_cut_events {self.t_cut_events} must exceed 2")

    @classmethod
    def from_tcut(cls, t_cut_events: float) -> "FilterParams":
        """Design both coefficients from one cutoff period (alpha = beta point)."""
        if t_cut_events <= 4.0:
            raise ConfigError(f"t_cut_events {t_cut_events} must exceed 4")
        omega = 2.0 * math.pi / t_cut_events
        return cls(design_alpha(omega), design_beta(omega), t_cut_events)


@dataclass
class FilterState:
    l1: float = 0.0  # reconstruction at k-1
    l2: float = 0.0  # reconstruction at k-2
    p_prev: int = 0  # 0 only before the first event


def filter_update(state: FilterState, params: FilterParams, p_k: int) -> float:
    """Advance the recursion by one event; mutates ``state``, returns L_k."""
    a, b = params.alpha, params.beta
    l_k = (a + b) * state.l1 - a * b * state.l2 + 0.5 * (1.0 + b) * (p_k - state.p_prev)
    state.l2 = state.l1
    state.l1 = l_k
    state.p_prev = p_k
    return l_k


@dataclass
class StagedFilterState:
    """State of the explicit detrend -> high-pass cascade (test oracle)."""

    p_bar: float = 0.0
    l_prev: float = 0.0


def staged_filter_update(state: StagedFilterState, alpha: float, beta: float, p_k: int) -> float:
    """One step of the staged pipeline; reference for ``filter_update``."""
    dl = p_k - state.p_bar  # detrend against lagged average
    state.p_bar = alpha * state.p_bar + (1.0 - alpha) * p_k
    l_k = beta * state.l_prev + 0.5 * (1.0 + beta) * dl
    state.l_prev = l_k
    return l_k


def staged_filter_sequence(p: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Vectorized staged pipeline via scipy.signal.lfilter (oracle path)."""
    p = np.asarray(p, dtype=np.float64)
    p_bar = lfilter([1.0 - alpha], [1.0, -alpha], p)
    p_bar_lag = np.concatenate(([0.0], p_bar[:-1]))
    dl = p - p_bar_lag
    return lfilter([0.5 * (1.0 + beta)], [1.0, -beta], dl)


@njit(cache=True)
def _filter_sequence_kernel(p, a, b):
    out = np.empty(p.size, dtype=np.float64)
    l1 = 0.0
    l2 = 0.0
    pp = 0.0
    c = 0.5 * (1.0 + b)
    for k in range(p.size):
        l = (a + b) * l1 - a * b * l2 + c * (p[k] - pp)
        l2 = l1
        l1 = l
        pp = p[k]
        out[k] = l
    return out


def filter_sequence(p, params: FilterParams) -> np.ndarray:
    """Run the combined recursion over a whole polarity sequence (float64)."""
    p = np.asarray(p, dtype=np.float64)
    return _filter_sequence_kernel(p, params.alpha, params.beta)


def transfer_magnitude(omega: float, alpha: float, beta: float):
    """|H|, |H_alpha|, |H_beta| of the two stages at ``omega`` rad/sample."""
    z = np.exp(1j * np.asarray(omega, dtype=np.float64))
    h_a = np.abs((z - 1.0) / (z - alpha))
    h_b = np.abs(0.5 * z * (1.0 + beta) / (z - beta))
    return h_a * h_b, h_a, h_b


class Direction(Enum):
    FROM_ABOVE = "from_above"
    FROM_BELOW = "from_below"


@dataclass
class CrossingEvent:
    t_cross_us: float
    direction: Direction


def detect_crossing(l_prev, l_curr, t_prev_us, t_curr_us, interpolate=False) -> Optional[CrossingEvent]:
    """Zero-level crossing between two consecutive reconstruction samples.

    A sample landing exactly on zero counts as crossed; the strict sign
    requirement on ``l_prev`` prevents the same crossing from firing twice.
    """
    if l_prev > 0.0 and l_curr <= 0.0:
        direction = Direction.FROM_ABOVE
    elif l_prev < 0.0 and l_curr >= 0.0:
        direction = Direction.FROM_BELOW
    else:
        return None
    if interpolate:
        t = t_prev_us + (t_curr_us - t_prev_us) * l_prev / (l_prev - l_curr)
    else:
        t = t_curr_us
    return CrossingEvent(float(t), direction)


@dataclass
class BaselineState:
    p_prev: int = 0
    t_last_on_off_us: Optional[int] = None


def baseline_update(state: BaselineState, event) -> Optional[int]:
    """Period from successive ON->OFF polarity transitions (falling edges)."""
    period = None
    if state.p_prev == 1 and event.polarity == -1:
        if state.t_last_on_off_us is not None:
            period = event.t_us - state.t_last_on_off_us
        state.t_last_on_off_us = event.t_us
    state.p_prev = event.polarity
    return period


def reconstruction_crossings(events: EventArray, params: FilterParams, interpolate=False):
    """All from-above crossing times of the reconstructed stream.

    Returns ``(emit_t_us, t_cross_us)``: the timestamp of the event at which
    the crossing was detected, and the (possibly interpolated) crossing time.
    """
    if len(events) == 0:
        return np.empty(0, np.int64), np.empty(0, np.float64)
    l = filter_sequence(events.p, params)
    l_prev = np.concatenate(([0.0], l[:-1]))
    hit = (l_prev > 0.0) & (l <= 0.0)
    idx = np.flatnonzero(hit)
    t = events.t_us.astype(np.int64)
    if not interpolate:
        return t[idx], t[idx].astype(np.float64)
    t_prev = np.where(idx > 0, t[np.maximum(idx - 1, 0)], t[idx])
    frac = l_prev[idx] / (l_prev[idx] - l[idx])
    return t[idx], t_prev + (t[idx] - t_prev) * frac


def period_stream(events, params: Optional[FilterParams] = None, mode="filtered",
                  noise_params=None):
    """Per-cycle period estimates for one pixel's event stream.

    ``mode`` is one of ``baseline`` (ON->OFF transition timing),
    ``baseline_offon`` (the jitter-prone OFF->ON direction, for transition
    statistics), ``filtered`` (raw from-above crossing times), or
    ``interpolated``. When
    ``noise_params`` is given the stream is passed through the dark-noise
    filter first. Returns a list of ``(t_us, period_us)``.
    """
    if not isinstance(events, EventArray):
        events = EventArray.from_events(events)
    if noise_params is not None:
        from .noise import filter_stream

        events = filter_stream(events, noise_params)
    if len(events) == 0:
        return []
    if mode in ("baseline", "baseline_offon"):
        t = events.t_us.astype(np.int64)
        p = events.p.astype(np.int64)
        p_from, p_to = (1, -1) if mode == "baseline" else (-1, 1)
        trans = np.flatnonzero((p[1:] == p_to) & (p[:-1] == p_from)) + 1
        tt = t[trans]
        return list(zip(tt[1:].tolist(), np.diff(tt).astype(np.float64).tolist()))
    if mode not in ("filtered", "interpolated"):
        raise ConfigError(f"unknown mode {mode!r}")
    if params is None:
        raise ConfigError("filtered modes require FilterParams")
    emit_t, cross_t = reconstruction_crossings(events, params, mode == "interpolated")
    return list(zip(emit_t[1:].tolist(), np.diff(cross_t).tolist()))
