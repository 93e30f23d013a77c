"""Command line front end: simulate / analyze / image / bench.

Configuration comes from flags plus an optional key-value scenario file
(``--config``); flags override file values. Exit codes: 0 success,
2 configuration error, 3 data/format error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
from dataclasses import dataclass

import numpy as np

from . import detect, freqmap, noise, simulate
from .bench import run_bench
from .errors import ConfigError, DataError, EvfreqError, FormatError
from .events import EventArray, StreamHeader, read_events, write_events

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_IO = 4


# ---------------------------------------------------------------- scenario


def parse_scenario(path):
    """Key-value scenario file with optional [region x0 y0 x1 y1] blocks."""
    base = {}
    regions = []  # (rect, overrides)
    current = base
    try:
        lines = open(path).read().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read scenario {path}: {e}") from e
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            parts = line.strip("[]").split()
            if len(parts) != 5 or parts[0] != "region":
                raise ConfigError(f"{path}:{ln}: bad region header {line!r}")
            rect = tuple(int(v) for v in parts[1:])
            current = {}
            regions.append((rect, current))
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        current[k] = v
    return base, regions


def _signal_from(cfg):
    return simulate.SignalSpec(
        kind=cfg["signal"],
        freq_hz=float(cfg["freq_hz"]),
        amplitude=float(cfg["amplitude"]),
        dc=float(cfg.get("dc", 0.0)),
        phase=float(cfg.get("phase", 0.0)),
        freq_end_hz=float(cfg["freq_end_hz"]) if "freq_end_hz" in cfg else None,
        cycles_per_step=int(cfg.get("cycles_per_step", 10)),
    )


def cmd_simulate(args):
    cfg = {}
    file_regions = []
    if args.config:
        cfg, file_regions = parse_scenario(args.config)
    flag_map = {
        "signal": args.signal, "freq_hz": args.freq, "freq_end_hz": args.freq_end,
        "cycles_per_step": args.cycles_per_step, "amplitude": args.amplitude,
        "dc": args.dc, "phase": args.phase, "width": args.width,
        "height": args.height, "duration_s": args.duration_s,
        "c_on": args.c_on, "c_off": args.c_off,
        "refractory_us": args.refractory_us, "lowpass_tau_us": args.lowpass_tau_us,
        "rise_lag_us": args.rise_lag_us, "noise_rate_hz": args.noise_rate,
        "noise_pair_gap_us": args.noise_pair_gap_us,
        "noise_delay_us": args.noise_delay_us, "capacity_evs": args.capacity_evs,
    }
    for k, v in flag_map.items():
        if v is not None:
            cfg[k] = v
    for key in ("signal", "amplitude", "duration_s"):
        if key not in cfg:
            raise ConfigError(f"missing required parameter {key}")
    width = int(cfg.get("width", 640))
    height = int(cfg.get("height", 480))
    model = simulate.CameraModel(
        c_on=float(cfg.get("c_on", 0.2)),
        c_off=float(cfg.get("c_off", 0.2)),
        refractory_us=int(cfg.get("refractory_us", 0)),
        lowpass_tau_us=float(cfg.get("lowpass_tau_us", 0.0)),
        rise_lag_us_mean=float(cfg.get("rise_lag_us", 0.0)),
    )
    t_end = int(float(cfg["duration_s"]) * 1e6)
    if args.region:
        file_regions = [(tuple(args.region), {})]
    if not file_regions:
        file_regions = [((width // 2, height // 2, width // 2 + 1, height // 2 + 1), {})]

    parts = []
    for rect, overrides in file_regions:
        x0, y0, x1, y1 = rect
        if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
            raise ConfigError(f"region {rect} outside sensor {width}x{height}")
        merged_cfg = {**cfg, **overrides}
        if "freq_hz" not in merged_cfg:
            raise ConfigError(f"missing required parameter freq_hz for region {rect}")
        spec = _signal_from(merged_cfg)
        one = simulate.pixel_events(spec, model, 0, t_end, x0, y0, seed=args.seed)
        if (x1 - x0) * (y1 - y0) > 1:
            one = simulate.replicate_uniform(one, x0, y0, x1, y1)
        parts.append(one.records)
    merged = np.concatenate(parts)
    merged = merged[np.argsort(merged["t_us"], kind="stable")]
    events = EventArray(merged)

    rate = float(cfg.get("noise_rate_hz", 0.0))
    if rate > 0:
        spec_n = simulate.NoiseSpec(
            trigger_rate_hz=rate,
            pair_gap_us_mean=float(cfg.get("noise_pair_gap_us", 4.0)),
            episode_delay_us_mean=float(cfg.get("noise_delay_us", 1000.0)),
        )
        pixels = [(rx0 + dx, ry0 + dy)
                  for (rx0, ry0, rx1, ry1), _ in file_regions
                  for dy in range(ry1 - ry0) for dx in range(rx1 - rx0)]
        events = simulate.inject_dark_noise(events, spec_n, args.seed,
                                            t_start_us=0, t_end_us=t_end, pixels=pixels)
    if "capacity_evs" in cfg and cfg["capacity_evs"] is not None:
        readout = simulate.ReadoutModel(capacity_evs=float(cfg["capacity_evs"]))
        events = simulate.saturate_readout(events, readout, width, height)

    header = StreamHeader(width, height)
    fmt = "csv" if args.output.endswith(".csv") else "binary"
    nbytes = write_events(header, events, args.output, fmt=fmt)
    print(f"wrote {len(events)} events ({nbytes} bytes) to {args.output}")
    return 0


# ---------------------------------------------------------------- analyze


@dataclass
class PeriodStats:
    count: int
    mean_us: float
    stddev_us: float
    histogram: dict  # deviation from reference (us, 1 us bins) -> count

    @classmethod
    def from_periods(cls, periods, ref_period_us=None):
        if not periods:
            return cls(0, float("nan"), float("nan"), {})
        mean = statistics.fmean(periods)
        sd = statistics.pstdev(periods) if len(periods) > 1 else 0.0
        ref = ref_period_us if ref_period_us is not None else mean
        hist = {}
        for p in periods:
            d = int(round(p - ref))
            hist[d] = hist.get(d, 0) + 1
        return cls(len(periods), mean, sd, hist)


def _suggest_tcut(events):
    """Per-cycle ON/OFF counts from polarity transitions -> recommended T_cut."""
    p = events.p.astype(np.int64)
    trans = np.flatnonzero((p[1:] == -1) & (p[:-1] == 1)) + 1
    if trans.size < 2:
        return None
    n_on = n_off = 0
    cycles = 0
    for a, b in zip(trans[:-1], trans[1:]):
        seg = p[a:b]
        n_on += int(np.sum(seg == 1))
        n_off += int(np.sum(seg == -1))
        cycles += 1
    n_on = round(n_on / cycles)
    n_off = round(n_off / cycles)
    return n_on, n_off, detect.recommend_tcut(max(n_on, 1), n_off)


def cmd_analyze(args):
    header, events = read_events(args.input)
    px, py = args.pixel
    sel = (events.x == px) & (events.y == py)
    events = events[np.flatnonzero(sel)]
    if len(events) == 0:
        print(f"warning: no events for pixel ({px},{py})", file=sys.stderr)
        print("count=0")
        return 0
    if args.suggest_tcut:
        s = _suggest_tcut(events)
        if s is None:
            print("suggest-tcut: not enough polarity transitions")
        else:
            print(f"suggest-tcut: n_on={s[0]} n_off={s[1]} t_cut={s[2]}")
        return 0
    nf = None
    if args.noise_filter:
        nf = noise.NoiseFilterParams(args.pair_gap_max_us, args.pre_gap_min_us)
    params = None
    if args.mode not in ("baseline", "baseline_offon"):
        params = detect.FilterParams.from_tcut(args.tcut)
    pairs = detect.period_stream(events, params, mode=args.mode, noise_params=nf)
    pairs = pairs[args.warmup_skip:]
    periods = [p for _, p in pairs]
    stats = PeriodStats.from_periods(periods, args.ref_period_us)
    if args.csv_out:
        with open(args.csv_out, "w") as f:
            f.write("t_us,period_us\n")
            for t, p in pairs:
                f.write(f"{t},{p:.3f}\n")
    if args.hist_out:
        with open(args.hist_out, "w") as f:
            f.write("deviation_us,count\n")
            for d in sorted(stats.histogram):
                f.write(f"{d},{stats.histogram[d]}\n")
    print(f"count={stats.count} mean_us={stats.mean_us:.3f} stddev_us={stats.stddev_us:.3f}")
    return 0


# ---------------------------------------------------------------- image


def cmd_image(args):
    header, events = read_events(args.input)
    config = freqmap.FreqImageConfig(
        freq_min_hz=args.fmin, freq_max_hz=args.fmax,
        readout_interval_us=args.readout_interval_us,
        n_timeout=args.n_timeout, activity_window_us=args.activity_window_us)
    params = detect.FilterParams.from_tcut(args.tcut)
    grid = freqmap.PixelGrid(header.width, header.height)
    os.makedirs(args.out_dir, exist_ok=True)
    t = events.t_us.astype(np.int64)
    t_last = int(t[-1]) if len(t) else 0
    n_frames = max(1, -(-t_last // config.readout_interval_us))
    pos = 0
    for k in range(n_frames):
        now = (k + 1) * config.readout_interval_us
        hi = int(np.searchsorted(t, now, side="left"))
        chunk = events[pos:hi]
        if args.parallel > 1:
            freqmap.update_events_sharded(grid, chunk, params, args.parallel)
        else:
            freqmap.update_events(grid, chunk, params)
        pos = hi
        img = freqmap.readout(grid, now, config)
        raster = freqmap.colorize(img, config)
        path = os.path.join(args.out_dir, f"frame_{k:06d}.ppm")
        freqmap.write_image(raster, path)
        if args.csv:
            freqmap.dump_csv(img, os.path.join(args.out_dir, f"frame_{k:06d}.csv"))
    print(f"wrote {n_frames} frames to {args.out_dir}")
    return 0


# ---------------------------------------------------------------- bench


def cmd_bench(args):
    width = args.width * args.scale
    height = args.height * args.scale
    modes = ["filter", "pipeline"] if args.mode == "both" else [args.mode]
    state_bytes = freqmap.PixelGrid(2, 2).state_bytes_per_pixel
    print(f"sensor {width}x{height}, per-pixel state {state_bytes} bytes, "
          f"total state {width * height * state_bytes / 1e6:.1f} MB")
    for mode in modes:
        res = run_bench(mode, args.events, width, height, repeats=args.repeats,
                        seed=args.seed, hot_pixel=args.hot_pixel)
        runs = " ".join(f"{r:.1f}" for r in res.runs_mev_s)
        print(f"{mode}: median {res.median_mev_s:.1f} Mev/s over "
              f"{res.events_total} events (runs: {runs})")
    return 0


# ---------------------------------------------------------------- main


def _pixel_arg(s):
    try:
        x, y = s.split(",")
        return int(x), int(y)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {s!r}")


def _region_arg(s):
    try:
        vals = [int(v) for v in s.split(",")]
        assert len(vals) == 4
        return vals
    except (ValueError, AssertionError):
        raise argparse.ArgumentTypeError(f"expected x0,y0,x1,y1, got {s!r}")


def build_parser():
    ap = argparse.ArgumentParser(prog="evfreq",
                                 description="Per-pixel flicker frequency toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize an event stream")
    sim.add_argument("--config", help="key-value scenario file")
    sim.add_argument("--signal", choices=simulate.SIGNAL_KINDS)
    sim.add_argument("--freq", type=float)
    sim.add_argument("--freq-end", type=float)
    sim.add_argument("--cycles-per-step", type=int)
    sim.add_argument("--amplitude", type=float)
    sim.add_argument("--dc", type=float)
    sim.add_argument("--phase", type=float)
    sim.add_argument("--width", type=int)
    sim.add_argument("--height", type=int)
    sim.add_argument("--duration-s", type=float)
    sim.add_argument("--region", type=_region_arg, help="x0,y0,x1,y1 active rectangle")
    sim.add_argument("--c-on", type=float)
    sim.add_argument("--c-off", type=float)
    sim.add_argument("--refractory-us", type=int)
    sim.add_argument("--lowpass-tau-us", type=float)
    sim.add_argument("--rise-lag-us", type=float)
    sim.add_argument("--noise-rate", type=float)
    sim.add_argument("--noise-pair-gap-us", type=float)
    sim.add_argument("--noise-delay-us", type=float)
    sim.add_argument("--capacity-evs", type=float)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("-o", "--output", required=True)
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="single-pixel period statistics")
    ana.add_argument("-i", "--input", required=True)
    ana.add_argument("--pixel", type=_pixel_arg, required=True)
    ana.add_argument("--mode",
                     choices=["baseline", "baseline_offon", "filtered", "interpolated"],
                     default="filtered")
    ana.add_argument("--tcut", type=float, default=25)
    ana.add_argument("--noise-filter", action="store_true")
    ana.add_argument("--pair-gap-max-us", type=int, default=15)
    ana.add_argument("--pre-gap-min-us", type=int, default=15)
    ana.add_argument("--ref-period-us", type=float)
    ana.add_argument("--warmup-skip", type=int, default=2,
                     help="drop the first N period estimates")
    ana.add_argument("--csv-out")
    ana.add_argument("--hist-out")
    ana.add_argument("--suggest-tcut", action="store_true")
    ana.set_defaults(func=cmd_analyze)

    img = sub.add_parser("image", help="render frequency image frames")
    img.add_argument("-i", "--input", required=True)
    img.add_argument("--tcut", type=float, default=5)
    img.add_argument("--fmin", type=float, default=25.0)
    img.add_argument("--fmax", type=float, default=10000.0)
    img.add_argument("--readout-interval-us", type=int, default=10_000)
    img.add_argument("--n-timeout", type=int, default=2)
    img.add_argument("--activity-window-us", type=int)
    img.add_argument("--parallel", type=int, default=1,
                     help="pixel-sharded worker count (output identical to serial)")
    img.add_argument("--csv", action="store_true", help="also dump per-frame CSV maps")
    img.add_argument("--out-dir", required=True)
    img.set_defaults(func=cmd_image)

    ben = sub.add_parser("bench", help="events/sec throughput report")
    ben.add_argument("--mode", choices=["filter", "pipeline", "both"], default="both")
    ben.add_argument("--events", type=lambda s: int(float(s)), default=100_000_000)
    ben.add_argument("--repeats", type=int, default=3)
    ben.add_argument("--width", type=int, default=640)
    ben.add_argument("--height", type=int, default=480)
    ben.add_argument("--scale", type=int, default=1,
                     help="multiply sensor dimensions (cache working-set experiment)")
    ben.add_argument("--hot-pixel", action="store_true",
                     help="route all events to one pixel (cache-resident bound)")
    ben.add_argument("--seed", type=int, default=0)
    ben.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FormatError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except EvfreqError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
