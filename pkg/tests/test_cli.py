"""CLI subcommands: plumbing, determinism, exit codes."""

import os

import numpy as np
import pytest

from evfreq import cli, simulate
from evfreq.cli import PeriodStats, main
from evfreq.events import read_events


def run(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def square_file(tmp_path_factory):
    path = str(tmp_path_factory.mktemp("cli") / "sq.fcev")
    assert run("simulate", "--signal", "square", "--freq", "100", "--amplitude", "2",
               "--c-on", "0.25", "--c-off", "0.25", "--duration-s", "1",
               "--width", "8", "--height", "8", "--region", "2,3,3,4",
               "-o", path) == 0
    return path


def test_simulate_count_matches_single_pixel_oracle(square_file):
    _, ev = read_events(square_file)
    spec = simulate.SignalSpec("square", 100.0, 2.0)
    model = simulate.CameraModel(c_on=0.25, c_off=0.25)
    ref = simulate.pixel_events(spec, model, 0, 1_000_000, 2, 3)
    assert abs(len(ev) - len(ref)) <= 16  # within one cycle's worth
    assert ev == ref


def test_simulate_deterministic(tmp_path):
    args = ["simulate", "--signal", "square", "--freq", "50", "--amplitude", "2",
            "--duration-s", "0.2", "--width", "4", "--height", "4",
            "--rise-lag-us", "100", "--seed", "3"]
    a, b = str(tmp_path / "a.fcev"), str(tmp_path / "b.fcev")
    assert run(*args, "-o", a) == 0
    assert run(*args, "-o", b) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_simulate_csv_extension_switches_format(tmp_path):
    path = str(tmp_path / "s.csv")
    assert run("simulate", "--signal", "square", "--freq", "100", "--amplitude", "2",
               "--duration-s", "0.05", "--width", "4", "--height", "4",
               "-o", path) == 0
    assert open(path).readline().startswith("#")
    _, ev = read_events(path)
    assert len(ev) > 0


def test_scenario_file_with_flag_override(tmp_path):
    cfg = tmp_path / "sc.cfg"
    cfg.write_text("signal = square\nfreq_hz = 100\namplitude = 2.0\n"
                   "duration_s = 0.1\nwidth = 4\nheight = 4\n")
    a = str(tmp_path / "a.fcev")
    b = str(tmp_path / "b.fcev")
    assert run("simulate", "--config", str(cfg), "-o", a) == 0
    assert run("simulate", "--config", str(cfg), "--freq", "200", "-o", b) == 0
    _, ev_a = read_events(a)
    _, ev_b = read_events(b)
    assert len(ev_b) == pytest.approx(2 * len(ev_a), abs=32)  # flag overrode the file


def test_saturated_simulate_respects_capacity(tmp_path):
    path = str(tmp_path / "sat.fcev")
    assert run("simulate", "--signal", "square", "--freq", "64", "--amplitude", "2",
               "--c-on", "0.25", "--c-off", "0.25", "--duration-s", "0.5",
               "--width", "16", "--height", "12", "--region", "0,0,16,12",
               "--lowpass-tau-us", "800", "--capacity-evs", "10000",
               "-o", path) == 0
    _, ev = read_events(path)
    assert len(ev) <= 10000 * 0.5 + 10  # drain bound


def test_analyze_baseline_stats_and_csv(square_file, tmp_path, capsys):
    csv = str(tmp_path / "p.csv")
    assert run("analyze", "-i", square_file, "--pixel", "2,3", "--mode", "baseline",
               "--ref-period-us", "10000", "--csv-out", csv,
               "--hist-out", str(tmp_path / "h.csv")) == 0
    out = capsys.readouterr().out
    stats = dict(kv.split("=") for kv in out.split())
    assert abs(float(stats["mean_us"]) - 10_000) <= 2
    assert float(stats["stddev_us"]) <= 2
    rows = open(csv).read().strip().splitlines()
    assert len(rows) - 1 == int(stats["count"])
    hist = open(str(tmp_path / "h.csv")).read().strip().splitlines()
    assert sum(int(r.split(",")[1]) for r in hist[1:]) == int(stats["count"])


def test_analyze_empty_pixel_warns_and_exits_zero(square_file, capsys):
    assert run("analyze", "-i", square_file, "--pixel", "0,0") == 0
    captured = capsys.readouterr()
    assert "count=0" in captured.out
    assert "no events" in captured.err


def test_analyze_suggest_tcut(square_file, capsys):
    assert run("analyze", "-i", square_file, "--pixel", "2,3", "--suggest-tcut") == 0
    out = capsys.readouterr().out
    assert "t_cut=32" in out  # 8 ON + 8 OFF per cycle -> 4 * 8


def test_period_stats_histogram_bins_at_1us():
    stats = PeriodStats.from_periods([10_000.4, 10_000.6, 9_999.2], 10_000)
    assert stats.count == 3
    assert stats.histogram == {0: 1, 1: 1, -1: 1}


def test_image_frames_and_parallel_identical(square_file, tmp_path):
    d1, d2 = str(tmp_path / "f1"), str(tmp_path / "f2")
    assert run("image", "-i", square_file, "--out-dir", d1, "--csv") == 0
    assert run("image", "-i", square_file, "--out-dir", d2, "--parallel", "2") == 0
    frames = sorted(os.listdir(d1))
    assert "frame_000000.ppm" in frames and "frame_000099.ppm" in frames
    for name in ("frame_000000.ppm", "frame_000050.ppm", "frame_000099.ppm"):
        a = open(os.path.join(d1, name), "rb").read()
        b = open(os.path.join(d2, name), "rb").read()
        assert a == b
    csv = open(os.path.join(d1, "frame_000099.csv")).read().strip().splitlines()
    assert len(csv) == 1 + 8 * 8


def test_flicker_stop_goes_dark_within_timeout(tmp_path):
    # pixel (1,0) stops flickering at 0.3 s while (0,0) keeps going; by the
    # last frame the stopped pixel must have timed out to black
    from evfreq.events import EventArray, StreamHeader, write_events

    spec = simulate.SignalSpec("square", 100.0, 2.0)
    model = simulate.CameraModel(c_on=0.25, c_off=0.25)
    alive = simulate.pixel_events(spec, model, 0, 1_000_000, 0, 0)
    stopped = simulate.pixel_events(spec, model, 0, 300_000, 1, 0)
    merged = np.concatenate([alive.records, stopped.records])
    merged = merged[np.argsort(merged["t_us"], kind="stable")]
    path = str(tmp_path / "stops.fcev")
    write_events(StreamHeader(2, 1), EventArray(merged), path)

    d = str(tmp_path / "f")
    assert run("image", "-i", path, "--out-dir", d,
               "--readout-interval-us", "200000") == 0
    last = open(os.path.join(d, sorted(os.listdir(d))[-1]), "rb").read()
    body = last.split(b"255\n", 1)[1]
    assert body[3:6] == b"\x00\x00\x00"  # stopped pixel went black
    assert body[0:3] != b"\x00\x00\x00"  # live pixel still colored


def test_exit_codes(tmp_path):
    # missing required parameter -> config error
    assert run("simulate", "--signal", "square", "--freq", "1",
               "-o", str(tmp_path / "x.fcev")) == cli.EXIT_CONFIG
    # unreadable input -> I/O error
    assert run("analyze", "-i", str(tmp_path / "missing.fcev"),
               "--pixel", "0,0") == cli.EXIT_IO
    # corrupt input -> data/format error
    bad = tmp_path / "bad.fcev"
    bad.write_bytes(b"not an event stream at all")
    assert run("analyze", "-i", str(bad), "--pixel", "0,0") == cli.EXIT_DATA


def test_bench_smoke(capsys):
    assert run("bench", "--mode", "pipeline", "--events", "1e5",
               "--repeats", "1") == 0
    out = capsys.readouterr().out
    assert "pipeline:" in out and "Mev/s" in out
    assert "per-pixel state 26 bytes" in out
