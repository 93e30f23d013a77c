"""Shared fixtures: small simulated streams reused across test modules."""

import numpy as np
import pytest

from evfreq import simulate


@pytest.fixture(scope="session")
def clean_square_100hz():
    """Single-pixel 100 Hz square wave, 1 s, 8 ON + 8 OFF per cycle."""
    spec = simulate.SignalSpec("square", 100.0, 2.0)
    model = simulate.CameraModel(c_on=0.25, c_off=0.25)
    return simulate.pixel_events(spec, model, 0, 1_000_000, 0, 0)


@pytest.fixture(scope="session")
def clean_square_1hz():
    """Single-pixel 1 Hz square wave, 10 s, dense (40 ON + 40 OFF per cycle)."""
    spec = simulate.SignalSpec("square", 1.0, 2.0)
    model = simulate.CameraModel(c_on=0.05, c_off=0.05)
    return simulate.pixel_events(spec, model, 0, 10_000_000, 0, 0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
