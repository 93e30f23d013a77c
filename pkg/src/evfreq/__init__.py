"""Per-pixel fundamental-frequency detection for event camera streams.

Submodules:

* ``events``   -- event data model and FCEV/CSV stream I/O
* ``simulate`` -- desk-scale sensor simulator (waveforms, thresholds,
  dark noise, readout saturation)
* ``noise``    -- streaming dark-noise triplet filter
* ``detect``   -- filter design, event-time IIR reconstruction, zero-level
  crossing period measurement
* ``freqmap``  -- full-sensor frequency imaging and PPM rendering
* ``bench``    -- throughput benchmark helpers
* ``cli``      -- simulate / analyze / image / bench front end
"""

from .events import Event, EventArray, StreamHeader, naive_reconstruct, read_events, write_events
from .detect import (FilterParams, FilterState, design_alpha, design_beta,
                     filter_update, period_stream, recommend_tcut, transfer_magnitude)

__all__ = [
    "Event", "EventArray", "StreamHeader", "naive_reconstruct", "read_events",
    "write_events", "FilterParams", "FilterState", "design_alpha", "design_beta",
    "filter_update", "period_stream", "recommend_tcut", "transfer_magnitude",
]

__version__ = "0.1.0"
