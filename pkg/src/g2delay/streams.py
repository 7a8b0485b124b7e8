"""Timestamp streams.

All event times in this package are integer picoseconds from the start of the
acquisition.  A stream is immutable once built; every producer returns a new
stream.  Emission-side streams may contain ties (two photons in the same
picosecond tick); detection-side streams are strictly increasing because the
detector dead time resolves ties.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError

PS_PER_S = 10**12


class StreamOrigin(Enum):
    EMISSION = "emission"
    DETECTION = "detection"


@dataclass(frozen=True, eq=False)
class TimestampStream:
    """A sorted sequence of event times over a fixed acquisition window.

    times_ps     -- int64 array, non-decreasing, all within [0, duration_ps]
    origin       -- EMISSION (ties allowed) or DETECTION (strictly increasing)
    duration_ps  -- acquisition window length; defines rates, not len(times)
    """

    times_ps: np.ndarray
    origin: StreamOrigin
    duration_ps: int

    def __post_init__(self):
        t = np.ascontiguousarray(self.times_ps, dtype=np.int64)
        object.__setattr__(self, "times_ps", t)
        if t.ndim != 1:
            raise ConfigError("times_ps must be one-dimensional")
        if self.duration_ps <= 0:
            raise ConfigError("duration_ps must be positive")
        if t.size:
            if t[0] < 0 or t[-1] > self.duration_ps:
                raise ConfigError("timestamps outside [0, duration_ps]")
            d = np.diff(t)
            if d.size and d.min() < 0:
                raise ConfigError("timestamps must be sorted")
            if self.origin is StreamOrigin.DETECTION and d.size and d.min() == 0:
                raise ConfigError("detection streams must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times_ps.size)

    @property
    def rate_hz(self) -> float:
        """Mean event rate over the acquisition window."""
        return self.times_ps.size * PS_PER_S / self.duration_ps


def merge_streams(
    a: TimestampStream, b: TimestampStream, origin: StreamOrigin | None = None
) -> TimestampStream:
    """Interleave two streams into one sorted stream.

    ``origin`` defaults to the inputs' common origin.  When combining the
    records of two separate detectors pass ``StreamOrigin.EMISSION``: the
    merged sequence may contain same-tick events from distinct devices and is
    not itself a single detector's output.
    """
    if origin is None:
        if a.origin is not b.origin:
            raise ConfigError("cannot merge streams of different origin")
        origin = a.origin
    times = np.sort(np.concatenate([a.times_ps, b.times_ps]), kind="stable")
    return TimestampStream(times, origin, max(a.duration_ps, b.duration_ps))
