"""Passive optics between source and detector(s).

Both measurement schemes start with one beamsplitter of transmission T:

* single-detector delay scheme: the reflected arm travels an extra fixed
  path (optical delay) and is recombined with the transmitted arm onto one
  detector;
* two-detector coincidence scheme: each arm goes to its own detector.

Photons are routed independently (Bernoulli T), which is exact for the
photon-counting statistics considered here.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError
from .streams import StreamOrigin, TimestampStream


class Scheme(Enum):
    SINGLE_DETECTOR_DELAY = "delay"
    STANDARD_HBT = "hbt"


@dataclass(frozen=True)
class ChannelConfig:
    t_ratio: float            # beamsplitter transmission T; R = 1 - T
    delay_ps: int             # optical delay of the reflected arm
    scheme: Scheme

    def __post_init__(self):
        if not 0.0 < self.t_ratio < 1.0:
            raise ConfigError("t_ratio must be strictly between 0 and 1")
        if self.delay_ps < 0:
            raise ConfigError("delay_ps must be >= 0")

    @property
    def r_ratio(self) -> float:
        return 1.0 - self.t_ratio


def split_delay_merge(stream: TimestampStream, cfg: ChannelConfig, seed) -> TimestampStream:
    """Send each photon through the splitter, delay the reflected arm by
    ``delay_ps``, and merge both arms onto a single output.

    Every input photon appears exactly once in the output.  Ties after the
    merge are ordered (timestamp, arm), transmitted arm first.
    """
    if cfg.scheme is not Scheme.SINGLE_DETECTOR_DELAY:
        raise ConfigError("split_delay_merge needs a single-detector delay config")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(seed))
    reflected = rng.random(len(stream)) < cfg.r_ratio
    times = stream.times_ps + np.where(reflected, np.int64(cfg.delay_ps), np.int64(0))
    order = np.lexsort((reflected, times))
    # the delayed arm can outlast the nominal acquisition window
    return TimestampStream(times[order], stream.origin, stream.duration_ps + cfg.delay_ps)


def split_two_arms(
    stream: TimestampStream, cfg: ChannelConfig, seed
) -> tuple[TimestampStream, TimestampStream]:
    """Split into (transmitted, reflected) arm streams for two detectors.

    Arms are disjoint and together contain every input photon.
    """
    if cfg.scheme is not Scheme.STANDARD_HBT:
        raise ConfigError("split_two_arms needs a two-detector config")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(seed))
    transmitted = rng.random(len(stream)) < cfg.t_ratio
    arm_t = TimestampStream(stream.times_ps[transmitted], stream.origin, stream.duration_ps)
    arm_r = TimestampStream(stream.times_ps[~transmitted], stream.origin, stream.duration_ps)
    return arm_t, arm_r
