"""Single-photon detector model.

The detection chain, in order: binomial thinning by the quantum efficiency,
Gaussian timing jitter, then a sequential scan that applies a non-paralyzable
dead time and injects afterpulses.  Non-paralyzable means a blocked event
does not extend the blind window -- the detector recovers ``dead_time_ps``
after the last *accepted* event, which for Poisson illumination at rate r
gives the classical registered rate r / (1 + r * dead_time).

Afterpulsing: every accepted event may spawn, with ``afterpulse_prob``, a
spurious event delayed by an exponential draw with mean ``afterpulse_tau_ps``.
Spawned events re-enter the same queue: they obey the dead time and can
themselves afterpulse.  The cascade terminates because the spawn probability
is below one; the random-number pools additionally bound it hard, and any
spawn opportunity lost to an exhausted pool is counted, never looped on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError
from .streams import StreamOrigin, TimestampStream

_HEAP_CAP = 1 << 16


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dead_time_ps: int = 22_000
    afterpulse_prob: float = 0.0
    afterpulse_tau_ps: float = 25_000.0
    jitter_sigma_ps: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ConfigError("efficiency must be in (0, 1]")
        if self.dead_time_ps < 0:
            raise ConfigError("dead_time_ps must be >= 0")
        if not 0.0 <= self.afterpulse_prob < 1.0:
            raise ConfigError("afterpulse_prob must be in [0, 1) or cascades never end")
        if self.afterpulse_tau_ps <= 0:
            raise ConfigError("afterpulse_tau_ps must be positive")
        if self.jitter_sigma_ps < 0:
            raise ConfigError("jitter_sigma_ps must be >= 0")


@dataclass(frozen=True)
class DetectionStats:
    input_count: int
    kept_after_efficiency: int
    accepted_count: int
    afterpulses_spawned: int
    spawns_lost_to_pool: int


@njit(cache=True)
def _dead_time_scan(times, duration, dead, ap_prob, ap_u, ap_delay, out, heap):
    """Merge primaries (sorted) with pending afterpulses (min-heap) in time
    order; accept an event iff it falls at or beyond the recovery point."""
    n = times.size
    i = 0
    heap_n = 0
    last = np.int64(-(1 << 62))
    u_i = 0
    d_i = 0
    n_out = 0
    spawned = 0
    lost = 0
    while i < n or heap_n > 0:
        if heap_n == 0 or (i < n and times[i] <= heap[0]):
            t = times[i]
            i += 1
        else:
            t = np.int64(round(heap[0]))
            heap_n -= 1
            heap[0] = heap[heap_n]
            k = 0
            while True:  # sift down
                left = 2 * k + 1
                if left >= heap_n:
                    break
                child = left
                right = left + 1
                if right < heap_n and heap[right] < heap[left]:
                    child = right
                if heap[child] < heap[k]:
                    heap[k], heap[child] = heap[child], heap[k]
                    k = child
                else:
                    break
        if t > last and t - last >= dead:
            out[n_out] = t
            n_out += 1
            last = t
            if ap_prob > 0.0:
                if u_i >= ap_u.size:
                    lost += 1
                elif ap_u[u_i] < ap_prob:
                    u_i += 1
                    if d_i >= ap_delay.size or heap_n >= heap.size:
                        lost += 1
                    else:
                        ta = t + ap_delay[d_i]
                        d_i += 1
                        spawned += 1
                        if ta <= duration:
                            heap[heap_n] = ta
                            k = heap_n
                            heap_n += 1
                            while k > 0:  # sift up
                                parent = (k - 1) // 2
                                if heap[k] < heap[parent]:
                                    heap[k], heap[parent] = heap[parent], heap[k]
                                    k = parent
                                else:
                                    break
                else:
                    u_i += 1
    return n_out, spawned, lost


def detect_with_stats(
    stream: TimestampStream, model: DetectorModel, seed
) -> tuple[TimestampStream, DetectionStats]:
    if stream.origin is not StreamOrigin.EMISSION:
        raise ConfigError("detect expects an emission-side stream")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(seed))

    times = stream.times_ps
    if model.efficiency < 1.0:
        times = times[rng.random(times.size) < model.efficiency]
    kept = times.size
    if model.jitter_sigma_ps > 0 and kept:
        times = np.rint(times + rng.normal(0.0, model.jitter_sigma_ps, kept)).astype(np.int64)
        times = np.sort(times[(times >= 0) & (times <= stream.duration_ps)], kind="stable")

    p = model.afterpulse_prob
    if p > 0.0 and kept:
        n_delay = int(1.5 * kept * p / (1.0 - p) + 10.0 * math.sqrt(kept * p + 1.0)) + 1024
        ap_u = rng.random(kept + n_delay)
        ap_delay = rng.exponential(model.afterpulse_tau_ps, n_delay)
    else:
        ap_u = np.empty(0, dtype=np.float64)
        ap_delay = np.empty(0, dtype=np.float64)
        n_delay = 0

    out = np.empty(times.size + n_delay, dtype=np.int64)
    heap = np.empty(_HEAP_CAP, dtype=np.float64)
    n_out, spawned, lost = _dead_time_scan(
        times,
        np.int64(stream.duration_ps),
        np.int64(model.dead_time_ps),
        float(p),
        ap_u,
        ap_delay,
        out,
        heap,
    )
    out = out[:n_out].copy()

    # hard consistency gate: the output must honour the recovery time
    if n_out > 1:
        gaps = np.diff(out)
        if int(gaps.min()) < model.dead_time_ps or int(gaps.min()) < 1:
            raise AssertionError("dead-time scan produced a gap below dead_time_ps")

    result = TimestampStream(out, StreamOrigin.DETECTION, stream.duration_ps)
    stats = DetectionStats(
        input_count=len(stream),
        kept_after_efficiency=kept,
        accepted_count=n_out,
        afterpulses_spawned=spawned,
        spawns_lost_to_pool=lost,
    )
    return result, stats


def detect(stream: TimestampStream, model: DetectorModel, seed) -> TimestampStream:
    """Run the detection chain; see module docstring for the event order."""
    result, _ = detect_with_stats(stream, model, seed)
    return result


def afterpulse_artifact_profile(stream: TimestampStream, window_ps: int, bin_width_ps: int = 1000):
    """Short-delay interval histogram of a detection stream.

    This is where the instrument signature lives: an exact void below the
    dead time and, with afterpulsing, an excess bump just above it.
    """
    from .correlator import adjacent_interval_histogram

    if stream.origin is not StreamOrigin.DETECTION:
        raise ConfigError("artifact profile expects a detection stream")
    return adjacent_interval_histogram(stream, bin_width_ps, window_ps)
