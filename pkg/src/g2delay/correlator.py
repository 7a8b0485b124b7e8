"""Correlation estimators over timestamp streams.

Three estimators, all returning raw count histograms over a fixed grid:

* ``start_stop_histogram`` -- time-to-amplitude converter logic: for every
  event on the start channel, the delay to the first *strictly later* event
  on the (electrically delayed) stop channel.  The electrical delay shifts
  simultaneous optical pairs to positive recorded delay, where the converter
  can see them.
* ``adjacent_interval_histogram`` -- delays between successive events of one
  stream; this is what a single detector plus timing card measures.  It
  approximates the true correlation at delays short against the mean event
  spacing.
* ``all_pairs_correlation`` -- every ordered pair within the span.  Direct
  realization of the rate-product definition of the second-order correlation;
  serves as the brute-force reference for the other two.

Cost is O(N + P) with N events and P pairs inside the span (plus sorting
lookups); nothing here is quadratic in N.

Normalization produces dimensionless g2 values and per-bin variances while
keeping the raw counts alongside.  Pulsed histograms are scaled by the mean
counts per repetition period measured in windows far from any engineered
feature; continuous-wave histograms by an exponential baseline fitted over a
configured plateau window (equivalent to normalizing against a Poissonian
source of the same rate); ``RATE`` mode divides by rate^2 * T * bin_width.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConfigError
from .streams import TimestampStream

_MAX_PAIRS = 300_000_000  # memory guard for the brute-force estimator


class Estimator(Enum):
    START_STOP = "start_stop"
    ADJACENT_INTERVAL = "adjacent_interval"
    ALL_PAIRS = "all_pairs"


@dataclass(frozen=True, eq=False)
class CorrelationHistogram:
    bin_width_ps: int
    t_min_ps: int
    t_max_ps: int
    counts: np.ndarray               # raw pair counts, always kept
    total_events: int
    total_time_ps: int
    estimator: Estimator
    normalized: bool = False
    g2: np.ndarray | None = None     # dimensionless values when normalized
    g2_var: np.ndarray | None = None

    def __post_init__(self):
        if self.bin_width_ps <= 0:
            raise ConfigError("bin_width_ps must be positive")
        if self.t_max_ps <= self.t_min_ps:
            raise ConfigError("t_max_ps must exceed t_min_ps")
        if (self.t_max_ps - self.t_min_ps) % self.bin_width_ps != 0:
            raise ConfigError("histogram span must be a whole number of bins")
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.size != self.n_bins:
            raise ConfigError("counts length does not match the bin grid")
        if counts.size and counts.min() < 0:
            raise ConfigError("negative bin counts")
        if self.normalized and (self.g2 is None or self.g2_var is None):
            raise ConfigError("normalized histogram without g2 values")

    @property
    def n_bins(self) -> int:
        return (self.t_max_ps - self.t_min_ps) // self.bin_width_ps

    @property
    def centers_ps(self) -> np.ndarray:
        return self.t_min_ps + (np.arange(self.n_bins) + 0.5) * self.bin_width_ps

    @property
    def values(self) -> np.ndarray:
        return self.g2 if self.normalized else self.counts

    @property
    def g2_err(self) -> np.ndarray:
        if not self.normalized:
            raise ConfigError("errors are defined for normalized histograms")
        return np.sqrt(self.g2_var)

    def bin_index(self, t_ps: float) -> int:
        idx = int((t_ps - self.t_min_ps) // self.bin_width_ps)
        if not 0 <= idx < self.n_bins:
            raise ConfigError(f"t={t_ps} ps outside histogram range")
        return idx


@dataclass(frozen=True)
class TacConfig:
    electrical_delay_ps: int
    bin_width_ps: int
    span_ps: int

    def __post_init__(self):
        if self.bin_width_ps <= 0 or self.span_ps <= 0:
            raise ConfigError("bin width and span must be positive")
        if self.span_ps % self.bin_width_ps != 0:
            raise ConfigError("span must be a whole number of bins")
        if self.electrical_delay_ps < 0:
            raise ConfigError("electrical delay must be >= 0")
        if self.electrical_delay_ps >= self.span_ps:
            raise ConfigError("electrical delay must fall inside the span")


def _hist_from_taus(taus, bin_width, span, total_events, total_time, estimator):
    n_bins = span // bin_width
    if taus.size:
        counts = np.bincount(taus // bin_width, minlength=n_bins)
    else:
        counts = np.zeros(n_bins, dtype=np.int64)
    return CorrelationHistogram(
        bin_width_ps=bin_width,
        t_min_ps=0,
        t_max_ps=span,
        counts=counts,
        total_events=total_events,
        total_time_ps=total_time,
        estimator=estimator,
    )


def start_stop_histogram(
    start: TimestampStream,
    stop: TimestampStream,
    cfg: TacConfig,
    source_range: tuple[int, int] | None = None,
    exclude_self: bool | None = None,
) -> CorrelationHistogram:
    """First-stop-after-each-start histogram (classic TAC behaviour).

    Stop times are shifted by the electrical delay before matching; each
    start records at most one delay.  Stops may precede their start by up to
    the electrical delay, which is what centres the histogram at that delay.

    When one detector feeds both inputs (``stop`` is the same stream as
    ``start``) every event would trivially stop on its own delayed copy, so
    self-pairs are skipped: the first *other* arrival wins.  At zero
    electrical delay this reduces exactly to adjacent intervals.
    """
    if exclude_self is None:
        exclude_self = stop is start or stop.times_ps is start.times_ps
    starts = start.times_ps
    lo, hi = source_range if source_range is not None else (0, starts.size)
    starts = starts[lo:hi]
    shifted = stop.times_ps + np.int64(cfg.electrical_delay_ps)
    idx = np.searchsorted(shifted, starts, side="right")
    if exclude_self:
        base = np.arange(lo, hi, dtype=idx.dtype)
        idx = np.where(idx == base, idx + 1, idx)
    valid = idx < shifted.size
    tau = shifted[idx[valid]] - starts[valid]
    tau = tau[tau < cfg.span_ps]
    return _hist_from_taus(
        tau,
        cfg.bin_width_ps,
        cfg.span_ps,
        len(start) + len(stop),
        max(start.duration_ps, stop.duration_ps),
        Estimator.START_STOP,
    )


def adjacent_interval_histogram(
    stream: TimestampStream,
    bin_width_ps: int,
    span_ps: int,
    source_range: tuple[int, int] | None = None,
) -> CorrelationHistogram:
    """Histogram of delays between successive events."""
    if bin_width_ps <= 0 or span_ps <= 0 or span_ps % bin_width_ps != 0:
        raise ConfigError("span must be a positive whole number of bins")
    t = stream.times_ps
    diffs = np.diff(t)
    lo, hi = source_range if source_range is not None else (0, diffs.size)
    diffs = diffs[lo:hi]
    diffs = diffs[diffs < span_ps]
    return _hist_from_taus(
        diffs, bin_width_ps, span_ps, len(stream), stream.duration_ps,
        Estimator.ADJACENT_INTERVAL,
    )


def all_pairs_correlation(
    stream: TimestampStream,
    bin_width_ps: int,
    span_ps: int,
    source_range: tuple[int, int] | None = None,
) -> CorrelationHistogram:
    """All ordered pairs (i earlier, j later) with separation below the span.

    ``source_range`` restricts the *earlier* pair member to an index slice,
    which is the seam rule that makes chunked runs add up to the whole.
    """
    if bin_width_ps <= 0 or span_ps <= 0 or span_ps % bin_width_ps != 0:
        raise ConfigError("span must be a positive whole number of bins")
    t = stream.times_ps
    n = t.size
    lo, hi = source_range if source_range is not None else (0, n)
    i_idx = np.arange(lo, hi, dtype=np.int64)
    ends = np.searchsorted(t, t[lo:hi] + np.int64(span_ps), side="left")
    per_i = ends - (i_idx + 1)
    per_i = np.maximum(per_i, 0)
    total = int(per_i.sum())
    if total > _MAX_PAIRS:
        raise ConfigError(f"{total} pairs exceed the in-memory limit; shrink the span")
    if total == 0:
        taus = np.empty(0, dtype=np.int64)
    else:
        i_rep = np.repeat(i_idx, per_i)
        offsets = np.cumsum(per_i) - per_i
        j_idx = np.arange(total, dtype=np.int64) - np.repeat(offsets, per_i) + i_rep + 1
        taus = t[j_idx] - t[i_rep]
    return _hist_from_taus(
        taus, bin_width_ps, span_ps, len(stream), stream.duration_ps,
        Estimator.ALL_PAIRS,
    )


def merge_histograms(a: CorrelationHistogram, b: CorrelationHistogram) -> CorrelationHistogram:
    """Add raw chunk histograms of the same stream (seams handled upstream
    by ``source_range``)."""
    if a.normalized or b.normalized:
        raise ConfigError("merge raw histograms, then normalize once")
    same = (
        a.bin_width_ps == b.bin_width_ps
        and a.t_min_ps == b.t_min_ps
        and a.t_max_ps == b.t_max_ps
        and a.estimator is b.estimator
        and a.total_events == b.total_events
        and a.total_time_ps == b.total_time_ps
    )
    if not same:
        raise ConfigError("histograms come from different grids or streams")
    return replace(a, counts=a.counts + b.counts)


def shift_axis(hist: CorrelationHistogram, offset_ps: int) -> CorrelationHistogram:
    """Relabel the delay axis (e.g. subtract the electrical delay so that
    zero optical delay sits at zero)."""
    return replace(hist, t_min_ps=hist.t_min_ps + offset_ps, t_max_ps=hist.t_max_ps + offset_ps)


class NormalizationMode(Enum):
    PULSED = "pulsed"
    CW = "cw"
    RATE = "rate"


@dataclass(frozen=True)
class NormalizationContext:
    mode: NormalizationMode
    period_ps: int = 0
    center_ps: int = 0                       # histogram coordinate of zero optical delay
    reference_orders: tuple[int, ...] = (2, 3, 4, 5)
    plateau_ps: tuple[int, int] | None = None
    feature_ps: tuple[int, ...] = ()         # engineered features to keep out of references
    feature_halfwidth_ps: int = 0


def _windows_overlap(lo1, hi1, lo2, hi2) -> bool:
    return max(lo1, lo2) < min(hi1, hi2)


def _window_sum(hist: CorrelationHistogram, lo: int, hi: int) -> float:
    centers = hist.centers_ps
    mask = (centers >= lo) & (centers < hi)
    return float(hist.counts[mask].sum())


def normalize(hist: CorrelationHistogram, ctx: NormalizationContext) -> CorrelationHistogram:
    """Scale counts to dimensionless g2; raises if already normalized."""
    if hist.normalized:
        raise ConfigError("histogram is already normalized")

    if ctx.mode is NormalizationMode.PULSED:
        if ctx.period_ps <= 0:
            raise ConfigError("pulsed normalization needs the pulse period")
        half = ctx.period_ps // 2
        sums = []
        for k in ctx.reference_orders:
            if k <= 0:
                raise ConfigError("reference orders must be positive period indices")
            for sign in (+1, -1):
                mid = ctx.center_ps + sign * k * ctx.period_ps
                lo, hi = mid - half, mid + half
                if lo < hist.t_min_ps or hi > hist.t_max_ps:
                    continue
                if any(
                    _windows_overlap(lo, hi, f - ctx.feature_halfwidth_ps, f + ctx.feature_halfwidth_ps)
                    for f in ctx.feature_ps
                ):
                    continue
                sums.append(_window_sum(hist, lo, hi))
        if not sums:
            raise ConfigError("no usable reference period windows inside the span")
        denom = float(np.mean(sums))
        if denom <= 0:
            raise ConfigError("reference windows are empty; cannot normalize")
        baseline = np.full(hist.n_bins, denom)

    elif ctx.mode is NormalizationMode.CW:
        if ctx.plateau_ps is None:
            raise ConfigError("cw normalization needs a plateau window")
        lo, hi = ctx.plateau_ps
        if not hist.t_min_ps <= lo < hi <= hist.t_max_ps:
            raise ConfigError("plateau window outside the histogram span")
        for f in ctx.feature_ps:
            if _windows_overlap(lo, hi, f - ctx.feature_halfwidth_ps, f + ctx.feature_halfwidth_ps):
                raise ConfigError(
                    f"plateau window [{lo}, {hi}] ps contains the feature at {f} ps"
                )
        centers = hist.centers_ps
        sel = (centers >= lo) & (centers < hi) & (hist.counts > 0)
        if int(sel.sum()) < 3:
            raise ConfigError("plateau window holds too few populated bins to fit")
        x = centers[sel]
        y = np.log(hist.counts[sel].astype(np.float64))
        # weight by sqrt(counts): var(log c) ~ 1/c for Poisson bins
        slope, intercept = np.polyfit(x, y, 1, w=np.sqrt(hist.counts[sel]))
        baseline = np.exp(intercept + slope * centers)

    elif ctx.mode is NormalizationMode.RATE:
        if hist.total_events <= 0 or hist.total_time_ps <= 0:
            raise ConfigError("rate normalization needs event and time totals")
        level = hist.total_events**2 * hist.bin_width_ps / hist.total_time_ps
        baseline = np.full(hist.n_bins, float(level))

    else:  # pragma: no cover
        raise ConfigError(f"unknown normalization mode {ctx.mode}")

    g2 = hist.counts / baseline
    var = hist.counts / baseline**2
    return replace(hist, normalized=True, g2=g2, g2_var=var)
