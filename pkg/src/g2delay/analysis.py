"""Peak integration and extraction of the zero-delay correlation.

Pulsed runs give combs of peaks.  The two-detector scheme yields a single
comb: the zero-delay value is the centre-peak area over the mean first
side-peak area.  The single-detector delay scheme replaces every comb peak
with a triplet (weights RT, R^2+T^2, RT at offsets -delay, 0, +delay) and
replicates the suppressed centre peak at +delay, where it escapes the dead
time; the same area ratio read there returns the same zero-delay value.

Continuous-wave runs are read from dips: a two-detector dip at the
electrical delay gives g2(0) directly, while the single-detector dip at the
optical delay sits on a mixing floor of (R^2+T^2) + RT and must be inverted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .correlator import CorrelationHistogram
from .errors import AnalysisError, ConfigError
from .streams import PS_PER_S


class PeakLabel(Enum):
    CENTER0 = "center0"
    SIDE1_MINUS = "side1_minus"
    SIDE1_PLUS = "side1_plus"
    DELAY0 = "delay0"
    TRIPLET1L = "triplet1_left"
    TRIPLET1 = "triplet1"
    TRIPLET1R = "triplet1_right"


@dataclass(frozen=True)
class PeakSet:
    """Integrated peak areas.

    ``areas`` holds per-peak areas in histogram value units; ``raw_counts``
    the matching raw counts, which carry the Poisson error; ``unusable``
    flags peaks whose window touches the dead-time-obliterated region --
    their numbers are present but must not be trusted.
    """

    areas: dict
    raw_counts: dict
    n_windows: dict
    unusable: frozenset
    floor_subtracted: bool
    window_ps: int
    period_ps: int
    delay_ps: int


@dataclass(frozen=True)
class G2Result:
    g2_zero: float
    scheme: str
    raw_value: float            # area ratio or dip value before any correction
    stat_error: float = float("nan")
    background_rho: float = 1.0
    corrected: bool = False
    clamped: bool = False


def _collect_windows(hist, period, delay, window, center):
    """(label, lo, hi, optional) feature windows for one scheme.

    Only the first-order side peaks enter the plain comb: the start-stop
    envelope decays by the per-period stop probability for every period a
    record crosses, and the two first neighbours are the only pair whose
    envelope factors average out against the centre peak.
    """
    out = []
    if delay == 0:
        out.append((PeakLabel.CENTER0, center - window, center + window, False))
        for sign, label in ((-1, PeakLabel.SIDE1_MINUS), (+1, PeakLabel.SIDE1_PLUS)):
            mid = center + sign * period
            lo, hi = mid - window, mid + window
            if lo >= hist.t_min_ps and hi <= hist.t_max_ps:
                out.append((label, lo, hi, True))
    else:
        out.append((PeakLabel.DELAY0, center + delay - window, center + delay + window, False))
        out.append((PeakLabel.TRIPLET1L, center + period - delay - window,
                    center + period - delay + window, False))
        out.append((PeakLabel.TRIPLET1, center + period - window, center + period + window, False))
        out.append((PeakLabel.TRIPLET1R, center + period + delay - window,
                    center + period + delay + window, False))
    return out


def integrate_peaks(
    hist: CorrelationHistogram,
    period_ps: int,
    delay_ps: int,
    window_ps: int,
    *,
    center_ps: int = 0,
    dead_zone_ps: int = 0,
    subtract_floor: bool = False,
) -> PeakSet:
    """Integrate the expected peaks of a pulsed histogram.

    ``center_ps`` is the histogram coordinate of zero optical delay (the
    electrical delay for start-stop histograms, zero for interval
    histograms).  ``delay_ps > 0`` selects the single-detector triplet
    layout, ``delay_ps == 0`` the plain comb.  Windows are half-open
    ``[mid - window, mid + window)`` and may touch but not overlap.

    ``subtract_floor`` removes a flat pair floor (uncorrelated background
    light) estimated from the bins outside every feature window.
    """
    if period_ps <= 0:
        raise ConfigError("period_ps must be positive")
    if window_ps <= 0 or window_ps > period_ps // 2:
        raise ConfigError("window_ps must be in (0, period/2]")
    if delay_ps < 0:
        raise ConfigError("delay_ps must be >= 0")

    windows = _collect_windows(hist, period_ps, delay_ps, window_ps, center_ps)
    for label, lo, hi, optional in windows:
        if not optional and (lo < hist.t_min_ps or hi > hist.t_max_ps):
            raise ConfigError(f"peak window for {label.value} falls outside the span")
    ordered = sorted(windows, key=lambda w: w[1])
    for (l1, lo1, hi1, _), (l2, lo2, hi2, _) in zip(ordered, ordered[1:]):
        if lo2 < hi1:
            raise ConfigError(
                f"windows for {l1.value} and {l2.value} overlap; shrink window_ps"
            )

    centers = hist.centers_ps
    vals = np.asarray(hist.values, dtype=np.float64)

    floor_per_bin = 0.0
    if subtract_floor:
        mask = np.zeros(hist.n_bins, dtype=bool)
        span_orders = int(abs(hist.t_max_ps - center_ps) // period_ps) + 2
        combs = [0] if delay_ps == 0 else [0, delay_ps, -delay_ps]
        for k in range(-span_orders, span_orders + 1):
            for off in combs:
                mid = center_ps + k * period_ps + off
                mask |= (centers >= mid - window_ps) & (centers < mid + window_ps)
        guard = dead_zone_ps + window_ps
        mask |= (centers >= center_ps - guard) & (centers < center_ps + guard)
        free = ~mask
        if not free.any():
            raise ConfigError("no feature-free bins left to estimate the pair floor")
        floor_per_bin = float(vals[free].mean())

    areas: dict = {}
    raws: dict = {}
    counts_of: dict = {}
    unusable = set()
    dead_lo, dead_hi = center_ps - dead_zone_ps, center_ps + dead_zone_ps
    for label, lo, hi, optional in windows:
        sel = (centers >= lo) & (centers < hi)
        area = float(vals[sel].sum()) - floor_per_bin * int(sel.sum())
        raw = float(hist.counts[sel].sum())
        if label in areas:
            areas[label] += area
            raws[label] += raw
            counts_of[label] += 1
        else:
            areas[label] = area
            raws[label] = raw
            counts_of[label] = 1
        if dead_zone_ps > 0 and max(lo, dead_lo) < min(hi, dead_hi):
            unusable.add(label)
    for label, n in counts_of.items():
        if n > 1:
            areas[label] /= n

    return PeakSet(
        areas=areas,
        raw_counts=raws,
        n_windows=counts_of,
        unusable=frozenset(unusable),
        floor_subtracted=subtract_floor,
        window_ps=window_ps,
        period_ps=period_ps,
        delay_ps=delay_ps,
    )


def _ratio_error(g2: float, raw_num: float, raw_den: float) -> float:
    if raw_num <= 0 or raw_den <= 0:
        return float("nan")
    return abs(g2) * math.sqrt(1.0 / raw_num + 1.0 / raw_den)


def g2_pulsed_standard(peaks: PeakSet) -> G2Result:
    """Centre peak area over the mean side-peak area (two-detector comb)."""
    try:
        a0 = peaks.areas[PeakLabel.CENTER0]
        sides = [peaks.areas[k] for k in (PeakLabel.SIDE1_MINUS, PeakLabel.SIDE1_PLUS)
                 if k in peaks.areas]
    except KeyError as exc:
        raise AnalysisError(f"peak set lacks {exc}") from exc
    if not sides:
        raise AnalysisError("no side peaks inside the span")
    if PeakLabel.CENTER0 in peaks.unusable:
        raise AnalysisError("centre peak overlaps the dead-time region")
    side = float(np.mean(sides))
    if side <= 0:
        raise AnalysisError("side peaks are empty; nothing to normalize against")
    raw_side = sum(peaks.raw_counts.get(k, 0.0)
                   for k in (PeakLabel.SIDE1_MINUS, PeakLabel.SIDE1_PLUS))
    g2 = a0 / side
    return G2Result(
        g2_zero=g2,
        scheme="pulsed_hbt",
        raw_value=g2,
        stat_error=_ratio_error(g2, peaks.raw_counts[PeakLabel.CENTER0], raw_side),
    )


def g2_pulsed_delay(peaks: PeakSet) -> G2Result:
    """Replica peak at the optical delay over the mean flanking triplet area."""
    needed = (PeakLabel.DELAY0, PeakLabel.TRIPLET1L, PeakLabel.TRIPLET1R)
    for k in needed:
        if k not in peaks.areas:
            raise AnalysisError(f"peak set lacks {k.value}")
    if PeakLabel.DELAY0 in peaks.unusable:
        raise AnalysisError(
            "the replica peak sits inside the dead-time region; "
            "use an optical delay beyond dead time plus a few lifetimes"
        )
    a = peaks.areas[PeakLabel.DELAY0]
    side = 0.5 * (peaks.areas[PeakLabel.TRIPLET1L] + peaks.areas[PeakLabel.TRIPLET1R])
    if side <= 0:
        raise AnalysisError("triplet side peaks are empty; nothing to normalize against")
    raw_side = peaks.raw_counts[PeakLabel.TRIPLET1L] + peaks.raw_counts[PeakLabel.TRIPLET1R]
    g2 = a / side
    return G2Result(
        g2_zero=g2,
        scheme="pulsed_delay",
        raw_value=g2,
        stat_error=_ratio_error(g2, peaks.raw_counts[PeakLabel.DELAY0], raw_side),
    )


def read_dip(hist: CorrelationHistogram, at_ps: int, halfwidth_ps: int) -> tuple[float, float]:
    """Mean normalized value (and its counting error) in a narrow window.

    Keep the window small against the correlation time: the dip is a cusp
    and a wide window averages its walls upward.
    """
    if not hist.normalized:
        raise ConfigError("read_dip needs a normalized histogram")
    centers = hist.centers_ps
    sel = (centers >= at_ps - halfwidth_ps) & (centers <= at_ps + halfwidth_ps)
    n = int(sel.sum())
    if n == 0:
        raise ConfigError("dip window contains no bins")
    value = float(hist.g2[sel].mean())
    err = math.sqrt(float(hist.g2_var[sel].sum())) / n
    return value, err


def g2_cw_from_dip(dip_value: float, t_ratio: float, dip_err: float = 0.0) -> G2Result:
    """Invert the single-detector mixing floor.

    The dip at the optical delay reads (R^2+T^2) g2(dt) + RT g2(0) + RT
    g2(2dt); with the delay well beyond the correlation time this is
    (1 - RT) + RT g2(0), so g2(0) = (dip - (1 - RT)) / RT.
    """
    if not 0.0 < t_ratio < 1.0:
        raise ConfigError("t_ratio must be strictly between 0 and 1")
    rt = t_ratio * (1.0 - t_ratio)
    floor = 1.0 - rt
    if dip_value < floor - 1e-12:
        raise AnalysisError(
            f"dip {dip_value:.4f} lies below the mixing floor {floor:.4f}: "
            "statistical undershoot or a wrong splitting ratio"
        )
    g2 = max(0.0, (dip_value - floor) / rt)
    return G2Result(
        g2_zero=g2,
        scheme="cw_delay",
        raw_value=dip_value,
        stat_error=dip_err / rt,
    )


def background_correct(result: G2Result, rho: float) -> G2Result:
    """Remove uncorrelated background light with signal fraction rho.

    Background mixes as g2_raw = 1 - rho^2 + rho^2 g2_true, so the inverse
    is (g2_raw - (1 - rho^2)) / rho^2, clamped at zero (flagged) when noise
    pushes it negative.
    """
    if not 0.0 < rho <= 1.0:
        raise ConfigError("rho must be in (0, 1]")
    if result.corrected:
        raise AnalysisError("result is already background-corrected")
    g2 = (result.g2_zero - (1.0 - rho * rho)) / (rho * rho)
    clamped = g2 < 0.0
    return replace(
        result,
        g2_zero=max(0.0, g2),
        stat_error=result.stat_error / (rho * rho),
        background_rho=rho,
        corrected=True,
        clamped=clamped,
    )


def compose_mixing(
    g_std: CorrelationHistogram, t_ratio: float, delay_ps: int
) -> CorrelationHistogram:
    """Predict the single-detector correlation from a measured plain one.

    Splitting with transmission T and delaying one arm by dt mixes the
    correlation linearly:

        g2_mix(tau) = (T^2+R^2) g2(tau) + TR g2(tau - dt) + TR g2(tau + dt)

    The input must be normalized and span at least twice the delay; negative
    arguments use the symmetry g2(-tau) = g2(tau).  The output is trimmed to
    the range where all three terms are available; its raw counts are zeroed
    because a composed histogram has no single counting origin.
    """
    if not g_std.normalized:
        raise ConfigError("compose_mixing needs a normalized histogram")
    if not 0.0 < t_ratio < 1.0:
        raise ConfigError("t_ratio must be strictly between 0 and 1")
    span = g_std.t_max_ps - g_std.t_min_ps
    if span < 2 * delay_ps:
        raise ConfigError("histogram span must cover twice the optical delay")
    if delay_ps % g_std.bin_width_ps != 0 or g_std.t_min_ps % g_std.bin_width_ps != 0:
        raise ConfigError("delay and axis origin must sit on the bin grid")

    n = g_std.n_bins
    m = g_std.t_min_ps // g_std.bin_width_ps
    s = delay_ps // g_std.bin_width_ps

    def look(i: int) -> int:
        if 0 <= i < n:
            return i
        j = -i - 1 - 2 * m  # mirror image of the bin across tau = 0
        return j if 0 <= j < n else -1

    w0 = t_ratio**2 + (1.0 - t_ratio) ** 2
    w1 = t_ratio * (1.0 - t_ratio)
    g = g_std.g2
    v = g_std.g2_var
    out_g = np.empty(n)
    out_v = np.empty(n)
    ok = np.zeros(n, dtype=bool)
    for i in range(n):
        jm, jp = look(i - s), look(i + s)
        if jm < 0 or jp < 0:
            continue
        out_g[i] = w0 * g[i] + w1 * g[jm] + w1 * g[jp]
        out_v[i] = w0**2 * v[i] + w1**2 * v[jm] + w1**2 * v[jp]
        ok[i] = True
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        raise ConfigError("no bins where the mixing composition is defined")
    i0, i1 = int(idx[0]), int(idx[-1]) + 1
    if not ok[i0:i1].all():
        raise ConfigError("mixing composition left holes in the span")  # pragma: no cover
    return CorrelationHistogram(
        bin_width_ps=g_std.bin_width_ps,
        t_min_ps=g_std.t_min_ps + i0 * g_std.bin_width_ps,
        t_max_ps=g_std.t_min_ps + i1 * g_std.bin_width_ps,
        counts=np.zeros(i1 - i0, dtype=np.int64),
        total_events=g_std.total_events,
        total_time_ps=g_std.total_time_ps,
        estimator=g_std.estimator,
        normalized=True,
        g2=out_g[i0:i1].copy(),
        g2_var=out_v[i0:i1].copy(),
    )


@dataclass(frozen=True)
class ConstraintReport:
    delay_ps: int
    dead_time_ps: int
    lifetime_ps: float
    period_ps: int                 # 0 for continuous-wave operation
    min_delay_ps: float
    max_delay_ps: float            # inf for continuous-wave operation
    delay_above_dead_zone: bool
    delay_below_period_cap: bool
    acquisition_efficiency: float  # 2TR: fraction of pairs the delay scheme converts
    efficiency_deficit: float      # distance from the T=R optimum of 1/2
    passed: bool

    def as_text(self) -> str:
        lines = [
            f"delay_ps={self.delay_ps}",
            f"dead_time_ps={self.dead_time_ps}",
            f"lifetime_ps={self.lifetime_ps:g}",
            f"period_ps={self.period_ps}",
            f"min_delay_ps={self.min_delay_ps:g}",
            f"max_delay_ps={self.max_delay_ps:g}",
            f"delay_above_dead_zone={self.delay_above_dead_zone}",
            f"delay_below_period_cap={self.delay_below_period_cap}",
            f"acquisition_efficiency={self.acquisition_efficiency:.6g}",
            f"efficiency_deficit={self.efficiency_deficit:.6g}",
            f"passed={self.passed}",
        ]
        return "\n".join(lines) + "\n"


def check_design_constraints(
    delay_ps: int,
    dead_time_ps: int,
    lifetime_ps: float,
    rep_rate_hz: float = 0.0,
    t_ratio: float = 0.5,
    lifetime_factor: float = 3.0,
    period_factor: float = 2.0,
) -> ConstraintReport:
    """Is the optical delay usable?

    The replica peak must clear the dead time plus a few lifetimes of peak
    width (``lifetime_factor``), and in pulsed operation must stay below
    period/``period_factor`` so the triplet structure of neighbouring orders
    cannot interleave.  Also reports the pair-acquisition efficiency 2TR of
    the single-detector scheme, which peaks at 1/2 for a balanced splitter.
    """
    if not 0.0 < t_ratio < 1.0:
        raise ConfigError("t_ratio must be strictly between 0 and 1")
    min_delay = dead_time_ps + lifetime_factor * lifetime_ps
    ok_lower = delay_ps > min_delay
    if rep_rate_hz > 0:
        period = int(round(PS_PER_S / rep_rate_hz))
        max_delay = period / period_factor
        ok_upper = delay_ps < max_delay
    else:
        period = 0
        max_delay = float("inf")
        ok_upper = True
    eff = 2.0 * t_ratio * (1.0 - t_ratio)
    return ConstraintReport(
        delay_ps=delay_ps,
        dead_time_ps=dead_time_ps,
        lifetime_ps=lifetime_ps,
        period_ps=period,
        min_delay_ps=min_delay,
        max_delay_ps=max_delay,
        delay_above_dead_zone=ok_lower,
        delay_below_period_cap=ok_upper,
        acquisition_efficiency=eff,
        efficiency_deficit=0.5 - eff,
        passed=ok_lower and ok_upper,
    )
