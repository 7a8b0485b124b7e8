"""End-to-end runs: source -> optics -> detection -> correlation -> numbers.

Every stage draws from its own child of one seed sequence, so a run is
reproducible bit-for-bit from ``(config, seed)`` while the stages stay
statistically independent.  ``run_pipeline`` executes one scheme;
``compare_schemes`` runs the single-detector delay scheme and the
two-detector reference back to back on independent seeds and reports both
zero-delay values side by side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import io as tio
from .analysis import (
    ConstraintReport,
    G2Result,
    PeakLabel,
    PeakSet,
    background_correct,
    check_design_constraints,
    g2_cw_from_dip,
    g2_pulsed_delay,
    g2_pulsed_standard,
    integrate_peaks,
    read_dip,
)
from .config import RunConfig
from .correlator import (
    CorrelationHistogram,
    Estimator,
    NormalizationContext,
    NormalizationMode,
    adjacent_interval_histogram,
    all_pairs_correlation,
    normalize,
    start_stop_histogram,
)
from .detector import DetectionStats, detect_with_stats
from .emission import (
    ExcitationMode,
    add_background,
    cw_emission_rate_hz,
    simulate_cw_emission,
    simulate_poisson_source,
    simulate_pulsed_emission,
)
from .errors import ConfigError, ConstraintViolation
from .optics import Scheme, split_delay_merge, split_two_arms
from .streams import PS_PER_S, StreamOrigin, TimestampStream, merge_streams


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    emitted: int
    streams: dict                      # "detection" or "start"/"stop" -> TimestampStream
    stats: dict                        # same keys -> DetectionStats
    raw_histogram: CorrelationHistogram
    histogram: CorrelationHistogram    # normalized when the mode allows it
    constraint: ConstraintReport | None
    peaks: PeakSet | None
    result: G2Result | None
    report: str


@dataclass(frozen=True)
class CompareResult:
    delay_run: RunResult
    hbt_run: RunResult
    g2_delay: G2Result
    g2_hbt: G2Result
    difference: float
    combined_error: float
    within_3sigma: bool
    side_count_ratio: float            # delay-side vs hbt-side raw pair counts
    report: str


def _stage_seeds(cfg: RunConfig, seed_key: tuple = ()) -> list:
    root = np.random.SeedSequence((int(cfg.excitation.seed),) + tuple(int(k) for k in seed_key))
    return [int(s) for s in root.generate_state(5, dtype=np.uint64)]


def simulate_source(cfg: RunConfig, seed: int) -> TimestampStream:
    exc = replace(cfg.excitation, seed=seed)
    if cfg.source == "laser":
        return simulate_poisson_source(cfg.laser_rate_hz, exc)
    if exc.mode is ExcitationMode.PULSED:
        return simulate_pulsed_emission(cfg.emitter, exc)
    return simulate_cw_emission(cfg.emitter, exc)


def run_simulation(cfg: RunConfig, seed_key: tuple = ()) -> tuple[int, dict, dict]:
    """Source through detection.  Returns (emitted, streams, stats)."""
    s_emit, s_bg, s_opt, s_det1, s_det2 = _stage_seeds(cfg, seed_key)
    emission = simulate_source(cfg, s_emit)
    if cfg.emitter is not None and cfg.emitter.background_rate_hz > 0:
        emission = add_background(emission, cfg.emitter.background_rate_hz, s_bg)
    emitted = len(emission)

    if cfg.channel.scheme is Scheme.SINGLE_DETECTOR_DELAY:
        merged = split_delay_merge(emission, cfg.channel, s_opt)
        det, st = detect_with_stats(merged, cfg.detector, s_det1)
        return emitted, {"detection": det}, {"detection": st}

    arm_t, arm_r = split_two_arms(emission, cfg.channel, s_opt)
    det_t, st_t = detect_with_stats(arm_t, cfg.detector, s_det1)
    det_r, st_r = detect_with_stats(arm_r, cfg.detector, s_det2)
    return emitted, {"start": det_t, "stop": det_r}, {"start": st_t, "stop": st_r}


def correlate_run(cfg: RunConfig, streams: dict) -> CorrelationHistogram:
    tac = cfg.tac
    if cfg.channel.scheme is Scheme.SINGLE_DETECTOR_DELAY:
        det = streams["detection"]
        if cfg.estimator is Estimator.START_STOP:
            return start_stop_histogram(det, det, tac)
        if cfg.estimator is Estimator.ADJACENT_INTERVAL:
            return adjacent_interval_histogram(det, tac.bin_width_ps, tac.span_ps)
        return all_pairs_correlation(det, tac.bin_width_ps, tac.span_ps)
    if cfg.estimator is Estimator.START_STOP:
        return start_stop_histogram(streams["start"], streams["stop"], tac)
    # interval estimators see the union of both detector records
    merged = merge_streams(streams["start"], streams["stop"], origin=StreamOrigin.EMISSION)
    if cfg.estimator is Estimator.ADJACENT_INTERVAL:
        return adjacent_interval_histogram(merged, tac.bin_width_ps, tac.span_ps)
    return all_pairs_correlation(merged, tac.bin_width_ps, tac.span_ps)


def analysis_center_ps(cfg: RunConfig) -> int:
    """Histogram coordinate of zero optical delay."""
    if cfg.estimator is Estimator.START_STOP:
        return cfg.tac.electrical_delay_ps
    return 0


def _cw_correlation_time_ps(cfg: RunConfig) -> float:
    if cfg.emitter is None:
        return 0.0
    gamma_per_ps = 1.0 / cfg.emitter.lifetime_ps
    pump_per_ps = cfg.emitter.pump_rate_hz / PS_PER_S
    return 1.0 / (gamma_per_ps + pump_per_ps)


def normalization_context(cfg: RunConfig) -> NormalizationContext:
    center = analysis_center_ps(cfg)
    if cfg.normalization is NormalizationMode.PULSED:
        return NormalizationContext(
            mode=NormalizationMode.PULSED,
            period_ps=cfg.excitation.period_ps,
            center_ps=center,
            reference_orders=cfg.analysis.reference_orders,
        )
    if cfg.normalization is NormalizationMode.CW:
        span = cfg.tac.span_ps
        lo, hi = cfg.analysis.plateau_lo_ps, cfg.analysis.plateau_hi_ps
        if hi <= lo:
            lo, hi = int(0.55 * span), int(0.9 * span)
        features = []
        halfwidth = 0
        if cfg.emitter is not None:
            halfwidth = int(math.ceil(5.0 * _cw_correlation_time_ps(cfg)))
            marks = [center]
            if cfg.channel.delay_ps:
                marks += [center - cfg.channel.delay_ps, center + cfg.channel.delay_ps]
            features = [m for m in marks if -halfwidth < m < span + halfwidth]
        return NormalizationContext(
            mode=NormalizationMode.CW,
            center_ps=center,
            plateau_ps=(lo, hi),
            feature_ps=tuple(sorted(features)),
            feature_halfwidth_ps=halfwidth,
        )
    return NormalizationContext(mode=NormalizationMode.RATE)


def _signal_fraction(cfg: RunConfig) -> float:
    """rho = signal/(signal+background); explicit setting wins over rates."""
    if cfg.analysis.background_rho < 1.0:
        return cfg.analysis.background_rho
    if cfg.emitter is None or cfg.emitter.background_rate_hz <= 0:
        return 1.0
    if cfg.excitation.mode is ExcitationMode.PULSED:
        sig = (cfg.emitter.excitation_prob * (1.0 + cfg.emitter.pair_prob)
               * cfg.excitation.rep_rate_hz)
    else:
        sig = cw_emission_rate_hz(cfg.emitter)
    return sig / (sig + cfg.emitter.background_rate_hz)


def analyze_run(
    cfg: RunConfig, hist: CorrelationHistogram
) -> tuple[PeakSet | None, G2Result | None]:
    center = analysis_center_ps(cfg)
    is_delay = cfg.channel.scheme is Scheme.SINGLE_DETECTOR_DELAY
    if cfg.excitation.mode is ExcitationMode.PULSED:
        if cfg.estimator is not Estimator.START_STOP:
            # peak windows are laid out around the electrical delay; interval
            # estimators start at tau = 0 where the center window cannot fit
            return None, None
        dead_zone = cfg.detector.dead_time_ps if is_delay else 0
        peaks = integrate_peaks(
            hist,
            cfg.excitation.period_ps,
            cfg.channel.delay_ps if is_delay else 0,
            cfg.auto_window_ps,
            center_ps=center,
            dead_zone_ps=dead_zone,
            subtract_floor=cfg.analysis.subtract_floor,
        )
        result = g2_pulsed_delay(peaks) if is_delay else g2_pulsed_standard(peaks)
    else:
        if not hist.normalized:
            return None, None
        dip_at = center + (cfg.channel.delay_ps if is_delay else 0)
        value, err = read_dip(hist, dip_at, cfg.analysis.dip_halfwidth_ps)
        if is_delay:
            result = g2_cw_from_dip(value, cfg.channel.t_ratio, err)
        else:
            result = G2Result(g2_zero=value, scheme="cw_hbt", raw_value=value, stat_error=err)
        peaks = None
    rho = _signal_fraction(cfg)
    if rho < 1.0:
        result = background_correct(result, rho)
    return peaks, result


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _report_text(
    cfg: RunConfig,
    emitted: int,
    streams: dict,
    stats: dict,
    hist: CorrelationHistogram,
    constraint: ConstraintReport | None,
    peaks: PeakSet | None,
    result: G2Result | None,
) -> str:
    lines = ["# g2delay run report"]
    lines.append(f"label = {cfg.label}")
    lines.append(f"scheme = {cfg.channel.scheme.value}")
    lines.append(f"mode = {cfg.excitation.mode.value}")
    lines.append(f"source = {cfg.source}")
    lines.append(f"duration_ps = {cfg.excitation.duration_ps}")
    lines.append(f"emitted = {emitted}")
    for name in sorted(streams):
        s, st = streams[name], stats[name]
        lines.append(
            f"{name}.detected = {len(s)}  rate_hz = {_fmt(s.rate_hz)}  "
            f"afterpulses = {st.afterpulses_spawned}  lost_to_pool = {st.spawns_lost_to_pool}"
        )
    lines.append(
        f"histogram: bins = {hist.n_bins}  bin_width_ps = {hist.bin_width_ps}  "
        f"estimator = {hist.estimator.value}  normalized = {hist.normalized}"
    )
    if constraint is not None:
        for ln in constraint.as_text().strip().splitlines():
            lines.append(f"constraint.{ln}")
    if peaks is not None:
        for label in sorted(peaks.areas, key=lambda k: k.value):
            flag = "  UNUSABLE" if label in peaks.unusable else ""
            lines.append(
                f"peak.{label.value}: area = {_fmt(peaks.areas[label])}  "
                f"raw = {int(peaks.raw_counts[label])}{flag}"
            )
    if result is not None:
        err = "nan" if math.isnan(result.stat_error) else _fmt(result.stat_error)
        lines.append(
            f"g2_zero = {_fmt(result.g2_zero)} +- {err}  scheme = {result.scheme}  "
            f"raw = {_fmt(result.raw_value)}  corrected = {result.corrected}"
        )
        if result.clamped:
            lines.append("note: background correction clamped a negative value to zero")
    return "\n".join(lines) + "\n"


def run_pipeline(
    cfg: RunConfig,
    out_dir: str | Path | None = None,
    seed_key: tuple = (),
    strict: bool = False,
) -> RunResult:
    constraint = None
    if cfg.channel.scheme is Scheme.SINGLE_DETECTOR_DELAY:
        constraint = check_design_constraints(
            cfg.channel.delay_ps,
            cfg.detector.dead_time_ps,
            cfg.emitter.lifetime_ps if cfg.emitter is not None else 0.0,
            rep_rate_hz=cfg.excitation.rep_rate_hz,
            t_ratio=cfg.channel.t_ratio,
        )
        if strict and not constraint.passed:
            raise ConstraintViolation(
                "delay design checks failed:\n" + constraint.as_text()
            )

    emitted, streams, stats = run_simulation(cfg, seed_key)
    raw = correlate_run(cfg, streams)
    hist = normalize(raw, normalization_context(cfg))
    peaks, result = analyze_run(cfg, hist)
    report = _report_text(cfg, emitted, streams, stats, hist, constraint, peaks, result)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name in sorted(streams):
            tio.write_stream(out / f"{name}.bin", streams[name])
        tio.write_histogram_csv(out / "histogram.csv", hist)
        (out / "report.txt").write_text(report)

    return RunResult(
        config=cfg,
        emitted=emitted,
        streams=streams,
        stats=stats,
        raw_histogram=raw,
        histogram=hist,
        constraint=constraint,
        peaks=peaks,
        result=result,
        report=report,
    )


def _hbt_variant(cfg: RunConfig) -> RunConfig:
    channel = replace(cfg.channel, scheme=Scheme.STANDARD_HBT, delay_ps=0)
    label = f"{cfg.label}-hbt" if cfg.label else "hbt-reference"
    return replace(cfg, label=label, channel=channel)


def _side_counts(run: RunResult) -> float:
    peaks = run.peaks
    if peaks is None:
        return float(sum(len(s) for s in run.streams.values()))
    if peaks.delay_ps > 0:
        keys = (PeakLabel.TRIPLET1L, PeakLabel.TRIPLET1R)
    else:
        keys = (PeakLabel.SIDE1_MINUS, PeakLabel.SIDE1_PLUS)
    return float(sum(peaks.raw_counts.get(k, 0.0) for k in keys))


def compare_schemes(
    cfg: RunConfig, out_dir: str | Path | None = None, strict: bool = False
) -> CompareResult:
    """Run the delay scheme and the two-detector reference on one emitter.

    The two runs use independent random streams derived from the same
    config seed.  Both see the same source model, detector model, and
    correlator settings, so their zero-delay values should agree within
    counting errors, and the usable pair rate (side-peak raw counts) should
    match -- the delay scheme acquires 2TR of the pairs, same as the
    two-detector scheme.
    """
    if cfg.channel.scheme is not Scheme.SINGLE_DETECTOR_DELAY:
        raise ConfigError("compare_schemes starts from a delay-scheme config")
    base = Path(out_dir) if out_dir is not None else None
    delay_run = run_pipeline(
        cfg, None if base is None else base / "delay", seed_key=(1,), strict=strict
    )
    hbt_run = run_pipeline(
        _hbt_variant(cfg), None if base is None else base / "hbt", seed_key=(2,)
    )
    gd, gh = delay_run.result, hbt_run.result
    if gd is None or gh is None:
        raise ConfigError("comparison needs a normalization mode that yields g2 values")
    diff = abs(gd.g2_zero - gh.g2_zero)
    err = math.hypot(gd.stat_error, gh.stat_error)
    ok = bool(diff <= 3.0 * err) if err > 0 and not math.isnan(err) else False
    hbt_sides = _side_counts(hbt_run)
    ratio = _side_counts(delay_run) / hbt_sides if hbt_sides > 0 else float("nan")

    lines = ["# scheme comparison"]
    lines.append(f"g2_delay = {_fmt(gd.g2_zero)} +- {_fmt(gd.stat_error)} ({gd.scheme})")
    lines.append(f"g2_hbt = {_fmt(gh.g2_zero)} +- {_fmt(gh.stat_error)} ({gh.scheme})")
    lines.append(f"difference = {_fmt(diff)}")
    lines.append(f"combined_error = {_fmt(err)}")
    lines.append(f"within_3sigma = {ok}")
    lines.append(f"side_count_ratio = {_fmt(ratio)}")
    report = "\n".join(lines) + "\n"
    if base is not None:
        base.mkdir(parents=True, exist_ok=True)
        (base / "compare.txt").write_text(report)
    return CompareResult(
        delay_run=delay_run,
        hbt_run=hbt_run,
        g2_delay=gd,
        g2_hbt=gh,
        difference=diff,
        combined_error=err,
        within_3sigma=ok,
        side_count_ratio=ratio,
        report=report,
    )
