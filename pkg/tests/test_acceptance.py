"""End-to-end physics contract of the package, one test per criterion.

Each test runs a full simulation/analysis chain at a fixed seed and checks a
quantitative statement about the result: scheme equivalence, the beamsplitter
mixing floor, triplet area ratios, composition of the single-detector
histogram from a plain one, artifact fidelity, estimator validity windows,
the dead-time rate law, laser controls, and reproducibility.  Every test
records a one-line verdict that the terminal summary reprints as a block.

Tolerances are counting-statistics driven: runs are sized so the checked
quantity sits several standard errors inside its window, and seeds are fixed
so the whole suite is deterministic.
"""
from __future__ import annotations

import filecmp
import time

import numpy as np
import pytest
from conftest import record_acceptance

from g2delay import (
    AnalysisError,
    BadMagicError,
    ConfigError,
    DetectorModel,
    ExcitationConfig,
    ExcitationMode,
    NormalizationContext,
    NormalizationMode,
    PeakLabel,
    adjacent_interval_histogram,
    afterpulse_artifact_profile,
    all_pairs_correlation,
    compare_schemes,
    compose_mixing,
    detect,
    g2_cw_from_dip,
    loads_config,
    normalize,
    read_histogram_csv,
    read_stream,
    run_pipeline,
    simulate_poisson_source,
    write_histogram_csv,
    write_stream,
)
from g2delay.cli import main


def _verdict(num: int, name: str, ok: bool, detail: str) -> bool:
    state = "PASS" if ok else "FAIL"
    record_acceptance(f"ACCEPTANCE {num} {name}: {state}  ({detail})")
    return ok


# --- 1: both schemes recover the same g2(0) on an antibunched emitter -------------

SCHEME_EQUIVALENCE = """\
label = scheme-equivalence
mode = pulsed
duration_s = 10.0
seed = 11011
rep_rate_hz = 1e6
emitter.lifetime_ps = 29500
emitter.g2_target = 0.05
emitter.excitation_prob = 1.0
channel.scheme = delay
channel.delay_ps = 373000
detector.efficiency = 0.08
detector.dead_time_ps = 22000
tac.electrical_delay_ps = 1500000
tac.bin_width_ps = 1000
tac.span_ps = 7000000
estimator = start_stop
normalization = pulsed
analysis.window_ps = 75000
"""


def test_delay_scheme_and_hbt_agree_on_g2_zero():
    t0 = time.monotonic()
    cmp = compare_schemes(loads_config(SCHEME_EQUIVALENCE))
    elapsed = time.monotonic() - t0
    gd, gh = cmp.g2_delay, cmp.g2_hbt
    sigma = float(np.hypot(gd.stat_error, gh.stat_error))
    n_sigma = abs(gd.g2_zero - gh.g2_zero) / sigma
    ok = (
        abs(gd.g2_zero - 0.05) <= 0.01
        and abs(gh.g2_zero - 0.05) <= 0.01
        and cmp.within_3sigma
        and elapsed < 60.0
    )
    _verdict(
        1, "scheme equivalence (pulsed g2_zero)", ok,
        f"delay {gd.g2_zero:.4f}+-{gd.stat_error:.4f}, "
        f"hbt {gh.g2_zero:.4f}+-{gh.stat_error:.4f}, "
        f"gap {n_sigma:.2f} sigma, {elapsed:.1f} s",
    )
    assert abs(gd.g2_zero - 0.05) <= 0.01
    assert abs(gh.g2_zero - 0.05) <= 0.01
    assert cmp.within_3sigma
    assert elapsed < 60.0


# --- 2: cw mixing floor at the optical delay, and the dip inversion ---------------

CW_FLOOR = """\
label = cw-floor
mode = cw
duration_s = 40.0
seed = 20202
emitter.lifetime_ps = 100000
emitter.pump_rate_hz = 5e5
channel.scheme = delay
channel.delay_ps = 1500000
detector.efficiency = 0.7
detector.dead_time_ps = 22000
tac.bin_width_ps = 1000
tac.span_ps = 2000000
estimator = all_pairs
normalization = rate
analysis.dip_halfwidth_ps = 3000
"""


def test_cw_dip_floor_and_algebraic_inversion():
    run = run_pipeline(loads_config(CW_FLOOR))
    detected = len(run.streams["detection"])
    dip = run.result.raw_value
    # inversion anchor points: a dip of 0.764 at T=0.5 means g2(0)=0.056,
    # the floor itself (0.75) means 0, and 0.875 sits exactly halfway up
    inv = g2_cw_from_dip(0.764, 0.5).g2_zero
    floor = g2_cw_from_dip(0.75, 0.5).g2_zero
    half = g2_cw_from_dip(0.875, 0.5).g2_zero
    ok = (
        detected >= 1_000_000
        and abs(dip - 0.75) <= 0.02
        and inv == pytest.approx(0.056, abs=1e-12)
        and floor == pytest.approx(0.0, abs=1e-12)
        and half == pytest.approx(0.5, abs=1e-12)
    )
    _verdict(
        2, "cw mixing floor and inversion", ok,
        f"dip {dip:.4f} at the delay on {detected} detections, "
        f"invert(0.764)={inv:.4f}",
    )
    assert detected >= 1_000_000
    assert abs(dip - 0.75) <= 0.02
    assert inv == pytest.approx(0.056, abs=1e-12)
    assert floor == pytest.approx(0.0, abs=1e-12)
    assert half == pytest.approx(0.5, abs=1e-12)


# --- 3: triplet area ratios follow the splitting ratio -----------------------------

TRIPLET_RATIO = """\
mode = pulsed
duration_s = 2.0
seed = 33033
rep_rate_hz = 1e6
emitter.lifetime_ps = 10000
emitter.excitation_prob = 1.0
emitter.pair_prob = 0.0
channel.scheme = delay
channel.delay_ps = 300000
channel.t_ratio = {t}
detector.efficiency = 0.3
detector.dead_time_ps = 22000
tac.electrical_delay_ps = 1500000
tac.bin_width_ps = 1000
tac.span_ps = 7000000
estimator = start_stop
normalization = pulsed
"""

TRIPLET = (PeakLabel.TRIPLET1L, PeakLabel.TRIPLET1, PeakLabel.TRIPLET1R)


def test_triplet_areas_split_as_rt_and_r2_plus_t2():
    worst = 0.0
    details = []
    for t in (0.5, 0.7):
        run = run_pipeline(loads_config(TRIPLET_RATIO.format(t=t)))
        areas = np.array([run.peaks.areas[k] for k in TRIPLET])
        frac = areas / areas.sum()
        r = 1.0 - t
        want = np.array([r * t, r * r + t * t, r * t])
        rel = float(np.max(np.abs(frac - want) / want))
        worst = max(worst, rel)
        details.append(f"T={t}: {frac[0]:.3f}:{frac[1]:.3f}:{frac[2]:.3f}")
    ok = worst <= 0.05
    _verdict(
        3, "triplet area ratios", ok,
        "; ".join(details) + f", worst deviation {100 * worst:.1f}%",
    )
    assert worst <= 0.05


# --- 4: mixing composition reproduces the measured single-detector histogram ------

MIXING_PULSED = """\
mode = pulsed
duration_s = 2.0
rep_rate_hz = 2e6
emitter.lifetime_ps = 10000
emitter.excitation_prob = 1.0
emitter.pair_prob = 0.2
channel.scheme = {scheme}
channel.delay_ps = 200000
channel.t_ratio = 0.5
detector.efficiency = 0.25
detector.dead_time_ps = 0
tac.bin_width_ps = 4000
tac.span_ps = {span}
estimator = all_pairs
normalization = rate
seed = {seed}
"""

MIXING_CW = """\
mode = cw
duration_s = 4.0
emitter.lifetime_ps = 10000
emitter.pump_rate_hz = 2e6
channel.scheme = {scheme}
channel.delay_ps = 200000
channel.t_ratio = 0.5
detector.efficiency = 0.25
detector.dead_time_ps = 0
tac.bin_width_ps = 4000
tac.span_ps = {span}
estimator = all_pairs
normalization = rate
seed = {seed}
"""


def _max_sigma_gap(template: str, seed_mix: int, seed_ref: int) -> tuple[float, int]:
    """Measured delayed-arm histogram vs composition of an independent plain
    run; returns the worst pointwise deviation in combined standard errors.

    The two runs use different seeds, so their counting errors are
    independent and add in quadrature.  The plain run spans one delay more
    than the mixed one because composition consumes that much of its axis.
    """
    mix = run_pipeline(loads_config(
        template.format(scheme="delay", span=1_000_000, seed=seed_mix)))
    ref = run_pipeline(loads_config(
        template.format(scheme="hbt", span=1_200_000, seed=seed_ref)))
    composed = compose_mixing(ref.histogram, 0.5, 200_000)
    measured = mix.histogram
    assert composed.t_min_ps == measured.t_min_ps
    assert composed.bin_width_ps == measured.bin_width_ps
    nb = min(composed.n_bins, measured.n_bins)
    diff = np.abs(measured.g2[:nb] - composed.g2[:nb])
    sigma = np.sqrt(measured.g2_var[:nb] + composed.g2_var[:nb])
    z = np.divide(diff, sigma, out=np.zeros_like(diff), where=sigma > 0)
    # a nonzero difference with zero combined error cannot happen: any
    # nonzero normalized value carries its own counting error
    assert not np.any((diff > 0) & (sigma == 0))
    return float(z.max()), nb


def test_composed_mixing_matches_direct_measurement_pointwise():
    z_pulsed, nb_pulsed = _max_sigma_gap(MIXING_PULSED, 42001, 42002)
    z_cw, nb_cw = _max_sigma_gap(MIXING_CW, 41001, 41002)
    ok = z_pulsed <= 3.0 and z_cw <= 3.0
    _verdict(
        4, "mixing composition vs direct measurement", ok,
        f"pulsed worst {z_pulsed:.2f} sigma over {nb_pulsed} bins, "
        f"cw worst {z_cw:.2f} sigma over {nb_cw} bins",
    )
    assert z_pulsed <= 3.0
    assert z_cw <= 3.0


# --- 5: dead-time void is exact, afterpulses pile up right after it ---------------

def test_dead_time_void_and_afterpulse_excess():
    exc = ExcitationConfig(mode=ExcitationMode.CW, duration_ps=int(20e12), seed=50505)
    src = simulate_poisson_source(5e4, exc)
    kw = dict(efficiency=1.0, dead_time_ps=22_000)
    noisy = detect(src, DetectorModel(afterpulse_prob=0.01, **kw), seed=77)
    quiet = detect(src, DetectorModel(afterpulse_prob=0.0, **kw), seed=77)
    prof_noisy = afterpulse_artifact_profile(noisy, window_ps=100_000, bin_width_ps=1000)
    prof_quiet = afterpulse_artifact_profile(quiet, window_ps=100_000, bin_width_ps=1000)
    below = slice(0, 22)
    band = slice(22, 100)
    void_noisy = int(prof_noisy.counts[below].sum())
    void_quiet = int(prof_quiet.counts[below].sum())
    in_band = int(prof_noisy.counts[band].sum())
    baseline = int(prof_quiet.counts[band].sum())
    ratio = in_band / baseline
    ok = void_noisy == 0 and void_quiet == 0 and ratio > 1.5
    _verdict(
        5, "dead-time void and afterpulse excess", ok,
        f"adjacent counts below 22 ns: {void_noisy}/{void_quiet}, "
        f"band 22-100 ns excess ratio {ratio:.2f}",
    )
    assert void_noisy == 0
    assert void_quiet == 0
    assert ratio > 1.5


# --- 6: interval estimator agrees with all-pairs inside its validity window -------

def test_adjacent_estimator_valid_at_small_occupancy():
    duration_ps = int(1e12)
    exc = ExcitationConfig(mode=ExcitationMode.CW, duration_ps=duration_ps, seed=60606)
    src = simulate_poisson_source(1e6, exc)
    bin_width, span = 25_000, 1_000_000
    adj = normalize(
        adjacent_interval_histogram(src, bin_width, span),
        NormalizationContext(mode=NormalizationMode.CW, plateau_ps=(0, span)),
    )
    pairs = normalize(
        all_pairs_correlation(src, bin_width, span),
        NormalizationContext(mode=NormalizationMode.RATE),
    )
    rate_per_ps = len(src) / duration_ps
    band = pairs.centers_ps < 0.05 / rate_per_ps
    band_dev = float(np.max(np.abs(adj.g2[band] - pairs.g2[band]) / pairs.g2[band]))
    flat_dev = float(np.max(np.abs(pairs.g2 - 1.0)))
    ok = len(src) >= 1_000_000 and band_dev <= 0.02 and flat_dev <= 0.02
    _verdict(
        6, "estimator validity window", ok,
        f"{len(src)} events, adjacent vs all-pairs {100 * band_dev:.2f}% "
        f"in {int(band.sum())} low-occupancy bins, "
        f"all-pairs flat within {flat_dev:.4f}",
    )
    assert len(src) >= 1_000_000
    assert band_dev <= 0.02
    assert flat_dev <= 0.02


# --- 7: non-paralyzable dead time follows the classical rate law -------------------

def test_registered_rate_follows_dead_time_law():
    dead = 22_000
    worst = 0.0
    details = []
    for occupancy, duration_ps in ((0.01, 4.4e12), (0.1, 6.6e11), (0.5, 2.2e11)):
        rate_hz = occupancy / dead * 1e12
        exc = ExcitationConfig(
            mode=ExcitationMode.CW, duration_ps=int(duration_ps), seed=70707)
        src = simulate_poisson_source(rate_hz, exc)
        det = detect(src, DetectorModel(efficiency=1.0, dead_time_ps=dead), seed=7)
        measured = len(det) / (duration_ps * 1e-12)
        expected = rate_hz / (1.0 + occupancy)
        rel = abs(measured / expected - 1.0)
        worst = max(worst, rel)
        details.append(f"r*t_dead={occupancy}: {100 * rel:.2f}%")
    ok = worst <= 0.01
    _verdict(7, "dead-time rate law", ok, ", ".join(details))
    assert worst <= 0.01


# --- 8: laser surrogates show no antibunching in either mode ----------------------

PULSED_LASER = """\
label = pulsed-laser-control
mode = pulsed
duration_s = 2.0
seed = 80801
rep_rate_hz = 1e6
source = laser
laser.rate_hz = 1e6
channel.scheme = delay
channel.delay_ps = 300000
detector.efficiency = 0.3
detector.dead_time_ps = 22000
tac.electrical_delay_ps = 0
tac.bin_width_ps = 1000
tac.span_ps = 2500000
estimator = start_stop
normalization = pulsed
"""

CW_LASER = """\
label = cw-laser-control
mode = cw
duration_s = 5.0
seed = 80802
source = laser
laser.rate_hz = 1e6
channel.scheme = delay
channel.delay_ps = 300000
detector.efficiency = 1.0
detector.dead_time_ps = 22000
tac.bin_width_ps = 20000
tac.span_ps = 600000
estimator = adjacent
normalization = cw
analysis.dip_halfwidth_ps = 30000
analysis.plateau_lo_ps = 140000
analysis.plateau_hi_ps = 560000
"""


def test_laser_controls_read_poissonian():
    pulsed = run_pipeline(loads_config(PULSED_LASER))
    a_delay = pulsed.peaks.raw_counts[PeakLabel.DELAY0]
    a_left = pulsed.peaks.raw_counts[PeakLabel.TRIPLET1L]
    ratio = a_delay / a_left

    cw = run_pipeline(loads_config(CW_LASER))
    hist = cw.histogram
    far = hist.centers_ps > 100_000
    flat_dev = float(np.max(np.abs(hist.g2[far] - 1.0)))
    ok = abs(ratio - 1.0) <= 0.05 and flat_dev <= 0.02
    _verdict(
        8, "laser controls", ok,
        f"pulsed replica/left-triplet {ratio:.3f}, "
        f"cw flat within {flat_dev:.4f} beyond 100 ns",
    )
    assert abs(ratio - 1.0) <= 0.05
    assert flat_dev <= 0.02


# --- 9: determinism and file formats ----------------------------------------------

REPRO = """\
label = repro
mode = pulsed
duration_s = 0.2
seed = 90909
rep_rate_hz = 1e6
emitter.lifetime_ps = 10000
emitter.g2_target = 0.05
channel.scheme = delay
channel.delay_ps = 300000
detector.efficiency = 0.5
tac.electrical_delay_ps = 1500000
tac.span_ps = 7000000
"""

ARTIFACTS = ("detection.bin", "histogram.csv", "report.txt")


def test_matched_seeds_round_trips_and_error_classes(tmp_path):
    cfg_file = tmp_path / "repro.cfg"
    cfg_file.write_text(REPRO)
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg_file), "--out-dir", str(d1)]) == 0
    assert main(["simulate", "--config", str(cfg_file), "--out-dir", str(d2)]) == 0
    identical = all(filecmp.cmp(d1 / n, d2 / n, shallow=False) for n in ARTIFACTS)

    stream = read_stream(d1 / "detection.bin")
    copy_bin = tmp_path / "copy.bin"
    write_stream(copy_bin, stream)
    back = read_stream(copy_bin)
    stream_ok = (
        np.array_equal(back.times_ps, stream.times_ps)
        and back.duration_ps == stream.duration_ps
        and back.origin == stream.origin
    )

    hist = read_histogram_csv(d1 / "histogram.csv")
    copy_csv = tmp_path / "copy.csv"
    write_histogram_csv(copy_csv, hist)
    hist_back = read_histogram_csv(copy_csv)
    csv_ok = (
        np.array_equal(hist_back.counts, hist.counts)
        and hist_back.bin_width_ps == hist.bin_width_ps
        and hist_back.t_min_ps == hist.t_min_ps
    )

    bad_magic = tmp_path / "bad.bin"
    bad_magic.write_bytes(b"NOTMAGIC" + bytes(32))
    with pytest.raises(BadMagicError):
        read_stream(bad_magic)
    with pytest.raises(ConfigError):
        loads_config("mode = pulsed\nbogus_key = 1\n")
    with pytest.raises(AnalysisError):
        g2_cw_from_dip(0.60, 0.5)

    ok = identical and stream_ok and csv_ok
    _verdict(
        9, "determinism and formats", ok,
        f"matched-seed artifacts identical: {identical}, "
        f"stream/CSV round-trips exact: {stream_ok and csv_ok}, "
        "malformed inputs rejected",
    )
    assert identical
    assert stream_ok
    assert csv_ok
