"""Every shipped preset must run end to end and show its advertised physics.

The bands here are intentionally loose -- they check the qualitative
signature of each scenario (suppressed replica, triplet weights, mixing
floor, artifact void), not the calibrated numbers, which the acceptance
tests pin down with tighter budgets.
"""
from __future__ import annotations

import numpy as np
import pytest

from g2delay import (
    PeakLabel,
    Scheme,
    get_preset,
    preset_names,
    run_pipeline,
)


@pytest.fixture(scope="module")
def runs():
    return {name: run_pipeline(get_preset(name)) for name in preset_names()}


def test_preset_names_are_stable():
    assert list(preset_names()) == ["fig1b", "fig1c", "fig2b", "fig2c",
                                    "fig3c", "fig4b", "fig4c"]


def test_all_presets_produce_a_result_and_report(runs):
    for name, run in runs.items():
        assert run.result is not None, name
        assert np.isfinite(run.result.g2_zero), name
        assert run.histogram.normalized, name
        assert f"label = {name}" in run.report
        assert "g2_zero" in run.report
        if run.config.channel.scheme is Scheme.SINGLE_DETECTOR_DELAY:
            assert run.constraint is not None and run.constraint.passed, name


def test_pulsed_two_detector_comb_suppresses_the_centre_peak(runs):
    run = runs["fig1b"]
    assert run.result.scheme == "pulsed_hbt"
    assert 0.02 < run.result.g2_zero < 0.08
    areas = run.peaks.areas
    assert areas[PeakLabel.CENTER0] < 0.1 * areas[PeakLabel.SIDE1_PLUS]


def test_cw_two_detector_dip_reaches_toward_zero(runs):
    run = runs["fig1c"]
    assert run.result.scheme == "cw_hbt"
    # ideal emitter: the dip is bin-resolution limited, not physics limited
    assert run.result.g2_zero < 0.35


def test_single_detector_triplets_carry_the_splitter_weights(runs):
    run = runs["fig2b"]
    assert run.result.scheme == "pulsed_delay"
    assert 0.02 < run.result.g2_zero < 0.08
    areas = run.peaks.areas
    left, mid, right = (areas[k] for k in
                        (PeakLabel.TRIPLET1L, PeakLabel.TRIPLET1, PeakLabel.TRIPLET1R))
    # balanced splitter: RT : R^2+T^2 : RT = 1 : 2 : 1
    assert mid / left == pytest.approx(2.0, rel=0.15)
    assert right / left == pytest.approx(1.0, rel=0.15)
    # the replica peak is the suppressed centre peak moved to the delay
    assert areas[PeakLabel.DELAY0] < 0.15 * left


def test_cw_single_detector_dip_sits_on_the_mixing_floor(runs):
    run = runs["fig2c"]
    assert run.result.scheme == "cw_delay"
    assert 0.70 < run.result.raw_value < 0.85   # floor 0.75 for T = 0.5
    assert run.result.g2_zero < 0.35


def test_dead_time_and_afterpulsing_do_not_break_the_readout(runs):
    run = runs["fig3c"]
    assert 0.02 < run.result.g2_zero < 0.09
    det = run.streams["detection"]
    assert int(np.diff(det.times_ps).min()) >= 22_000
    assert run.stats["detection"].afterpulses_spawned > 0


def test_cascade_leak_lifts_the_cw_dip_above_the_floor(runs):
    run = runs["fig4b"]
    floor = 0.75
    assert floor - 3 * run.result.stat_error * 0.25 < run.result.raw_value < 0.95
    assert run.result.g2_zero < 0.5


def test_cw_laser_control_is_flat_with_only_instrument_artifacts(runs):
    run = runs["fig4c"]
    hist = run.histogram
    centers = hist.centers_ps
    # exact void below the dead time
    assert hist.counts[centers < 22_000].sum() == 0
    # afterpulsing bump just above the dead time
    bump = (centers > 22_000) & (centers < 60_000)
    flat = centers > 100_000
    assert hist.counts[bump].mean() > 1.2 * hist.counts[flat].mean()
    # beyond the artifact region the normalized correlation is flat at one
    assert np.abs(hist.g2[flat].mean() - 1.0) < 0.05
    assert 0.7 < run.result.g2_zero < 1.3


def test_compare_entry_point_runs_on_a_preset(tmp_path):
    from g2delay import compare_schemes

    cfg = get_preset("fig2b")
    res = compare_schemes(cfg, out_dir=tmp_path)
    assert res.within_3sigma
    assert (tmp_path / "delay" / "histogram.csv").is_file()
    assert (tmp_path / "hbt" / "histogram.csv").is_file()
    assert "side_count_ratio" in (tmp_path / "compare.txt").read_text()
