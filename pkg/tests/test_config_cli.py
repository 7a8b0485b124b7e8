"""Config parsing, validation messages, and the CLI contract.

CLI runs go through ``main(argv)`` in-process; artifact determinism is
checked byte for byte, which is the reproducibility contract for a fixed
seed.
"""
from __future__ import annotations

import filecmp
from pathlib import Path

import pytest

from g2delay import ConfigError, loads_config
from g2delay.cli import main
from g2delay.config import parse_pairs
from g2delay.correlator import Estimator, NormalizationMode

TINY = """\
label = tiny
mode = pulsed
duration_ps = 20000000000
seed = 5
rep_rate_hz = 1e6
emitter.lifetime_ps = 10000
emitter.g2_target = 0.05
channel.scheme = delay
channel.delay_ps = 300000
detector.efficiency = 0.5
tac.electrical_delay_ps = 1500000
tac.span_ps = 7000000
"""


# --- parsing and validation ------------------------------------------------------

def test_minimal_config_fills_defaults():
    cfg = loads_config(TINY)
    assert cfg.label == "tiny"
    assert cfg.excitation.seed == 5
    assert cfg.excitation.period_ps == 1_000_000
    assert cfg.detector.dead_time_ps == 22_000          # default
    assert cfg.tac.bin_width_ps == 1000                 # pulsed default
    assert cfg.estimator is Estimator.START_STOP        # default
    assert cfg.normalization is NormalizationMode.PULSED  # follows the mode
    assert cfg.channel.t_ratio == 0.5
    assert cfg.emitter.pair_prob == pytest.approx(0.0263336, rel=1e-4)


def test_unknown_key_is_rejected_with_its_line_number():
    text = "mode = pulsed\n# comment\nfoo = 1\n"
    with pytest.raises(ConfigError, match=r"<config>:3: unknown key 'foo'"):
        parse_pairs(text)


def test_duplicate_key_is_rejected_with_both_line_numbers():
    text = "mode = pulsed\nseed = 1\nmode = cw\n"
    with pytest.raises(ConfigError, match=r":3: duplicate key 'mode' \(first set on line 1\)"):
        parse_pairs(text)


def test_syntax_and_value_errors_carry_position():
    with pytest.raises(ConfigError, match=r":1: expected 'key = value'"):
        parse_pairs("just words\n")
    with pytest.raises(ConfigError, match=r":1: bad value for seed"):
        loads_config("seed = abc\n")


def test_missing_required_keys_are_named():
    with pytest.raises(ConfigError, match="missing required key 'mode'"):
        loads_config("tac.span_ps = 1000\nchannel.scheme = hbt\n")
    with pytest.raises(ConfigError, match="missing required key 'duration_s'"):
        loads_config("mode = cw\nchannel.scheme = hbt\ntac.span_ps = 1000\n"
                      "source = laser\nlaser.rate_hz = 1e6\n")
    with pytest.raises(ConfigError, match="missing key 'emitter.lifetime_ps'"):
        loads_config("mode = cw\nduration_s = 1\nchannel.scheme = hbt\n"
                      "tac.span_ps = 1000\n")


def test_duration_must_be_given_exactly_once():
    text = TINY + "duration_s = 1\n"
    with pytest.raises(ConfigError, match="not both"):
        loads_config(text)


def test_pair_prob_and_g2_target_are_mutually_exclusive():
    text = TINY + "emitter.pair_prob = 0.01\n"
    with pytest.raises(ConfigError, match="not both"):
        loads_config(text)


def test_mode_conditional_requirements():
    with pytest.raises(ConfigError, match="rep_rate_hz"):
        loads_config(TINY.replace("rep_rate_hz = 1e6\n", ""))
    with pytest.raises(ConfigError, match="pump_rate_hz"):
        loads_config(
            "mode = cw\nduration_s = 1\nemitter.lifetime_ps = 10000\n"
            "channel.scheme = hbt\ntac.span_ps = 1000000\n"
        )
    with pytest.raises(ConfigError, match="laser.rate_hz"):
        loads_config(
            "mode = cw\nduration_s = 1\nsource = laser\n"
            "channel.scheme = hbt\ntac.span_ps = 1000000\n"
        )
    with pytest.raises(ConfigError, match="channel.delay_ps > 0"):
        loads_config(TINY.replace("channel.delay_ps = 300000\n", ""))


def test_enumerated_values_are_validated():
    with pytest.raises(ConfigError, match="mode must be"):
        loads_config(TINY.replace("mode = pulsed", "mode = warp"))
    with pytest.raises(ConfigError, match="channel.scheme must be"):
        loads_config(TINY.replace("channel.scheme = delay", "channel.scheme = fancy"))
    with pytest.raises(ConfigError, match="estimator must be"):
        loads_config(TINY + "estimator = magic\n")
    with pytest.raises(ConfigError, match="normalization must be"):
        loads_config(TINY + "normalization = magic\n")
    with pytest.raises(ConfigError, match="source must be"):
        loads_config(TINY + "source = torch\n")


def test_span_sanity_checks():
    short = TINY.replace("tac.span_ps = 7000000", "tac.span_ps = 1500000") \
                .replace("tac.electrical_delay_ps = 1500000",
                         "tac.electrical_delay_ps = 0")
    with pytest.raises(ConfigError, match="two repetition periods"):
        loads_config(short)
    bad = TINY.replace("tac.span_ps = 7000000", "tac.span_ps = 2000000") \
              .replace("channel.delay_ps = 300000", "channel.delay_ps = 2000000")
    with pytest.raises(ConfigError, match="exceed the optical delay"):
        loads_config(bad)


def test_cw_defaults_and_analysis_options():
    cfg = loads_config(
        "mode = cw\nduration_s = 1\nsource = laser\nlaser.rate_hz = 1e6\n"
        "channel.scheme = hbt\ntac.span_ps = 1000000\n"
        "analysis.reference_orders = 2,3\nanalysis.subtract_floor = yes\n"
    )
    assert cfg.tac.bin_width_ps == 2000                 # cw default
    assert cfg.normalization is NormalizationMode.CW
    assert cfg.analysis.reference_orders == (2, 3)
    assert cfg.analysis.subtract_floor is True
    with pytest.raises(ConfigError, match="subtract_floor"):
        loads_config(TINY + "analysis.subtract_floor = maybe\n")
    with pytest.raises(ConfigError, match="background_rho"):
        loads_config(TINY + "analysis.background_rho = 1.5\n")


def test_peak_window_auto_sizing():
    cfg = loads_config(TINY)
    assert cfg.auto_window_ps == 50_000              # 5 lifetimes
    cfg = loads_config(TINY + "analysis.window_ps = 80000\n")
    assert cfg.auto_window_ps == 80_000              # explicit wins
    laser = loads_config(
        "mode = pulsed\nduration_s = 0.01\nrep_rate_hz = 1e6\nsource = laser\n"
        "laser.rate_hz = 1e6\nchannel.scheme = hbt\ntac.span_ps = 7000000\n"
    )
    assert laser.auto_window_ps == 100_000           # period / 10 without a lifetime


# --- command-line interface --------------------------------------------------------

@pytest.fixture()
def tiny_cfg_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return path


def _same_bytes(d1, d2, names=("detection.bin", "histogram.csv", "report.txt")):
    return all(filecmp.cmp(Path(d1) / n, Path(d2) / n, shallow=False) for n in names)


def test_cli_simulate_writes_artifacts_and_is_deterministic(tiny_cfg_file, tmp_path, capsys):
    d1, d2, d3 = (tmp_path / x for x in ("r1", "r2", "r3"))
    assert main(["simulate", "--config", str(tiny_cfg_file), "--out-dir", str(d1)]) == 0
    out = capsys.readouterr().out
    assert "g2_zero" in out and "label = tiny" in out
    for name in ("detection.bin", "histogram.csv", "report.txt"):
        assert (d1 / name).is_file()

    assert main(["simulate", "--config", str(tiny_cfg_file), "--out-dir", str(d2)]) == 0
    assert _same_bytes(d1, d2)

    assert main(["simulate", "--config", str(tiny_cfg_file), "--out-dir", str(d3),
                 "--seed-override", "6"]) == 0
    assert not _same_bytes(d1, d3)


def test_cli_correlate_and_analyze_round_trip(tiny_cfg_file, tmp_path, capsys):
    run_dir = tmp_path / "run"
    assert main(["simulate", "--config", str(tiny_cfg_file), "--out-dir", str(run_dir)]) == 0
    capsys.readouterr()

    corr_dir = tmp_path / "corr"
    assert main(["correlate", "--config", str(tiny_cfg_file),
                 "--start", str(run_dir / "detection.bin"),
                 "--out-dir", str(corr_dir)]) == 0
    assert "wrote" in capsys.readouterr().out
    # self-correlation of the same detection stream reproduces the pipeline
    assert filecmp.cmp(run_dir / "histogram.csv", corr_dir / "histogram.csv",
                       shallow=False)

    assert main(["analyze", "--config", str(tiny_cfg_file),
                 "--histogram", str(run_dir / "histogram.csv")]) == 0
    out = capsys.readouterr().out
    assert "peak.delay0" in out and "g2_zero" in out


def test_cli_check_passes_and_fails_by_geometry(tiny_cfg_file, tmp_path, capsys):
    assert main(["check", "--config", str(tiny_cfg_file)]) == 0
    assert "passed=True" in capsys.readouterr().out

    # replica at 50 ns cannot clear 22 ns dead time + 3 lifetimes
    bad = tmp_path / "bad.cfg"
    bad.write_text(TINY.replace("channel.delay_ps = 300000", "channel.delay_ps = 50000"))
    assert main(["check", "--config", str(bad)]) == 3
    assert "passed=False" in capsys.readouterr().out
    assert main(["simulate", "--config", str(bad), "--out-dir",
                 str(tmp_path / "never"), "--strict"]) == 3
    assert not (tmp_path / "never" / "histogram.csv").exists()


def test_cli_check_on_two_detector_config(tmp_path, capsys):
    cfg = tmp_path / "hbt.cfg"
    cfg.write_text(TINY.replace("channel.scheme = delay", "channel.scheme = hbt")
                       .replace("channel.delay_ps = 300000", ""))
    assert main(["check", "--config", str(cfg)]) == 0
    assert "nothing to check" in capsys.readouterr().out


def test_cli_bad_inputs_exit_2(tmp_path, capsys):
    assert main(["simulate", "--config", "no-such-preset",
                 "--out-dir", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "neither a config file nor a preset" in err and "fig2b" in err

    broken = tmp_path / "broken.cfg"
    broken.write_text("mode = pulsed\nwhat is this\n")
    assert main(["simulate", "--config", str(broken), "--out-dir", str(tmp_path)]) == 2

    assert main(["analyze", "--config", "fig2b",
                 "--histogram", str(tmp_path / "missing.csv")]) == 2


def test_cli_preset_names_resolve():
    assert main(["check", "--config", "fig2b"]) == 0


# --- shipped config files mirror the presets ---------------------------------------

def test_config_files_match_the_presets_byte_for_byte():
    from g2delay import PRESETS, preset_text

    cfg_dir = Path(__file__).resolve().parent.parent / "configs"
    on_disk = sorted(p.stem for p in cfg_dir.glob("*.cfg"))
    assert on_disk == sorted(PRESETS)
    for name in PRESETS:
        assert (cfg_dir / f"{name}.cfg").read_text() == preset_text(name)


def test_config_files_load_to_the_same_configs():
    from g2delay import get_preset, load_config

    cfg_dir = Path(__file__).resolve().parent.parent / "configs"
    for path in cfg_dir.glob("*.cfg"):
        assert load_config(path) == get_preset(path.stem)
