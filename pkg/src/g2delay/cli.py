"""Command-line front end.

    g2delay simulate  --config fig2b --out-dir runs/fig2b
    g2delay correlate --config fig1b --start start.bin --stop stop.bin --out-dir .
    g2delay analyze   --config fig2b --histogram runs/fig2b/histogram.csv
    g2delay compare   --config fig2b --out-dir runs/cmp
    g2delay check     --config fig2b

``--config`` takes either a file path or a built-in preset name.  Exit
codes: 0 success, 2 bad input (config, file format, analysis), 3 design
constraints violated (``check``, or any command under ``--strict``).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import check_design_constraints
from .config import RunConfig, load_config
from .correlator import Estimator, adjacent_interval_histogram, all_pairs_correlation, \
    normalize, start_stop_histogram
from .errors import AnalysisError, ConfigError, ConstraintViolation, StreamFormatError
from .io import read_histogram_csv, read_stream, write_histogram_csv
from .optics import Scheme
from .pipeline import analyze_run, compare_schemes, normalization_context, run_pipeline
from .presets import PRESETS, get_preset, preset_names


def _resolve_config(name: str, seed_override: int | None) -> RunConfig:
    if Path(name).is_file():
        cfg = load_config(name)
    elif name in PRESETS:
        cfg = get_preset(name)
    else:
        raise ConfigError(
            f"{name!r} is neither a config file nor a preset "
            f"(presets: {', '.join(preset_names())})"
        )
    if seed_override is not None:
        from dataclasses import replace

        cfg = replace(cfg, excitation=replace(cfg.excitation, seed=seed_override))
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _resolve_config(args.config, args.seed_override)
    result = run_pipeline(cfg, out_dir=args.out_dir, strict=args.strict)
    sys.stdout.write(result.report)
    return 0


def _cmd_correlate(args) -> int:
    cfg = _resolve_config(args.config, args.seed_override)
    start = read_stream(args.start)
    stop = read_stream(args.stop) if args.stop else start
    if cfg.estimator is Estimator.START_STOP:
        hist = start_stop_histogram(start, stop, cfg.tac)
    elif cfg.estimator is Estimator.ADJACENT_INTERVAL:
        hist = adjacent_interval_histogram(start, cfg.tac.bin_width_ps, cfg.tac.span_ps)
    else:
        hist = all_pairs_correlation(start, cfg.tac.bin_width_ps, cfg.tac.span_ps)
    hist = normalize(hist, normalization_context(cfg))
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "histogram.csv"
    write_histogram_csv(path, hist)
    sys.stdout.write(f"wrote {path} ({hist.n_bins} bins, estimator {hist.estimator.value})\n")
    return 0


def _cmd_analyze(args) -> int:
    cfg = _resolve_config(args.config, args.seed_override)
    hist = read_histogram_csv(args.histogram)
    peaks, result = analyze_run(cfg, hist)
    if peaks is not None:
        for label in sorted(peaks.areas, key=lambda k: k.value):
            flag = "  UNUSABLE" if label in peaks.unusable else ""
            sys.stdout.write(
                f"peak.{label.value}: area = {peaks.areas[label]:.6g}  "
                f"raw = {int(peaks.raw_counts[label])}{flag}\n"
            )
    if result is None:
        sys.stdout.write("no g2 value extracted (histogram not normalized?)\n")
        return 2
    sys.stdout.write(
        f"g2_zero = {result.g2_zero:.6g} +- {result.stat_error:.6g} "
        f"(scheme {result.scheme}, raw {result.raw_value:.6g})\n"
    )
    return 0


def _cmd_compare(args) -> int:
    cfg = _resolve_config(args.config, args.seed_override)
    result = compare_schemes(cfg, out_dir=args.out_dir, strict=args.strict)
    sys.stdout.write(result.report)
    return 0


def _cmd_check(args) -> int:
    cfg = _resolve_config(args.config, args.seed_override)
    if cfg.channel.scheme is not Scheme.SINGLE_DETECTOR_DELAY:
        sys.stdout.write("nothing to check: two-detector scheme has no optical delay\n")
        return 0
    report = check_design_constraints(
        cfg.channel.delay_ps,
        cfg.detector.dead_time_ps,
        cfg.emitter.lifetime_ps if cfg.emitter is not None else 0.0,
        rep_rate_hz=cfg.excitation.rep_rate_hz,
        t_ratio=cfg.channel.t_ratio,
    )
    sys.stdout.write(report.as_text())
    return 0 if report.passed else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="g2delay",
        description="single-detector (delayed) and two-detector photon correlation runs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_dir=True):
        p.add_argument("--config", required=True,
                       help="config file path or preset name")
        p.add_argument("--seed-override", type=int, default=None,
                       help="replace the config seed")
        p.add_argument("--strict", action="store_true",
                       help="refuse to run when design constraints fail")
        if out_dir:
            p.add_argument("--out-dir", default=None, help="artifact directory")

    p = sub.add_parser("simulate", help="full pipeline: source to report")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("correlate", help="histogram external stream files")
    common(p)
    p.add_argument("--start", required=True, help="start-channel stream file")
    p.add_argument("--stop", default=None,
                   help="stop-channel stream file (defaults to the start file)")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("analyze", help="extract g2(0) from a histogram CSV")
    common(p, out_dir=False)
    p.add_argument("--histogram", required=True, help="histogram CSV path")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("compare", help="delay scheme vs two-detector reference")
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("check", help="optical-delay design constraint report")
    common(p, out_dir=False)
    p.set_defaults(func=_cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConstraintViolation as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except (ConfigError, AnalysisError, StreamFormatError, FileNotFoundError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
