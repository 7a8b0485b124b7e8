"""Run configuration: flat ``key = value`` files -> validated dataclasses.

The format is deliberately dumb -- one assignment per line, ``#`` comments,
dotted prefixes grouping keys by subsystem -- so a run file reads like the
lab notebook entry it replaces.  Unknown keys are rejected with their line
number; missing required keys are named.  All times are picoseconds unless
the key says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .correlator import Estimator, NormalizationMode, TacConfig
from .detector import DetectorModel
from .emission import EmitterModel, ExcitationConfig, ExcitationMode, pair_prob_for_g2
from .errors import ConfigError
from .optics import ChannelConfig, Scheme
from .streams import PS_PER_S


@dataclass(frozen=True)
class AnalysisOptions:
    window_ps: int = 0           # peak integration half-width; 0 = auto
    dip_halfwidth_ps: int = 3000
    plateau_lo_ps: int = 0       # cw normalization plateau; 0,0 = auto
    plateau_hi_ps: int = 0
    background_rho: float = 1.0  # signal fraction; 1 = no correction applied
    reference_orders: tuple = (2, 3, 4, 5)
    subtract_floor: bool = False


@dataclass(frozen=True)
class RunConfig:
    label: str
    source: str                  # "emitter" or "laser"
    excitation: ExcitationConfig
    emitter: EmitterModel | None
    laser_rate_hz: float
    channel: ChannelConfig
    detector: DetectorModel
    tac: TacConfig
    estimator: Estimator
    normalization: NormalizationMode
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)

    @property
    def auto_window_ps(self) -> int:
        if self.analysis.window_ps > 0:
            return self.analysis.window_ps
        period = self.excitation.period_ps
        if self.emitter is not None:
            w = int(5 * self.emitter.lifetime_ps)
        else:
            w = period // 10 if period else 50_000
        if period:
            w = min(w, period // 2)
        return max(1, w)


def _to_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _to_orders(s: str) -> tuple:
    return tuple(int(x) for x in s.split(",") if x.strip())


# key -> (converter, default); _REQUIRED means "must appear" and
# _CONDITIONAL means "checked during assembly".
_REQUIRED = object()
_CONDITIONAL = object()

_SCHEMA = {
    "label": (str, ""),
    "mode": (str, _REQUIRED),
    "duration_s": (float, _CONDITIONAL),
    "duration_ps": (int, _CONDITIONAL),
    "seed": (int, 1),
    "rep_rate_hz": (float, 0.0),
    "pulse_sigma_ps": (float, 50.0),
    "source": (str, "emitter"),
    "laser.rate_hz": (float, 0.0),
    "emitter.lifetime_ps": (float, _CONDITIONAL),
    "emitter.pair_prob": (float, _CONDITIONAL),
    "emitter.g2_target": (float, _CONDITIONAL),
    "emitter.excitation_prob": (float, 1.0),
    "emitter.pump_rate_hz": (float, 0.0),
    "emitter.background_rate_hz": (float, 0.0),
    "channel.scheme": (str, _REQUIRED),
    "channel.t_ratio": (float, 0.5),
    "channel.delay_ps": (int, 0),
    "detector.efficiency": (float, 1.0),
    "detector.dead_time_ps": (int, 22_000),
    "detector.afterpulse_prob": (float, 0.0),
    "detector.afterpulse_tau_ps": (float, 25_000.0),
    "detector.jitter_sigma_ps": (float, 0.0),
    "tac.electrical_delay_ps": (int, 0),
    "tac.bin_width_ps": (int, 0),
    "tac.span_ps": (int, _REQUIRED),
    "estimator": (str, "start_stop"),
    "normalization": (str, ""),
    "analysis.window_ps": (int, 0),
    "analysis.dip_halfwidth_ps": (int, 3000),
    "analysis.plateau_lo_ps": (int, 0),
    "analysis.plateau_hi_ps": (int, 0),
    "analysis.background_rho": (float, 1.0),
    "analysis.reference_orders": (_to_orders, (2, 3, 4, 5)),
    "analysis.subtract_floor": (_to_bool, False),
}

_ESTIMATORS = {
    "start_stop": Estimator.START_STOP,
    "adjacent": Estimator.ADJACENT_INTERVAL,
    "all_pairs": Estimator.ALL_PAIRS,
}
_NORMALIZATIONS = {
    "pulsed": NormalizationMode.PULSED,
    "cw": NormalizationMode.CW,
    "rate": NormalizationMode.RATE,
}


def parse_pairs(text: str, origin: str = "<config>") -> list:
    """``(line_number, key, raw_value)`` triples, schema-checked."""
    out = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(
                f"{origin}:{lineno}: duplicate key {key!r} (first set on line {seen[key]})"
            )
        seen[key] = lineno
        out.append((lineno, key, value))
    return out


def build_config(pairs: list, origin: str = "<config>") -> RunConfig:
    values = {}
    lines = {}
    for lineno, key, raw in pairs:
        conv = _SCHEMA[key][0]
        try:
            values[key] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value for {key}: {exc}") from exc
        lines[key] = lineno

    for key, (_, default) in _SCHEMA.items():
        if key in values:
            continue
        if default is _REQUIRED:
            raise ConfigError(f"{origin}: missing required key {key!r}")
        if default is not _CONDITIONAL:
            values[key] = default

    def need(key: str, why: str):
        if key not in values:
            raise ConfigError(f"{origin}: missing key {key!r} ({why})")
        return values[key]

    mode = values["mode"]
    if mode not in ("pulsed", "cw"):
        raise ConfigError(f"{origin}: mode must be 'pulsed' or 'cw', got {mode!r}")
    if "duration_ps" in values and "duration_s" in values:
        raise ConfigError(f"{origin}: give duration_s or duration_ps, not both")
    if "duration_ps" in values:
        duration_ps = values["duration_ps"]
    elif "duration_s" in values:
        duration_ps = int(round(values["duration_s"] * PS_PER_S))
    else:
        raise ConfigError(f"{origin}: missing required key 'duration_s' (or 'duration_ps')")
    if mode == "pulsed" and values["rep_rate_hz"] <= 0:
        raise ConfigError(f"{origin}: pulsed mode needs rep_rate_hz > 0")

    excitation = ExcitationConfig(
        mode=ExcitationMode(mode),
        duration_ps=duration_ps,
        seed=values["seed"],
        rep_rate_hz=values["rep_rate_hz"],
        pulse_sigma_ps=values["pulse_sigma_ps"],
    )

    source = values["source"]
    if source not in ("emitter", "laser"):
        raise ConfigError(f"{origin}: source must be 'emitter' or 'laser', got {source!r}")
    emitter = None
    laser_rate = values["laser.rate_hz"]
    if source == "emitter":
        lifetime = need("emitter.lifetime_ps", "emitter source")
        if "emitter.pair_prob" in values and "emitter.g2_target" in values:
            raise ConfigError(f"{origin}: give emitter.pair_prob or emitter.g2_target, not both")
        x = values["emitter.excitation_prob"]
        if "emitter.g2_target" in values:
            pair_prob = pair_prob_for_g2(values["emitter.g2_target"], x)
        else:
            pair_prob = values.get("emitter.pair_prob", 0.0)
        pump = values["emitter.pump_rate_hz"]
        if mode == "cw" and pump <= 0:
            raise ConfigError(f"{origin}: cw emitter needs emitter.pump_rate_hz > 0")
        emitter = EmitterModel(
            lifetime_ps=lifetime,
            pair_prob=pair_prob,
            excitation_prob=x,
            pump_rate_hz=pump,
            background_rate_hz=values["emitter.background_rate_hz"],
        )
    else:
        if laser_rate <= 0:
            raise ConfigError(f"{origin}: laser source needs laser.rate_hz > 0")

    scheme_name = values["channel.scheme"]
    try:
        scheme = Scheme(scheme_name)
    except ValueError:
        raise ConfigError(
            f"{origin}: channel.scheme must be 'delay' or 'hbt', got {scheme_name!r}"
        ) from None
    if scheme is Scheme.SINGLE_DETECTOR_DELAY and values["channel.delay_ps"] <= 0:
        raise ConfigError(f"{origin}: the delay scheme needs channel.delay_ps > 0")
    channel = ChannelConfig(
        t_ratio=values["channel.t_ratio"],
        delay_ps=values["channel.delay_ps"],
        scheme=scheme,
    )

    detector = DetectorModel(
        efficiency=values["detector.efficiency"],
        dead_time_ps=values["detector.dead_time_ps"],
        afterpulse_prob=values["detector.afterpulse_prob"],
        afterpulse_tau_ps=values["detector.afterpulse_tau_ps"],
        jitter_sigma_ps=values["detector.jitter_sigma_ps"],
    )

    bin_width = values["tac.bin_width_ps"]
    if bin_width == 0:
        bin_width = 1000 if mode == "pulsed" else 2000
    tac = TacConfig(
        electrical_delay_ps=values["tac.electrical_delay_ps"],
        bin_width_ps=bin_width,
        span_ps=values["tac.span_ps"],
    )

    est_name = values["estimator"]
    if est_name not in _ESTIMATORS:
        raise ConfigError(
            f"{origin}: estimator must be one of {sorted(_ESTIMATORS)}, got {est_name!r}"
        )
    norm_name = values["normalization"] or mode
    if norm_name not in _NORMALIZATIONS:
        raise ConfigError(
            f"{origin}: normalization must be one of {sorted(_NORMALIZATIONS)}, got {norm_name!r}"
        )

    if not 0.0 < values["analysis.background_rho"] <= 1.0:
        raise ConfigError(f"{origin}: analysis.background_rho must be in (0, 1]")
    analysis = AnalysisOptions(
        window_ps=values["analysis.window_ps"],
        dip_halfwidth_ps=values["analysis.dip_halfwidth_ps"],
        plateau_lo_ps=values["analysis.plateau_lo_ps"],
        plateau_hi_ps=values["analysis.plateau_hi_ps"],
        background_rho=values["analysis.background_rho"],
        reference_orders=values["analysis.reference_orders"],
        subtract_floor=values["analysis.subtract_floor"],
    )

    cfg = RunConfig(
        label=values["label"],
        source=source,
        excitation=excitation,
        emitter=emitter,
        laser_rate_hz=laser_rate,
        channel=channel,
        detector=detector,
        tac=tac,
        estimator=_ESTIMATORS[est_name],
        normalization=_NORMALIZATIONS[norm_name],
        analysis=analysis,
    )
    _sanity(cfg, origin)
    return cfg


def _sanity(cfg: RunConfig, origin: str) -> None:
    if cfg.excitation.mode is ExcitationMode.PULSED:
        period = cfg.excitation.period_ps
        if cfg.tac.span_ps < 2 * period:
            raise ConfigError(
                f"{origin}: tac.span_ps must cover at least two repetition periods"
            )
    if cfg.channel.delay_ps and cfg.tac.span_ps <= cfg.channel.delay_ps:
        raise ConfigError(f"{origin}: tac.span_ps must exceed the optical delay")
    if not math.isfinite(cfg.laser_rate_hz):
        raise ConfigError(f"{origin}: laser.rate_hz must be finite")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return build_config(parse_pairs(path.read_text(), origin=path.name), origin=path.name)


def loads_config(text: str, origin: str = "<config>") -> RunConfig:
    return build_config(parse_pairs(text, origin=origin), origin=origin)
