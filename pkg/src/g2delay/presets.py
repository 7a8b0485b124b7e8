"""Canned run scenarios.

Each preset is a complete config-file text; the matching ``configs/*.cfg``
files in the repository hold the same bytes (a test keeps them in sync), so
a scenario can be launched either by name or by path.  The short names are
the canonical identifiers used throughout the docs and the regression
suite:

    fig1b  pulsed emitter, two-detector comb (suppressed centre peak)
    fig1c  c.w. emitter, two-detector dip at the electrical delay
    fig2b  pulsed emitter, single detector + 300 ns optical delay (triplets)
    fig2c  c.w. emitter, single detector + optical delay (0.75 floor)
    fig3c  pulsed delay run with dead time and after-pulsing artifacts
    fig4b  c.w. delay run on a leaky emitter (dip above the 0.75 floor)
    fig4c  c.w. laser through the same hardware (artifact control, flat g2)
"""
from __future__ import annotations

from .config import RunConfig, loads_config

PRESETS: dict[str, str] = {
    "fig1b": """\
# Pulsed emitter measured with the plain two-detector coincidence setup.
label = fig1b
mode = pulsed
duration_s = 2.0
seed = 101
rep_rate_hz = 1e6
emitter.lifetime_ps = 10000
emitter.g2_target = 0.05
channel.scheme = hbt
channel.t_ratio = 0.5
detector.efficiency = 0.2
detector.dead_time_ps = 22000
tac.electrical_delay_ps = 1500000
tac.bin_width_ps = 1000
tac.span_ps = 7000000
estimator = start_stop
normalization = pulsed
""",
    "fig1c": """\
# Continuously pumped emitter, two detectors: antibunching dip at the
# electrical delay.
label = fig1c
mode = cw
duration_s = 0.5
seed = 102
emitter.lifetime_ps = 10000
emitter.pump_rate_hz = 1e7
channel.scheme = hbt
channel.t_ratio = 0.5
detector.efficiency = 0.3
detector.dead_time_ps = 22000
tac.electrical_delay_ps = 600000
tac.bin_width_ps = 2000
tac.span_ps = 1200000
estimator = start_stop
normalization = cw
# the dip is only ~9 ns wide (1/(pump + 1/lifetime)); read it narrowly
analysis.dip_halfwidth_ps = 1000
analysis.plateau_lo_ps = 700000
analysis.plateau_hi_ps = 1100000
""",
    "fig2b": """\
# Pulsed emitter, one detector behind a splitter with a 300 ns delay arm:
# the zero-delay peak reappears at +300 ns and every side peak becomes a
# 1:2:1 triplet.
label = fig2b
mode = pulsed
duration_s = 2.0
seed = 103
rep_rate_hz = 1e6
emitter.lifetime_ps = 10000
emitter.g2_target = 0.05
channel.scheme = delay
channel.delay_ps = 300000
channel.t_ratio = 0.5
detector.efficiency = 0.2
detector.dead_time_ps = 22000
tac.electrical_delay_ps = 1500000
tac.bin_width_ps = 1000
tac.span_ps = 7000000
estimator = start_stop
normalization = pulsed
""",
    "fig2c": """\
# Continuously pumped emitter, single detector + delay: the dip at the
# optical delay bottoms out at (R^2+T^2) + RT = 0.75 for T = 0.5.
label = fig2c
mode = cw
duration_s = 1.0
seed = 107
emitter.lifetime_ps = 10000
emitter.pump_rate_hz = 1e7
channel.scheme = delay
channel.delay_ps = 300000
channel.t_ratio = 0.5
detector.efficiency = 0.3
detector.dead_time_ps = 22000
tac.electrical_delay_ps = 600000
tac.bin_width_ps = 2000
tac.span_ps = 1500000
estimator = start_stop
normalization = cw
# dip width ~9 ns; a wide window would average the walls upward
analysis.dip_halfwidth_ps = 1000
analysis.plateau_lo_ps = 1000000
analysis.plateau_hi_ps = 1400000
""",
    "fig3c": """\
# Single-detector delay run on a slower emitter with dead time and
# after-pulsing switched on, close to real hardware.
label = fig3c
mode = pulsed
duration_s = 3.0
seed = 104
rep_rate_hz = 1e6
emitter.lifetime_ps = 29500
emitter.g2_target = 0.05
channel.scheme = delay
channel.delay_ps = 373000
channel.t_ratio = 0.5
detector.efficiency = 0.1
detector.dead_time_ps = 22000
detector.afterpulse_prob = 0.01
detector.afterpulse_tau_ps = 25000
tac.electrical_delay_ps = 1500000
tac.bin_width_ps = 1000
tac.span_ps = 6000000
estimator = start_stop
normalization = pulsed
# at this lifetime the triplet peaks sit 254 ns apart edge to edge; a wider
# window lets their exponential tails bleed into the replica window
analysis.window_ps = 75000
""",
    "fig4b": """\
# Continuously pumped emitter with a small cascade leak, single detector +
# delay: the dip lands slightly above the ideal 0.75 floor.
label = fig4b
mode = cw
duration_s = 3.0
seed = 105
emitter.lifetime_ps = 29500
emitter.pump_rate_hz = 5e6
emitter.pair_prob = 0.007
channel.scheme = delay
channel.delay_ps = 373000
channel.t_ratio = 0.5
detector.efficiency = 0.2
detector.dead_time_ps = 22000
tac.electrical_delay_ps = 0
tac.bin_width_ps = 2000
tac.span_ps = 1200000
estimator = start_stop
normalization = cw
analysis.dip_halfwidth_ps = 4000
analysis.plateau_lo_ps = 550000
analysis.plateau_hi_ps = 1000000
""",
    "fig4c": """\
# Attenuated c.w. laser through the same splitter/delay/detector chain:
# nothing below the dead time, an after-pulsing bump just above it, and a
# flat g2 = 1 beyond ~100 ns.
label = fig4c
mode = cw
duration_s = 2.0
seed = 106
source = laser
laser.rate_hz = 1e6
channel.scheme = delay
channel.delay_ps = 300000
channel.t_ratio = 0.5
detector.efficiency = 1.0
detector.dead_time_ps = 22000
detector.afterpulse_prob = 0.01
detector.afterpulse_tau_ps = 25000
tac.electrical_delay_ps = 0
tac.bin_width_ps = 2000
tac.span_ps = 600000
estimator = adjacent
normalization = cw
analysis.plateau_lo_ps = 150000
analysis.plateau_hi_ps = 550000
""",
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return loads_config(PRESETS[name], origin=f"preset:{name}")


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return PRESETS[name]
