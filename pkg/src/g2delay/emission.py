"""Photon emission models.

Two source types are covered:

* a two-level emitter, either pulse-excited (Bernoulli excitation per pulse,
  exponential radiative delay) or continuously pumped (ground -> excited at
  the pump rate, excited -> ground at 1/lifetime, one photon per decay);
* a Poissonian "laser surrogate" with no photon-number correlations, used as
  the flat-correlation control.

Imperfections of a real single-photon source are modelled by ``pair_prob``:
with that probability an excitation cycle yields a second (cascade) photon,
delayed by a further exponential draw.  This is what lifts the zero-delay
correlation above zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError
from .streams import PS_PER_S, StreamOrigin, TimestampStream

# A pulsed run only makes sense when successive excitation cycles are well
# separated; we refuse lifetimes of a third of the pulse period or longer.
MAX_LIFETIME_PERIOD_RATIO = 3


class ExcitationMode(Enum):
    PULSED = "pulsed"
    CW = "cw"


@dataclass(frozen=True)
class ExcitationConfig:
    mode: ExcitationMode
    duration_ps: int
    seed: int
    rep_rate_hz: float = 0.0          # pulsed only
    pulse_sigma_ps: float = 50.0      # Gaussian smear of the excitation instant

    def __post_init__(self):
        if self.duration_ps <= 0:
            raise ConfigError("duration_ps must be positive")
        if self.mode is ExcitationMode.PULSED and self.rep_rate_hz <= 0:
            raise ConfigError("pulsed excitation needs rep_rate_hz > 0")
        if self.pulse_sigma_ps < 0:
            raise ConfigError("pulse_sigma_ps must be >= 0")

    @property
    def period_ps(self) -> int:
        if self.mode is not ExcitationMode.PULSED:
            return 0
        return int(round(PS_PER_S / self.rep_rate_hz))


@dataclass(frozen=True)
class EmitterModel:
    lifetime_ps: float                # radiative lifetime
    pair_prob: float = 0.0            # cascade photon probability per cycle
    excitation_prob: float = 1.0      # pulsed: P(excited | pulse)
    pump_rate_hz: float = 0.0         # cw: ground -> excited rate
    background_rate_hz: float = 0.0   # uncorrelated Poisson floor

    def __post_init__(self):
        if self.lifetime_ps <= 0:
            raise ConfigError("lifetime_ps must be positive")
        if not 0.0 <= self.pair_prob < 1.0:
            raise ConfigError("pair_prob must be in [0, 1)")
        if not 0.0 < self.excitation_prob <= 1.0:
            raise ConfigError("excitation_prob must be in (0, 1]")
        if self.pump_rate_hz < 0 or self.background_rate_hz < 0:
            raise ConfigError("rates must be >= 0")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def true_pulsed_g2(pair_prob: float, excitation_prob: float = 1.0) -> float:
    """Zero-delay correlation of the pulsed emitter, by photon counting.

    Per cycle n = Bernoulli(x) * (1 + Bernoulli(p)), so E[n(n-1)] = 2xp and
    E[n]^2 = x^2 (1+p)^2; their ratio is the normalized same-cycle pair rate.
    """
    x, p = excitation_prob, pair_prob
    return 2.0 * p / (x * (1.0 + p) ** 2)


def pair_prob_for_g2(g2_target: float, excitation_prob: float = 1.0) -> float:
    """Invert :func:`true_pulsed_g2`: cascade probability giving g2_target."""
    x = excitation_prob
    g = g2_target
    if g <= 0:
        return 0.0
    if not 0 < x <= 1:
        raise ConfigError("excitation_prob must be in (0, 1]")
    # g*x*p^2 + (2*g*x - 2)*p + g*x = 0, small root
    a, b, c = g * x, 2.0 * (g * x - 1.0), g * x
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise ConfigError(f"no cascade probability reaches g2={g} at x={x}")
    p = (-b - math.sqrt(disc)) / (2.0 * a)
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"g2={g} not reachable with a single cascade photon")
    return p


def cw_emission_rate_hz(model: EmitterModel) -> float:
    """Stationary photon rate of the pumped two-level chain.

    One photon per pump/decay cycle of mean length 1/P + 1/Gamma, plus the
    cascade fraction.
    """
    pump = model.pump_rate_hz
    gamma = PS_PER_S / model.lifetime_ps
    return pump * gamma / (pump + gamma) * (1.0 + model.pair_prob)


def simulate_pulsed_emission_labeled(
    model: EmitterModel, cfg: ExcitationConfig
) -> tuple[TimestampStream, np.ndarray]:
    """Pulsed emission with the excitation-cycle index of every photon.

    The labels exist so the true pair statistics of a run can be counted
    directly (how many cycles produced two photons) independently of any
    correlator.
    """
    if cfg.mode is not ExcitationMode.PULSED:
        raise ConfigError("simulate_pulsed_emission requires pulsed excitation")
    period = cfg.period_ps
    if model.lifetime_ps * MAX_LIFETIME_PERIOD_RATIO > period:
        raise ConfigError(
            f"lifetime {model.lifetime_ps} ps too long for period {period} ps "
            f"(needs lifetime < period/{MAX_LIFETIME_PERIOD_RATIO})"
        )
    rng = _rng(cfg.seed)
    n_pulses = int(cfg.duration_ps // period)
    excited = rng.random(n_pulses) < model.excitation_prob
    cycles = np.flatnonzero(excited)
    base = cycles * period
    t1 = base.astype(np.float64)
    if cfg.pulse_sigma_ps > 0:
        t1 = t1 + rng.normal(0.0, cfg.pulse_sigma_ps, cycles.size)
    t1 = t1 + rng.exponential(model.lifetime_ps, cycles.size)
    cascade = rng.random(cycles.size) < model.pair_prob
    t2 = t1[cascade] + rng.exponential(model.lifetime_ps, int(cascade.sum()))

    times = np.concatenate([t1, t2])
    labels = np.concatenate([cycles, cycles[cascade]])
    times = np.rint(times).astype(np.int64)
    keep = (times >= 0) & (times <= cfg.duration_ps)
    times, labels = times[keep], labels[keep]
    order = np.argsort(times, kind="stable")
    stream = TimestampStream(times[order], StreamOrigin.EMISSION, cfg.duration_ps)
    return stream, labels[order]


def simulate_pulsed_emission(model: EmitterModel, cfg: ExcitationConfig) -> TimestampStream:
    stream, _ = simulate_pulsed_emission_labeled(model, cfg)
    return stream


def simulate_cw_emission(model: EmitterModel, cfg: ExcitationConfig) -> TimestampStream:
    """Continuously pumped two-level emitter.

    Successive photons are separated by Exp(pump) + Exp(1/lifetime): the wait
    to re-excite plus the wait to decay.  The renewal structure is what gives
    the antibunched correlation 1 - exp(-(P + Gamma) tau).
    """
    if cfg.mode is not ExcitationMode.CW:
        raise ConfigError("simulate_cw_emission requires cw excitation")
    if model.pump_rate_hz <= 0:
        raise ConfigError("cw emission needs pump_rate_hz > 0")
    rng = _rng(cfg.seed)
    pump_scale = PS_PER_S / model.pump_rate_hz  # mean re-excitation wait, ps
    cycle_ps = pump_scale + model.lifetime_ps
    block = max(1024, int(cfg.duration_ps / cycle_ps * 1.05) + 64)

    chunks = []
    t_last = 0.0
    while t_last <= cfg.duration_ps:
        gaps = rng.exponential(pump_scale, block) + rng.exponential(model.lifetime_ps, block)
        t = t_last + np.cumsum(gaps)
        chunks.append(t)
        t_last = float(t[-1])
    times = np.concatenate(chunks)
    times = times[times <= cfg.duration_ps]

    if model.pair_prob > 0 and times.size:
        cascade = rng.random(times.size) < model.pair_prob
        extra = times[cascade] + rng.exponential(model.lifetime_ps, int(cascade.sum()))
        times = np.concatenate([times, extra[extra <= cfg.duration_ps]])

    times = np.sort(np.rint(times).astype(np.int64), kind="stable")
    times = times[times >= 0]
    return TimestampStream(times, StreamOrigin.EMISSION, cfg.duration_ps)


def simulate_poisson_source(rate_hz: float, cfg: ExcitationConfig) -> TimestampStream:
    """Laser surrogate: no photon-number correlations.

    CW mode is a homogeneous Poisson process; pulsed mode draws a Poissonian
    photon number per pulse, all placed at the (smeared) pulse instant.
    """
    if rate_hz <= 0:
        raise ConfigError("rate_hz must be positive")
    rng = _rng(cfg.seed)
    if cfg.mode is ExcitationMode.CW:
        scale = PS_PER_S / rate_hz
        block = max(1024, int(cfg.duration_ps / scale * 1.05) + 64)
        chunks = []
        t_last = 0.0
        while t_last <= cfg.duration_ps:
            t = t_last + np.cumsum(rng.exponential(scale, block))
            chunks.append(t)
            t_last = float(t[-1])
        times = np.concatenate(chunks)
        times = times[times <= cfg.duration_ps]
    else:
        period = cfg.period_ps
        n_pulses = int(cfg.duration_ps // period)
        mu = rate_hz / cfg.rep_rate_hz  # mean photons per pulse
        counts = rng.poisson(mu, n_pulses)
        base = np.repeat(np.arange(n_pulses, dtype=np.int64) * period, counts)
        times = base.astype(np.float64)
        if cfg.pulse_sigma_ps > 0:
            times = times + rng.normal(0.0, cfg.pulse_sigma_ps, base.size)
    times = np.sort(np.rint(times).astype(np.int64), kind="stable")
    times = times[(times >= 0) & (times <= cfg.duration_ps)]
    return TimestampStream(times, StreamOrigin.EMISSION, cfg.duration_ps)


def add_background(stream: TimestampStream, rate_hz: float, seed) -> TimestampStream:
    """Merge a homogeneous Poisson background into an emission stream."""
    if rate_hz < 0:
        raise ConfigError("background rate must be >= 0")
    if rate_hz == 0:
        return stream
    rng = _rng(seed)
    n = rng.poisson(rate_hz * stream.duration_ps / PS_PER_S)
    bg = np.sort(rng.integers(0, stream.duration_ps + 1, n, dtype=np.int64))
    times = np.sort(np.concatenate([stream.times_ps, bg]), kind="stable")
    return TimestampStream(times, StreamOrigin.EMISSION, stream.duration_ps)
