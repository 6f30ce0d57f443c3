"""Synthetic 10 Hz speed traces from a regime-switching driving model.

A trip alternates between holding a speed and ramping to a new one. Holds
are either full stops or cruising with a slow sinusoidal wobble. Ramps are
jerk-limited (raised-cosine acceleration pulse) with a peak that is either
smooth (<= 0.28 m/s^2) or sharp (up to ``max_accel_mps2``).
``smooth_fraction`` is the probability that a ramp is smooth, so at 1.0
every sample has |a| < 0.3 m/s^2 under central differencing.

Target speeds mix a point mass at 0 (stops) with a gamma distribution for
moving levels. Both are chosen from the requested pooled mean and standard
deviation by moment matching:

    E[v]   = (1 - p0) * mu1
    E[v^2] = (1 - p0) * mu1^2 * (1 + cv1^2)

with the moving-level coefficient of variation ``cv1`` fixed below the pooled
one. Ramps spend time at intermediate speeds and every trip starts from rest,
which pulls the pooled moments down; the targets are inflated by fixed gains
(fitted once by simulation on the default regime settings) to compensate.
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ConfigError
from .sampler import SpeedTrace

SMOOTH_ACCEL = (0.15, 0.28)
SHARP_ACCEL_MIN = 0.8
STOP_HOLD_S = (5.0, 60.0)
CRUISE_HOLD_S = (10.0, 90.0)
WOBBLE_AMPLITUDE = (0.1, 0.5)
WOBBLE_PERIOD_S = (25.0, 60.0)
WOBBLE_MAX_ACCEL = 0.15
# Ramp compensation, see module docstring.
MEAN_GAIN = 1.15
STD_GAIN = 1.00
# 2013-04-01 00:00:00 UTC
DEFAULT_EPOCH = 1364774400.0


@dataclass(frozen=True)
class SynthConfig:
    num_trips: int = 100
    duration_range_s: Tuple[float, float] = (200.0, 800.0)
    target_mean_mps: float = 17.23
    target_std_mps: float = 10.83
    max_accel_mps2: float = 3.0
    smooth_fraction: float = 0.7
    rng_seed: int = 0
    max_speed_mps: float = 40.0
    sample_rate_hz: float = 10.0
    start_hour_range: Tuple[float, float] = (0.0, 24.0)
    epoch: float = DEFAULT_EPOCH
    device_prefix: str = "synth"

    def __post_init__(self):
        lo, hi = self.duration_range_s
        if self.num_trips < 1:
            raise ConfigError("num_trips must be >= 1")
        if not 0 < lo <= hi:
            raise ConfigError(f"duration_range_s must satisfy 0 < min <= max, got {self.duration_range_s}")
        h0, h1 = self.start_hour_range
        # Hours past 24 roll over into the next day.
        if not 0 <= h0 <= h1:
            raise ConfigError(f"start_hour_range must satisfy 0 <= start <= end, got {self.start_hour_range}")
        if not 0.0 <= self.smooth_fraction <= 1.0:
            raise ConfigError("smooth_fraction must lie in [0, 1]")
        if self.max_accel_mps2 < SHARP_ACCEL_MIN:
            raise ConfigError(f"max_accel_mps2 must be >= {SHARP_ACCEL_MIN}")
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")
        level_params(self)


def level_params(cfg):
    return level_distribution(cfg.target_mean_mps * MEAN_GAIN, cfg.target_std_mps * STD_GAIN,
                              cfg.max_speed_mps)


def level_distribution(mean, std, max_speed):
    """Stop probability and gamma (shape, scale) for moving target speeds.

    Raises ``ConfigError`` when no nonnegative speed distribution bounded by
    ``max_speed`` can have the requested moments, or when matching them
    would need the vehicle stopped most of the time.
    """
    if not 0 < mean < max_speed:
        raise ConfigError(f"target mean must lie in (0, {max_speed}), got {mean}")
    if std <= 0:
        raise ConfigError(f"target std must be positive, got {std}")
    # Bhatia-Davis: a variable on [0, max] with mean mu has var <= mu (max - mu).
    if std**2 > mean * (max_speed - mean):
        raise ConfigError(f"std {std} is incompatible with mean {mean} on [0, {max_speed}]")
    cv = std / mean
    cv1 = min(0.3, 0.5 * cv)
    moving = (1 + cv1**2) / (1 + cv**2)
    p_stop = 1.0 - moving
    mu1 = mean / moving
    if p_stop > 0.6 or mu1 >= max_speed:
        raise ConfigError(f"mean {mean} / std {std} would need stop share {p_stop:.2f}, moving mean {mu1:.1f}")
    shape = 1.0 / cv1**2
    return p_stop, shape, mu1 / shape


def _draw_level(rng, p_stop, shape, scale, max_speed):
    if rng.random() < p_stop:
        return 0.0
    return float(min(rng.gamma(shape, scale), max_speed))


def _ramp(v0, v1, peak_accel, rate):
    """Speed change with a raised-cosine acceleration pulse.

    Acceleration rises from 0 to ``peak_accel`` and back, so there are no
    acceleration jumps at either end of the ramp.
    """
    dv = v1 - v0
    if dv == 0:
        return np.empty(0)
    duration = 2.0 * abs(dv) / peak_accel
    steps = max(1, int(np.ceil(duration * rate)))
    t = np.arange(1, steps + 1) / steps
    return v0 + dv * (t - np.sin(2 * np.pi * t) / (2 * np.pi))


def _hold(level, seconds, rate, rng):
    count = max(1, int(round(seconds * rate)))
    if level == 0.0:
        return np.zeros(count)
    period = rng.uniform(*WOBBLE_PERIOD_S)
    # Whole periods only, so the hold starts and ends exactly at ``level``.
    cycles = max(1, int(round(count / (period * rate))))
    actual_period = count / (cycles * rate)
    # Peak wobble acceleration amp * 2 pi / period stays under WOBBLE_MAX_ACCEL.
    amp = min(rng.uniform(*WOBBLE_AMPLITUDE), 0.5 * level,
              WOBBLE_MAX_ACCEL * actual_period / (2 * np.pi))
    t = np.arange(1, count + 1) / count
    return level + amp * np.sin(2 * np.pi * cycles * t)


def synth_trip(cfg, rng, length):
    """One trip of ``length`` samples starting from rest."""
    rate = cfg.sample_rate_hz
    p_stop, shape, scale = level_params(cfg)
    pieces = [np.zeros(max(1, int(rate * rng.uniform(*STOP_HOLD_S) * 0.2)))]
    total = pieces[0].size
    v = 0.0
    while total < length:
        target = _draw_level(rng, p_stop, shape, scale, cfg.max_speed_mps)
        if rng.random() < cfg.smooth_fraction:
            accel = rng.uniform(*SMOOTH_ACCEL)
        else:
            accel = rng.uniform(SHARP_ACCEL_MIN, cfg.max_accel_mps2)
        ramp = _ramp(v, target, accel, rate)
        hold_s = rng.uniform(*(STOP_HOLD_S if target == 0.0 else CRUISE_HOLD_S))
        hold = _hold(target, hold_s, rate, rng)
        pieces += [ramp, hold]
        total += ramp.size + hold.size
        v = target
    return np.clip(np.concatenate(pieces)[:length], 0.0, cfg.max_speed_mps)


def generate_synthetic_traces(cfg=None) -> List[SpeedTrace]:
    """Deterministic list of ``cfg.num_trips`` traces, one per device."""
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))
    lo, hi = cfg.duration_range_s
    h0, h1 = cfg.start_hour_range
    traces = []
    for k in range(cfg.num_trips):
        length = max(1, int(round(rng.uniform(lo, hi) * cfg.sample_rate_hz)))
        start = cfg.epoch + 3600.0 * rng.uniform(h0, h1)
        # Start on the sample grid so timestamps are exact multiples of the period.
        start = round(start * cfg.sample_rate_hz) / cfg.sample_rate_hz
        device = f"{cfg.device_prefix}-{k:04d}"
        speeds = synth_trip(cfg, rng, length)
        traces.append(SpeedTrace(f"{device}#0", device, start, speeds, cfg.sample_rate_hz))
    return traces


# Per-period driving conditions for a constructed day: (first hour, mean, std,
# smooth_fraction). The 7-9 morning peak is congested and steady; the
# afternoon and evening periods are the most variable.
DAY_PROFILE = (
    (1, 20.0, 8.0, 0.9),
    (4, 19.0, 9.0, 0.8),
    (7, 9.0, 4.0, 1.0),
    (10, 17.0, 10.0, 0.7),
    (13, 18.0, 12.0, 0.4),
    (16, 16.0, 13.0, 0.3),
    (19, 18.0, 12.5, 0.35),
    (22, 20.0, 9.0, 0.8),
)


def generate_day_scenario(trips_per_period=12, rng_seed=0, period_hours=3, profile=DAY_PROFILE):
    """Traces spread over one day with period-specific speed behaviour.

    Every trip starts early enough in its period to end inside it.
    """
    traces = []
    for k, (hour, mean, std, smooth) in enumerate(profile):
        cfg = SynthConfig(
            num_trips=trips_per_period,
            target_mean_mps=mean,
            target_std_mps=std,
            smooth_fraction=smooth,
            rng_seed=rng_seed * 1000 + k,
            start_hour_range=(hour, hour + period_hours - 0.3),
            device_prefix=f"day{hour:02d}",
        )
        traces.extend(generate_synthetic_traces(cfg))
    return traces
