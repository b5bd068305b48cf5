"""
Forcing and kick calibration for walker-lab.

The memory parameter follows from the forcing acceleration; the kick
coefficient C is fixed so that a free walker settles at the requested
speed V.
"""

import math
from functools import lru_cache

import numpy as np

from src.common.exceptions import CalibrationError, DomainError
from src.common.logging import get_logger
from src.common.units import FARADAY_WAVENUMBER
from src.domain.models import SimConfig
from src.services.dynamics import max_source_age, simulate
from src.services.specfun import j0_kernel, j1_kernel

logger = get_logger(__name__)


def memory_from_forcing(gamma_m: float, gamma_F: float) -> float:
    """
    M = gamma_m / (gamma_F - gamma_m).

    Raises:
        DomainError: At or above the Faraday threshold, or for non-positive gamma_m
    """
    if not (math.isfinite(gamma_m) and math.isfinite(gamma_F)):
        raise DomainError("forcing accelerations must be finite")
    if gamma_m <= 0:
        raise DomainError(f"gamma_m must be > 0, got {gamma_m}")
    if gamma_m >= gamma_F:
        raise DomainError(f"gamma_m={gamma_m} is at or above the Faraday threshold {gamma_F}")
    return gamma_m / (gamma_F - gamma_m)


def asymptotic_speed(config: SimConfig, bounces: int = 5000, tail_fraction: float = 0.2) -> float:
    """Median speed over the last `tail_fraction` of a free (untrapped) run."""
    trajectory = simulate(config.replace(lambda_well=0.0), bounces)
    tail = max(1, int(round(bounces * tail_fraction)))
    return float(np.median(trajectory.speeds[-tail:]))


def steady_walk_kick(config: SimConfig, target_speed: float) -> float | None:
    """
    Kick balancing friction for a walker moving straight at target_speed.

    With sources left every bounce at distances kV behind the walker,
    (1 - mu) V = C * sum_k w_k |dh/dd|(kV). Used to seed the bracket;
    None when the wave pulls backwards at that speed.
    """
    horizon = max_source_age(config.memory, config.source_cutoff)
    ages = np.arange(1, horizon + 1, dtype=float)
    d = ages * target_speed
    weights = np.exp(-ages / config.memory)
    pull = FARADAY_WAVENUMBER * j1_kernel(FARADAY_WAVENUMBER * d)
    if not math.isinf(config.spatial_damping):
        pull = np.exp(-d / config.spatial_damping) * (pull + j0_kernel(FARADAY_WAVENUMBER * d) / config.spatial_damping)
    drive = float(np.sum(weights * pull))
    if drive <= 0:
        return None
    return (1.0 - config.friction) * target_speed / drive


def calibrate_kick(
    config: SimConfig,
    target_speed: float,
    bounces: int = 5000,
    tail_fraction: float = 0.2,
    tolerance: float = 0.01,
    kick_max: float = 1.0,
    max_iterations: int = 60,
) -> float:
    """
    Find C such that the free walker's asymptotic speed matches target_speed.

    Runs happen without trap (Lambda = 0) from the axis; the asymptotic
    speed is the median over the last tail_fraction of a `bounces` run.
    The bracket is seeded from the steady straight-walk balance and
    widened by doubling, then bisected.

    Raises:
        CalibrationError: If no C in [0, kick_max] reaches the target
    """
    if target_speed < 0 or not math.isfinite(target_speed):
        raise DomainError(f"target_speed must be finite and >= 0, got {target_speed}")
    if target_speed == 0:
        return 0.0
    base = config.replace(lambda_well=0.0, target_speed=target_speed, initial_radius=0.0, kick=0.0)
    base.validate()
    return _calibrate_cached(base, target_speed, bounces, tail_fraction, tolerance, kick_max, max_iterations)


@lru_cache(maxsize=64)
def _calibrate_cached(
    base: SimConfig,
    target: float,
    bounces: int,
    tail_fraction: float,
    tolerance: float,
    kick_max: float,
    max_iterations: int,
) -> float:
    log = logger.bind(memory=base.memory, friction=base.friction, target_speed=target)

    def speed_at(kick: float) -> float:
        speed = asymptotic_speed(base.replace(kick=kick), bounces, tail_fraction)
        log.debug("Calibration run", kick=kick, speed=speed)
        return speed

    def close_enough(speed: float) -> bool:
        return abs(speed - target) <= tolerance * target

    seed = steady_walk_kick(base, target)
    lo = 0.0
    hi = min(seed * 1.5, kick_max) if seed else kick_max * 1e-3
    speed_hi = speed_at(hi)
    while speed_hi < target:
        if close_enough(speed_hi):
            return hi
        if hi >= kick_max:
            raise CalibrationError(
                f"speed {target} unreachable with kick <= {kick_max}",
                target_speed=target, kick_max=kick_max,
            )
        lo = hi
        hi = min(hi * 2.0, kick_max)
        speed_hi = speed_at(hi)
    if close_enough(speed_hi):
        return hi

    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        speed = speed_at(mid)
        if close_enough(speed):
            log.info("Kick calibrated", kick=mid, speed=speed)
            return mid
        if speed < target:
            lo = mid
        else:
            hi = mid

    raise CalibrationError(
        f"kick calibration did not converge in {max_iterations} iterations (bracket [{lo}, {hi}])",
        target_speed=target, kick_max=kick_max,
    )
