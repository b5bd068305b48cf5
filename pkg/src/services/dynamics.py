"""
Walker dynamics for walker-lab.

The wave field is a sum of damped J0 bumps emitted at every past impact.
Each bounce is decomposed into an interaction with the bath (friction, then
a kick down the local slope of the field) followed by a free flight of one
Faraday period under the harmonic trap, integrated exactly.
"""

import math
import time
from typing import Iterable

import numpy as np

from src.common.exceptions import DomainError, SimulationError
from src.common.logging import get_logger
from src.common.units import FARADAY_WAVENUMBER
from src.domain.models import SimConfig, Trajectory, WalkerState, WaveSource, WaveSources
from src.services.specfun import j0_kernel, j1_kernel

logger = get_logger(__name__)

SourceInput = WaveSources | Iterable[WaveSource]


def _temporal_weights(ages: np.ndarray, memory: float) -> np.ndarray:
    return np.exp(-ages / memory)


def _height_sum(
    px: float,
    py: float,
    xs: np.ndarray,
    ys: np.ndarray,
    weights: np.ndarray,
    delta: float,
) -> float:
    d = np.hypot(px - xs, py - ys)
    terms = weights * j0_kernel(FARADAY_WAVENUMBER * d)
    if not math.isinf(delta):
        terms = terms * np.exp(-d / delta)
    return float(terms.sum())


def _gradient_sum(
    px: float,
    py: float,
    xs: np.ndarray,
    ys: np.ndarray,
    weights: np.ndarray,
    delta: float,
    work: np.ndarray | None = None,
) -> tuple[float, float]:
    n = len(xs)
    if work is None:
        work = np.empty((4, n))
    # rows: dx, dy, distance, slope; sliced so the bounce loop reuses one buffer
    dx, dy, d, slope = work[0, :n], work[1, :n], work[2, :n], work[3, :n]
    np.subtract(px, xs, out=dx)
    np.subtract(py, ys, out=dy)
    np.hypot(dx, dy, out=d)
    np.multiply(d, FARADAY_WAVENUMBER, out=slope)
    # dh/dd per source
    if math.isinf(delta):
        j1_kernel(slope, out=slope)
        slope *= -FARADAY_WAVENUMBER
        slope *= weights
    else:
        kd = slope.copy()
        j1_kernel(kd, out=slope)
        slope *= FARADAY_WAVENUMBER
        slope += j0_kernel(kd) / delta
        slope *= -weights * np.exp(-d / delta)
    # a source exactly under the point contributes nothing
    coincident = d == 0
    slope[coincident] = 0.0
    d[coincident] = 1.0
    slope /= d
    return float(slope @ dx), float(slope @ dy)


def _ages(sources: WaveSources, now: float) -> np.ndarray:
    ages = now - sources.birth_times
    if len(ages) and ages.min() < 0:
        raise DomainError("wave sources cannot be born after the evaluation time")
    return ages


def wave_height(
    point: tuple[float, float],
    sources: SourceInput,
    now: float,
    memory: float,
    delta: float = math.inf,
) -> float:
    """
    Height of the memory wave field at a point.

    h = sum_j exp(-(now - t_j)/M) exp(-|p - r_j|/delta) J0(2 pi |p - r_j|)

    Args:
        point: Query point (x, y)
        sources: Past impacts
        now: Evaluation time
        memory: Memory parameter M
        delta: Spatial damping length; math.inf drops the spatial factor

    Returns:
        Field height (0 for no sources)
    """
    sources = WaveSources.coerce(sources)
    if len(sources) == 0:
        return 0.0
    weights = _temporal_weights(_ages(sources, now), memory)
    return _height_sum(point[0], point[1], sources.positions[:, 0], sources.positions[:, 1], weights, delta)


def wave_gradient(
    point: tuple[float, float],
    sources: SourceInput,
    now: float,
    memory: float,
    delta: float = math.inf,
) -> tuple[float, float]:
    """
    Analytic gradient of wave_height, using dJ0/dx = -J1(x).

    A source coinciding with the point contributes zero, including the
    spatial-damping term whose derivative is undefined there.
    """
    sources = WaveSources.coerce(sources)
    if len(sources) == 0:
        return 0.0, 0.0
    weights = _temporal_weights(_ages(sources, now), memory)
    return _gradient_sum(point[0], point[1], sources.positions[:, 0], sources.positions[:, 1], weights, delta)


def spring_force(position: tuple[float, float], omega: float) -> tuple[float, float]:
    """Harmonic trap acceleration -omega^2 r."""
    if omega < 0:
        raise DomainError(f"omega must be >= 0, got {omega}")
    w2 = omega * omega
    return -w2 * position[0], -w2 * position[1]


def free_flight(
    position: tuple[float, float],
    velocity: tuple[float, float],
    omega: float,
    duration: float = 1.0,
) -> tuple[tuple[float, float], tuple[float, float]]:
    """
    Exact propagation of the linear oscillator r'' = -omega^2 r.

    The omega -> 0 limit is straight-line flight.
    """
    (x, y), (vx, vy) = position, velocity
    if omega == 0:
        return (x + vx * duration, y + vy * duration), (vx, vy)
    c = math.cos(omega * duration)
    s = math.sin(omega * duration)
    return (
        (x * c + vx * s / omega, y * c + vy * s / omega),
        (-x * omega * s + vx * c, -y * omega * s + vy * c),
    )


def step(state: WalkerState, sources: SourceInput, config: SimConfig) -> tuple[WalkerState, WaveSource]:
    """
    One bounce: friction, kick down the slope, exact flight, emit a source.

    Args:
        state: Walker arriving at the bath
        sources: Wave sources born before state.time
        config: Dynamical parameters (not validated here)

    Returns:
        (state at the next impact, source emitted at this impact)
    """
    vx = config.friction * state.velocity[0]
    vy = config.friction * state.velocity[1]
    if config.kick != 0:
        gx, gy = wave_gradient(state.position, sources, state.time, config.memory, config.spatial_damping)
        vx -= config.kick * gx
        vy -= config.kick * gy
    position, velocity = free_flight(state.position, (vx, vy), config.trap_frequency)
    emitted = WaveSource(state.position, state.time)
    next_state = WalkerState(position, velocity, state.bounce_index + 1, state.time + 1.0)
    return next_state, emitted


def prune_sources(
    sources: SourceInput,
    now: float,
    memory: float,
    eps_cut: float,
) -> WaveSources | list[WaveSource]:
    """
    Drop sources whose temporal weight exp(-(now - t)/M) fell below eps_cut.

    Order is preserved. A list comes back as a list.
    """
    if not 0 < eps_cut < 1:
        raise DomainError(f"eps_cut must be in (0, 1), got {eps_cut}")
    as_list = not isinstance(sources, WaveSources)
    coerced = WaveSources.coerce(sources)
    keep = _temporal_weights(now - coerced.birth_times, memory) >= eps_cut
    pruned = WaveSources(coerced.positions[keep], coerced.birth_times[keep])
    return list(pruned) if as_list else pruned


def max_source_age(memory: float, eps_cut: float) -> int:
    """Largest integer age whose weight is still >= eps_cut."""
    age = int(math.floor(memory * math.log(1.0 / eps_cut)))
    while math.exp(-(age + 1) / memory) >= eps_cut:
        age += 1
    while age > 0 and math.exp(-age / memory) < eps_cut:
        age -= 1
    return age


def transient_length(config: SimConfig, minimum: int = 2000, factor: float = 20.0) -> int:
    """Bounces discarded before measuring: max(minimum, factor * M)."""
    return max(int(minimum), int(math.ceil(factor * config.memory)))


def initial_state(config: SimConfig, rng: np.random.Generator) -> WalkerState:
    """
    Start on the +x axis at radius Lambda (or initial_radius), speed V.

    The trap is isotropic, so only the heading relative to the position
    matters: pi/2 starts on a counter-clockwise tangent. The heading is
    always drawn so the generator stream does not depend on whether it is
    configured.
    """
    heading = rng.uniform(0.0, 2.0 * math.pi)
    if config.initial_heading is not None:
        heading = config.initial_heading
    radius = config.lambda_well if config.initial_radius is None else config.initial_radius
    position = (radius, 0.0)
    velocity = (config.target_speed * math.cos(heading), config.target_speed * math.sin(heading))
    return WalkerState(position, velocity, 0, 0.0)


def simulate(config: SimConfig, n_bounces: int) -> Trajectory:
    """
    Run the bounce map for n_bounces impacts and record every impact.

    Record k holds the impact position, the velocity leaving the impact
    (after friction and kick) and t = k. The impacts themselves are the
    wave sources, so they live in the same array; pruning only moves the
    start of the live window.

    Raises:
        ConfigError: If the configuration violates its invariants
        SimulationError: If the walker state overflows to inf or nan
    """
    config.validate()
    if n_bounces < 0:
        raise DomainError(f"n_bounces must be >= 0, got {n_bounces}")

    rng = np.random.default_rng(config.seed)
    state = initial_state(config, rng)
    xs = np.empty(n_bounces)
    ys = np.empty(n_bounces)
    velocities = np.empty((n_bounces, 2))

    memory = config.memory
    delta = config.spatial_damping
    mu = config.friction
    kick = config.kick
    omega = config.trap_frequency
    horizon = max_source_age(memory, config.source_cutoff)
    # weights for ages horizon..1, oldest first
    decay = _temporal_weights(np.arange(horizon, 0, -1).astype(float), memory)
    work = np.empty((4, max(horizon, 1)))

    started = time.perf_counter()
    logger.debug(
        "Simulation started",
        memory=memory, lambda_well=config.lambda_well, kick=kick,
        bounces=n_bounces, seed=config.seed, horizon=horizon,
    )

    x, y = state.position
    vx, vy = state.velocity
    for k in range(n_bounces):
        vx *= mu
        vy *= mu
        if kick != 0 and k > 0:
            start = max(0, k - horizon)
            gx, gy = _gradient_sum(x, y, xs[start:k], ys[start:k], decay[horizon - (k - start):], delta, work)
            vx -= kick * gx
            vy -= kick * gy
        xs[k] = x
        ys[k] = y
        velocities[k, 0] = vx
        velocities[k, 1] = vy
        (x, y), (vx, vy) = free_flight((x, y), (vx, vy), omega)

    positions = np.column_stack([xs, ys])
    if not (np.isfinite(positions).all() and np.isfinite(velocities).all()):
        bad = int(np.argmin(np.isfinite(positions).all(axis=1) & np.isfinite(velocities).all(axis=1)))
        raise SimulationError(f"walker state became non-finite at bounce {bad}")
    trajectory = Trajectory(np.arange(n_bounces, dtype=np.int64), positions, velocities, config)
    logger.info(
        "Simulation finished",
        memory=memory, lambda_well=config.lambda_well,
        bounces=n_bounces, elapsed_s=round(time.perf_counter() - started, 3),
    )
    return trajectory


def trajectory_to_sources(trajectory: Trajectory, before_bounce: int | None = None) -> WaveSources:
    """Impacts strictly before `before_bounce` (all of them by default) as wave sources."""
    if before_bounce is None:
        return WaveSources(trajectory.positions, trajectory.times)
    mask = trajectory.bounces < before_bounce
    return WaveSources(trajectory.positions[mask], trajectory.times[mask])
