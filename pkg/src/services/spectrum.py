"""
Centred Bessel-mode analysis of the wave field.

Without spatial damping, Graf's addition theorem turns each off-centre
J0(k|r - r_j|) into centred modes:

    J0(k|r - r_j|) = sum_n eps_n J_n(k r) J_n(k rho_j) cos n(theta - theta_j)

with eps_0 = 1 and eps_n = 2, so the field of all sources is a single
centred expansion with coefficients A_n, B_n.
"""

import math

import numpy as np

from src.common.exceptions import DomainError
from src.common.units import FARADAY_WAVENUMBER
from src.domain.models import ModeSpectrum, WaveSources
from src.services.dynamics import SourceInput, wave_height
from src.services.specfun import MAX_ORDER, bessel_j_orders


def graf_spectrum(sources: SourceInput, now: float, memory: float, n_max: int = 40) -> ModeSpectrum:
    """
    Mode coefficients of the undamped (delta = inf) memory field.

    A_0 = sum w_j J0(2 pi rho_j)
    A_n = 2 sum w_j J_n(2 pi rho_j) cos(n theta_j)
    B_n = 2 sum w_j J_n(2 pi rho_j) sin(n theta_j)
    """
    if not 0 <= n_max <= MAX_ORDER:
        raise DomainError(f"n_max must be in [0, {MAX_ORDER}], got {n_max}")
    sources = WaveSources.coerce(sources)
    if len(sources) == 0:
        return ModeSpectrum(a=(0.0,) * (n_max + 1), b=(0.0,) * n_max, n_max=n_max, evaluation_time=now)

    ages = now - sources.birth_times
    if ages.min() < 0:
        raise DomainError("wave sources cannot be born after the evaluation time")
    weights = np.exp(-ages / memory)
    x, y = sources.positions[:, 0], sources.positions[:, 1]
    rho = np.hypot(x, y)
    theta = np.arctan2(y, x)

    jn = bessel_j_orders(n_max, FARADAY_WAVENUMBER * rho) * weights
    orders = np.arange(n_max + 1)[:, None]
    a = 2.0 * np.sum(jn * np.cos(orders * theta), axis=1)
    b = 2.0 * np.sum(jn * np.sin(orders * theta), axis=1)
    a[0] = np.sum(jn[0])
    return ModeSpectrum(
        a=tuple(float(v) for v in a),
        b=tuple(float(v) for v in b[1:]),
        n_max=n_max,
        evaluation_time=now,
    )


def reconstruct_field(spectrum: ModeSpectrum, point: tuple[float, float]) -> float:
    """A0 J0(2 pi r) + sum_n J_n(2 pi r) [A_n cos n theta + B_n sin n theta]."""
    x, y = point
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError("point must be finite")
    r = math.hypot(x, y)
    theta = math.atan2(y, x)
    jn = bessel_j_orders(spectrum.n_max, FARADAY_WAVENUMBER * r)[:, 0]
    orders = np.arange(spectrum.n_max + 1)
    angular = np.asarray(spectrum.a) * np.cos(orders * theta) + spectrum.b_full * np.sin(orders * theta)
    return float(jn @ angular)


def mode_power(spectrum: ModeSpectrum) -> tuple[np.ndarray, np.ndarray]:
    """Raw P_n = A_n^2 + B_n^2 and P_n / sum P (zeros when the field vanishes)."""
    power = spectrum.power
    total = power.sum()
    normalized = power / total if total > 0 else np.zeros_like(power)
    return power, normalized


def dominant_mode(spectrum: ModeSpectrum, orders: range | None = None) -> int:
    """Order with the largest power, optionally restricted to `orders`."""
    power = spectrum.power
    candidates = list(orders) if orders is not None else list(range(spectrum.n_max + 1))
    candidates = [n for n in candidates if 0 <= n <= spectrum.n_max]
    if not candidates:
        raise DomainError("no candidate orders inside the spectrum")
    return max(candidates, key=lambda n: power[n])


def circular_orbit_amplitude(radius: float, memory: float) -> float:
    """A0 of a steady circular orbit: J0(2 pi R) / (exp(1/M) - 1)."""
    if radius < 0 or memory <= 0:
        raise DomainError("radius must be >= 0 and memory > 0")
    return float(bessel_j_orders(0, FARADAY_WAVENUMBER * radius)[0, 0] / math.expm1(1.0 / memory))


def effective_potential(radius: float) -> tuple[float, float]:
    """
    Wave-induced radial potential J0^2(2 pi R) and its force.

    force = -d/dR J0^2 = 4 pi J1 J0: outward inside a J0 zero, inward outside it.
    """
    if radius < 0:
        raise DomainError(f"radius must be >= 0, got {radius}")
    j = bessel_j_orders(1, FARADAY_WAVENUMBER * radius)[:, 0]
    return float(j[0] ** 2), float(2.0 * FARADAY_WAVENUMBER * j[1] * j[0])


def radial_profile(radius: float, memory: float, radii: np.ndarray) -> np.ndarray:
    """Mean radial wave h_r(r) = A0(R) J0(2 pi r) generated by a circular orbit of radius R."""
    radii = np.asarray(radii, dtype=float)
    return circular_orbit_amplitude(radius, memory) * bessel_j_orders(0, FARADAY_WAVENUMBER * radii)[0]


def wave_field_grid(
    sources: SourceInput,
    now: float,
    memory: float,
    delta: float = math.inf,
    extent: float = 3.0,
    resolution: int = 121,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Field map on the square [-extent, extent]^2.

    Returns:
        (axis coordinates, heights[iy, ix])
    """
    if resolution < 2:
        raise DomainError("resolution must be >= 2")
    axis = np.linspace(-extent, extent, resolution)
    sources = WaveSources.coerce(sources)
    heights = np.array([
        [wave_height((float(px), float(py)), sources, now, memory, delta) for px in axis]
        for py in axis
    ])
    return axis, heights
