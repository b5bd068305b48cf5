"""
Generalized Cassini curves fitted to orbits centred on the trap axis.

With p foci at distance a from the origin, the first one at angle phi0,
the curve is the set of points whose product of focal distances is b^p:

    p = 2:  r^4 + a^4 - 2 a^2 r^2 cos 2(theta - phi0) = b^4
    p = 3:  |z^3 - (a e^{i phi0})^3| = b^3

For fixed (a, phi0) the least-squares b^p is the sample mean of the
left-hand side, so the search runs over (a, phi0) only.
"""

import math

import numpy as np
from scipy.optimize import minimize_scalar

from src.common.exceptions import AnalysisError, DomainError, FitError
from src.common.logging import get_logger
from src.domain.enums import OrbitShape
from src.domain.models import CassiniFit, EigenstateLabel, Trajectory

logger = get_logger(__name__)

FIT_MIN_SAMPLES = 50
FIT_MAX_SAMPLES = 2000
MAX_SWEEPS = 500

# line-search tolerance, stop width and minimum accepted improvement
LINE_TOLERANCE = 1e-9
STOP_WIDTH = 1e-6
MIN_IMPROVEMENT = 1e-13

# coarse seeding grid
RATIO_GRID = np.linspace(0.0, 1.2, 13)
ANGLE_STEPS = 12

CIRCLE_RATIO = 0.3


def _focal_product(z: np.ndarray, a: float, phi0: float, foci_count: int) -> np.ndarray:
    """Left-hand side of the implicit equation at every sample."""
    if foci_count == 2:
        r2 = z.real ** 2 + z.imag ** 2
        theta = np.angle(z)
        return r2 * r2 + a ** 4 - 2.0 * a * a * r2 * np.cos(2.0 * (theta - phi0))
    return np.abs(z ** 3 - (a * np.exp(1j * phi0)) ** 3)


def _profile(z: np.ndarray, a: float, phi0: float, foci_count: int) -> tuple[float, float]:
    """(b^p, RMS defect) with b^p at its least-squares value."""
    g = _focal_product(z, a, phi0, foci_count)
    level = float(np.mean(g))
    return level, float(np.sqrt(np.mean((g - level) ** 2)))


def _subsample(positions: np.ndarray, limit: int) -> np.ndarray:
    if len(positions) <= limit:
        return positions
    index = np.linspace(0, len(positions) - 1, limit).round().astype(int)
    return positions[index]


def fit_cassini(
    trajectory: Trajectory,
    foci_count: int = 2,
    min_samples: int = FIT_MIN_SAMPLES,
    max_samples: int = FIT_MAX_SAMPLES,
    max_sweeps: int = MAX_SWEEPS,
) -> CassiniFit:
    """
    Least-squares Cassini curve through the impact positions.

    The start point is the best node of a coarse (a/b, phi0) grid with b
    at the RMS radius scale; it is then refined by coordinate descent,
    one bounded line search per coordinate, on adaptive windows.

    Args:
        trajectory: Post-transient trajectory
        foci_count: 2 or 3
        min_samples: Fewer impacts than this is an error
        max_samples: Longer records are evenly subsampled to this size
        max_sweeps: Coordinate-descent iteration cap

    Returns:
        CassiniFit with a >= 0 and orientation in [0, 2 pi / p)

    Raises:
        AnalysisError: Too few samples
        FitError: No convergence within max_sweeps
    """
    if foci_count not in (2, 3):
        raise DomainError(f"foci_count must be 2 or 3, got {foci_count}")
    if len(trajectory) < min_samples:
        raise AnalysisError(f"Cassini fit needs >= {min_samples} samples, got {len(trajectory)}")

    points = _subsample(trajectory.positions, max_samples)
    z = points[:, 0] + 1j * points[:, 1]
    scale = float(np.sqrt(np.mean(np.abs(z) ** 2)))
    if scale == 0:
        raise AnalysisError("all samples sit on the trap axis")
    norm = scale ** (4 if foci_count == 2 else 3)
    period = 2.0 * math.pi / foci_count

    def objective(a: float, phi0: float) -> float:
        return _profile(z, a, phi0, foci_count)[1] / norm

    angles = np.arange(ANGLE_STEPS) * period / ANGLE_STEPS
    best = min(
        ((ratio * scale, phi0) for ratio in RATIO_GRID for phi0 in angles),
        key=lambda params: objective(*params),
    )
    a, phi0 = best

    width_a = 0.5 * scale
    width_phi = period / ANGLE_STEPS
    xtol_a = LINE_TOLERANCE * scale
    for sweep in range(max_sweeps):
        step_a = _line_search(lambda v: objective(v, phi0), a, width_a, xtol_a) - a
        a += step_a
        step_phi = _line_search(lambda v: objective(a, v), phi0, width_phi, LINE_TOLERANCE) - phi0
        phi0 += step_phi
        width_a = max(2.0 * abs(step_a), 0.5 * width_a)
        width_phi = max(2.0 * abs(step_phi), 0.5 * width_phi)
        if width_a < STOP_WIDTH * scale and width_phi < STOP_WIDTH:
            break
    else:
        raise FitError(f"Cassini fit (p={foci_count}) did not converge in {max_sweeps} sweeps")

    # a e^{i phi0} with a < 0 is the same focus set as |a| e^{i(phi0 + pi)}
    if a < 0:
        a, phi0 = -a, phi0 + math.pi
    level, rms = _profile(z, a, phi0, foci_count)
    b = level ** (1.0 / (4 if foci_count == 2 else 3))
    residual = rms / level if level > 0 else math.inf
    fit = CassiniFit(
        foci_count=foci_count,
        a=float(a),
        b=float(b),
        orientation=float(phi0 % period),
        residual=float(residual),
    )
    logger.debug("Cassini fit", foci_count=foci_count, a=fit.a, b=fit.b, residual=fit.residual, sweeps=sweep + 1)
    return fit


def _line_search(func, center: float, width: float, tol: float) -> float:
    """Bounded minimization on [center - width, center + width], never worse than center."""
    result = minimize_scalar(
        func,
        bounds=(center - width, center + width),
        method="bounded",
        options={"xatol": tol, "maxiter": 500},
    )
    if result.fun < func(center) - MIN_IMPROVEMENT:
        return float(result.x)
    return center


def orbit_shape(label: EigenstateLabel, fit: CassiniFit | None = None) -> OrbitShape:
    """
    Name the orbit from its lattice node and (optionally) its two-foci fit.

    (2, 0) is a lemniscate and (4, +-2) a trefoil; a state with |m| = n is
    a circle when the fitted a/b stays below 0.3 (or no fit is given) and an
    oval otherwise. Anything else is irregular.
    """
    if label.node == (2, 0):
        return OrbitShape.LEMNISCATE
    if label.n == 4 and abs(label.m) == 2:
        return OrbitShape.TREFOIL
    if abs(label.m) == label.n:
        if fit is None or fit.ratio < CIRCLE_RATIO:
            return OrbitShape.CIRCLE
        return OrbitShape.OVAL
    return OrbitShape.IRREGULAR
