"""
Orbit-averaged observables.
"""

import numpy as np

from src.common.exceptions import AnalysisError, DomainError
from src.domain.models import Observables, Trajectory


def _require_samples(trajectory: Trajectory) -> None:
    if len(trajectory) == 0:
        raise AnalysisError("trajectory is empty")


def mean_radius(trajectory: Trajectory) -> float:
    """RMS distance to the trap axis, sqrt(<x^2 + y^2>)."""
    _require_samples(trajectory)
    p = trajectory.positions
    return float(np.sqrt(np.mean(p[:, 0] ** 2 + p[:, 1] ** 2)))


def angular_momentum_series(trajectory: Trajectory, reference_speed: float) -> np.ndarray:
    """Instantaneous (r x v)_z / V at every impact."""
    if reference_speed <= 0:
        raise DomainError(f"reference_speed must be > 0, got {reference_speed}")
    p = trajectory.positions
    v = trajectory.velocities
    return (p[:, 0] * v[:, 1] - p[:, 1] * v[:, 0]) / reference_speed


def mean_angular_momentum(trajectory: Trajectory, reference_speed: float) -> float:
    """<(r x v)_z> / V; positive for counterclockwise motion."""
    _require_samples(trajectory)
    return float(np.mean(angular_momentum_series(trajectory, reference_speed)))


def measure(trajectory: Trajectory, reference_speed: float, transient: int = 0) -> Observables:
    """Observables after dropping the first `transient` records."""
    kept = trajectory.after_transient(transient)
    return Observables(
        mean_radius=mean_radius(kept),
        mean_angular_momentum=mean_angular_momentum(kept, reference_speed),
        sample_count=len(kept),
        transient_discarded=int(kept.bounces[0]) if len(kept) else transient,
    )
