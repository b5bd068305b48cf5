"""
Figure data extraction from sweep records.

Every extractor turns a list of RunRecords (and, for the intermittency
histogram, kept trajectories) into a plain table: a header and rows,
plus a small summary for the command's JSON line.
"""

from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from src.common.exceptions import AnalysisError, DomainError
from src.domain.enums import FigureKey
from src.domain.models import RunRecord, Trajectory
from src.services.eigenstates import (
    BIN_WIDTH,
    EPSILON,
    HISTOGRAM_RANGE,
    PEAK_FACTOR,
    find_histogram_peaks,
    probability_histogram,
    sliding_Lz,
)

LATTICE_RESIDUAL = 0.2
MIN_LINE_POINTS = 3

TONGUE_HEADER = ("M", "Lambda", "R_mean")
LATTICE_HEADER = ("n", "m", "R_mean", "Lz_mean", "count", "R_std", "Lz_std")
CALIBRATION_HEADER = ("Lambda", "R_mean", "R_fit")
RADIUS_HEADER = ("Lambda", "R_mean", "n", "m", "shape")
ANGULAR_MOMENTUM_HEADER = ("Lambda", "Lz_mean", "n", "m")
INTERMITTENCY_HEADER = ("Lz", "probability")


@dataclass(frozen=True)
class FigureTable:
    """Rows of one figure's data file."""
    key: FigureKey
    header: tuple[str, ...]
    rows: list[tuple[Any, ...]]
    summary: dict[str, Any] = field(default_factory=dict)


def _ok(records: Iterable[RunRecord]) -> list[RunRecord]:
    return [r for r in records if r.ok]


def _line_fit(records: list[RunRecord]) -> tuple[float, float]:
    """Least-squares (slope, intercept) of R_mean against Lambda."""
    usable = _ok(records)
    if len(usable) < MIN_LINE_POINTS:
        raise AnalysisError(f"calibration line needs >= {MIN_LINE_POINTS} points, got {len(usable)}")
    if len({r.memory for r in usable}) != 1:
        raise AnalysisError("calibration line needs records at a single memory value")
    x = np.array([r.lambda_well for r in usable])
    y = np.array([r.observables.mean_radius for r in usable])
    if np.unique(x).size < 2:
        raise AnalysisError("calibration line needs at least two distinct Lambda values")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def calibration_line(records: list[RunRecord]) -> tuple[float, float]:
    """
    Fit R = slope * Lambda + intercept over low-memory circular runs.

    Returns:
        (slope, relative shift slope - 1)

    Raises:
        AnalysisError: Fewer than 3 usable records, or mixed memory values
    """
    slope, _ = _line_fit(records)
    return slope, slope - 1.0


def tongue_table(records: list[RunRecord]) -> list[tuple[float, float, float]]:
    """(M, Lambda, R_mean) rows of every successful run, sorted by (M, Lambda)."""
    usable = sorted(_ok(records), key=lambda r: (r.memory, r.lambda_well, r.key))
    return [(r.memory, r.lambda_well, r.observables.mean_radius) for r in usable]


def lattice_table(
    records: list[RunRecord],
    max_residual: float = LATTICE_RESIDUAL,
) -> list[tuple[int, int, float, float, int, float, float]]:
    """
    Aggregate well-classified runs by lattice node.

    Rows are (n, m, R_mean, Lz_mean, count, R_std, Lz_std), sorted by (n, m),
    over runs whose classification distance is below max_residual.
    """
    groups: dict[tuple[int, int], list[RunRecord]] = {}
    for record in _ok(records):
        if record.label is None or record.label.distance >= max_residual:
            continue
        groups.setdefault(record.label.node, []).append(record)

    rows = []
    for (n, m), members in sorted(groups.items()):
        radius = np.array([r.observables.mean_radius for r in members])
        lz = np.array([r.observables.mean_angular_momentum for r in members])
        rows.append((
            n, m,
            float(radius.mean()), float(lz.mean()),
            len(members),
            float(radius.std()), float(lz.std()),
        ))
    return rows


def _labelled(records: list[RunRecord]) -> list[RunRecord]:
    return sorted((r for r in _ok(records) if r.label is not None), key=lambda r: (r.lambda_well, r.key))


def intermittency_histogram(
    trajectories: Iterable[Trajectory],
    reference_speed: float,
    window: float | None = None,
    epsilon: float = EPSILON,
    hist_range: float = HISTOGRAM_RANGE,
    bin_width: float = BIN_WIDTH,
    peak_factor: float = PEAK_FACTOR,
) -> tuple[np.ndarray, np.ndarray, tuple[tuple[float, float], ...]]:
    """
    Windowed Lz distribution pooled over several trajectories.

    Returns:
        (bin centres, probabilities, peaks)

    Raises:
        AnalysisError: No trajectory long enough for the window
    """
    pooled = []
    for trajectory in trajectories:
        try:
            pooled.append(sliding_Lz(trajectory, window, reference_speed, epsilon, hist_range, bin_width).values)
        except AnalysisError:
            continue
    if not pooled:
        raise AnalysisError("no kept trajectory is longer than the window")
    edges, probabilities = probability_histogram(np.concatenate(pooled), hist_range, bin_width)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return centres, probabilities, find_histogram_peaks(edges, probabilities, peak_factor)


def figure_table(
    key: FigureKey,
    records: list[RunRecord],
    trajectories: Iterable[Trajectory] | None = None,
    max_residual: float = LATTICE_RESIDUAL,
    window: float | None = None,
    epsilon: float = EPSILON,
) -> FigureTable:
    """
    Build the data table of one figure.

    Raises:
        AnalysisError: Not enough data for the requested figure
    """
    if key is FigureKey.CALIBRATION:
        slope, intercept = _line_fit(records)
        rows = [
            (r.lambda_well, r.observables.mean_radius, slope * r.lambda_well + intercept)
            for r in sorted(_ok(records), key=lambda r: (r.lambda_well, r.key))
        ]
        return FigureTable(key, CALIBRATION_HEADER, rows, {"slope": slope, "intercept": intercept, "shift": slope - 1.0})

    if key is FigureKey.TONGUES:
        rows = tongue_table(records)
        return FigureTable(key, TONGUE_HEADER, rows, {"memories": sorted({row[0] for row in rows})})

    if key is FigureKey.RADIUS:
        rows = [
            (r.lambda_well, r.observables.mean_radius, r.label.n, r.label.m, r.shape)
            for r in _labelled(records)
        ]
        return FigureTable(key, RADIUS_HEADER, rows, {"n_values": sorted({row[2] for row in rows})})

    if key is FigureKey.ANGULAR_MOMENTUM:
        rows = [
            (r.lambda_well, r.observables.mean_angular_momentum, r.label.n, r.label.m)
            for r in _labelled(records)
        ]
        return FigureTable(key, ANGULAR_MOMENTUM_HEADER, rows)

    if key is FigureKey.LATTICE:
        rows = lattice_table(records, max_residual)
        return FigureTable(key, LATTICE_HEADER, rows, {"nodes": [[row[0], row[1]] for row in rows]})

    if key is FigureKey.INTERMITTENCY:
        usable = _ok(records)
        if not usable:
            raise AnalysisError("no successful records")
        speed = usable[0].config.target_speed
        centres, probabilities, peaks = intermittency_histogram(trajectories or [], speed, window, epsilon)
        rows = [(float(c), float(p)) for c, p in zip(centres, probabilities)]
        return FigureTable(key, INTERMITTENCY_HEADER, rows, {"peaks": [list(p) for p in peaks]})

    raise DomainError(f"unknown figure key {key!r}")
