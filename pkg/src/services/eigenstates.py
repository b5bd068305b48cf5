"""
Eigenstate lattice and intermittency analysis for walker-lab.

Nodes (n, m) sit at R = (n - eps)/2 and Lz = m (n - eps) / (2n), with
m in {-n, -n+2, ..., n}. A trajectory is labelled by the nearest node;
long detuned runs are cut into stretches of constant label.
"""

import math

import numpy as np

from src.common.exceptions import AnalysisError, DomainError
from src.domain.models import (
    EigenstateLabel,
    EigenstateSegment,
    IntermittencyProfile,
    Observables,
    Trajectory,
)
from src.services.observables import angular_momentum_series

EPSILON = 0.26

HISTOGRAM_RANGE = 3.0
BIN_WIDTH = 0.05
PEAK_FACTOR = 1.5


def node_position(n: int, m: int, epsilon: float = EPSILON) -> tuple[float, float]:
    """Predicted (R, Lz) of lattice node (n, m)."""
    return (n - epsilon) / 2.0, m * (n - epsilon) / (2.0 * n)


def classify_point(radius: float, angular_momentum: float, epsilon: float = EPSILON) -> EigenstateLabel:
    """
    Nearest lattice node to (R, Lz).

    n = round(2R + eps) (half up, at least 1); m is the allowed value closest
    to 2 n Lz / (n - eps).
    """
    if not (math.isfinite(radius) and math.isfinite(angular_momentum)):
        raise DomainError("radius and angular momentum must be finite")
    n = max(1, int(math.floor(2.0 * radius + epsilon + 0.5)))
    target = 2.0 * n * angular_momentum / (n - epsilon)
    m = min(range(-n, n + 1, 2), key=lambda v: (abs(v - target), abs(v)))
    r_node, l_node = node_position(n, m, epsilon)
    return EigenstateLabel(n, m, math.hypot(radius - r_node, angular_momentum - l_node))


def classify(observables: Observables, epsilon: float = EPSILON) -> EigenstateLabel:
    """Label a run from its orbit-averaged observables."""
    return classify_point(observables.mean_radius, observables.mean_angular_momentum, epsilon)


def default_window(reference_speed: float, epsilon: float = EPSILON) -> float:
    """4 pi R2 / V with R2 = (2 - eps)/2: two turns of a circular n = 2 orbit."""
    if reference_speed <= 0:
        raise DomainError(f"reference_speed must be > 0, got {reference_speed}")
    return 4.0 * math.pi * (2.0 - epsilon) / 2.0 / reference_speed


def _window_bounces(trajectory: Trajectory, window: float) -> int:
    if not math.isfinite(window) or window <= 0:
        raise DomainError(f"window must be > 0, got {window}")
    width = max(1, int(round(window)))
    if len(trajectory) < width:
        raise AnalysisError(f"trajectory ({len(trajectory)} bounces) is shorter than the window ({width})")
    return width


def _moving_mean(values: np.ndarray, width: int) -> np.ndarray:
    """Means over every run of `width` consecutive values (unit stride)."""
    csum = np.concatenate([[0.0], np.cumsum(values)])
    return (csum[width:] - csum[:-width]) / width


def _window_centres(trajectory: Trajectory, width: int) -> np.ndarray:
    return trajectory.times[: len(trajectory) - width + 1] + 0.5 * (width - 1)


def probability_histogram(values: np.ndarray, hist_range: float, bin_width: float) -> tuple[np.ndarray, np.ndarray]:
    """Bin probabilities over [-hist_range, hist_range]; out-of-range values land in the end bins."""
    bins = int(round(2.0 * hist_range / bin_width))
    edges = np.linspace(-hist_range, hist_range, bins + 1)
    counts, _ = np.histogram(np.clip(values, -hist_range, hist_range), bins=edges)
    return edges, counts / counts.sum()


def find_histogram_peaks(edges: np.ndarray, probabilities: np.ndarray, factor: float) -> tuple[tuple[float, float], ...]:
    """
    Local maxima above factor x the median occupied-bin mass.

    A bin is a local maximum when it beats its left neighbour and is not
    beaten by its right one; the range ends count as empty bins.

    Two departures from a plain "factor x median bin" rule: the median is
    taken over occupied bins only, since most of the 120 bins are empty and
    their median is 0; and the largest bin is always a peak, so a steady
    orbit whose mass sits in one bin still reports its state.
    """
    occupied = probabilities[probabilities > 0]
    threshold = factor * float(np.median(occupied))
    padded = np.concatenate([[0.0], probabilities, [0.0]])
    centres = 0.5 * (edges[:-1] + edges[1:])
    top = int(np.argmax(probabilities))
    peaks = []
    for i, mass in enumerate(probabilities):
        if not (mass > padded[i] and mass >= padded[i + 2]):
            continue
        if mass > threshold or i == top:
            peaks.append((float(centres[i]), float(mass)))
    return tuple(peaks)


def sliding_Lz(
    trajectory: Trajectory,
    window: float | None,
    reference_speed: float,
    epsilon: float = EPSILON,
    hist_range: float = HISTOGRAM_RANGE,
    bin_width: float = BIN_WIDTH,
    peak_factor: float = PEAK_FACTOR,
) -> IntermittencyProfile:
    """
    Windowed mean angular momentum, its histogram and its peaks.

    Args:
        trajectory: Post-transient trajectory
        window: Window length in T_F (None -> default_window)
        reference_speed: V used to normalize Lz
        epsilon: Lattice offset, only used for the default window
        hist_range: Histogram covers [-hist_range, hist_range]; values outside are clipped
        bin_width: Histogram bin width
        peak_factor: Peak threshold relative to the median occupied bin

    Raises:
        AnalysisError: Trajectory shorter than the window
    """
    if window is None:
        window = default_window(reference_speed, epsilon)
    width = _window_bounces(trajectory, window)
    values = _moving_mean(angular_momentum_series(trajectory, reference_speed), width)
    edges, probabilities = probability_histogram(values, hist_range, bin_width)
    return IntermittencyProfile(
        window=float(width),
        times=_window_centres(trajectory, width),
        values=values,
        bin_edges=edges,
        probabilities=probabilities,
        peaks=find_histogram_peaks(edges, probabilities, peak_factor),
    )


def _runs(keys: list[tuple[int, int]]) -> list[list[int]]:
    """[first, last] index pairs of maximal runs of equal keys."""
    runs: list[list[int]] = []
    for i, key in enumerate(keys):
        if runs and keys[runs[-1][0]] == key:
            runs[-1][1] = i
        else:
            runs.append([i, i])
    return runs


def segment_eigenstates(
    trajectory: Trajectory,
    window: float | None,
    reference_speed: float,
    epsilon: float = EPSILON,
) -> list[EigenstateSegment]:
    """
    Cut a trajectory into stretches of constant eigenstate.

    Every window is labelled from its own (R, Lz). Runs of equal labels
    shorter than one window are dropped and their neighbours re-joined.
    A segment starts at the centre of its first window (the record start
    for the first one) and ends where the next one starts (the record end,
    exclusive, for the last one).

    Raises:
        AnalysisError: Trajectory shorter than the window
    """
    if window is None:
        window = default_window(reference_speed, epsilon)
    width = _window_bounces(trajectory, window)
    lz = _moving_mean(angular_momentum_series(trajectory, reference_speed), width)
    radius = np.sqrt(np.maximum(_moving_mean(trajectory.radii ** 2, width), 0.0))
    labels = [classify_point(float(r), float(l), epsilon) for r, l in zip(radius, lz)]
    keys = [label.node for label in labels]

    kept = [run for run in _runs(keys) if run[1] - run[0] + 1 >= width]
    merged: list[list[int]] = []
    for first, last in kept:
        if merged and keys[merged[-1][0]] == keys[first]:
            merged[-1][1] = last
        else:
            merged.append([first, last])
    if not merged:
        return []

    centres = _window_centres(trajectory, width)
    starts = [float(trajectory.times[0])] + [float(centres[first]) for first, _ in merged[1:]]
    ends = starts[1:] + [float(trajectory.times[-1]) + 1.0]
    distances = np.array([label.distance for label in labels])
    segments = []
    for (first, last), t_start, t_end in zip(merged, starts, ends):
        n, m = keys[first]
        distance = float(np.median(distances[first:last + 1]))
        segments.append(EigenstateSegment(t_start, t_end, EigenstateLabel(n, m, distance)))
    return segments
