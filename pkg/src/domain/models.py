"""
Domain models for walker-lab.

Value types for the simulator, the analysis layer and the sweep harness.
All quantities are dimensionless (lambda_F, T_F units).
"""

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable, Iterator

import numpy as np

from src.common.exceptions import ConfigError, DomainError


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value}")


@dataclass(frozen=True)
class SimConfig:
    """
    All dynamical parameters of one walker run.

    Attributes:
        memory: Memory parameter M = tau/T_F (> 0)
        lambda_well: Dimensionless well width Lambda = V/(omega lambda_F); 0 means no trap
        friction: Per-bounce velocity retention mu in (0, 1)
        kick: Slope-to-momentum coefficient C (>= 0)
        target_speed: Walking speed V the kick is calibrated for
        spatial_damping: delta in lambda_F; math.inf drops the spatial factor
        source_cutoff: Sources with temporal weight below this are pruned
        seed: Seed of the initial-condition generator
        initial_radius: Starting distance from the axis (None -> Lambda)
        initial_heading: Starting velocity angle in radians (None -> random)
    """
    memory: float
    lambda_well: float
    friction: float = 0.97
    kick: float = 0.0
    target_speed: float = 0.05
    spatial_damping: float = math.inf
    source_cutoff: float = 1e-4
    seed: int = 0
    initial_radius: float | None = None
    initial_heading: float | None = None

    def validate(self) -> "SimConfig":
        """
        Check the configuration invariants.

        Raises:
            ConfigError: On the first violated invariant
        """
        for name in ("memory", "lambda_well", "friction", "kick", "target_speed", "source_cutoff"):
            _finite(name, getattr(self, name))
        if self.memory <= 0:
            raise ConfigError(f"memory must be > 0, got {self.memory}")
        if self.lambda_well < 0:
            raise ConfigError(f"lambda_well must be >= 0, got {self.lambda_well}")
        if not 0 < self.friction < 1:
            raise ConfigError(f"friction must be in (0, 1), got {self.friction}")
        if self.kick < 0:
            raise ConfigError(f"kick must be >= 0, got {self.kick}")
        if self.target_speed < 0:
            raise ConfigError(f"target_speed must be >= 0, got {self.target_speed}")
        if math.isnan(self.spatial_damping) or self.spatial_damping <= 0:
            raise ConfigError(f"spatial_damping must be > 0, got {self.spatial_damping}")
        if not 0 < self.source_cutoff < 1:
            raise ConfigError(f"source_cutoff must be in (0, 1), got {self.source_cutoff}")
        if self.lambda_well > 0 and self.target_speed <= 0:
            raise ConfigError("a trapped walker needs target_speed > 0 to define omega = V/Lambda")
        if self.initial_radius is not None:
            _finite("initial_radius", self.initial_radius)
            if self.initial_radius < 0:
                raise ConfigError(f"initial_radius must be >= 0, got {self.initial_radius}")
        if self.initial_heading is not None:
            _finite("initial_heading", self.initial_heading)
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        return self

    @property
    def trap_frequency(self) -> float:
        """omega = V/Lambda in 1/T_F; 0 when there is no trap."""
        if self.lambda_well == 0:
            return 0.0
        return self.target_speed / self.lambda_well

    def replace(self, **changes: Any) -> "SimConfig":
        """Copy with some fields changed."""
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-compatible dictionary (infinite delta -> None)."""
        data = asdict(self)
        if math.isinf(self.spatial_damping):
            data["spatial_damping"] = None
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        """Create from dictionary."""
        values = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        if values.get("spatial_damping") is None:
            values["spatial_damping"] = math.inf
        return cls(**values)


@dataclass(frozen=True)
class WalkerState:
    """
    Walker at the instant of a bounce.

    Attributes:
        position: (x, y) in lambda_F
        velocity: (vx, vy) in lambda_F/T_F, as arriving at the bounce
        bounce_index: Number of bounces already performed
        time: Time in T_F (equal to bounce_index)
    """
    position: tuple[float, float]
    velocity: tuple[float, float]
    bounce_index: int = 0
    time: float = 0.0

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass(frozen=True)
class WaveSource:
    """One past impact contributing a damped J0 to the wave field."""
    position: tuple[float, float]
    birth_time: float


class WaveSources:
    """
    Ordered, array-backed collection of wave sources.

    Sources are kept in birth order, so pruning by age only ever removes a
    prefix.
    """

    def __init__(self, positions: np.ndarray | None = None, birth_times: np.ndarray | None = None):
        if positions is None:
            positions = np.empty((0, 2))
        if birth_times is None:
            birth_times = np.empty(0)
        self.positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        self.birth_times = np.asarray(birth_times, dtype=float).reshape(-1)
        if len(self.positions) != len(self.birth_times):
            raise DomainError("positions and birth_times must have the same length")

    @classmethod
    def coerce(cls, sources: "WaveSources | Iterable[WaveSource]") -> "WaveSources":
        """Accept either a WaveSources or any iterable of WaveSource."""
        if isinstance(sources, WaveSources):
            return sources
        items = list(sources)
        if not items:
            return cls()
        return cls(
            np.array([s.position for s in items], dtype=float),
            np.array([s.birth_time for s in items], dtype=float),
        )

    def __len__(self) -> int:
        return len(self.birth_times)

    def __iter__(self) -> Iterator[WaveSource]:
        for (x, y), t in zip(self.positions, self.birth_times):
            yield WaveSource((float(x), float(y)), float(t))

    def __getitem__(self, index: slice) -> "WaveSources":
        return WaveSources(self.positions[index], self.birth_times[index])

    def append(self, source: WaveSource) -> "WaveSources":
        """Return a new collection with one more (youngest) source."""
        return WaveSources(
            np.vstack([self.positions, np.asarray(source.position, dtype=float).reshape(1, 2)]),
            np.append(self.birth_times, source.birth_time),
        )

    def concat(self, other: "WaveSources") -> "WaveSources":
        return WaveSources(
            np.vstack([self.positions, other.positions]),
            np.concatenate([self.birth_times, other.birth_times]),
        )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Ordered impact records produced by one run.

    Record k holds the impact position, the velocity leaving that impact
    (after friction and kick) and the impact time. Times are consecutive
    integers in T_F.
    """
    bounces: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    config: SimConfig | None = None
    transient_discarded: int = 0

    def __post_init__(self) -> None:
        n = len(self.bounces)
        if self.positions.shape != (n, 2) or self.velocities.shape != (n, 2):
            raise DomainError("trajectory arrays must have shapes (N,), (N, 2), (N, 2)")
        if n > 1 and not np.all(np.diff(self.bounces) == 1):
            raise DomainError("trajectory bounces must be consecutive integers")
        for arr in (self.bounces, self.positions, self.velocities):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(
        cls,
        positions: np.ndarray,
        velocities: np.ndarray,
        config: SimConfig | None = None,
        start_bounce: int = 0,
    ) -> "Trajectory":
        positions = np.array(positions, dtype=float).reshape(-1, 2)
        velocities = np.array(velocities, dtype=float).reshape(-1, 2)
        bounces = np.arange(start_bounce, start_bounce + len(positions), dtype=np.int64)
        return cls(bounces, positions, velocities, config, transient_discarded=start_bounce)

    @classmethod
    def empty(cls, config: SimConfig | None = None) -> "Trajectory":
        return cls.from_arrays(np.empty((0, 2)), np.empty((0, 2)), config)

    @classmethod
    def concatenate(cls, parts: list["Trajectory"]) -> "Trajectory":
        """Join trajectories end to end, renumbering bounces from the first part."""
        if not parts:
            return cls.empty()
        start = int(parts[0].bounces[0]) if len(parts[0]) else 0
        return cls.from_arrays(
            np.vstack([p.positions for p in parts]),
            np.vstack([p.velocities for p in parts]),
            parts[0].config,
            start_bounce=start,
        )

    def __len__(self) -> int:
        return len(self.bounces)

    @property
    def times(self) -> np.ndarray:
        return self.bounces.astype(float)

    @property
    def radii(self) -> np.ndarray:
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    @property
    def speeds(self) -> np.ndarray:
        return np.hypot(self.velocities[:, 0], self.velocities[:, 1])

    @property
    def duration(self) -> float:
        """Covered time span in T_F (number of records)."""
        return float(len(self))

    def slice(self, start: int, stop: int | None = None) -> "Trajectory":
        """Records [start, stop) by position in this trajectory."""
        bounces = np.array(self.bounces[start:stop])
        return Trajectory(
            bounces,
            np.array(self.positions[start:stop]),
            np.array(self.velocities[start:stop]),
            self.config,
            transient_discarded=int(bounces[0]) if len(bounces) else self.transient_discarded,
        )

    def after_transient(self, count: int) -> "Trajectory":
        """Drop the first `count` records."""
        return self.slice(min(count, len(self)))

    def records(self) -> Iterator[tuple[int, float, float, float, float, float]]:
        """Iterate (bounce, t, x, y, vx, vy) rows."""
        for k, (x, y), (vx, vy) in zip(self.bounces, self.positions, self.velocities):
            yield int(k), float(k), float(x), float(y), float(vx), float(vy)


@dataclass(frozen=True)
class Observables:
    """
    Orbit-averaged observables of a trajectory.

    Attributes:
        mean_radius: RMS distance to the axis R in lambda_F
        mean_angular_momentum: <(r x v)_z>/(lambda_F V)
        sample_count: Number of impacts averaged
        transient_discarded: Bounces dropped before averaging
    """
    mean_radius: float
    mean_angular_momentum: float
    sample_count: int
    transient_discarded: int = 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Observables":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class ModeSpectrum:
    """
    Centred Bessel-mode coefficients of the wave field.

    h(r, theta) = A0 J0(2 pi r) + sum_n Jn(2 pi r) [An cos n theta + Bn sin n theta]

    Attributes:
        a: A_0..A_n_max
        b: B_1..B_n_max
        n_max: Highest order
        evaluation_time: Time the field was evaluated at
    """
    a: tuple[float, ...]
    b: tuple[float, ...]
    n_max: int
    evaluation_time: float = 0.0

    def __post_init__(self) -> None:
        if len(self.a) != self.n_max + 1 or len(self.b) != self.n_max:
            raise DomainError("spectrum must hold n_max+1 A coefficients and n_max B coefficients")

    @property
    def b_full(self) -> np.ndarray:
        """B_0..B_n_max with B_0 = 0."""
        return np.concatenate([[0.0], np.asarray(self.b, dtype=float)])

    @property
    def power(self) -> np.ndarray:
        """P_n = A_n^2 + B_n^2."""
        return np.asarray(self.a, dtype=float) ** 2 + self.b_full ** 2

    def to_dict(self) -> dict[str, Any]:
        return {
            "a_coeffs": list(self.a),
            "b_coeffs": list(self.b),
            "n_max": self.n_max,
            "evaluation_time": self.evaluation_time,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModeSpectrum":
        return cls(
            a=tuple(float(v) for v in data["a_coeffs"]),
            b=tuple(float(v) for v in data["b_coeffs"]),
            n_max=int(data["n_max"]),
            evaluation_time=float(data.get("evaluation_time", 0.0)),
        )


@dataclass(frozen=True)
class CassiniFit:
    """
    Generalized Cassini curve fitted to an orbit, centred on the trap axis.

    Attributes:
        foci_count: Number of foci p (2 or 3)
        a: Focal distance from the axis
        b: Product constant (product of focal distances = b^p)
        orientation: Angle of the first focus
        residual: RMS implicit-equation defect, normalized by b^4 (two foci) or b^3 (three foci)
    """
    foci_count: int
    a: float
    b: float
    orientation: float
    residual: float

    @property
    def ratio(self) -> float:
        return self.a / self.b if self.b > 0 else math.inf

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CassiniFit":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class EigenstateLabel:
    """
    Node (n, m) of the eigenstate lattice with its residual distance.

    m runs over -n, -n+2, ..., n.
    """
    n: int
    m: int
    distance: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if abs(self.m) > self.n or (self.n - self.m) % 2 != 0:
            raise DomainError(f"m={self.m} is not allowed for n={self.n}")

    @property
    def node(self) -> tuple[int, int]:
        return self.n, self.m

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EigenstateLabel":
        return cls(int(data["n"]), int(data["m"]), float(data.get("distance", 0.0)))


@dataclass(frozen=True, eq=False)
class IntermittencyProfile:
    """
    Windowed angular momentum of a trajectory and its distribution.

    Attributes:
        window: Window length in T_F
        times: Centre time of each window
        values: Windowed mean angular momentum
        bin_edges: Histogram edges
        probabilities: Histogram bin probabilities (sum to 1)
        peaks: (location, mass) of each detected peak
    """
    window: float
    times: np.ndarray
    values: np.ndarray
    bin_edges: np.ndarray
    probabilities: np.ndarray
    peaks: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def peak_locations(self) -> list[float]:
        return [loc for loc, _ in self.peaks]


@dataclass(frozen=True)
class EigenstateSegment:
    """Stretch of a trajectory spent in one eigenstate."""
    t_start: float
    t_end: float
    label: EigenstateLabel

    def to_dict(self) -> dict[str, Any]:
        return {"t_start": self.t_start, "t_end": self.t_end, **self.label.to_dict()}


@dataclass(frozen=True)
class SweepSpec:
    """
    Parameter sweep over (Lambda, M).

    Attributes:
        lambda_grid: Strictly increasing Lambda values
        memory_grid: Strictly increasing M values
        replicates: Seeds per grid point
        bounces: Bounces per run
        base_config: Template for every run (memory, lambda_well, seed, kick replaced)
    """
    lambda_grid: tuple[float, ...]
    memory_grid: tuple[float, ...]
    replicates: int
    bounces: int
    base_config: SimConfig

    def validate(self) -> "SweepSpec":
        for name, grid in (("lambda_grid", self.lambda_grid), ("memory_grid", self.memory_grid)):
            if not grid:
                raise ConfigError(f"{name} must not be empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be strictly increasing")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if self.bounces < 0:
            raise ConfigError(f"bounces must be >= 0, got {self.bounces}")
        if min(self.memory_grid) <= 0:
            raise ConfigError("memory values must be > 0")
        if min(self.lambda_grid) < 0:
            raise ConfigError("lambda values must be >= 0")
        return self

    def keys(self) -> Iterator[tuple[int, int, int]]:
        """(lambda_index, memory_index, replicate) in canonical order."""
        for j in range(len(self.memory_grid)):
            for i in range(len(self.lambda_grid)):
                for r in range(self.replicates):
                    yield i, j, r

    @property
    def point_count(self) -> int:
        return len(self.lambda_grid) * len(self.memory_grid) * self.replicates

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda_grid": list(self.lambda_grid),
            "memory_grid": list(self.memory_grid),
            "replicates": self.replicates,
            "bounces": self.bounces,
            "base_config": self.base_config.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepSpec":
        return cls(
            lambda_grid=tuple(float(v) for v in data["lambda_grid"]),
            memory_grid=tuple(float(v) for v in data["memory_grid"]),
            replicates=int(data["replicates"]),
            bounces=int(data["bounces"]),
            base_config=SimConfig.from_dict(data["base_config"]),
        )


@dataclass(frozen=True)
class RunRecord:
    """
    Self-describing outcome of one sweep point.

    Re-running `config` reproduces `observables` bit for bit; `runtime`
    holds the only non-deterministic fields.
    """
    key: tuple[int, int, int]
    config: SimConfig
    observables: Observables | None = None
    label: EigenstateLabel | None = None
    cassini: CassiniFit | None = None
    shape: str | None = None
    error: str | None = None
    runtime: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def lambda_well(self) -> float:
        return self.config.lambda_well

    @property
    def memory(self) -> float:
        return self.config.memory

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def ok(self) -> bool:
        return self.error is None and self.observables is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "key": list(self.key),
            "lambda_well": self.lambda_well,
            "memory": self.memory,
            "seed": self.seed,
            "config": self.config.to_dict(),
            "observables": self.observables.to_dict() if self.observables else None,
            "label": self.label.to_dict() if self.label else None,
            "cassini": self.cassini.to_dict() if self.cassini else None,
            "shape": self.shape,
            "error": self.error,
            "runtime": self.runtime,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunRecord":
        return cls(
            key=tuple(int(v) for v in data["key"]),
            config=SimConfig.from_dict(data["config"]),
            observables=Observables.from_dict(data["observables"]) if data.get("observables") else None,
            label=EigenstateLabel.from_dict(data["label"]) if data.get("label") else None,
            cassini=CassiniFit.from_dict(data["cassini"]) if data.get("cassini") else None,
            shape=data.get("shape"),
            error=data.get("error"),
            runtime=data.get("runtime") or {},
        )
