"""
Command-line interface for walker-lab.

Every command prints exactly one JSON summary line on standard output;
logs and error messages go to standard error. Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from src.adapters.storage import (
    RunDirectory,
    RunRecordRepository,
    read_config,
    read_trajectory,
    write_table,
    write_trajectory,
)
from src.bootstrap import initialize
from src.common.config import Config
from src.common.exceptions import AnalysisError, StorageError, UsageError, WalkerLabError
from src.common.logging import get_logger
from src.common.units import UnitSystem
from src.domain.enums import FigureKey, Verb
from src.domain.models import SimConfig, SweepSpec, Trajectory
from src.services.calibration import asymptotic_speed, calibrate_kick
from src.services.cassini import fit_cassini, orbit_shape
from src.services.dynamics import simulate, trajectory_to_sources, transient_length
from src.services.eigenstates import classify, classify_point, node_position, segment_eigenstates, sliding_Lz
from src.services.figures import figure_table
from src.services.lab import SweepOptions, run_sweep
from src.services.observables import measure
from src.services.spectrum import dominant_mode, graf_spectrum, mode_power

logger = get_logger(__name__)

FIGURES_EPILOG = """\
figure tables (one CSV per key, named figure_<key>.csv):
  2a  Lambda,R_mean,R_fit                       low-memory calibration line
  2b  M,Lambda,R_mean                           discretization tongues
  4a  Lambda,R_mean,n,m,shape                   mean radius with lattice labels
  4b  Lambda,Lz_mean,n,m                        mean angular momentum
  4c  n,m,R_mean,Lz_mean,count,R_std,Lz_std     lattice aggregation
  6c  Lz,probability                            windowed Lz histogram (needs --keep-trajectories sweep)
"""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose errors always print usage and exit 2."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> tuple[float, ...]:
    """
    Parse `a,b,c` or an inclusive range `start:stop:step`.

    Raises:
        argparse.ArgumentTypeError: On malformed input
    """
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 12) for k in range(count))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}; use a,b,c or start:stop:step")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def emit(summary: dict[str, Any]) -> None:
    """Write the single machine-readable summary line."""
    sys.stdout.write(json.dumps(summary, sort_keys=True, default=_json_default, allow_nan=False) + "\n")
    sys.stdout.flush()


def _units(config: Config) -> UnitSystem:
    return UnitSystem.from_config(config.units)


def _speed_arg(args: argparse.Namespace, config: Config) -> float:
    if args.speed is None:
        return float(config.simulation.get("target_speed", 0.05))
    return _units(config).speed_from_mm_s(args.speed) if args.si else args.speed


def _delta_arg(args: argparse.Namespace, config: Config) -> float:
    delta = args.delta if args.delta is not None else config.simulation.get("spatial_damping")
    if delta is None:
        return math.inf
    if args.si and args.delta is not None:
        return _units(config).length_from_mm(delta)
    return float(delta)


def _calibrate(base: SimConfig, config: Config) -> float:
    cal = config.calibration
    return calibrate_kick(
        base,
        base.target_speed,
        bounces=cal.get("bounces", 5000),
        tail_fraction=cal.get("tail_fraction", 0.2),
        tolerance=cal.get("tolerance", 0.01),
        kick_max=cal.get("kick_max", 1.0),
        max_iterations=cal.get("max_iterations", 60),
    )


def _si_block(config: Config, speed: float, radius: float | None = None, duration: float | None = None) -> dict[str, Any]:
    units = _units(config)
    block: dict[str, Any] = {
        "faraday_wavelength_mm": units.faraday_wavelength_mm,
        "faraday_period_s": units.faraday_period_s,
        "forcing_frequency_hz": units.forcing_frequency_hz,
        "speed_mm_s": units.speed_to_mm_s(speed),
    }
    if radius is not None:
        block["mean_radius_mm"] = units.length_to_mm(radius)
    if duration is not None:
        block["duration_s"] = units.time_to_s(duration)
    return block


# --- simulate ---------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace, config: Config) -> dict[str, Any]:
    """Run one walker and write trajectory.csv + config.json."""
    sim = config.simulation
    if args.sim_config:
        base = read_config(Path(args.sim_config))
    else:
        seed = args.seed if args.seed is not None else int(sim.get("seed", 0))
        base = SimConfig(
            memory=args.memory,
            lambda_well=args.lambda_well,
            friction=args.friction if args.friction is not None else sim.get("friction", 0.97),
            kick=args.kick if args.kick is not None else 0.0,
            target_speed=_speed_arg(args, config),
            spatial_damping=_delta_arg(args, config),
            source_cutoff=sim.get("source_cutoff", 1e-4),
            seed=seed,
        ).validate()
        if args.kick is None:
            base = base.replace(kick=_calibrate(base, config))

    trajectory = simulate(base, args.bounces)
    transient = args.transient
    if transient is None:
        transient = transient_length(base, sim.get("transient_min", 2000), sim.get("transient_factor", 20.0))
    kept = trajectory.after_transient(transient)
    output = Path(args.output)
    csv_path = write_trajectory(trajectory if args.keep_transient else kept, output)

    summary: dict[str, Any] = {
        "command": Verb.SIMULATE.value,
        "trajectory": str(csv_path),
        "config": str(output / "config.json"),
        "bounces": args.bounces,
        "transient": min(transient, len(trajectory)),
        "kick": base.kick,
        "seed": base.seed,
        "observables": None,
        "label": None,
    }
    if len(kept):
        observables = measure(trajectory, base.target_speed, transient)
        label = classify(observables, config.analysis.get("epsilon", 0.26))
        summary["observables"] = observables.to_dict()
        summary["label"] = label.to_dict()
    else:
        logger.warning("No post-transient records; observables skipped", bounces=args.bounces, transient=transient)
    if args.si:
        radius = summary["observables"]["mean_radius"] if summary["observables"] else None
        summary["si"] = _si_block(config, base.target_speed, radius, float(len(trajectory)))
    return summary


# --- calibrate --------------------------------------------------------------

def cmd_calibrate(args: argparse.Namespace, config: Config) -> dict[str, Any]:
    """Find the kick giving the requested free walking speed."""
    sim = config.simulation
    base = SimConfig(
        memory=args.memory,
        lambda_well=0.0,
        friction=args.friction if args.friction is not None else sim.get("friction", 0.97),
        target_speed=_speed_arg(args, config),
        spatial_damping=_delta_arg(args, config),
        source_cutoff=sim.get("source_cutoff", 1e-4),
        seed=args.seed if args.seed is not None else int(sim.get("seed", 0)),
        initial_radius=0.0,
    ).validate()
    kick = _calibrate(base, config)
    cal = config.calibration
    measured = asymptotic_speed(
        base.replace(kick=kick), cal.get("bounces", 5000), cal.get("tail_fraction", 0.2),
    )
    summary: dict[str, Any] = {
        "command": Verb.CALIBRATE.value,
        "memory": base.memory,
        "friction": base.friction,
        "target_speed": base.target_speed,
        "kick": kick,
        "asymptotic_speed": measured,
    }
    if args.si:
        summary["si"] = _si_block(config, base.target_speed)
    return summary


# --- analyze / classify -----------------------------------------------------

def _reference_speed(args: argparse.Namespace, trajectory: Trajectory, config: Config) -> float:
    if args.speed is not None:
        return args.speed
    if trajectory.config is not None and trajectory.config.target_speed > 0:
        return trajectory.config.target_speed
    return float(config.simulation.get("target_speed", 0.05))


def _load(path: str) -> Trajectory:
    trajectory = read_trajectory(Path(path))
    if len(trajectory) == 0:
        raise AnalysisError(f"{path}: trajectory has no records")
    return trajectory


def cmd_analyze(args: argparse.Namespace, config: Config) -> dict[str, Any]:
    """Observables, label, Cassini fit and intermittency of a trajectory file."""
    ana = config.analysis
    epsilon = ana.get("epsilon", 0.26)
    trajectory = _load(args.trajectory)
    speed = _reference_speed(args, trajectory, config)
    observables = measure(trajectory, speed, args.transient)
    kept = trajectory.after_transient(args.transient)
    label = classify(observables, epsilon)

    foci_count = 3 if label.n == 4 and abs(label.m) == 2 else 2
    fit = None
    try:
        fit = fit_cassini(kept, foci_count, ana.get("fit_min_samples", 50), ana.get("fit_max_samples", 2000))
    except AnalysisError as e:
        logger.warning("Cassini fit skipped", reason=str(e))
    shape = orbit_shape(label, fit if fit is not None and fit.foci_count == 2 else None)

    summary: dict[str, Any] = {
        "command": Verb.ANALYZE.value,
        "trajectory": args.trajectory,
        "reference_speed": speed,
        "observables": observables.to_dict(),
        "label": label.to_dict(),
        "cassini": fit.to_dict() if fit else None,
        "shape": shape.value,
        "intermittency": None,
    }
    try:
        profile = sliding_Lz(
            kept, args.window, speed, epsilon,
            ana.get("histogram_range", 3.0), ana.get("bin_width", 0.05), ana.get("peak_factor", 1.5),
        )
        segments = segment_eigenstates(kept, args.window, speed, epsilon)
        summary["intermittency"] = {
            "window": profile.window,
            "peaks": [list(p) for p in profile.peaks],
            "segments": [s.to_dict() for s in segments],
        }
    except AnalysisError as e:
        logger.info("Intermittency analysis skipped", reason=str(e))
    return summary


def cmd_classify(args: argparse.Namespace, config: Config) -> dict[str, Any]:
    """Nearest lattice node from (R, Lz) or from a trajectory file."""
    epsilon = config.analysis.get("epsilon", 0.26)
    if args.trajectory:
        if args.radius is not None or args.lz is not None:
            raise UsageError("give either a trajectory file or --radius/--lz, not both")
        trajectory = _load(args.trajectory)
        observables = measure(trajectory, _reference_speed(args, trajectory, config), args.transient)
        radius, lz = observables.mean_radius, observables.mean_angular_momentum
    else:
        if args.radius is None or args.lz is None:
            raise UsageError("classify needs --radius and --lz, or a trajectory file")
        radius, lz = args.radius, args.lz
    label = classify_point(radius, lz, epsilon)
    r_node, l_node = node_position(label.n, label.m, epsilon)
    return {
        "command": Verb.CLASSIFY.value,
        "mean_radius": radius,
        "mean_angular_momentum": lz,
        "label": label.to_dict(),
        "node": {"mean_radius": r_node, "mean_angular_momentum": l_node},
    }


# --- decompose --------------------------------------------------------------

def cmd_decompose(args: argparse.Namespace, config: Config) -> dict[str, Any]:
    """Centred Bessel spectrum of the wave field left by a trajectory."""
    trajectory = _load(args.trajectory)
    memory = args.memory
    if memory is None:
        if trajectory.config is None:
            raise UsageError("no config.json next to the trajectory; pass --memory")
        memory = trajectory.config.memory
        if not math.isinf(trajectory.config.spatial_damping):
            logger.warning("Spatial damping ignored by the modal decomposition", delta=trajectory.config.spatial_damping)

    end = int(trajectory.bounces[-1]) + 1
    at_bounce = end if args.at_bounce is None else args.at_bounce
    if not int(trajectory.bounces[0]) <= at_bounce <= end:
        raise UsageError(f"--at-bounce must lie in [{int(trajectory.bounces[0])}, {end}]")
    sources = trajectory_to_sources(trajectory, at_bounce)
    spectrum = graf_spectrum(sources, float(at_bounce), memory, args.nmax)
    raw, normalized = mode_power(spectrum)

    output = Path(args.output) if args.output else Path(args.trajectory).parent
    spectrum_path = output / "spectrum.json"
    modes_path = output / "modes.csv"
    try:
        output.mkdir(parents=True, exist_ok=True)
        spectrum_path.write_text(json.dumps(spectrum.to_dict(), indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write {spectrum_path}: {e}")
    write_table(modes_path, ("n", "P_n", "P_n_normalized"), [
        (n, float(raw[n]), float(normalized[n])) for n in range(spectrum.n_max + 1)
    ])
    even = range(2, spectrum.n_max + 1, 2)
    return {
        "command": Verb.DECOMPOSE.value,
        "spectrum": str(spectrum_path),
        "modes": str(modes_path),
        "at_bounce": at_bounce,
        "sources": len(sources),
        "n_max": spectrum.n_max,
        "dominant_mode": dominant_mode(spectrum),
        "dominant_even_mode": dominant_mode(spectrum, even) if spectrum.n_max >= 2 else None,
        "A0": spectrum.a[0],
    }


# --- sweep / figures --------------------------------------------------------

def cmd_sweep(args: argparse.Namespace, config: Config) -> dict[str, Any]:
    """Run a (Lambda, M) sweep into a run directory."""
    sim = config.simulation
    base = SimConfig(
        memory=args.memory_grid[0],
        lambda_well=args.lambda_grid[0],
        friction=args.friction if args.friction is not None else sim.get("friction", 0.97),
        kick=args.kick if args.kick is not None else 0.0,
        target_speed=_speed_arg(args, config),
        spatial_damping=_delta_arg(args, config),
        source_cutoff=sim.get("source_cutoff", 1e-4),
        seed=args.seed if args.seed is not None else int(sim.get("seed", 0)),
    ).validate()
    spec = SweepSpec(
        lambda_grid=args.lambda_grid,
        memory_grid=args.memory_grid,
        replicates=args.replicates,
        bounces=args.bounces,
        base_config=base,
    )
    options = SweepOptions.from_config(
        config, keep_trajectories=args.keep_trajectories, calibrate=args.kick is None,
    )
    output = args.output or config.lab.get("output_dir", "data/runs")
    jobs = args.jobs or int(config.lab.get("jobs", 1))
    run_dir = run_sweep(spec, output, jobs, options)
    records = RunRecordRepository(run_dir).list()
    return {
        "command": Verb.SWEEP.value,
        "run_dir": str(run_dir.path),
        "records": len(records),
        "failed": sum(1 for r in records if not r.ok),
        "points": spec.point_count,
    }


def _kept_trajectories(run_dir: RunDirectory) -> list[Trajectory]:
    if not run_dir.trajectories_path.exists():
        return []
    return [read_trajectory(p) for p in sorted(run_dir.trajectories_path.glob("*/trajectory.csv"))]


def cmd_figures(args: argparse.Namespace, config: Config) -> dict[str, Any]:
    """Extract figure tables from a finished sweep."""
    run_dir = RunDirectory(args.run_dir)
    records = RunRecordRepository(run_dir).list()
    if not records:
        raise StorageError(f"no records in {run_dir.records_path}")
    output = Path(args.output) if args.output else run_dir.path / "figures"
    keys = [FigureKey(k) for k in dict.fromkeys(args.which)]
    trajectories = _kept_trajectories(run_dir) if FigureKey.INTERMITTENCY in keys else []
    written = {}
    for key in keys:
        table = figure_table(
            key, records, trajectories,
            max_residual=config.analysis.get("lattice_residual", 0.2),
            window=args.window,
            epsilon=config.analysis.get("epsilon", 0.26),
        )
        path = write_table(output / f"figure_{key.value}.csv", table.header, table.rows)
        written[key.value] = {"path": str(path), "rows": len(table.rows), **table.summary}
    return {"command": Verb.FIGURES.value, "run_dir": str(run_dir.path), "figures": written}


# --- parser -----------------------------------------------------------------

def _add_physics_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--speed", type=float, help="walking speed V (lambda_F/T_F, mm/s with --si)")
    parser.add_argument("--delta", type=float, help="spatial damping length (lambda_F, mm with --si)")
    parser.add_argument("--friction", type=float, help="per-bounce velocity retention mu")
    parser.add_argument("--seed", type=int, help="base seed (default: WALKER_LAB_SEED or config)")
    parser.add_argument("--si", action="store_true", help="read --speed/--delta in mm, mm/s and add SI values to the summary")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one sub-command per verb."""
    parser = _Parser(prog="walker-lab", description="Walker in a harmonic well: simulation and analysis")
    parser.add_argument("--config", help="alternative config.json")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser(Verb.SIMULATE.value, help="simulate one walker")
    p.add_argument("--lambda", dest="lambda_well", type=float, help="well width Lambda")
    p.add_argument("--memory", type=float, help="memory parameter M")
    p.add_argument("--bounces", type=int, required=True)
    p.add_argument("--kick", type=float, help="kick coefficient C (default: calibrated for --speed)")
    p.add_argument("--transient", type=int, help="records to discard (default max(2000, 20 M))")
    p.add_argument("--keep-transient", action="store_true", help="write the transient records too")
    p.add_argument("--sim-config", help="re-run a config.json written by a previous simulate")
    p.add_argument("-o", "--output", default=".", help="output directory")
    _add_physics_flags(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser(Verb.CALIBRATE.value, help="calibrate the kick for a walking speed")
    p.add_argument("--memory", type=float, required=True)
    _add_physics_flags(p)
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser(Verb.ANALYZE.value, help="observables, fit and intermittency of a trajectory")
    p.add_argument("trajectory")
    p.add_argument("--speed", type=float, help="reference speed V (default: from config.json)")
    p.add_argument("--transient", type=int, default=0)
    p.add_argument("--window", type=float, help="sliding window in T_F (default 4 pi R2 / V)")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser(Verb.DECOMPOSE.value, help="centred Bessel spectrum of the wave field")
    p.add_argument("trajectory")
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--at-bounce", type=int, help="evaluate the field at this bounce (default: after the last)")
    p.add_argument("--memory", type=float, help="memory parameter (default: from config.json)")
    p.add_argument("-o", "--output", help="output directory (default: next to the trajectory)")
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser(Verb.CLASSIFY.value, help="nearest (n, m) lattice node")
    p.add_argument("trajectory", nargs="?")
    p.add_argument("--radius", type=float)
    p.add_argument("--lz", type=float)
    p.add_argument("--speed", type=float)
    p.add_argument("--transient", type=int, default=0)
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser(Verb.SWEEP.value, help="run a (Lambda, M) sweep")
    p.add_argument("--lambda-grid", type=parse_grid, required=True, help="a,b,c or start:stop:step")
    p.add_argument("--memory-grid", type=parse_grid, required=True, help="a,b,c or start:stop:step")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--bounces", type=int, required=True)
    p.add_argument("--jobs", type=int)
    p.add_argument("--kick", type=float, help="fixed kick (default: calibrated per memory value)")
    p.add_argument("--keep-trajectories", action="store_true")
    p.add_argument("-o", "--output", help="run directory (default: lab.output_dir)")
    _add_physics_flags(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser(
        Verb.FIGURES.value,
        help="extract figure tables from a run directory",
        epilog=FIGURES_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("run_dir")
    p.add_argument("--which", nargs="+", required=True, choices=[k.value for k in FigureKey])
    p.add_argument("--window", type=float, help="sliding window for 6c in T_F")
    p.add_argument("-o", "--output", help="output directory (default: <run_dir>/figures)")
    p.set_defaults(handler=cmd_figures)
    return parser


_SIM_CONFIG_FIELDS = (
    ("--lambda", "lambda_well"),
    ("--memory", "memory"),
    ("--speed", "speed"),
    ("--kick", "kick"),
    ("--friction", "friction"),
    ("--delta", "delta"),
    ("--seed", "seed"),
)


def _check(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Cross-flag rules argparse cannot express; violations exit 2."""
    if args.verb == Verb.SIMULATE.value:
        if not args.sim_config and (args.lambda_well is None or args.memory is None):
            parser.error("simulate needs --lambda and --memory (or --sim-config)")
        if args.sim_config:
            # the sidecar fixes every physical parameter
            clashing = [flag for flag, dest in _SIM_CONFIG_FIELDS if getattr(args, dest) is not None]
            if clashing:
                parser.error(f"--sim-config cannot be combined with {', '.join(clashing)}")
        if args.bounces < 0:
            parser.error("--bounces must be >= 0")
    if args.verb == Verb.SWEEP.value and (args.replicates < 1 or args.bounces < 0):
        parser.error("--replicates must be >= 1 and --bounces >= 0")
    if args.verb == Verb.DECOMPOSE.value and args.nmax is not None and not 0 <= args.nmax <= 64:
        parser.error("--nmax must be in [0, 64]")


def main(argv: Sequence[str] | None = None) -> int:
    """
    Parse arguments, run the command and print its summary.

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _check(parser, args)
    handler: Callable[[argparse.Namespace, Config], dict[str, Any]] = args.handler
    try:
        config = initialize(args.config, args.log_level)
        if getattr(args, "nmax", None) is None and args.verb == Verb.DECOMPOSE.value:
            args.nmax = int(config.analysis.get("n_max", 40))
        emit(handler(args, config))
        return 0
    except UsageError as e:
        print(f"walker-lab: error: {e}", file=sys.stderr)
        return 2
    except WalkerLabError as e:
        logger.error("Command failed", verb=args.verb, error=str(e))
        print(f"walker-lab: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
