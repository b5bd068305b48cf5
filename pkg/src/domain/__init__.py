"""
Domain models for walker-lab.
"""

from src.domain.enums import FigureKey, OrbitShape, Verb
from src.domain.models import (
    CassiniFit,
    EigenstateLabel,
    EigenstateSegment,
    IntermittencyProfile,
    ModeSpectrum,
    Observables,
    RunRecord,
    SimConfig,
    SweepSpec,
    Trajectory,
    WalkerState,
    WaveSource,
    WaveSources,
)

__all__ = [
    "FigureKey",
    "OrbitShape",
    "Verb",
    "CassiniFit",
    "EigenstateLabel",
    "EigenstateSegment",
    "IntermittencyProfile",
    "ModeSpectrum",
    "Observables",
    "RunRecord",
    "SimConfig",
    "SweepSpec",
    "Trajectory",
    "WalkerState",
    "WaveSource",
    "WaveSources",
]
