"""
Enumerations for the walker-lab domain.
"""

from enum import Enum


class Verb(str, Enum):
    """Command-line verbs."""
    SIMULATE = "simulate"
    CALIBRATE = "calibrate"
    ANALYZE = "analyze"
    DECOMPOSE = "decompose"
    CLASSIFY = "classify"
    SWEEP = "sweep"
    FIGURES = "figures"


class FigureKey(str, Enum):
    """
    Figure tables extracted from a sweep directory.

    2a: low-memory calibration line R vs Lambda
    2b: discretization tongues (M, Lambda, R)
    4a: mean extent vs Lambda with lattice labels
    4b: mean angular momentum vs Lambda
    4c: (n, m) lattice aggregation
    6c: probability distribution of windowed angular momentum
    """
    CALIBRATION = "2a"
    TONGUES = "2b"
    RADIUS = "4a"
    ANGULAR_MOMENTUM = "4b"
    LATTICE = "4c"
    INTERMITTENCY = "6c"


class OrbitShape(str, Enum):
    """Observed orbit families."""
    CIRCLE = "circle"
    OVAL = "oval"
    LEMNISCATE = "lemniscate"
    TREFOIL = "trefoil"
    IRREGULAR = "irregular"
