"""
walker-lab

Simulation and analysis of a bouncing-droplet walker confined in a
harmonic well.
"""

__version__ = "0.1.0"
