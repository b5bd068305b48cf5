"""
Physical scales for walker-lab.

All dynamics and analysis run in Faraday units: lengths in lambda_F,
times in T_F, so k_F = 2*pi and speeds are in lambda_F/T_F. The physical
scales are used only to convert input flags and output summaries.
"""

import math
from dataclasses import dataclass

FARADAY_WAVENUMBER = 2.0 * math.pi


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between Faraday units and millimetres/seconds."""
    faraday_wavelength_mm: float = 4.75
    faraday_period_s: float = 0.025
    forcing_frequency_hz: float = 80.0

    @classmethod
    def from_config(cls, units: dict) -> "UnitSystem":
        """Build from the `units` configuration section."""
        return cls(
            faraday_wavelength_mm=units.get("faraday_wavelength_mm", 4.75),
            faraday_period_s=units.get("faraday_period_s", 0.025),
            forcing_frequency_hz=units.get("forcing_frequency_hz", 80.0),
        )

    @property
    def speed_scale_mm_s(self) -> float:
        """One lambda_F/T_F expressed in mm/s."""
        return self.faraday_wavelength_mm / self.faraday_period_s

    def length_to_mm(self, value: float) -> float:
        return value * self.faraday_wavelength_mm

    def length_from_mm(self, value_mm: float) -> float:
        return value_mm / self.faraday_wavelength_mm

    def time_to_s(self, value: float) -> float:
        return value * self.faraday_period_s

    def speed_to_mm_s(self, value: float) -> float:
        return value * self.speed_scale_mm_s

    def speed_from_mm_s(self, value_mm_s: float) -> float:
        return value_mm_s / self.speed_scale_mm_s
