"""Energy inflow into a cylindrical conductor through its lateral surface."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgument


@dataclass(frozen=True)
class CylindricalConductor:
    """Straight cylinder of length ``length`` and radius ``radius`` (SI units)
    carrying current ``current`` under terminal voltage ``voltage``."""

    length: float
    radius: float
    voltage: float
    current: float

    def __post_init__(self):
        if not (self.length > 0):
            raise InvalidArgument(f"CylindricalConductor: length must be > 0, got {self.length!r}")
        if not (self.radius > 0):
            raise InvalidArgument(f"CylindricalConductor: radius must be > 0, got {self.radius!r}")

    @property
    def e_field(self) -> float:
        """Axial electric field at the surface, V/m."""
        return self.voltage / self.length

    @property
    def h_field(self) -> float:
        """Azimuthal magnetic field at the surface, A/m."""
        return self.current / (2.0 * math.pi * self.radius)

    @property
    def poynting(self) -> float:
        """Magnitude of S = E x H at the surface, directed into the conductor."""
        return self.e_field * self.h_field

    @property
    def surface(self) -> float:
        return 2.0 * math.pi * self.radius * self.length


def poynting_inflow(c: CylindricalConductor) -> float:
    """Power entering the conductor through its lateral surface, s*S (watts).

    Equals the terminal power v*i whatever the conductor's v(i) relation is.
    """
    return c.surface * c.poynting
