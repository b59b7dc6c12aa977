"""Planck-unit mass specification and the characteristic length scales.

All lengths are returned in units of the Planck length l_P and all masses are
measured in units of the Planck mass m_P. With G = hbar = c = 1:

* Diósi length     a0   = hbar^2 / (G m^3)  = (m_P/m)^3 l_P
* reduced Compton  lC   = hbar / (m c)      = (m_P/m)   l_P
* Schwarzschild    r_s  = 2 G m / c^2       = 2 (m/m_P) l_P
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants

from .errors import InvalidArgumentError

# CODATA values, used only when formatting SI output.
PLANCK_MASS_KG = math.sqrt(constants.hbar * constants.c / constants.G)
PLANCK_LENGTH_M = math.sqrt(constants.hbar * constants.G / constants.c**3)

# Outside this window derived lengths leave comfortable double range.
MASS_MIN_PLANCK = 1e-25
MASS_MAX_PLANCK = 1e5


@dataclass(frozen=True)
class MassSpec:
    """Particle mass in units of the Planck mass."""

    mass_planck: float

    def __post_init__(self):
        m = self.mass_planck
        if not (isinstance(m, (int, float)) and math.isfinite(m) and m > 0):
            raise InvalidArgumentError(f"mass must be positive and finite, got {m!r}")
        object.__setattr__(self, "mass_planck", float(m))

    @classmethod
    def from_kg(cls, mass_kg: float) -> "MassSpec":
        return cls(mass_kg / PLANCK_MASS_KG)

    @property
    def kg(self) -> float:
        return self.mass_planck * PLANCK_MASS_KG

    @property
    def coupling(self) -> float:
        """lC / a0 = (m/m_P)^2, the ratio that switches on relativity in the SN problem."""
        return self.mass_planck**2


@dataclass(frozen=True)
class LengthScalesRow:
    mass_planck: float
    diosi_a0: float
    compton: float
    schwarzschild: float
    diosi_rel: float | None = None

    @property
    def breakdown(self) -> bool:
        """True when the relativistic Diósi width does not exist (m > m_P)."""
        return self.diosi_rel is None


def _as_mass(m: MassSpec | float) -> MassSpec:
    return m if isinstance(m, MassSpec) else MassSpec(m)


def diosi_length_a0(m: MassSpec | float) -> float:
    return _as_mass(m).mass_planck ** -3


def compton_length(m: MassSpec | float) -> float:
    return 1.0 / _as_mass(m).mass_planck


def schwarzschild_radius(m: MassSpec | float) -> float:
    return 2.0 * _as_mass(m).mass_planck


def planck_to_metres(length_planck: float) -> float:
    return length_planck * PLANCK_LENGTH_M


def check_cli_mass(m: float) -> MassSpec:
    """Validate a mass given at the command line and wrap it."""
    if not (MASS_MIN_PLANCK <= m < MASS_MAX_PLANCK):
        raise InvalidArgumentError(
            f"mass {m:g} m_P outside supported range [{MASS_MIN_PLANCK:g}, {MASS_MAX_PLANCK:g})"
        )
    return MassSpec(m)
