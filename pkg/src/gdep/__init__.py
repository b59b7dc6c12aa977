"""Quasi-relativistic Schrödinger toolkit and the relativistic Diósi length.

Everything is computed in Planck units (G = hbar = c = 1) unless a function
says otherwise; see :mod:`gdep.units`.
"""

__version__ = "0.1.0"

from .units import MassSpec, LengthScalesRow, compton_length, diosi_length_a0, schwarzschild_radius
from .gdep_core import (
    GammaValue,
    gamma_confined,
    gamma_from_eigenpair,
    gamma_from_p2,
    quasirel_energy_from_nonrel,
)

__all__ = [
    "__version__",
    "MassSpec",
    "LengthScalesRow",
    "compton_length",
    "diosi_length_a0",
    "schwarzschild_radius",
    "GammaValue",
    "gamma_confined",
    "gamma_from_eigenpair",
    "gamma_from_p2",
    "quasirel_energy_from_nonrel",
]
