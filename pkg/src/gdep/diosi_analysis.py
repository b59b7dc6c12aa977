"""Heuristic energy functionals for a self-gravitating wave packet of size a.

Planck units throughout (G = hbar = c = 1, m in m_P, a in l_P):

    nonrelativistic   E(a) = 1/(2 m a^2)        - m^2/a
    quasi-relativistic E(a) = 1/((1+gamma) m a^2) - m^2/a,  gamma = sqrt(1 + 1/(m a)^2)
                           = m (gamma - 1)        - m^2/a

The first is minimized at a0 = m^-3, the second at a0 sqrt(1 - m^4), which
shrinks to zero at the Planck mass and does not exist above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConsistencyError, InvalidArgumentError, NoMinimumError
from .gdep_core import gamma_confined
from .units import LengthScalesRow, MassSpec, compton_length, diosi_length_a0, schwarzschild_radius

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
# relative agreement demanded between the two kinetic-energy routes
_ROUTE_RTOL = 1e-14
# x = gamma^2 - 1 above which gamma - 1 is formed by plain subtraction
_SUBTRACT_ABOVE = 8.0


@dataclass(frozen=True)
class HeuristicEnergy:
    size_a: float
    mass: MassSpec
    kinetic_term: float
    gravity_term: float
    total: float


@dataclass(frozen=True)
class DiosiWidth:
    mass: MassSpec
    a0: float
    a_rel: float | None

    @property
    def breakdown(self) -> bool:
        return self.a_rel is None


def _mass(m: MassSpec | float) -> MassSpec:
    return m if isinstance(m, MassSpec) else MassSpec(m)


def _check_size(a: float) -> float:
    if not (a > 0 and math.isfinite(a)):
        raise InvalidArgumentError(f"size a must be positive and finite, got {a!r}")
    return float(a)


def _confinement_x(a, m):
    """(lC / a)^2 with lC = 1/m."""
    return (1.0 / (np.asarray(m, dtype=float) * np.asarray(a, dtype=float))) ** 2


def kinetic_rel_quotient(a, m):
    """hbar^2 / ((1+gamma) m a^2) = m x / (1 + gamma), x = (lC/a)^2. Vectorized."""
    m = np.asarray(m, dtype=float)
    x = _confinement_x(a, m)
    out = m * x / (1.0 + np.sqrt(1.0 + x))
    return out if out.ndim else float(out)


def kinetic_rel_sqrt(a, m):
    """m c^2 (gamma - 1), the relativistic kinetic energy. Vectorized.

    gamma - 1 is taken as expm1(log1p(x)/2) while gamma < 3 and by direct
    subtraction above, where the cancellation costs at most a factor 1.5.
    """
    m = np.asarray(m, dtype=float)
    x = _confinement_x(a, m)
    with np.errstate(invalid="ignore"):
        excess = np.where(x < _SUBTRACT_ABOVE, np.expm1(0.5 * np.log1p(x)), np.sqrt(1.0 + x) - 1.0)
    out = m * excess
    return out if out.ndim else float(out)


def energy_nonrel(a: float, m: MassSpec | float) -> HeuristicEnergy:
    a = _check_size(a)
    m = _mass(m)
    mu = m.mass_planck
    kin = 1.0 / (2.0 * mu * a * a)
    grav = -mu * mu / a
    return HeuristicEnergy(a, m, kin, grav, kin + grav)


def energy_rel(a: float, m: MassSpec | float) -> HeuristicEnergy:
    """Quasi-relativistic energy with gamma from the confinement size a.

    The kinetic term is evaluated both as hbar^2/((1+gamma) m a^2) and as
    m c^2 (gamma - 1); the two must agree to roundoff.
    """
    a = _check_size(a)
    m = _mass(m)
    mu = m.mass_planck
    kin = kinetic_rel_quotient(a, mu)
    kin_alt = kinetic_rel_sqrt(a, mu)
    if abs(kin - kin_alt) > _ROUTE_RTOL * kin:
        raise ConsistencyError(f"kinetic routes disagree: {kin!r} vs {kin_alt!r}")
    grav = -mu * mu / a
    return HeuristicEnergy(a, m, kin, grav, kin + grav)


def gamma_at(a: float, m: MassSpec | float):
    """gamma of a packet of size a (l_P) for mass m."""
    return gamma_confined(_check_size(a), compton_length(_mass(m)))


def diosi_width_closed(m: MassSpec | float) -> DiosiWidth:
    m = _mass(m)
    mu = m.mass_planck
    a0 = diosi_length_a0(m)
    if mu > 1.0:
        return DiosiWidth(m, a0, None)
    # 1 - m^4 factored to keep digits as m -> 1
    return DiosiWidth(m, a0, a0 * math.sqrt((1.0 - mu) * (1.0 + mu) * (1.0 + mu * mu)))


def golden_section(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9, max_iter: int = 500
) -> tuple[float, float, int]:
    """Minimize a unimodal ``f`` on [lo, hi]; returns (x, f(x), iterations).

    Stops once the bracket is narrower than ``tol`` (absolute, in x).
    """
    if not lo < hi:
        raise InvalidArgumentError(f"empty bracket [{lo}, {hi}]")
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < max_iter:
        it += 1
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x), it


def _parabolic_polish(f: Callable[[float], float], t: float, step: float = 1e-5) -> float:
    """One vertex step through (t - step, t, t + step).

    Comparisons alone cannot locate a minimum better than ~sqrt(eps); the
    vertex of a wider parabola can. Rejected unless the fit is convex and the
    vertex stays inside the three points.
    """
    fl, fc, fr = f(t - step), f(t), f(t + step)
    curv = fl - 2.0 * fc + fr
    if not curv > 0:
        return t
    shift = 0.5 * step * (fl - fr) / curv
    return t + shift if abs(shift) < step else t


def diosi_width_numeric(
    m: MassSpec | float,
    tol: float = 1e-9,
    functional: Callable[[float, MassSpec], HeuristicEnergy] = energy_rel,
    bracket: tuple[float, float] = (1e-6, 1e3),
) -> float:
    """Argmin of ``functional`` over a in bracket * a0 by golden section.

    The search runs in ln(a), so ``tol`` is a relative tolerance on a.
    Raises :class:`NoMinimumError` when the minimum sits on the bracket edge,
    as happens once m reaches the Planck mass.
    """
    m = _mass(m)
    a0 = diosi_length_a0(m)
    scale = a0 / m.mass_planck**2

    def f(t: float) -> float:
        return functional(a0 * math.exp(t), m).total * scale

    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    t, f_min, _ = golden_section(f, lo, hi, tol=tol)
    t = _parabolic_polish(f, t)
    f_min = min(f_min, f(t))
    edge = 10.0 * tol + 1e-12
    # the profile can be flat to roundoff near the edge, so compare values too
    if t - lo < edge or hi - t < edge or f(lo) <= f_min or f(hi) <= f_min:
        raise NoMinimumError(
            f"no interior minimum for m = {m.mass_planck:g} m_P in [{bracket[0]:g}, {bracket[1]:g}] a0"
        )
    return a0 * math.exp(t)


def length_scales(m: MassSpec | float) -> LengthScalesRow:
    m = _mass(m)
    return LengthScalesRow(
        mass_planck=m.mass_planck,
        diosi_a0=diosi_length_a0(m),
        compton=compton_length(m),
        schwarzschild=schwarzschild_radius(m),
        diosi_rel=diosi_width_closed(m).a_rel,
    )


def mass_scan(m_grid: Sequence[MassSpec | float]) -> list[LengthScalesRow]:
    masses = [_mass(m) for m in m_grid]
    for prev, cur in zip(masses, masses[1:]):
        if cur.mass_planck < prev.mass_planck:
            raise InvalidArgumentError("mass grid must be sorted ascending")
    return [length_scales(m) for m in masses]
