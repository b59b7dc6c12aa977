"""The Grave de Peralta parameter gamma and the kinetic-energy rescaling.

Replacing p^2/2m by p^2/((1+gamma) m) with a *constant* gamma keeps the
stationary equation Schrödinger-like. gamma is fixed by requiring the mean
kinetic energy to equal the relativistic one, mc^2 (gamma - 1), which gives

    gamma = sqrt(1 + <p^2>/(m c)^2).

Energies here are in units of mc^2 and momenta in units of mc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError, InvalidStateError


def sqrt1p_minus_1(x: float) -> float:
    """sqrt(1 + x) - 1 without cancellation for small x."""
    return x / (1.0 + math.sqrt(1.0 + x))


@dataclass(frozen=True)
class GammaValue:
    """A validated gamma >= 1.

    ``excess`` stores gamma - 1 computed without cancellation; prefer it over
    ``gamma - 1`` whenever gamma is close to one.
    """

    gamma: float
    excess: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 1.0 and self.excess >= 0.0):
            raise InvalidArgumentError(f"gamma must be >= 1, got {self.gamma!r}")

    @classmethod
    def from_p2(cls, p2_over_m2c2: float) -> "GammaValue":
        return cls(math.sqrt(1.0 + p2_over_m2c2), sqrt1p_minus_1(p2_over_m2c2))

    @classmethod
    def nonrelativistic(cls) -> "GammaValue":
        return cls(1.0, 0.0)

    def __float__(self) -> float:
        return self.gamma

    @property
    def p2_over_m2c2(self) -> float:
        """Inverse map: gamma^2 - 1 = excess * (gamma + 1)."""
        return self.excess * (self.gamma + 1.0)

    def closure_residual(self, p2_over_m2c2: float) -> float:
        """Relative residual of <p^2>/(1+gamma) = gamma - 1 (kinetic energy match)."""
        lhs = p2_over_m2c2 / (1.0 + self.gamma)
        scale = max(abs(lhs), abs(self.excess), 1e-300)
        return abs(lhs - self.excess) / scale


def gamma_from_p2(p2_over_m2c2: float) -> GammaValue:
    x = float(p2_over_m2c2)
    if not math.isfinite(x) or x < 0.0:
        raise InvalidArgumentError(f"<p^2>/(mc)^2 must be finite and >= 0, got {p2_over_m2c2!r}")
    return GammaValue.from_p2(x)


def gamma_from_eigenpair(eigenvalue_mc2: float, v_expect_mc2: float) -> GammaValue:
    """gamma from a nonrelativistic eigenvalue and the potential expectation.

    <p^2>/(mc)^2 = 2 (E - <V>) / mc^2 for an eigenstate of p^2/2m + V.
    """
    p2 = 2.0 * (float(eigenvalue_mc2) - float(v_expect_mc2))
    if not math.isfinite(p2):
        raise InvalidArgumentError("eigenvalue and <V> must be finite")
    if p2 < 0.0:
        # roundoff in E - <V> for an almost free state
        tol = 8 * math.ulp(max(abs(eigenvalue_mc2), abs(v_expect_mc2), 1.0))
        if p2 >= -tol:
            p2 = 0.0
        elif 1.0 + p2 < 0.0:
            raise InvalidStateError(
                f"radicand 1 + 2(E - <V>) = {1.0 + p2:g} < 0: <V> exceeds the eigenvalue"
            )
        else:
            raise InvalidStateError(f"negative kinetic expectation 2(E - <V>) = {p2:g}")
    return GammaValue.from_p2(p2)


def gamma_confined(size_a: float, compton: float = 1.0) -> GammaValue:
    """gamma for a particle localized in a region of size ``a``.

    ``size_a`` and ``compton`` share any length unit; ``size_a = inf`` gives 1.
    """
    if not (size_a > 0):
        raise InvalidArgumentError(f"confinement size must be > 0, got {size_a!r}")
    if not (compton > 0 and math.isfinite(compton)):
        raise InvalidArgumentError(f"Compton length must be positive, got {compton!r}")
    return GammaValue.from_p2((compton / size_a) ** 2)


def quasirel_energy_from_nonrel(eigenvalue_mc2: float, gamma: GammaValue | float) -> float:
    """Rescale a nonrelativistic energy: E = 2/(1+gamma) * E_nonrel.

    Only valid where the potential vanishes (e.g. inside an infinite well);
    with a potential the quasi-relativistic equation must be re-solved.
    """
    g = gamma.gamma if isinstance(gamma, GammaValue) else float(gamma)
    if not g >= 1.0:
        raise InvalidArgumentError(f"gamma must be >= 1, got {g!r}")
    return 2.0 / (1.0 + g) * eigenvalue_mc2
