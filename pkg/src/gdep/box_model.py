"""Quasi-relativistic spectrum of a particle in a 1-D infinite well.

Lengths are measured in reduced Compton wavelengths and energies in mc^2.
With x_n = p_n/(mc) = n pi / (L/lC) the levels are

    E_nonrel = x_n^2 / 2
    gamma_n  = sqrt(1 + x_n^2)
    E_gdep   = 2 E_nonrel / (1 + gamma_n) = sqrt(1 + x_n^2) - 1
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import InvalidArgumentError, ReferenceParseError
from .gdep_core import GammaValue

# Below this x the subtraction sqrt(1+x^2) - 1 loses digits.
_STABLE_SWITCH = 2.0


@dataclass(frozen=True)
class BoxConfig:
    length_over_compton: float
    n_max: int

    def __post_init__(self):
        if not (self.length_over_compton > 0 and math.isfinite(self.length_over_compton)):
            raise InvalidArgumentError(f"L/lC must be positive, got {self.length_over_compton!r}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise InvalidArgumentError(f"n_max must be an integer >= 1, got {self.n_max!r}")


@dataclass(frozen=True)
class BoxLevel:
    n: int
    x_n: float
    gamma_n: GammaValue
    e_nonrel: float
    e_gdep: float
    e_series2: float

    @property
    def above_pair_threshold(self) -> bool:
        return self.e_gdep >= 2.0


def relativistic_kinetic(x):
    """sqrt(1 + x^2) - 1, accurate for all x >= 0. Accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    g = np.hypot(1.0, x)
    out = np.where(x < _STABLE_SWITCH, x * x / (1.0 + g), g - 1.0)
    return out if out.ndim else float(out)


def quotient_energy(n, length_over_compton):
    """2 E_nonrel / (1 + gamma_n), the rescaled nonrelativistic level.

    Kept as an independent route for identity checks; use :func:`level`.
    Both routes start from the same rounded x_n = n pi / L.
    """
    x = np.asarray(n, dtype=float) * np.pi / np.asarray(length_over_compton, dtype=float)
    e_nonrel = 0.5 * x * x
    out = 2.0 * e_nonrel / (1.0 + np.sqrt(1.0 + x * x))
    return out if out.ndim else float(out)


def series_energy_x(x):
    """Two-term expansion x^2/2 - x^4/8 of sqrt(1+x^2) - 1."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    out = 0.5 * x2 - 0.125 * x2 * x2
    return out if out.ndim else float(out)


def level(config: BoxConfig, n: int) -> BoxLevel:
    if int(n) != n or not 1 <= n <= config.n_max:
        raise InvalidArgumentError(f"level index {n!r} outside 1..{config.n_max}")
    n = int(n)
    x = n * math.pi / config.length_over_compton
    return BoxLevel(
        n=n,
        x_n=x,
        gamma_n=GammaValue(math.hypot(1.0, x), relativistic_kinetic(x)),
        e_nonrel=0.5 * x * x,
        e_gdep=relativistic_kinetic(x),
        e_series2=series_energy_x(x),
    )


def series_energy(lvl: BoxLevel) -> float:
    return series_energy_x(lvl.x_n)


def spectrum(config: BoxConfig) -> list[BoxLevel]:
    return [level(config, n) for n in range(1, config.n_max + 1)]


def threshold_count(config: BoxConfig, threshold_mc2: float = 2.0) -> int:
    """Number of levels n <= n_max lying strictly below ``threshold_mc2``."""
    if not threshold_mc2 > 0:
        raise InvalidArgumentError(f"threshold must be > 0, got {threshold_mc2!r}")
    count = 0
    for lvl in spectrum(config):
        if lvl.e_gdep >= threshold_mc2:
            break
        count += 1
    return count


def threshold_count_closed(config: BoxConfig, threshold_mc2: float = 2.0) -> int:
    """Same count as :func:`threshold_count` by inverting sqrt(1+x^2) - 1 < T."""
    if math.isinf(threshold_mc2):
        return config.n_max
    x_star = math.sqrt(threshold_mc2 * (threshold_mc2 + 2.0))
    n_star = x_star * config.length_over_compton / math.pi
    n = math.floor(n_star)
    if n == n_star:
        n -= 1
    return max(0, min(n, config.n_max))


_ROW_SPLIT = re.compile(r"[,\s]+")


def load_reference_spectrum(source: TextIO | Iterable[str]) -> list[tuple[int, float]]:
    """Parse a reference table of ``n, energy_mc2`` rows.

    Columns may be separated by commas or whitespace; blank lines and lines
    starting with ``#`` are skipped. ``n`` must increase strictly.
    """
    rows: list[tuple[int, float]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in _ROW_SPLIT.split(line) if f]
        if len(fields) != 2:
            raise ReferenceParseError(f"expected 2 columns, found {len(fields)}", lineno)
        try:
            n = int(fields[0])
        except ValueError:
            raise ReferenceParseError(f"level index {fields[0]!r} is not an integer", lineno) from None
        try:
            energy = float(fields[1])
        except ValueError:
            raise ReferenceParseError(f"energy {fields[1]!r} is not a number", lineno) from None
        if n < 1 or not math.isfinite(energy):
            raise ReferenceParseError(f"invalid row ({n}, {energy})", lineno)
        if rows and n == rows[-1][0]:
            raise ReferenceParseError(f"duplicate level index {n}", lineno)
        if rows and n < rows[-1][0]:
            raise ReferenceParseError(f"level index {n} not increasing", lineno)
        rows.append((n, energy))
    return rows


def load_reference_file(path: str | Path) -> list[tuple[int, float]]:
    with open(path, encoding="utf-8") as fh:
        return load_reference_spectrum(fh)
