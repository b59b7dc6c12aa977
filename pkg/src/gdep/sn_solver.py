"""Stationary Schrödinger-Newton ground state under spherical symmetry.

Dimensionless units: lengths in a0 = hbar^2/(G m^3), energies in
G^2 m^5 / hbar^2. The reduced radial function u = r psi solves

    -c_k u'' + Phi(r) u = eps u,      u(0) = u(r_max) = 0,
    Phi(r) = -[ M(r)/r + 4 pi int_r^rmax u(s)^2 / s ds ],
    M(r)   = 4 pi int_0^r u(s)^2 ds,

with c_k = 1/2 in the nonrelativistic case and c_k = 1/(1+gamma) in the
quasi-relativistic one. There, gamma = sqrt(1 + <p^2> (m/m_P)^4) is
re-evaluated from the current iterate once per SCF step; this closure for a
self-generated potential is a modelling choice of this package.

The eigenproblem carries the full potential (no 1/2); the 1/2 for double
counting enters only the pair energy W = <Phi>/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np
from scipy.linalg import lapack

from .errors import (
    ConsistencyError,
    InvalidArgumentError,
    InvalidStateError,
    IterationLimitError,
    NoBoundStateError,
    ScfOscillationError,
)
from .gdep_core import GammaValue, gamma_from_p2
from .units import MassSpec

FOUR_PI = 4.0 * math.pi
NORM_TOL = 1e-6

NONRELATIVISTIC = "nonrelativistic"
QUASIRELATIVISTIC = "quasirelativistic"
MODES = (NONRELATIVISTIC, QUASIRELATIVISTIC)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid r_i = i h, i = 1..n_points, h = r_max / n_points.

    The last node sits on the outer Dirichlet wall, so the unknowns of the
    eigenproblem are the first ``n_points - 1`` values.
    """

    r_max: float = 20.0
    n_points: int = 4000

    def __post_init__(self):
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise InvalidArgumentError(f"r_max must be positive, got {self.r_max!r}")
        if int(self.n_points) != self.n_points or self.n_points < 64:
            raise InvalidArgumentError(f"n_points must be an integer >= 64, got {self.n_points!r}")

    @property
    def h(self) -> float:
        return self.r_max / self.n_points

    @property
    def r(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_points + 1)

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.r_max, self.n_points * factor)

    def integrate(self, f: np.ndarray) -> float:
        """Trapezoid rule on [0, r_max] for an integrand vanishing at r = 0."""
        f = np.asarray(f, dtype=float)
        return self.h * (f[:-1].sum() + 0.5 * f[-1])


@dataclass(frozen=True)
class RadialState:
    grid: RadialGrid
    u: np.ndarray
    norm: float
    p2_expect: float
    rms_width: float
    half_mass_radius: float

    @classmethod
    def from_u(cls, grid: RadialGrid, u: np.ndarray, normalize: bool = True) -> "RadialState":
        u = np.array(u, dtype=float)
        if u.shape != (grid.n_points,):
            raise InvalidArgumentError(f"u has shape {u.shape}, grid needs ({grid.n_points},)")
        norm = FOUR_PI * grid.integrate(u * u)
        if not norm > 0:
            raise InvalidStateError("wavefunction vanishes identically")
        if normalize:
            u /= math.sqrt(norm)
            norm = FOUR_PI * grid.integrate(u * u)
        rms, r_half = _width_metrics(grid, u, norm)
        return cls(grid, u, norm, _p2_expect(grid, u), rms, r_half)


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    potential_pair: float
    total: float
    eigenvalue: float

    @property
    def virial_residual(self) -> float:
        """|2T + W| / |W|; vanishes at the nonrelativistic fixed point."""
        return abs(2.0 * self.kinetic + self.potential_pair) / abs(self.potential_pair)


@dataclass
class ScfHistory:
    residual: list[float] = field(default_factory=list)
    norm_drift: list[float] = field(default_factory=list)
    eigenvalue: list[float] = field(default_factory=list)
    gamma: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class SnSolution:
    state: RadialState
    eigenvalue: float
    potential_on_grid: np.ndarray
    energy: EnergyBreakdown
    gamma: GammaValue
    scf_iterations: int
    converged: bool
    mode: str = NONRELATIVISTIC
    mass: MassSpec | None = None
    mixing: float = 0.3
    tol: float = 1e-9
    history: ScfHistory = field(default_factory=ScfHistory, repr=False)

    @property
    def kinetic_prefactor(self) -> float:
        return 1.0 / (1.0 + self.gamma.gamma)


def _p2_expect(grid: RadialGrid, u: np.ndarray) -> float:
    # forward differences with u(0) = 0; equals <u, -D2 u> for the FD operator
    du = np.diff(u, prepend=0.0)
    return FOUR_PI * float(du @ du) / grid.h


def _cumulative_mass(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    w = FOUR_PI * u * u
    seg = 0.5 * grid.h * (w + np.concatenate(([0.0], w[:-1])))
    return np.cumsum(seg)


def _width_metrics(grid: RadialGrid, u: np.ndarray, norm: float) -> tuple[float, float]:
    r = grid.r
    rms = math.sqrt(FOUR_PI * grid.integrate(r * r * u * u) / norm)
    mass = _cumulative_mass(grid, u) / norm
    k = int(np.searchsorted(mass, 0.5))
    if k >= len(r):
        return rms, float(r[-1])
    m_lo = mass[k - 1] if k > 0 else 0.0
    r_lo = r[k - 1] if k > 0 else 0.0
    # linear interpolation inside the first cell reaching half the mass
    t = (0.5 - m_lo) / (mass[k] - m_lo) if mass[k] > m_lo else 0.0
    return rms, float(r_lo + t * (r[k] - r_lo))


def width_metrics(state: RadialState) -> tuple[float, float]:
    """(rms width, half-mass radius), both in units of a0."""
    return _width_metrics(state.grid, state.u, state.norm)


def hartree_potential(state: RadialState) -> np.ndarray:
    """Gravitational self-potential of a normalized state, on the grid nodes."""
    if abs(state.norm - 1.0) > NORM_TOL:
        raise InvalidStateError(f"state not normalized (4 pi int u^2 = {state.norm:.9g})")
    return _hartree(state.grid, state.u)


def _hartree(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    r = grid.r
    h = grid.h
    inner = _cumulative_mass(grid, u)
    g = FOUR_PI * u * u / r
    # int_{r_i}^{r_max} g, trapezoid accumulated from the outer wall
    seg = 0.5 * h * (g[:-1] + g[1:])
    outer = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
    return -(inner / r + outer)


def _operator(potential: np.ndarray, kinetic_prefactor: float, grid: RadialGrid):
    off = kinetic_prefactor / grid.h**2
    diag = 2.0 * off + np.asarray(potential[:-1], dtype=float)
    return diag, np.full(len(diag) - 1, -off)


def _apply(diag: np.ndarray, off: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = diag * v
    out[:-1] += off * v[1:]
    out[1:] += off * v[:-1]
    return out


def _count_nodes(v: np.ndarray) -> int:
    big = v[np.abs(v) > 1e-10 * np.abs(v).max()]
    return int(np.count_nonzero(np.diff(np.sign(big))))


def solve_radial_eigen(
    potential: np.ndarray,
    kinetic_prefactor: float,
    grid: RadialGrid,
    *,
    guess: np.ndarray | None = None,
    require_bound: bool = False,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> tuple[float, RadialState]:
    """Lowest eigenpair of -c_k u'' + Phi u = eps u by shifted inverse iteration.

    The shift is always kept below the ground-state eigenvalue, which is
    certified by a successful LDL^T factorization of (H - shift). The inverse
    of that positive-definite M-matrix is entrywise positive, so the
    iteration cannot lock onto an excited state.
    """
    potential = np.asarray(potential, dtype=float)
    if potential.shape != (grid.n_points,):
        raise InvalidArgumentError(f"potential has shape {potential.shape}, grid needs ({grid.n_points},)")
    if not (kinetic_prefactor > 0 and math.isfinite(kinetic_prefactor)):
        raise InvalidArgumentError(f"kinetic prefactor must be positive, got {kinetic_prefactor!r}")
    if not np.all(np.isfinite(potential)):
        raise InvalidArgumentError("potential must be finite on the grid")

    diag, off = _operator(potential, kinetic_prefactor, grid)
    if guess is None:
        r = grid.r[:-1]
        v = r * np.exp(-r / max(1.0, 0.1 * grid.r_max))
    else:
        v = np.abs(np.asarray(guess, dtype=float)[:-1]) + 1e-300
    v = v / np.linalg.norm(v)

    # Gershgorin: every eigenvalue lies above min(potential)
    safe = float(diag.min() + 2.0 * off[0]) - 1e-12 * (1.0 + abs(diag.min()))
    shift = safe
    lam = float(v @ _apply(diag, off, v))
    for _ in range(max_iter):
        d_f, e_f, info = lapack.dpttrf(diag - shift, off)
        if info != 0:
            shift = 0.5 * (shift + safe)
            continue
        safe = shift
        w, info = lapack.dpttrs(d_f, e_f, v)
        if info != 0:
            raise IterationLimitError(f"tridiagonal solve failed (info={info})")
        w /= np.linalg.norm(w)
        step = float(np.linalg.norm(w - v))
        v = w
        hv = _apply(diag, off, v)
        lam = float(v @ hv)
        res = float(np.linalg.norm(hv - lam * v))
        if step <= tol:
            break
        # Some eigenvalue lies within res of lam; stepping 2 res below keeps
        # the shift under the ground state once v is dominated by it.
        shift = max(safe, lam - 2.0 * res - 1e-14 * (1.0 + abs(lam)))
    else:
        raise IterationLimitError(f"inverse iteration did not converge in {max_iter} steps")

    if _count_nodes(v) != 0:
        raise InvalidStateError("eigenvector has nodes; ground state not isolated")
    if require_bound and lam >= 0.0:
        raise NoBoundStateError(f"lowest eigenvalue {lam:.6g} >= 0: no bound state inside r_max")
    state = RadialState.from_u(grid, np.append(v, 0.0))
    return lam, state


def gaussian_guess(grid: RadialGrid, width: float = 1.0) -> RadialState:
    """Normalized psi ~ exp(-r^2 / (2 width^2)) as a reduced radial function."""
    r = grid.r
    u = r * np.exp(-0.5 * (r / width) ** 2)
    u[-1] = 0.0
    return RadialState.from_u(grid, u)


def _closure_gamma(state: RadialState, mode: str, mass: MassSpec | None) -> GammaValue:
    if mode == NONRELATIVISTIC:
        return GammaValue.nonrelativistic()
    # <p^2>/(mc)^2 = <p^2>_a0 * (lC/a0)^2 = <p^2>_a0 * (m/m_P)^4
    return gamma_from_p2(state.p2_expect * mass.coupling**2)


def energy_breakdown(
    state: RadialState, potential: np.ndarray, kinetic_prefactor: float, eigenvalue: float
) -> EnergyBreakdown:
    kinetic = kinetic_prefactor * state.p2_expect
    pair = 0.5 * FOUR_PI * state.grid.integrate(np.asarray(potential) * state.u**2)
    return EnergyBreakdown(kinetic, pair, kinetic + pair, eigenvalue)


def scf_ground_state(
    mode: str = NONRELATIVISTIC,
    grid: RadialGrid | None = None,
    mixing: float = 0.3,
    tol: float = 1e-9,
    max_iter: int = 200,
    *,
    mass: MassSpec | float | None = None,
    initial_state: RadialState | None = None,
    stall_window: int = 20,
) -> SnSolution:
    """Self-consistent ground state with linear potential mixing.

    Convergence means max|Phi_out - Phi_in| <= tol and, in the
    quasi-relativistic mode, |gamma_new - gamma| <= tol. Running out of
    iterations returns ``converged=False``; a residual that has not dropped
    over ``stall_window`` iterations raises :class:`ScfOscillationError`.
    """
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 < mixing <= 1.0:
        raise InvalidArgumentError(f"mixing must lie in (0, 1], got {mixing!r}")
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol!r}")
    if int(max_iter) != max_iter or max_iter < 1:
        raise InvalidArgumentError(f"max_iter must be a positive integer, got {max_iter!r}")
    if mode == QUASIRELATIVISTIC:
        if mass is None:
            raise InvalidArgumentError("quasirelativistic mode needs a particle mass")
        mass = mass if isinstance(mass, MassSpec) else MassSpec(mass)
    grid = grid or RadialGrid()

    state = initial_state if initial_state is not None else gaussian_guess(grid)
    if state.grid != grid:
        raise InvalidArgumentError("initial state lives on a different grid")
    phi_in = hartree_potential(state)
    gamma = _closure_gamma(state, mode, mass)
    hist = ScfHistory()
    converged = False
    eps = float("nan")
    phi_out = phi_in

    for it in range(1, int(max_iter) + 1):
        c_k = 1.0 / (1.0 + gamma.gamma)
        eps, state = solve_radial_eigen(phi_in, c_k, grid, guess=state.u, require_bound=True)
        phi_out = _hartree(grid, state.u)
        residual = float(np.max(np.abs(phi_out - phi_in)))
        new_gamma = _closure_gamma(state, mode, mass)
        d_gamma = abs(new_gamma.gamma - gamma.gamma)
        hist.residual.append(residual)
        hist.norm_drift.append(abs(state.norm - 1.0))
        hist.eigenvalue.append(eps)
        hist.gamma.append(gamma.gamma)

        if residual <= tol and d_gamma <= tol:
            converged = True
            break
        if it > stall_window and residual >= hist.residual[-1 - stall_window]:
            partial = _package(state, eps, phi_out, gamma, it, False, mode, mass, mixing, tol, hist)
            raise ScfOscillationError(
                f"SCF residual {residual:.3e} has not decreased over {stall_window} iterations",
                suggested_mixing=0.5 * mixing,
                solution=partial,
            )
        phi_in = (1.0 - mixing) * phi_in + mixing * phi_out
        gamma = new_gamma

    return _package(state, eps, phi_out, gamma, it, converged, mode, mass, mixing, tol, hist)


def _package(state, eps, phi, gamma, iterations, converged, mode, mass, mixing, tol, hist) -> SnSolution:
    energy = energy_breakdown(state, phi, 1.0 / (1.0 + gamma.gamma), eps)
    return SnSolution(
        state=state,
        eigenvalue=eps,
        potential_on_grid=phi,
        energy=energy,
        gamma=gamma,
        scf_iterations=iterations,
        converged=converged,
        mode=mode,
        mass=mass,
        mixing=mixing,
        tol=tol,
        history=hist,
    )


def total_energy(solution: SnSolution, rtol: float | None = None) -> EnergyBreakdown:
    """Kinetic, pair and total energy of a converged solution.

    Checks eps = T + 2W. The default tolerance scales with the SCF tolerance,
    since the eigenvalue belongs to the mixed input potential.
    """
    if not solution.converged:
        raise InvalidStateError("total energy requested for an unconverged solution")
    e = energy_breakdown(
        solution.state, solution.potential_on_grid, solution.kinetic_prefactor, solution.eigenvalue
    )
    if rtol is None:
        rtol = 1e-9 + 10.0 * solution.tol
    if abs(e.eigenvalue - (e.kinetic + 2.0 * e.potential_pair)) > rtol * max(1.0, abs(e.eigenvalue)):
        raise ConsistencyError(
            f"eigenvalue {e.eigenvalue:.12g} != T + 2W = {e.kinetic + 2.0 * e.potential_pair:.12g}"
        )
    if not (e.kinetic > 0 and e.potential_pair < 0):
        raise ConsistencyError("expected T > 0 and W < 0")
    return e


def write_state_dump(solution: SnSolution, out: TextIO | str | Path) -> None:
    """Write (r, u, phi) rows with the solver parameters as ``#`` headers."""
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8") as fh:
            write_state_dump(solution, fh)
        return
    g = solution.state.grid
    mass = "" if solution.mass is None else f"{solution.mass.mass_planck:.12g}"
    out.write("# Schrodinger-Newton ground state (units: a0, G^2 m^5 / hbar^2)\n")
    for key, val in (
        ("mode", solution.mode),
        ("mass_planck", mass),
        ("eigenvalue", f"{solution.eigenvalue:.17g}"),
        ("gamma", f"{solution.gamma.gamma:.17g}"),
        ("gamma_minus_one", f"{solution.gamma.excess:.17g}"),
        ("iterations", solution.scf_iterations),
        ("converged", str(solution.converged).lower()),
        ("r_max", f"{g.r_max:.17g}"),
        ("n_points", g.n_points),
    ):
        out.write(f"# {key} = {val}\n")
    out.write("r,u,phi\n")
    for r, u, phi in zip(g.r, solution.state.u, solution.potential_on_grid):
        out.write(f"{r:.17g},{u:.17g},{phi:.17g}\n")


def read_state_dump(source: TextIO | str | Path) -> tuple[dict[str, str], np.ndarray]:
    """Return (header dict, array of shape (n, 3) with columns r, u, phi)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return read_state_dump(fh)
    header: dict[str, str] = {}
    rows = []
    for line in source:
        line = line.strip()
        if line.startswith("#"):
            if "=" in line:
                key, _, val = line[1:].partition("=")
                header[key.strip()] = val.strip()
        elif line and not line.startswith("r,"):
            rows.append([float(x) for x in line.split(",")])
    return header, np.array(rows)
