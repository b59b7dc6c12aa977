"""Command-line scans producing CSV tables for the box spectrum, gamma(a),
the Schrödinger-Newton ground state and the Diósi length scales.

Exit codes: 0 success, 2 configuration or parse error, 3 numerical
non-convergence.

    gdep box --length 1 10 --nmax 20
    gdep gamma --min 1e-2 --max 1e3 --samples 200
    gdep sn --mode quasirel --mass 0.5 --dump state.csv
    gdep diosi --min 0.05 --max 1.2 --samples 200 --verify
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .box_model import BoxConfig, load_reference_file, spectrum
from .diosi_analysis import diosi_width_numeric, mass_scan
from .errors import (
    GdepError,
    InvalidArgumentError,
    NoMinimumError,
    ReferenceParseError,
    ScfOscillationError,
)
from .gdep_core import gamma_confined
from .sn_solver import (
    NONRELATIVISTIC,
    QUASIRELATIVISTIC,
    RadialGrid,
    scf_ground_state,
    write_state_dump,
)
from .units import PLANCK_LENGTH_M, PLANCK_MASS_KG, check_cli_mass

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3

_MODE_ALIASES = {
    "nonrel": NONRELATIVISTIC,
    NONRELATIVISTIC: NONRELATIVISTIC,
    "quasirel": QUASIRELATIVISTIC,
    QUASIRELATIVISTIC: QUASIRELATIVISTIC,
}


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    """12 significant digits; empty field for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _table(header: Sequence[str], rows: Iterable[Sequence]) -> list[str]:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return lines


def _preamble(command: str, args: argparse.Namespace) -> list[str]:
    lines = [f"# gdep {__version__}", f"# command = {command}"]
    skip = {"command", "func", "config", "out"}
    for key in sorted(vars(args)):
        if key in skip:
            continue
        val = getattr(args, key)
        if isinstance(val, (list, tuple)):
            val = " ".join(fmt(v) for v in val)
        elif isinstance(val, (bool, float)):
            val = fmt(val)
        lines.append(f"# {key} = {'' if val is None else val}")
    return lines


def _positive(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (val > 0 and math.isfinite(val)):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return val


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return val


def _log_range(lo: float, hi: float, samples: int) -> np.ndarray:
    if lo == hi:
        raise ConfigError(f"empty range [{lo:g}, {hi:g}]")
    if samples < 2:
        raise ConfigError("scans need at least 2 samples")
    lo, hi = sorted((lo, hi))
    return np.geomspace(lo, hi, samples)


# --- subcommands -------------------------------------------------------------


def cmd_box(args: argparse.Namespace) -> tuple[list[str], int]:
    reference = None
    if args.reference:
        reference = dict(load_reference_file(args.reference))
    header = ["L_over_compton", "n", "e_nonrel_mc2", "e_gdep_mc2", "e_series_mc2", "above_2mc2"]
    if reference is not None:
        header.append("e_reference_mc2")
    rows = []
    for length in args.length:
        for lvl in spectrum(BoxConfig(length, args.nmax)):
            row = [length, lvl.n, lvl.e_nonrel, lvl.e_gdep, lvl.e_series2, lvl.e_gdep >= args.threshold]
            if reference is not None:
                row.append(reference.get(lvl.n))
            rows.append(row)
    return _table(header, rows), EXIT_OK


def cmd_gamma(args: argparse.Namespace) -> tuple[list[str], int]:
    sizes = _log_range(args.min, args.max, args.samples)
    rows = []
    for a in sizes:
        g = gamma_confined(float(a), 1.0)
        rows.append([a, g.gamma, g.excess])
    return _table(["a_over_compton", "gamma", "gamma_minus_one"], rows), EXIT_OK


def cmd_sn(args: argparse.Namespace) -> tuple[list[str], int]:
    mode = _MODE_ALIASES[args.mode]
    mass = None
    if mode == QUASIRELATIVISTIC:
        if args.mass is None:
            raise ConfigError("--mass is required in quasirelativistic mode")
        mass = check_cli_mass(args.mass)
    grid = RadialGrid(args.r_max, args.n_points)
    status = EXIT_OK
    try:
        sol = scf_ground_state(mode, grid, args.mixing, args.tol, args.max_iter, mass=mass)
    except ScfOscillationError as exc:
        print(f"gdep sn: {exc}", file=sys.stderr)
        sol = exc.solution
        status = EXIT_NONCONVERGENCE
    if not sol.converged:
        status = EXIT_NONCONVERGENCE
        if sol.history.residual:
            print(
                f"gdep sn: not converged after {sol.scf_iterations} iterations "
                f"(residual {sol.history.residual[-1]:.3e} > tol {args.tol:g})",
                file=sys.stderr,
            )
    e = sol.energy
    header = [
        "mode", "mass_planck", "eigenvalue", "kinetic", "pair_energy", "total", "gamma",
        "gamma_minus_one", "virial_residual", "rms_width", "half_mass_radius", "iterations",
        "converged",
    ]
    row = [
        mode, None if mass is None else mass.mass_planck, sol.eigenvalue, e.kinetic,
        e.potential_pair, e.total, sol.gamma.gamma, sol.gamma.excess, e.virial_residual,
        sol.state.rms_width, sol.state.half_mass_radius, sol.scf_iterations, sol.converged,
    ]
    lines = [",".join(header), ",".join(v if isinstance(v, str) else fmt(v) for v in row)]
    if args.dump:
        write_state_dump(sol, args.dump)
    return lines, status


def _numeric_width(m: float) -> float | None:
    try:
        return diosi_width_numeric(m)
    except NoMinimumError:
        return None


def cmd_diosi(args: argparse.Namespace) -> tuple[list[str], int]:
    if args.masses:
        masses = sorted(args.masses)
    else:
        masses = list(_log_range(args.min, args.max, args.samples))
    for m in masses:
        if m > 10.0:
            raise ConfigError(f"mass {m:g} m_P outside (0, 10]")
        check_cli_mass(m)
    rows = mass_scan(masses)

    numeric: list[float | None] = []
    if args.verify:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                numeric = list(pool.map(_numeric_width, masses))
        else:
            numeric = [_numeric_width(m) for m in masses]

    si = args.units == "si"
    lscale = PLANCK_LENGTH_M if si else 1.0

    def length(x):
        return None if x is None else x * lscale

    header = ["mass_kg" if si else "mass_planck", "a0", "compton", "schwarzschild", "a_rel"]
    if args.verify:
        header += ["a_rel_numeric", "rel_diff_a0"]
    out = []
    for i, row in enumerate(rows):
        rec = [
            row.mass_planck * (PLANCK_MASS_KG if si else 1.0),
            length(row.diosi_a0),
            length(row.compton),
            length(row.schwarzschild),
            length(row.diosi_rel),
        ]
        if args.verify:
            a_num = numeric[i]
            diff = None
            if a_num is not None and row.diosi_rel is not None:
                diff = abs(a_num - row.diosi_rel) / row.diosi_a0
            rec += [length(a_num), diff]
        out.append(rec)
    return _table(header, out), EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gdep", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"gdep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--out", default="-", help="output path (default: stdout)")
        p.add_argument("--config", help="key = value file; flags given on the command line win")

    p = sub.add_parser("box", help="particle-in-a-box spectrum")
    p.add_argument("--length", type=_positive, nargs="+", default=[1.0], help="L / reduced Compton wavelength")
    p.add_argument("--nmax", type=_positive_int, default=10)
    p.add_argument("--threshold", type=_positive, default=2.0, help="flag levels at or above this (mc^2)")
    p.add_argument("--reference", help="reference spectrum: rows of 'n, energy_mc2'")
    common(p)
    p.set_defaults(func=cmd_box)

    p = sub.add_parser("gamma", help="gamma versus confinement size")
    p.add_argument("--min", type=_positive, default=1e-2, help="smallest a / reduced Compton wavelength")
    p.add_argument("--max", type=_positive, default=1e3)
    p.add_argument("--samples", type=int, default=101)
    common(p)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("sn", help="Schrodinger-Newton ground state")
    p.add_argument("--mode", choices=sorted(_MODE_ALIASES), default="nonrel")
    p.add_argument("--mass", type=_positive, help="mass in Planck masses (quasirel mode)")
    p.add_argument("--r-max", type=_positive, default=20.0, help="outer radius in units of a0")
    p.add_argument("--n-points", type=int, default=4000)
    p.add_argument("--mixing", type=_positive, default=0.3)
    p.add_argument("--tol", type=_positive, default=1e-9)
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--dump", help="write the converged (r, u, phi) table here")
    common(p)
    p.set_defaults(func=cmd_sn)

    p = sub.add_parser("diosi", help="Diosi length scales versus mass")
    p.add_argument("--min", type=_positive, default=0.05, help="smallest mass in Planck masses")
    p.add_argument("--max", type=_positive, default=1.2)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--masses", type=_positive, nargs="+", help="explicit masses instead of a range")
    p.add_argument("--verify", action="store_true", help="add golden-section minimizer columns")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--units", choices=("planck", "si"), default="planck")
    common(p)
    p.set_defaults(func=cmd_diosi)
    return parser


def read_config(path: str | Path) -> list[str]:
    """Turn a ``key = value`` file into flag tokens placed before the real flags."""
    tokens: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("_", "-")
            if not sep or not key:
                raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
            value = value.strip()
            if value.lower() in ("true", "yes", "on"):
                tokens.append(f"--{key}")
            elif value.lower() in ("false", "no", "off"):
                continue
            else:
                tokens += [f"--{key}", *value.split()]
    return tokens


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.config:
        try:
            extra = read_config(args.config)
        except (OSError, ConfigError) as exc:
            print(f"gdep: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        try:
            args = parser.parse_args([argv[0] if argv else args.command, *extra, *argv[1:]])
        except SystemExit as exc:
            return int(exc.code or 0)

    try:
        lines, status = args.func(args)
    except (ConfigError, InvalidArgumentError, ReferenceParseError, OSError) as exc:
        print(f"gdep {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GdepError as exc:
        print(f"gdep {args.command}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE

    text = "\n".join(_preamble(args.command, args) + lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return status


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
