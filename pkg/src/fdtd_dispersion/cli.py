"""Command-line front end: ``fdtd-dispersion <subcommand> [flags]``.

All physical flags are SI. Exit codes: 0 success, 2 usage error, 3 solver
failure, 4 numerical instability.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .dispersion import (
    DispersionError,
    GridSpec,
    Scheme,
    UnsupportedScheme,
    WaveSpec,
    optimal_courant_24,
)
from .experiments import (
    DEFAULT_SEED,
    MAP_COLUMNS,
    Propagation1DSetup,
    dispersion_rows,
    exp_cavity_2d,
    exp_cavity_3d,
    run_1d_pulse,
    write_manifest,
    write_rows_csv,
)
from .yee import Instability, write_series_csv

EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_UNSTABLE = 4

FAILURE_LIMIT = 0.01


def parse_s_list(text: str) -> list[float]:
    """``0.5,0.7,1.0`` or an inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, stride = (float(v) for v in text.split(":"))
            if stride <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / stride + 1e-9)) + 1
            values = [round(start + i * stride, 12) for i in range(n)]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid Courant list {text!r}") from None
    if not values or any(not v > 0.0 for v in values):
        raise argparse.ArgumentTypeError("Courant fractions must be positive")
    return values


def parse_angle_grid(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        nt, np_ = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N_THETAxN_PHI, got {text!r}") from None
    if nt < 2 or np_ < 2:
        raise argparse.ArgumentTypeError("angle grid needs at least 2 points per axis")
    return nt, np_


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0.0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _add_scheme(p: argparse.ArgumentParser, default: str | None = None):
    p.add_argument(
        "--scheme",
        choices=[s.value for s in Scheme],
        default=default,
        required=default is None,
        help="difference scheme: fdtd22 (2nd order in space) or fdtd24 (4th order in space)",
    )


def _add_grid(p: argparse.ArgumentParser):
    p.add_argument("--freq-hz", type=_positive, required=True, help="wave frequency [Hz]")
    p.add_argument("--dx", type=_positive, required=True, help="cell size along x [m]")
    p.add_argument("--dy", type=_positive, help="cell size along y [m] (default: dx)")
    p.add_argument("--dz", type=_positive, help="cell size along z [m] (default: dx)")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), default=3, help="spatial dimension (default 3)")
    p.add_argument(
        "--grid",
        type=parse_angle_grid,
        default=(31, 61),
        metavar="NTxNP",
        help="angle grid as N_THETAxN_PHI points (dimensionless, default 31x61)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdtd-dispersion",
        description="Numerical dispersion analysis and test runs for FDTD(2,2) and FDTD(2,4).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "dispersion-map",
        help="tabulate k_num and phase velocity over angles and Courant fractions",
        description="Writes CSV columns s,theta_rad,phi_rad,k_exact,k_num,vp_ratio,nde "
        "(wavenumbers in rad/m) plus <out>.manifest.json.",
    )
    _add_scheme(p)
    _add_grid(p)
    p.add_argument(
        "--s-list",
        type=parse_s_list,
        default=parse_s_list("0.1:1.0:0.1"),
        help="Courant fractions dt/dt_max (dimensionless): comma list or start:stop:step",
    )
    fix = p.add_mutually_exclusive_group()
    fix.add_argument("--theta-deg", type=float, help="hold the polar angle fixed [degrees]")
    fix.add_argument("--phi-deg", type=float, help="hold the azimuth fixed [degrees]")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser(
        "optimal-dt",
        help="Courant fraction minimizing the angle-integrated FDTD(2,4) dispersion error",
        description="Golden-section search over S; writes the objective-vs-S trace as CSV "
        "columns s,objective (objective: abs(k_num - k) in rad/m integrated over theta and phi in radians).",
    )
    _add_scheme(p, default="fdtd24")
    _add_grid(p)
    p.add_argument(
        "--search-tol",
        type=_positive,
        default=1e-4,
        help="bracket width at which the search stops (dimensionless Courant fraction)",
    )
    p.add_argument("--out", required=True, help="output CSV path for the search trace")

    p = sub.add_parser(
        "run-1d",
        help="1D Gaussian pulse; one waveform CSV per Courant fraction",
        description="Writes <out>_s<S>.csv (t_seconds,value) per Courant fraction, "
        "<out>_errors.csv (s,l2_rel,linf) and <out>.manifest.json.",
    )
    _add_scheme(p)
    p.add_argument("--s-list", type=parse_s_list, default=[0.5, 0.7, 1.0],
                   help="Courant fractions dt/dt_max (dimensionless)")
    p.add_argument("--dx", type=_positive, default=5e-2, help="cell size [m] (default 5e-2)")
    p.add_argument("--total-time", type=_positive, default=3.6685e-8,
                   help="simulated time [s] (default 3.6685e-8)")
    p.add_argument("--probe-distance", type=_positive, default=9.0,
                   help="source-to-probe distance [m] (default 9.0)")
    p.add_argument("--out", required=True, help="output path prefix")

    for name, dim in (("run-cavity2d", 2), ("run-cavity3d", 3)):
        p = sub.add_parser(
            name,
            help=f"{dim}D PEC cavity ring-down; relative resonance errors per mode and S",
            description="Writes CSV columns s,m,n,p,f_ref_hz,f_meas_hz,rel_error "
            "(frequencies in Hz) plus <out>.manifest.json.",
        )
        _add_scheme(p)
        if dim == 2:
            p.add_argument("--pol", choices=("tm", "te"), default="tm", help="field polarization")
            p.add_argument("--size-x", type=_positive, default=1.0, help="cavity width [m]")
            p.add_argument("--size-y", type=_positive, default=2.0, help="cavity height [m]")
        else:
            p.add_argument("--side", type=_positive, default=1.0, help="cube side length [m]")
        p.add_argument("--cell", type=_positive, default=4e-2, help="cell size [m] (default 4e-2)")
        p.add_argument("--s-list", type=parse_s_list, default=parse_s_list("0.2:1.0:0.1"),
                       help="Courant fractions dt/dt_max (dimensionless)")
        p.add_argument(
            "--resolution",
            type=_positive,
            default=0.01,
            help="native spectral resolution as a fraction of the lowest tracked "
            "frequency (dimensionless, default 0.01); sets the simulated time",
        )
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the random initial field")
        p.add_argument("--out", required=True, help="output CSV path")
    return parser


def _grid(args) -> GridSpec:
    return GridSpec(args.dx, args.dy, args.dz, dim=args.dim)


def cmd_dispersion_map(args) -> int:
    grid = _grid(args)
    wave = WaveSpec(args.freq_hz)
    n_theta, n_phi = args.grid
    theta = phi = None
    if grid.dim == 3:
        if args.theta_deg is not None:
            theta = [math.radians(args.theta_deg)]
            phi = np.linspace(0.0, 2.0 * math.pi, n_phi)
        elif args.phi_deg is not None:
            theta = np.linspace(0.0, math.pi, n_theta)
            phi = [math.radians(args.phi_deg)]
    elif grid.dim == 2 and args.phi_deg is not None:
        phi = [math.radians(args.phi_deg)]
    rows, failed, total = dispersion_rows(
        args.scheme, grid, wave, args.s_list, n_theta, n_phi, theta=theta, phi=phi
    )
    write_rows_csv(args.out, MAP_COLUMNS, rows)
    write_manifest(args.out, "dispersion-map", _config(args))
    if failed > FAILURE_LIMIT * total:
        print(f"solver failed on {failed} of {total} points", file=sys.stderr)
        return EXIT_SOLVER
    print(f"wrote {len(rows)} rows to {args.out} ({failed} failed points)")
    return 0


def cmd_optimal_dt(args) -> int:
    grid = _grid(args)
    wave = WaveSpec(args.freq_hz)
    n_theta, n_phi = args.grid
    try:
        res = optimal_courant_24(
            grid, wave, n_theta, n_phi, search_tol=args.search_tol, scheme=args.scheme
        )
    except UnsupportedScheme as exc:
        print(f"optimal-dt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    trace = sorted(res.evaluations)
    write_rows_csv(args.out, ("s", "objective"), trace)
    write_manifest(args.out, "optimal-dt", _config(args))
    print(f"s_opt = {res.s_opt:.6f}")
    print(f"dt_opt_seconds = {res.dt_opt:.6e}")
    print(f"objective = {res.objective:.6e}")
    return 0


def cmd_run_1d(args) -> int:
    setup = Propagation1DSetup(dx=args.dx, total_time=args.total_time, probe_distance=args.probe_distance)
    errors = []
    for s in args.s_list:
        run = run_1d_pulse(args.scheme, s, setup)
        write_series_csv(f"{args.out}_s{s:g}.csv", run.times, run.numeric)
        errors.append((s, run.l2_error, run.linf_error))
        print(f"s = {s:g}: l2_rel = {run.l2_error:.6e}, linf = {run.linf_error:.6e}")
    write_rows_csv(f"{args.out}_errors.csv", ("s", "l2_rel", "linf"), errors)
    write_manifest(args.out, "run-1d", _config(args))
    return 0


def cmd_run_cavity(args) -> int:
    if args.command == "run-cavity2d":
        res = exp_cavity_2d(
            args.scheme,
            args.pol,
            s_values=args.s_list,
            dims=(args.size_x, args.size_y),
            cell=args.cell,
            resolution_fraction=args.resolution,
            seed=args.seed,
        )
    else:
        res = exp_cavity_3d(
            args.scheme,
            s_values=args.s_list,
            side=args.side,
            cell=args.cell,
            resolution_fraction=args.resolution,
            seed=args.seed,
        )
    res.to_csv(args.out)
    write_manifest(args.out, args.command, _config(args), seed=args.seed)
    for label, re in res.re_table().items():
        print(f"mode {label}: " + " ".join(f"{v:.3e}" for v in re))
    return 0


COMMANDS = {
    "dispersion-map": cmd_dispersion_map,
    "optimal-dt": cmd_optimal_dt,
    "run-1d": cmd_run_1d,
    "run-cavity2d": cmd_run_cavity,
    "run-cavity3d": cmd_run_cavity,
}


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = COMMANDS[args.command](args)
    except Instability as exc:
        print(f"{args.command}: unstable at s = {exc.s:g} ({exc})", file=sys.stderr)
        return EXIT_UNSTABLE
    except DispersionError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
