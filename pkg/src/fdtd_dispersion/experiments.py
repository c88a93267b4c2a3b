"""Scripted numerical studies: pulse propagation, cavity resonances, dispersion maps."""

from __future__ import annotations

import csv
import json
import math
import platform
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .constants import C0
from .dispersion import (
    GridSpec,
    PropagationAngle,
    Scheme,
    WaveSpec,
    scan_angles,
)
from .spectral import (
    ModeGroup,
    ResonanceReport,
    analytic_resonance,
    find_peaks,
    lowest_mode_groups,
    match_and_score,
    spectrum,
)
from .yee import FieldState, ProbeSpec, SimConfig, SourceSpec, run_sim

DEFAULT_SEED = 20240917


# --------------------------------------------------------------------------
# 1D Gaussian pulse propagation
# --------------------------------------------------------------------------


@dataclass
class Propagation1DSetup:
    """Hard Gaussian source next to the left wall and a probe further right.

    The right wall sits far enough away that nothing reflected from it can
    reach the probe before ``total_time``.
    """

    dx: float = 5e-2
    total_time: float = 3.6685e-8
    source_index: int = 1
    probe_distance: float = 9.0  # m
    amplitude: float = 1.0
    width: float = 16.0
    offset: float = 0.7

    @property
    def probe_cells(self) -> int:
        return int(round(self.probe_distance / self.dx))

    @property
    def n_cells(self) -> int:
        reach = math.ceil(1.25 * C0 * self.total_time / self.dx)
        return self.source_index + max(reach, self.probe_cells + 8) + 8

    def source(self) -> SourceSpec:
        return SourceSpec(
            (self.source_index,), "ez", self.amplitude, self.width, self.offset, "hard"
        )


def analytic_gaussian_at_probe(source: SourceSpec, distance: float, t):
    """Source waveform delayed by the free-space travel time ``distance / c0``."""
    t = np.asarray(t, dtype=float)
    return source.amplitude * np.exp(-source.width * (source.offset - C0 * (t - distance / C0)) ** 2)


@dataclass
class PulseRun:
    s: float
    times: np.ndarray
    numeric: np.ndarray
    analytic: np.ndarray
    window: np.ndarray

    @property
    def l2_error(self) -> float:
        """Relative L2 waveform error over the window after the wavefront arrives."""
        d = (self.numeric - self.analytic)[self.window]
        return float(np.linalg.norm(d) / np.linalg.norm(self.analytic[self.window]))

    @property
    def linf_error(self) -> float:
        return float(np.max(np.abs(self.numeric - self.analytic)[self.window]))


def run_1d_pulse(scheme: Scheme | str, s: float, setup: Propagation1DSetup | None = None) -> PulseRun:
    setup = setup or Propagation1DSetup()
    grid = GridSpec(setup.dx, dim=1)
    src = setup.source()
    probe_idx = setup.source_index + setup.probe_cells
    cfg = SimConfig(
        Scheme.parse(scheme),
        grid,
        (setup.n_cells,),
        s,
        setup.total_time,
        sources=[src],
        probes=[ProbeSpec((probe_idx,), "ez", "probe")],
    )
    _, probes = run_sim(cfg)
    series = probes["probe"]
    distance = setup.probe_cells * setup.dx
    analytic = analytic_gaussian_at_probe(src, distance, series.times)
    # the source is switched on at t = 0, so nothing can arrive before distance / c0
    window = series.times >= distance / C0 * (1.0 - 1e-12)
    return PulseRun(float(s), series.times, series.values, analytic, window)


def exp_1d_propagation(
    scheme: Scheme | str, s_values: Iterable[float], setup: Propagation1DSetup | None = None
) -> list[PulseRun]:
    return [run_1d_pulse(scheme, s, setup) for s in s_values]


def pulse_error_table(runs: Sequence[PulseRun]) -> list[tuple[float, float, float]]:
    return [(r.s, r.l2_error, r.linf_error) for r in runs]


def pulse_centroid_wavenumber(source: SourceSpec) -> float:
    """Centroid of the pulse's one-sided magnitude spectrum, in rad/m.

    The Gaussian ``exp(-w (x0 - x)^2)`` has magnitude spectrum
    ``exp(-k^2 / (4 w))``, whose centroid is ``2 sqrt(w / pi)``.
    """
    return 2.0 * math.sqrt(source.width / math.pi)


def representative_crossing_1d(setup: Propagation1DSetup | None = None) -> tuple[float, float]:
    """Cells per wavelength at the pulse centroid and the FDTD(2,4) crossing there."""
    from .dispersion import remark2_crossing

    setup = setup or Propagation1DSetup()
    grid = GridSpec(setup.dx, dim=1)
    k = pulse_centroid_wavenumber(setup.source())
    wave = WaveSpec(k * grid.c / (2.0 * math.pi))
    return wave.cells_per_wavelength(grid), remark2_crossing(grid, wave)


# --------------------------------------------------------------------------
# Monochromatic wave train: measured phase velocity
# --------------------------------------------------------------------------


@dataclass
class PhaseVelocityMeasurement:
    scheme: Scheme
    cells_per_wavelength: float
    s: float
    k_exact: float
    k_measured: float

    @property
    def vp_ratio(self) -> float:
        return self.k_exact / self.k_measured


def _lockin_phase(t: np.ndarray, y: np.ndarray, omega: float) -> float:
    a = np.column_stack([np.cos(omega * t), np.sin(omega * t), np.ones_like(t)])
    (cc, ss, _), *_ = np.linalg.lstsq(a, y, rcond=None)
    # y ~ A cos(omega t - phase)
    return math.atan2(ss, cc)


def measure_phase_velocity_1d(
    scheme: Scheme | str,
    cells_per_wavelength: float,
    s: float,
    dx: float = 1e-2,
    ramp_periods: float = 5.0,
    lead_wavelengths: int = 3,
    span_wavelengths: int = 4,
    window_periods: int = 12,
) -> PhaseVelocityMeasurement:
    """Drive a sinusoid at a hard source and measure the spatial phase lag.

    Two probes ``span_wavelengths`` apart record the steady wave train; the
    numerical wavenumber follows from the phase difference at the drive
    frequency, fitted by least squares over ``window_periods`` periods.
    """
    scheme = Scheme.parse(scheme)
    grid = GridSpec(dx, dim=1)
    wave = WaveSpec.from_cells_per_wavelength(cells_per_wavelength, grid)
    omega = wave.omega
    period = 1.0 / wave.frequency
    lam_cells = cells_per_wavelength
    src_i = 1
    p1 = src_i + int(round(lead_wavelengths * lam_cells))
    p2 = p1 + int(round(span_wavelengths * lam_cells))
    d_cells = p2 - p1
    t_ramp = ramp_periods * period
    # envelope moves at the group velocity, conservatively bounded below by 0.8 c
    t_start = t_ramp + p2 * dx / (0.8 * C0) + 2.0 * period
    t_end = t_start + window_periods * period
    n_cells = int(math.ceil((1.2 * C0 * t_end / dx + p2) / 2.0)) + 16

    class _Driver(SourceSpec):
        def waveform(self, t):
            t = np.asarray(t, dtype=float)
            ramp = np.where(t < t_ramp, 0.5 * (1.0 - np.cos(np.pi * t / t_ramp)), 1.0)
            return ramp * np.sin(omega * t)

    cfg = SimConfig(
        scheme,
        grid,
        (n_cells,),
        s,
        t_end,
        sources=[_Driver((src_i,))],
        probes=[ProbeSpec((p1,), "ez", "a"), ProbeSpec((p2,), "ez", "b")],
    )
    _, probes = run_sim(cfg)
    t = probes["a"].times
    sel = t >= t_start
    ph_a = _lockin_phase(t[sel], probes["a"].values[sel], omega)
    ph_b = _lockin_phase(t[sel], probes["b"].values[sel], omega)
    k = wave.wavenumber(grid)
    dist = d_cells * dx
    lag = ph_b - ph_a
    turns = round((k * dist - lag) / (2.0 * math.pi))
    k_meas = (lag + 2.0 * math.pi * turns) / dist
    return PhaseVelocityMeasurement(scheme, cells_per_wavelength, float(s), k, k_meas)


# --------------------------------------------------------------------------
# Cavity resonances
# --------------------------------------------------------------------------

PROBE_FRACTIONS = (0.31, 0.57, 0.43)


@dataclass
class CavityRun:
    s: float
    report: ResonanceReport
    n_steps: int


@dataclass
class CavityResult:
    scheme: Scheme
    dims: tuple[float, ...]
    polarization: str | None
    groups: list[ModeGroup]
    runs: list[CavityRun] = field(default_factory=list)

    @property
    def s_values(self) -> list[float]:
        return [r.s for r in self.runs]

    def re_table(self) -> dict[str, np.ndarray]:
        """Relative error per tracked mode group, one entry per Courant fraction."""
        return {
            g.label: np.array([r.report.rows[i].rel_error for r in self.runs])
            for i, g in enumerate(self.groups)
        }

    def rows(self) -> list[list]:
        out = []
        for r in self.runs:
            for row in r.report.csv_rows():
                out.append([r.s] + row)
        return out

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "m", "n", "p", "f_ref_hz", "f_meas_hz", "rel_error"])
            for row in self.rows():
                w.writerow([repr(row[0])] + row[1:4] + [repr(float(v)) for v in row[4:]])


def _random_fill(seed: int):
    def fill(state: FieldState):
        rng = np.random.default_rng(seed)
        for name in sorted(state.fields):
            if name[0] == "e":
                state.fields[name][...] = rng.standard_normal(state.fields[name].shape)

    return fill


def _probe_index(comp: str, cells: Sequence[int], frac: Sequence[float]) -> tuple[int, ...]:
    from .yee import on_node

    idx = []
    for axis, n in enumerate(cells):
        if on_node(comp, axis):
            idx.append(min(max(int(round(frac[axis] * n)), 1), n - 1))
        else:
            idx.append(min(int(frac[axis] * n), n - 1))
    return tuple(idx)


def run_cavity(
    scheme: Scheme | str,
    dims: Sequence[float],
    s: float,
    groups: Sequence[ModeGroup],
    cell: float = 4e-2,
    polarization: str | None = None,
    resolution_fraction: float = 0.01,
    seed: int = DEFAULT_SEED,
    pad_factor: int = 8,
) -> CavityRun:
    """Ring down a PEC box from a random field and locate the tracked resonances.

    The record length makes the native spectral resolution equal to
    ``resolution_fraction`` of the lowest tracked frequency, independently of
    ``s``, so runs at different time steps resolve the spectrum equally well.
    """
    scheme = Scheme.parse(scheme)
    dim = len(dims)
    cells = tuple(int(round(a / cell)) for a in dims)
    grid = GridSpec(cell, dim=dim)
    f_lo = min(g.f_ref for g in groups)
    f_hi = max(g.f_ref for g in groups)
    duration = 1.0 / (resolution_fraction * f_lo)
    if dim == 2:
        comps = ("ez",) if (polarization or "tm").lower() == "tm" else ("hz",)
    else:
        comps = ("ex", "ey", "ez")
    probes = [ProbeSpec(_probe_index(c, cells, PROBE_FRACTIONS), c, c) for c in comps]
    cfg = SimConfig(
        scheme,
        grid,
        cells,
        s,
        duration,
        polarization=polarization,
        probes=probes,
        initial=_random_fill(seed),
    )
    _, series = run_sim(cfg)
    mags = None
    spec = None
    for p in probes:
        sp = spectrum(series[p.name].values, cfg.dt, pad_factor).band(0.5 * f_lo, 1.25 * f_hi)
        # normalize each probe so no single component dominates the sum
        m = sp.mags / max(sp.mags.max(), np.finfo(float).tiny)
        mags = m if mags is None else mags + m
        spec = sp
    spec.mags = mags
    peaks = find_peaks(spec, 4 * len(groups) + 8)
    report = match_and_score(peaks, list(groups), resolution_hz=spec.resolution_hz)
    report.meta = {"s": float(s), "n_steps": cfg.n_steps, "duration_s": duration}
    return CavityRun(float(s), report, cfg.n_steps)


def exp_cavity_2d(
    scheme: Scheme | str,
    polarization: str = "tm",
    modes: Sequence[ModeGroup] | None = None,
    s_values: Iterable[float] = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    dims: tuple[float, float] = (1.0, 2.0),
    cell: float = 4e-2,
    resolution_fraction: float = 0.01,
    seed: int = DEFAULT_SEED,
) -> CavityResult:
    pol = polarization.lower()
    groups = list(modes) if modes else lowest_mode_groups(dims, 3, family=pol, nondegenerate=True)
    res = CavityResult(Scheme.parse(scheme), tuple(dims), pol, groups)
    for s in s_values:
        res.runs.append(
            run_cavity(scheme, dims, s, groups, cell, pol, resolution_fraction, seed)
        )
    return res


def exp_cavity_3d(
    scheme: Scheme | str,
    modes: Sequence[ModeGroup] | None = None,
    s_values: Iterable[float] = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    side: float = 1.0,
    cell: float = 4e-2,
    resolution_fraction: float = 0.01,
    seed: int = DEFAULT_SEED,
) -> CavityResult:
    dims = (side, side, side)
    groups = list(modes) if modes else lowest_mode_groups(dims, 3)
    res = CavityResult(Scheme.parse(scheme), dims, None, groups)
    for s in s_values:
        res.runs.append(run_cavity(scheme, dims, s, groups, cell, None, resolution_fraction, seed))
    return res


def predicted_cavity_error(
    scheme: Scheme | str, dims: Sequence[float], mode: Sequence[int], s: float, cell: float = 4e-2
) -> float:
    """Relative resonance error implied by the discrete dispersion relation alone.

    With mirror-image walls the grid supports exactly the continuum
    wavenumbers ``m pi / a``; only the frequency is shifted.
    """
    from .dispersion import cfl_max_dt

    scheme = Scheme.parse(scheme)
    grid = GridSpec(cell, dim=len(dims))
    dt = s * cfl_max_dt(scheme, grid)
    rhs = sum(
        (scheme.symbol(m * math.pi / a * cell / 2.0) / cell) ** 2 for m, a in zip(mode, dims)
    )
    f_num = math.asin(grid.c * dt * math.sqrt(rhs)) / (math.pi * dt)
    f_ref = analytic_resonance(dims, mode)
    return abs(f_num - f_ref) / f_ref


# --------------------------------------------------------------------------
# Dispersion maps
# --------------------------------------------------------------------------

MAP_COLUMNS = ("s", "theta_rad", "phi_rad", "k_exact", "k_num", "vp_ratio", "nde")


def dispersion_rows(
    scheme: Scheme | str,
    grid: GridSpec,
    wave: WaveSpec,
    s_values: Iterable[float],
    n_theta: int = 31,
    n_phi: int = 61,
    theta: Sequence[float] | None = None,
    phi: Sequence[float] | None = None,
) -> tuple[list[tuple], int, int]:
    """Rows of ``MAP_COLUMNS`` plus failed/total point counts.

    Failed points are written with ``nan`` wavenumber columns.
    """
    rows = []
    failed = total = 0
    for s in s_values:
        scan = scan_angles(scheme, grid, wave, s, n_theta, n_phi, theta=theta, phi=phi)
        failed += scan.n_failed
        total += scan.status.size
        for th, ph, pt in scan.rows():
            if pt is None:
                rows.append((s, th, ph, scan.k_exact, math.nan, math.nan, math.nan))
            else:
                rows.append((s, th, ph, pt.k_exact, pt.k_num, pt.vp_ratio, pt.nde))
    return rows, failed, total


def exp_dispersion_maps(
    scheme: Scheme | str,
    s_values: Sequence[float] = tuple(round(0.1 * i, 10) for i in range(1, 11)),
    frequency: float = 5e9,
    dx: float = 6e-3,
    n_theta: int = 31,
    n_phi: int = 61,
    slices: Sequence[str] = ("theta90", "phi90", "surface"),
) -> dict[str, list[tuple]]:
    """Tables behind the phase-velocity maps.

    ``theta90``: (S, phi) at theta = 90 deg; ``phi90``: (S, theta) at
    phi = 90 deg; ``surface``: the full (theta, phi) grid for every S.
    """
    grid = GridSpec(dx)
    wave = WaveSpec(frequency)
    out = {}
    for name in slices:
        if name == "theta90":
            rows, _, _ = dispersion_rows(
                scheme, grid, wave, s_values, theta=[math.pi / 2], phi=np.linspace(0, 2 * math.pi, n_phi)
            )
        elif name == "phi90":
            rows, _, _ = dispersion_rows(
                scheme, grid, wave, s_values, theta=np.linspace(0, math.pi, n_theta), phi=[math.pi / 2]
            )
        elif name == "surface":
            rows, _, _ = dispersion_rows(scheme, grid, wave, s_values, n_theta, n_phi)
        else:
            raise ValueError(f"unknown slice {name!r}")
        out[name] = rows
    return out


def write_rows_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# --------------------------------------------------------------------------
# Trend helpers
# --------------------------------------------------------------------------


def median3(values: Sequence[float]) -> np.ndarray:
    """Three-point running median; the end points are kept as they are."""
    v = np.asarray(values, dtype=float)
    out = v.copy()
    for i in range(1, v.size - 1):
        out[i] = np.median(v[i - 1 : i + 2])
    return out


def non_increasing(values: Sequence[float], slack: float = 0.0) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= slack))


def dip_then_rise(values: Sequence[float]) -> bool:
    """Minimum strictly inside the sequence, with larger values on both sides."""
    v = np.asarray(values, dtype=float)
    i = int(np.argmin(v))
    return bool(0 < i < v.size - 1 and v[0] > v[i] and v[-1] > v[i])


# --------------------------------------------------------------------------
# Reproducibility manifest
# --------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Scheme):
        return obj.value
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def manifest(subcommand: str, config: dict, seed: int | None = None) -> dict:
    from . import __version__

    return {
        "subcommand": subcommand,
        "config": _jsonable(config),
        "seed": seed,
        "versions": {
            "fdtd_dispersion": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "platform": platform.platform(),
        },
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def write_manifest(out: str | Path, subcommand: str, config: dict, seed: int | None = None) -> Path:
    path = Path(f"{out}.manifest.json")
    path.write_text(json.dumps(manifest(subcommand, config, seed), indent=2, sort_keys=True))
    return path
