"""Analytical numerical-dispersion relations of the FDTD(2,2) and FDTD(2,4) schemes.

Both schemes share the leapfrog (second-order) time update, so the temporal
side of the dispersion relation is the same::

    [sin(w dt / 2) / (c dt)]^2 = sum_xi [g(kt_xi dxi / 2) / dxi]^2

with ``g(x) = sin(x)`` for FDTD(2,2) and ``g(x) = (27 sin x - sin 3x) / 24``
for FDTD(2,4). ``kt_xi`` are the Cartesian projections of the numerical
wavenumber along the propagation direction. Everything here works in SI
units; the Courant fraction ``s`` is the time step divided by the scheme's
own stability limit.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import brentq

from .constants import C0
from .numerics import RootFindingError, bisect, bracketed_newton, golden_section

logger = logging.getLogger(__name__)

EPS_TOL = 1e-12
NO_ROOT_SLACK = 1e-12
HALF_PI = 0.5 * math.pi


class DispersionError(Exception):
    """Base class for failures of the dispersion analysis."""


class NoRealRoot(DispersionError):
    """The left side exceeds every value the right side reaches along the direction."""


class NotConverged(DispersionError):
    pass


class AllPointsFailed(DispersionError):
    pass


class DomainViolation(DispersionError):
    pass


class TooManyFailures(DispersionError):
    pass


class UnsupportedScheme(DispersionError, ValueError):
    pass


class NoCrossing(DispersionError):
    """k_num - k_exact keeps one sign on the whole Courant interval.

    ``side`` is ``"above"`` when the numerical wavenumber stays larger than the
    exact one, ``"below"`` otherwise.
    """

    def __init__(self, side: str, message: str = ""):
        self.side = side
        super().__init__(message or f"no sign change: k_num stays {side} k_exact")


class Scheme(str, enum.Enum):
    FDTD22 = "fdtd22"
    FDTD24 = "fdtd24"

    @property
    def cfl_factor(self) -> float:
        return 1.0 if self is Scheme.FDTD22 else 6.0 / 7.0

    @property
    def spatial_order(self) -> int:
        return 2 if self is Scheme.FDTD22 else 4

    def symbol(self, x):
        """Per-axis stencil symbol ``g(x)``; ``g(x) -> x`` as ``x -> 0``."""
        if self is Scheme.FDTD22:
            return np.sin(x)
        return (27.0 * np.sin(x) - np.sin(3.0 * x)) / 24.0

    def symbol_slope(self, x):
        if self is Scheme.FDTD22:
            return np.cos(x)
        return (27.0 * np.cos(x) - 3.0 * np.cos(3.0 * x)) / 24.0

    @classmethod
    def parse(cls, value: "Scheme | str") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).lower().replace("(", "").replace(")", "").replace(",", "").replace(" ", "")
        return cls(key)


# both symbols reach their first maximum at x = pi/2 (g' = 0 there)
SYMBOL_FIRST_MAX = HALF_PI


@dataclass(frozen=True)
class GridSpec:
    """Uniform mesh and homogeneous lossless medium.

    Unused axes default to ``dx``. Only the first ``dim`` spacings take part
    in the stability limit and the dispersion sums.
    """

    dx: float
    dy: float | None = None
    dz: float | None = None
    dim: int = 3
    eps_r: float = 1.0
    mu_r: float = 1.0

    def __post_init__(self):
        if self.dy is None:
            object.__setattr__(self, "dy", self.dx)
        if self.dz is None:
            object.__setattr__(self, "dz", self.dx)
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        for name in ("dx", "dy", "dz"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.eps_r < 1.0 - EPS_TOL or self.mu_r < 1.0 - EPS_TOL:
            raise ValueError("eps_r and mu_r must be >= 1")

    @property
    def spacings(self) -> tuple[float, ...]:
        return (self.dx, self.dy, self.dz)[: self.dim]

    @property
    def delta(self) -> float:
        """Coarsest active spacing; the reference for cells per wavelength."""
        return max(self.spacings)

    @property
    def c(self) -> float:
        return C0 / math.sqrt(self.eps_r * self.mu_r)


@dataclass(frozen=True)
class WaveSpec:
    frequency: float

    def __post_init__(self):
        if not self.frequency > 0.0:
            raise ValueError("frequency must be positive")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency

    def wavenumber(self, grid: GridSpec) -> float:
        return self.omega / grid.c

    def wavelength(self, grid: GridSpec) -> float:
        return grid.c / self.frequency

    def cells_per_wavelength(self, grid: GridSpec) -> float:
        return self.wavelength(grid) / grid.delta

    @classmethod
    def from_cells_per_wavelength(cls, n: float, grid: GridSpec) -> "WaveSpec":
        return cls(grid.c / (n * grid.delta))


@dataclass(frozen=True)
class PropagationAngle:
    """Polar angle ``theta`` from +z and azimuth ``phi`` from +x, radians."""

    theta: float = HALF_PI
    phi: float = 0.0

    def __post_init__(self):
        if not (-1e-12 <= self.theta <= math.pi + 1e-12):
            raise ValueError(f"theta out of [0, pi]: {self.theta}")
        if not (-1e-12 <= self.phi <= 2.0 * math.pi + 1e-12):
            raise ValueError(f"phi out of [0, 2pi]: {self.phi}")

    def direction_cosines(self, dim: int) -> tuple[float, ...]:
        # lower dimensions pin the direction into the active plane/axis
        if dim == 1:
            return (1.0,)
        if dim == 2:
            return (math.cos(self.phi), math.sin(self.phi))
        st = math.sin(self.theta)
        return (st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta))


AXIS = PropagationAngle(HALF_PI, 0.0)


@dataclass(frozen=True)
class DispersionPoint:
    k_exact: float
    k_num: float

    @property
    def vp_ratio(self) -> float:
        """Numerical phase velocity over the medium speed, ``k_exact / k_num``."""
        return self.k_exact / self.k_num

    @property
    def nde(self) -> float:
        return abs(self.k_num - self.k_exact) / self.k_exact


@dataclass(frozen=True)
class LhsDiagnostics:
    lhs: float
    q: float
    p: float


def _check_s(s: float) -> float:
    if not (0.0 < s <= 1.0 + 1e-12):
        raise ValueError(f"Courant fraction must lie in (0, 1], got {s}")
    return float(s)


def cfl_max_dt(scheme: Scheme | str, grid: GridSpec) -> float:
    scheme = Scheme.parse(scheme)
    inv2 = sum(d ** -2 for d in grid.spacings)
    return scheme.cfl_factor / (grid.c * math.sqrt(inv2))


def time_step(scheme: Scheme | str, grid: GridSpec, s: float) -> float:
    return s * cfl_max_dt(scheme, grid)


def dispersion_lhs(scheme: Scheme | str, grid: GridSpec, wave: WaveSpec, s: float) -> float:
    """``[sin(w dt/2) / (c dt)]^2`` at ``dt = s * cfl_max_dt``."""
    s = _check_s(s)
    dt = time_step(scheme, grid, s)
    return (math.sin(0.5 * wave.omega * dt) / (grid.c * dt)) ** 2


def lhs_closed_form_uniform(n_cells: float, s: float, delta: float) -> float:
    """LHS of the uniform-mesh 3D FDTD(2,2) relation written through S and N."""
    x = math.pi * s / (math.sqrt(3.0) * n_cells)
    return (math.sqrt(3.0) / (s * delta) * math.sin(x)) ** 2


def lhs_slope_closed_form(n_cells: float, s: float, delta: float) -> float:
    """d(LHS)/dS for the uniform 3D FDTD(2,2) case, expressed through ``q_factor``."""
    x = math.pi * s / (math.sqrt(3.0) * n_cells)
    return 6.0 * math.sin(x) * q_factor(n_cells, s) / (
        math.sqrt(3.0) * n_cells * s ** 3 * delta ** 2
    )


def dispersion_rhs(
    scheme: Scheme | str, grid: GridSpec, angle: PropagationAngle, k_num: float
) -> float:
    if k_num < 0.0:
        raise ValueError("k_num must be non-negative")
    return _Direction(Scheme.parse(scheme), grid, angle).rhs(k_num)


class _Direction:
    """Right side of the relation as a function of ``k_num`` along one direction."""

    def __init__(self, scheme: Scheme, grid: GridSpec, angle: PropagationAngle):
        self.scheme = scheme
        cosines = angle.direction_cosines(grid.dim)
        terms = [
            (abs(cs) * d / 2.0, d) for cs, d in zip(cosines, grid.spacings) if abs(cs) > 1e-15
        ]
        self.half = np.array([t[0] for t in terms])
        self.inv_d2 = np.array([t[1] ** -2 for t in terms])
        # k_num where each per-axis term peaks
        self.k_term_max = SYMBOL_FIRST_MAX / self.half
        self._k_peak: float | None = None

    def rhs(self, k: float) -> float:
        g = self.scheme.symbol(k * self.half)
        return float(np.sum(g * g * self.inv_d2))

    def drhs(self, k: float) -> float:
        x = k * self.half
        return float(
            np.sum(2.0 * self.scheme.symbol(x) * self.scheme.symbol_slope(x) * self.half * self.inv_d2)
        )

    @property
    def k_monotone(self) -> float:
        """Every term still increases below this wavenumber."""
        return float(self.k_term_max.min())

    @property
    def k_peak(self) -> float:
        """First local maximum of the right side (the physical-branch bracket end)."""
        if self._k_peak is None:
            lo, hi = float(self.k_term_max.min()), float(self.k_term_max.max())
            if hi - lo <= 1e-12 * hi:
                self._k_peak = lo
            else:
                grid = np.linspace(lo, hi, 65)
                vals = [self.drhs(k) for k in grid]
                peak = hi
                for i in range(64):
                    if vals[i] > 0.0 and vals[i + 1] <= 0.0:
                        peak = brentq(self.drhs, grid[i], grid[i + 1], xtol=1e-14 * hi)
                        break
                    if vals[i] <= 0.0:
                        peak = grid[i]
                        break
                self._k_peak = float(peak)
        return self._k_peak


def _root(direction: _Direction, lhs: float, k_guess: float, tol: float, maxiter: int) -> float:
    hi = direction.k_monotone
    if lhs > direction.rhs(hi):
        hi = direction.k_peak
        rmax = direction.rhs(hi)
        if lhs > (1.0 + NO_ROOT_SLACK) * rmax:
            raise NoRealRoot(
                f"LHS={lhs:.6e} exceeds the largest right side {rmax:.6e} along this direction"
            )
        if lhs >= rmax:
            return hi
    try:
        return bracketed_newton(
            lambda k: direction.rhs(k) - lhs,
            direction.drhs,
            0.0,
            hi,
            x0=min(k_guess, 0.999 * hi),
            rtol=tol,
            maxiter=maxiter,
        )
    except RootFindingError as exc:
        raise NotConverged(str(exc)) from exc


def solve_knum(
    scheme: Scheme | str,
    grid: GridSpec,
    wave: WaveSpec,
    s: float,
    angle: PropagationAngle = AXIS,
    tol: float = 1e-12,
    maxiter: int = 200,
) -> DispersionPoint:
    """Numerical wavenumber on the physical (smallest positive) branch.

    Raises:
        NoRealRoot: the frequency/time-step pair does not propagate along ``angle``.
        NotConverged: the safeguarded Newton iteration ran out of iterations.
    """
    scheme = Scheme.parse(scheme)
    _check_cells(wave, grid)
    lhs = dispersion_lhs(scheme, grid, wave, s)
    k = wave.wavenumber(grid)
    knum = _root(_Direction(scheme, grid, angle), lhs, k, tol, maxiter)
    return DispersionPoint(k_exact=k, k_num=knum)


def _check_cells(wave: WaveSpec, grid: GridSpec):
    n = wave.cells_per_wavelength(grid)
    if n < 2.0 - 1e-12:
        raise ValueError(f"need at least 2 cells per wavelength, got {n:.4g}")


OK, NO_REAL_ROOT, NOT_CONVERGED = 0, 1, 2


@dataclass
class AngleScan:
    """Dense table of dispersion points over a (theta, phi) grid.

    Failed points carry ``nan`` in ``k_num`` and a nonzero ``status``
    (1 = no real root, 2 = not converged).
    """

    scheme: Scheme
    s: float
    theta: np.ndarray
    phi: np.ndarray
    k_exact: float
    k_num: np.ndarray
    status: np.ndarray = field(repr=False)

    @property
    def vp_ratio(self) -> np.ndarray:
        return self.k_exact / self.k_num

    @property
    def nde(self) -> np.ndarray:
        return np.abs(self.k_num - self.k_exact) / self.k_exact

    @property
    def n_failed(self) -> int:
        return int(np.count_nonzero(self.status))

    @property
    def failure_rate(self) -> float:
        return self.n_failed / self.status.size

    def rows(self) -> Iterator[tuple[float, float, DispersionPoint | None]]:
        for i, th in enumerate(self.theta):
            for j, ph in enumerate(self.phi):
                kn = self.k_num[i, j]
                yield th, ph, (DispersionPoint(self.k_exact, kn) if self.status[i, j] == OK else None)


def _angle_axes(dim: int, n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    if n_theta < 2 or n_phi < 2:
        raise ValueError("angle grids need at least 2 points per axis")
    if dim == 1:
        return np.array([HALF_PI]), np.array([0.0])
    phi = np.linspace(0.0, 2.0 * math.pi, n_phi)
    if dim == 2:
        return np.array([HALF_PI]), phi
    return np.linspace(0.0, math.pi, n_theta), phi


def scan_angles(
    scheme: Scheme | str,
    grid: GridSpec,
    wave: WaveSpec,
    s: float,
    n_theta: int = 91,
    n_phi: int = 181,
    tol: float = 1e-12,
    theta: Sequence[float] | None = None,
    phi: Sequence[float] | None = None,
) -> AngleScan:
    """Solve on a uniform theta x phi grid (or on explicit ``theta``/``phi`` lists).

    In 2D only the azimuth varies and in 1D the single axis direction is used.
    """
    scheme = Scheme.parse(scheme)
    _check_cells(wave, grid)
    th_axis, ph_axis = _angle_axes(grid.dim, n_theta, n_phi)
    if theta is not None:
        th_axis = np.asarray(theta, dtype=float)
    if phi is not None:
        ph_axis = np.asarray(phi, dtype=float)
    lhs = dispersion_lhs(scheme, grid, wave, s)
    k = wave.wavenumber(grid)
    knum = np.full((th_axis.size, ph_axis.size), np.nan)
    status = np.zeros(knum.shape, dtype=np.int8)
    for i, th in enumerate(th_axis):
        for j, ph in enumerate(ph_axis):
            d = _Direction(scheme, grid, PropagationAngle(th, ph))
            try:
                knum[i, j] = _root(d, lhs, k, tol, 200)
            except NoRealRoot:
                status[i, j] = NO_REAL_ROOT
            except NotConverged:
                status[i, j] = NOT_CONVERGED
    return AngleScan(scheme, s, th_axis, ph_axis, k, knum, status)


def max_knum_over_angles(
    scheme: Scheme | str,
    grid: GridSpec,
    wave: WaveSpec,
    s: float,
    n_theta: int = 91,
    n_phi: int = 181,
    tol: float = 1e-12,
) -> tuple[DispersionPoint, PropagationAngle]:
    scan = scan_angles(scheme, grid, wave, s, n_theta, n_phi, tol)
    if scan.n_failed == scan.status.size:
        raise AllPointsFailed("every direction of the scan failed")
    i, j = np.unravel_index(np.nanargmax(scan.k_num), scan.k_num.shape)
    return (
        DispersionPoint(scan.k_exact, float(scan.k_num[i, j])),
        PropagationAngle(float(scan.theta[i]), float(scan.phi[j])),
    )


def lemma_monotonicity_check(
    scheme: Scheme | str,
    grid: GridSpec,
    wave: WaveSpec,
    angle: PropagationAngle,
    s_grid: Sequence[float],
    fd_step: float = 1e-4,
    tol: float = 1e-12,
) -> list[tuple[float, float]]:
    """Finite-difference estimates of ``d k_num / d S`` along a fixed direction.

    Central differences; at ``S = 1`` (where ``S + fd_step`` would break the
    stability limit) a second-order one-sided difference is used instead.
    """
    s_grid = [float(s) for s in s_grid]
    if any(b <= a for a, b in zip(s_grid, s_grid[1:])):
        raise ValueError("s_grid must be strictly increasing")

    def knum(s):
        return solve_knum(scheme, grid, wave, s, angle, tol).k_num

    out = []
    for s in s_grid:
        if s - fd_step <= 0.0:
            raise ValueError(f"fd_step too large for S={s}")
        if s + fd_step <= 1.0:
            d = (knum(s + fd_step) - knum(s - fd_step)) / (2.0 * fd_step)
        else:
            d = (3.0 * knum(s) - 4.0 * knum(s - fd_step) + knum(s - 2.0 * fd_step)) / (2.0 * fd_step)
        out.append((s, d))
    return out


def q_factor(n_cells, s):
    """Bracketed factor ``Q`` of the uniform-mesh LHS slope; negative for S in (0, 1]."""
    n_cells = np.asarray(n_cells, dtype=float)
    s = np.asarray(s, dtype=float)
    x = np.pi * s / (np.sqrt(3.0) * n_cells)
    q = np.pi * s * np.cos(x) - np.sqrt(3.0) * n_cells * np.sin(x)
    return q if q.ndim else float(q)


def p_terms(n_cells: float, theta, phi, a: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three angular terms whose sum is ``p_factor``.

    ``a`` is the exact-over-numerical phase-velocity ratio ``c / v_num``; the
    analysis requires ``pi * a / N`` in ``(0, pi/2)``.
    """
    ratio = math.pi * a / n_cells
    if not (0.0 < ratio < HALF_PI):
        raise DomainViolation(f"pi*a/N = {ratio:.4g} outside (0, pi/2)")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    m = ratio * st * np.cos(phi)
    # y-axis argument; each term is c*sin(alpha*c)*cos(alpha*c) for its own cosine c
    my = ratio * st * np.sin(phi)
    t = ratio * ct
    term1 = st * np.cos(phi) * np.sin(m) * np.cos(m)
    term2 = st * np.sin(phi) * np.sin(my) * np.cos(my)
    term3 = ct * np.sin(t) * np.cos(t)
    return term1, term2, term3


def p_factor(n_cells: float, theta, phi, a: float):
    t1, t2, t3 = p_terms(n_cells, theta, phi, a)
    p = t1 + t2 + t3
    return p if p.ndim else float(p)


def lhs_diagnostics(
    grid: GridSpec, wave: WaveSpec, s: float, angle: PropagationAngle, vp_ratio: float
) -> LhsDiagnostics:
    n = wave.cells_per_wavelength(grid)
    return LhsDiagnostics(
        lhs=dispersion_lhs(Scheme.FDTD22, grid, wave, s),
        q=q_factor(n, s),
        p=p_factor(n, angle.theta, angle.phi, 1.0 / vp_ratio),
    )


@dataclass
class OptimalStep:
    s_opt: float
    dt_opt: float
    objective: float
    evaluations: list[tuple[float, float]]
    failures: int = 0


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    if x.size == 1:
        return np.ones(1)
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def angular_error_integral(
    scheme: Scheme | str,
    grid: GridSpec,
    wave: WaveSpec,
    s: float,
    n_theta: int = 61,
    n_phi: int = 121,
    max_failure_rate: float = 0.01,
) -> tuple[float, int]:
    """Trapezoid estimate of the angular integral of ``|k_num - k_exact|``.

    In 1D this is the single-direction value and in 2D a one-dimensional
    integral over the azimuth. Failed points are dropped and the remaining
    weights rescaled; more than ``max_failure_rate`` failures aborts.
    """
    scan = scan_angles(scheme, grid, wave, s, n_theta, n_phi)
    w = np.outer(_trapezoid_weights(scan.theta), _trapezoid_weights(scan.phi))
    ok = scan.status == OK
    if scan.failure_rate > max_failure_rate:
        raise TooManyFailures(f"{scan.n_failed} of {scan.status.size} points failed at S={s}")
    if scan.n_failed:
        logger.warning("%d quadrature points failed at S=%.6g", scan.n_failed, s)
    err = np.where(ok, np.abs(scan.k_num - scan.k_exact), 0.0)
    total = float(np.sum(w * err) * np.sum(w) / np.sum(w[ok]))
    return total, scan.n_failed


def optimal_courant_24(
    grid: GridSpec,
    wave: WaveSpec,
    n_theta: int = 61,
    n_phi: int = 121,
    search_tol: float = 1e-4,
    scheme: Scheme | str = Scheme.FDTD24,
    s_bounds: tuple[float, float] = (1e-3, 1.0),
) -> OptimalStep:
    """Courant fraction minimizing the angular integral of ``|k_num - k_exact|``.

    Only meaningful for FDTD(2,4): for FDTD(2,2) the numerical wavenumber
    decreases monotonically towards ``k_exact`` and the optimum is always S = 1.
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.FDTD22:
        raise UnsupportedScheme(
            "FDTD(2,2): k_num decreases monotonically with S and stays above k, "
            "so the dispersion error is smallest at the stability limit (S = 1)"
        )
    failures = 0

    def objective(s):
        nonlocal failures
        val, nf = angular_error_integral(scheme, grid, wave, s, n_theta, n_phi)
        failures += nf
        return val

    res = golden_section(objective, s_bounds[0], s_bounds[1], xtol=search_tol)
    return OptimalStep(
        s_opt=res.x,
        dt_opt=time_step(scheme, grid, res.x),
        objective=res.fun,
        evaluations=res.evaluations,
        failures=failures,
    )


def remark2_crossing(
    grid: GridSpec,
    wave: WaveSpec,
    angle: PropagationAngle = AXIS,
    tol: float = 1e-10,
    s_min: float = 1e-6,
    scheme: Scheme | str = Scheme.FDTD24,
) -> float:
    """Courant fraction where ``k_num - k_exact`` changes sign along ``angle``.

    Raises:
        NoCrossing: with ``side`` telling whether ``k_num`` stays above or below.
    """

    def diff(s):
        p = solve_knum(scheme, grid, wave, s, angle)
        return p.k_num - p.k_exact

    d_lo, d_hi = diff(s_min), diff(1.0)
    if d_lo > 0.0 and d_hi > 0.0:
        raise NoCrossing("above")
    if d_lo < 0.0 and d_hi < 0.0:
        raise NoCrossing("below")
    if d_hi == 0.0:
        return 1.0
    return bisect(diff, s_min, 1.0, xtol=tol)
