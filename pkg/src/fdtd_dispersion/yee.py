"""Leapfrog Yee-grid engines in 1D/2D/3D with second- or fourth-order curls.

Every field component is stored as a 3D array; axes beyond ``dim`` have
length one and contribute no derivatives. Positions follow the standard Yee
cell: ``E_c`` sits half a cell along its own axis and on nodes along the
others, ``H_c`` on nodes along its own axis and half a cell along the others.

With ``n`` cells on a PEC axis a node-located component has ``n + 1``
samples and a half-located one ``n``. On a periodic axis both have ``n``.

The fourth-order stencil near a PEC wall reads ghost values from the mirror
image: node-located components are odd about the wall and half-located ones
even. For a rectangular cavity this reproduces the doubled periodic domain
exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .constants import C0, EPS0, MU0
from .dispersion import GridSpec, Scheme, cfl_max_dt

E_COMPONENTS = ("ex", "ey", "ez")
H_COMPONENTS = ("hx", "hy", "hz")

# (sign, other field component, derivative axis) for the curl of the partner field
CURL = {
    "ex": ((+1, "hz", 1), (-1, "hy", 2)),
    "ey": ((+1, "hx", 2), (-1, "hz", 0)),
    "ez": ((+1, "hy", 0), (-1, "hx", 1)),
    "hx": ((+1, "ez", 1), (-1, "ey", 2)),
    "hy": ((+1, "ex", 2), (-1, "ez", 0)),
    "hz": ((+1, "ey", 0), (-1, "ex", 1)),
}

INSTABILITY_FACTOR = 1e12


class Instability(RuntimeError):
    def __init__(self, step: int, value: float, s: float | None = None):
        self.step = step
        self.value = value
        self.s = s
        super().__init__(f"fields diverged at step {step} (max |field| = {value:.3e})")


def components_for(dim: int, polarization: str | None = None) -> tuple[str, ...]:
    if dim == 1:
        return ("ez", "hy")
    if dim == 2:
        pol = (polarization or "tm").lower()
        if pol == "tm":
            return ("ez", "hx", "hy")
        if pol == "te":
            return ("ex", "ey", "hz")
        raise ValueError(f"unknown polarization {polarization!r}")
    return E_COMPONENTS + H_COMPONENTS


def _axis(comp: str) -> int:
    return "xyz".index(comp[1])


def on_node(comp: str, axis: int) -> bool:
    """True when ``comp`` sits on grid nodes (integer positions) along ``axis``."""
    own = _axis(comp) == axis
    return own if comp[0] == "h" else not own


def component_shape(comp: str, cells: Sequence[int], boundary: str) -> tuple[int, ...]:
    shape = []
    for axis in range(3):
        if axis >= len(cells):
            shape.append(1)
        elif boundary == "pec" and on_node(comp, axis):
            shape.append(cells[axis] + 1)
        else:
            shape.append(cells[axis])
    return tuple(shape)


@dataclass
class FieldState:
    """Fields of a running simulation; E at integer steps, H half a step later."""

    fields: dict[str, np.ndarray]
    cells: tuple[int, ...]
    dt: float
    boundary: str = "pec"
    step: int = 0

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def time(self) -> float:
        return self.step * self.dt

    def copy(self) -> "FieldState":
        return FieldState(
            {k: v.copy() for k, v in self.fields.items()}, self.cells, self.dt, self.boundary, self.step
        )

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(v))) for v in self.fields.values()), default=0.0)

    def energy(self, grid: GridSpec) -> float:
        """Discrete field energy ``sum (eps E^2 + mu H^2) / 2`` times cell volume."""
        vol = math.prod(grid.spacings)
        eps = EPS0 * grid.eps_r
        mu = MU0 * grid.mu_r
        tot = 0.0
        for name, arr in self.fields.items():
            tot += (eps if name[0] == "e" else mu) * float(np.sum(arr * arr))
        return 0.5 * tot * vol

    def __getitem__(self, comp: str) -> np.ndarray:
        return self.fields[comp]


def new_state(
    cells: Sequence[int],
    dt: float,
    polarization: str | None = None,
    boundary: str = "pec",
) -> FieldState:
    cells = tuple(int(n) for n in cells)
    if not 1 <= len(cells) <= 3:
        raise ValueError("cells must have one to three entries")
    if boundary not in ("pec", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    if any(n < 3 for n in cells):
        raise ValueError("need at least 3 cells per axis")
    comps = components_for(len(cells), polarization)
    fields = {c: np.zeros(component_shape(c, cells, boundary)) for c in comps}
    return FieldState(fields, cells, float(dt), boundary)


def _take(a: np.ndarray, axis: int, sl: slice) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = sl
    return a[tuple(idx)]


def difference(f: np.ndarray, axis: int, node: bool, order: int, boundary: str) -> np.ndarray:
    """Staggered difference of ``f`` along ``axis`` (not divided by the spacing).

    Node-located input yields values at the half positions between nodes;
    half-located input yields values at nodes. On a PEC axis the latter only
    covers interior nodes, since wall nodes carry tangential E (held at zero)
    or normal H (never touched by this derivative).
    """
    if boundary == "periodic":
        r = lambda k: np.roll(f, k, axis=axis)  # noqa: E731
        if node:
            if order == 2:
                return r(-1) - f
            return (27.0 * (r(-1) - f) - (r(-2) - r(1))) / 24.0
        if order == 2:
            return f - r(1)
        return (27.0 * (f - r(1)) - (r(-1) - r(2))) / 24.0

    if order == 2:
        return _take(f, axis, slice(1, None)) - _take(f, axis, slice(None, -1))
    sign = -1.0 if node else 1.0
    if node:
        lo, hi = _take(f, axis, slice(1, 2)), _take(f, axis, slice(-2, -1))
    else:
        lo, hi = _take(f, axis, slice(0, 1)), _take(f, axis, slice(-1, None))
    fp = np.concatenate((sign * lo, f, sign * hi), axis=axis)
    near = _take(fp, axis, slice(2, -1)) - _take(fp, axis, slice(1, -2))
    far = _take(fp, axis, slice(3, None)) - _take(fp, axis, slice(None, -3))
    return (27.0 * near - far) / 24.0


def _interior(ndim_active: int, skip: Sequence[int], boundary: str) -> tuple[slice, ...]:
    idx = [slice(None)] * 3
    if boundary == "pec":
        for axis in range(ndim_active):
            if axis not in skip:
                idx[axis] = slice(1, -1)
    return tuple(idx)


def _curl_update(state: FieldState, comp: str, coef: Sequence[float], order: int, scale: float):
    dim = state.dim
    target = state.fields[comp]
    c_axis = _axis(comp)
    is_e = comp[0] == "e"
    # PEC: tangential E is only updated off the walls
    tgt_idx = _interior(dim, (c_axis,), state.boundary) if is_e else (slice(None),) * 3
    acc = None
    for sign, other, axis in CURL[comp]:
        if axis >= dim or other not in state.fields:
            continue
        d = difference(state.fields[other], axis, on_node(other, axis), order, state.boundary)
        if is_e and state.boundary == "pec":
            d = d[_interior(dim, (c_axis, axis), "pec")]
        term = (sign * coef[axis]) * d
        acc = term if acc is None else acc + term
    if acc is not None:
        target[tgt_idx] += scale * acc


def apply_pec(state: FieldState) -> FieldState:
    """Zero tangential E and normal H on every wall of the PEC box."""
    if state.boundary != "pec":
        return state
    for comp, arr in state.fields.items():
        for axis in range(state.dim):
            if on_node(comp, axis):
                _take(arr, axis, slice(0, 1))[...] = 0.0
                _take(arr, axis, slice(-1, None))[...] = 0.0
    return state


def step(scheme: Scheme | str, state: FieldState, grid: GridSpec) -> FieldState:
    """Advance H by one step then E by one step, in place."""
    scheme = Scheme.parse(scheme)
    order = scheme.spatial_order
    dt = state.dt
    eps = EPS0 * grid.eps_r
    mu = MU0 * grid.mu_r
    ch = [dt / (mu * d) for d in grid.spacings]
    ce = [dt / (eps * d) for d in grid.spacings]
    for comp in H_COMPONENTS:
        if comp in state.fields:
            _curl_update(state, comp, ch, order, -1.0)
    for comp in E_COMPONENTS:
        if comp in state.fields:
            _curl_update(state, comp, ce, order, 1.0)
    apply_pec(state)
    state.step += 1
    return state


@dataclass
class SourceSpec:
    """Gaussian pulse ``amplitude * exp(-width * (offset - c0 t)^2)`` at one grid site."""

    index: tuple[int, ...]
    component: str = "ez"
    amplitude: float = 1.0
    width: float = 16.0  # 1/m^2
    offset: float = 0.7  # m
    style: str = "hard"

    def __post_init__(self):
        if self.style not in ("hard", "soft"):
            raise ValueError(f"unknown injection style {self.style!r}")
        self.index = tuple(int(i) for i in self.index)

    def waveform(self, t):
        return self.amplitude * np.exp(-self.width * (self.offset - C0 * np.asarray(t)) ** 2)


def _full_index(index: Sequence[int]) -> tuple[int, ...]:
    return tuple(index) + (0,) * (3 - len(index))


def _check_interior(state: FieldState, comp: str, index: Sequence[int]):
    if comp not in state.fields:
        raise ValueError(f"component {comp} not simulated")
    shape = state.fields[comp].shape
    for axis, i in enumerate(index):
        lo = 1 if (state.boundary == "pec" and on_node(comp, axis)) else 0
        hi = shape[axis] - 1 - lo
        if not lo <= i <= hi:
            raise ValueError(f"site {tuple(index)} of {comp} is not in the grid interior")


def inject_source(state: FieldState, source: SourceSpec, t: float) -> FieldState:
    if t < 0:
        raise ValueError("t must be non-negative")
    idx = _full_index(source.index)
    value = float(source.waveform(t))
    arr = state.fields[source.component]
    if source.style == "hard":
        if source.amplitude != 0.0:
            arr[idx] = value
    else:
        arr[idx] += value
    return state


@dataclass
class ProbeSpec:
    index: tuple[int, ...]
    component: str = "ez"
    name: str | None = None

    def __post_init__(self):
        self.index = tuple(int(i) for i in self.index)
        if self.name is None:
            self.name = f"{self.component}@{','.join(map(str, self.index))}"


@dataclass
class SimConfig:
    scheme: Scheme
    grid: GridSpec
    cells: tuple[int, ...]
    s: float
    total_time: float
    boundary: str = "pec"
    polarization: str | None = None
    sources: list[SourceSpec] = field(default_factory=list)
    probes: list[ProbeSpec] = field(default_factory=list)
    initial: Callable[[FieldState], None] | None = None
    check_every: int = 16

    def __post_init__(self):
        self.scheme = Scheme.parse(self.scheme)
        self.cells = tuple(int(n) for n in self.cells)
        if len(self.cells) != self.grid.dim:
            raise ValueError("cells must have one entry per grid dimension")
        if not self.s > 0.0:
            raise ValueError("Courant fraction must be positive")
        if self.total_time < 0.0:
            raise ValueError("total_time must be non-negative")

    @property
    def dt(self) -> float:
        return self.s * cfl_max_dt(self.scheme, self.grid)

    @property
    def n_steps(self) -> int:
        ratio = self.total_time / self.dt
        # guard against ceil(219.0000000001) style round-off
        return max(0, math.ceil(ratio - 1e-9 * max(1.0, ratio)))


@dataclass
class ProbeSeries:
    name: str
    times: np.ndarray
    values: np.ndarray

    def to_csv(self, path: str | Path):
        write_series_csv(path, self.times, self.values)


def write_series_csv(path: str | Path, times, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_seconds", "value"])
        for t, v in zip(times, values):
            w.writerow([repr(float(t)), repr(float(v))])


def run_sim(config: SimConfig) -> tuple[FieldState, dict[str, ProbeSeries]]:
    """Run ``config.n_steps`` leapfrog steps.

    Per step: H and E updates, PEC walls, source injection at the new E time,
    then probe sampling. Raises ``Instability`` once any field exceeds 1e12
    times the reference magnitude (initial field maximum or source amplitude).
    """
    state = new_state(config.cells, config.dt, config.polarization, config.boundary)
    if config.initial is not None:
        config.initial(state)
        apply_pec(state)
    for src in config.sources:
        _check_interior(state, src.component, src.index)
        if src.style == "hard":
            inject_source(state, src, 0.0)
    for p in config.probes:
        _check_interior(state, p.component, p.index)
    ref = max([state.max_abs()] + [abs(s.amplitude) for s in config.sources]) or 1.0
    limit = INSTABILITY_FACTOR * ref

    n = config.n_steps
    probe_idx = [(p.name, p.component, _full_index(p.index)) for p in config.probes]
    samples = {name: np.empty(n) for name, _, _ in probe_idx}
    for k in range(n):
        step(config.scheme, state, config.grid)
        t = state.time
        for src in config.sources:
            inject_source(state, src, t)
        for name, comp, idx in probe_idx:
            samples[name][k] = state.fields[comp][idx]
        if (k + 1) % config.check_every == 0 or k == n - 1:
            m = state.max_abs()
            if not (m <= limit):
                raise Instability(state.step, m, config.s)
    times = config.dt * np.arange(1, n + 1)
    return state, {name: ProbeSeries(name, times, samples[name]) for name in samples}
