"""Resonance extraction from probe time series."""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.signal import get_window

from .constants import C0


class SeriesTooShort(ValueError):
    pass


class InvalidModeIndices(ValueError):
    pass


@dataclass
class Spectrum:
    """One-sided magnitude spectrum normalized by the window's coherent gain.

    A sinusoid of amplitude ``A`` well inside the band shows up with peak
    magnitude close to ``A / 2``.
    """

    freqs: np.ndarray
    mags: np.ndarray
    dt: float
    n_samples: int
    n_fft: int
    window_sum: float
    window_sumsq: float

    @property
    def bin_hz(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    @property
    def resolution_hz(self) -> float:
        """Native (unpadded) bin spacing of the record."""
        return 1.0 / (self.n_samples * self.dt)

    def band(self, f_lo: float, f_hi: float) -> "Spectrum":
        """Restrict to bins with ``f_lo <= f <= f_hi`` (normalization kept)."""
        keep = (self.freqs >= f_lo) & (self.freqs <= f_hi)
        return Spectrum(
            self.freqs[keep], self.mags[keep], self.dt, self.n_samples, self.n_fft,
            self.window_sum, self.window_sumsq,
        )

    def energy(self) -> float:
        """Energy of the windowed record recovered from the spectrum (Parseval)."""
        x = self.mags * self.window_sum
        w = np.full(x.size, 2.0)
        w[0] = 1.0
        if self.n_fft % 2 == 0:
            w[-1] = 1.0
        return float(np.sum(w * x * x) / self.n_fft)


def spectrum(series, dt: float, pad_factor: int = 8, window: str = "hann") -> Spectrum:
    x = np.asarray(series, dtype=float)
    if x.size < 16:
        raise SeriesTooShort(f"need at least 16 samples, got {x.size}")
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    w = get_window(window, x.size, fftbins=False) if window else np.ones(x.size)
    n_fft = int(pad_factor) * x.size
    mags = np.abs(np.fft.rfft(x * w, n_fft)) / w.sum()
    freqs = np.fft.rfftfreq(n_fft, dt)
    return Spectrum(freqs, mags, dt, x.size, n_fft, float(w.sum()), float(np.sum(w * w)))


@dataclass
class Peaks:
    freqs: np.ndarray
    mags: np.ndarray
    requested: int

    @property
    def complete(self) -> bool:
        """False when fewer peaks were found than requested."""
        return self.freqs.size >= self.requested

    def __len__(self):
        return int(self.freqs.size)


def _vertex(ym1: float, y0: float, yp1: float) -> tuple[float, float]:
    den = ym1 - 2.0 * y0 + yp1
    if den >= 0.0:
        return 0.0, y0
    p = 0.5 * (ym1 - yp1) / den
    return p, y0 - 0.25 * (ym1 - yp1) * p


def find_peaks(spec: Spectrum, n_peaks: int, min_separation_hz: float = 0.0) -> Peaks:
    """Strongest local maxima, refined by a parabola through log-magnitudes.

    The DC bin is never a candidate. Peaks closer than ``min_separation_hz``
    to a stronger one are dropped.
    """
    if n_peaks < 1:
        raise ValueError("n_peaks must be >= 1")
    m = spec.mags
    if m.size < 3:
        return Peaks(np.empty(0), np.empty(0), n_peaks)
    inner = m[1:-1]
    is_max = (inner > m[:-2]) & (inner >= m[2:]) & (inner > 0.0)
    idx = np.nonzero(is_max)[0] + 1
    idx = idx[idx >= 1]
    order = idx[np.argsort(-m[idx], kind="stable")]
    logm = np.log(np.maximum(m, np.finfo(float).tiny))
    df = spec.bin_hz
    f_out: list[float] = []
    a_out: list[float] = []
    for i in order:
        p, y = _vertex(logm[i - 1], logm[i], logm[i + 1])
        f = spec.freqs[i] + p * df
        if any(abs(f - g) < min_separation_hz for g in f_out):
            continue
        f_out.append(f)
        a_out.append(math.exp(y))
        if len(f_out) == n_peaks:
            break
    return Peaks(np.array(f_out), np.array(a_out), n_peaks)


def analytic_resonance(
    dimensions: Sequence[float],
    mode: Sequence[int],
    eps_r: float = 1.0,
    mu_r: float = 1.0,
    family: str | None = None,
) -> float:
    """Resonant frequency of a PEC rectangular cavity (2D or 3D).

    ``family`` optionally enforces the TE/TM index rules: in 2D TM needs
    ``m, n >= 1`` and TE ``m + n >= 1``; in 3D (z as reference axis) TM needs
    ``m, n >= 1`` and TE ``m + n >= 1, p >= 1``. Without a family, a 3D mode
    needs at least two nonzero indices.
    """
    mode = tuple(int(i) for i in mode)
    if len(mode) != len(dimensions) or len(mode) not in (2, 3):
        raise InvalidModeIndices(f"mode {mode} does not match a {len(dimensions)}D cavity")
    if any(i < 0 for i in mode) or not any(mode):
        raise InvalidModeIndices(f"invalid mode indices {mode}")
    fam = family.lower() if family else None
    m, n = mode[0], mode[1]
    if fam == "tm" and (m < 1 or n < 1):
        raise InvalidModeIndices(f"TM mode needs m, n >= 1, got {mode}")
    if fam == "te" and m + n < 1:
        raise InvalidModeIndices(f"TE mode needs m + n >= 1, got {mode}")
    if len(mode) == 3:
        if fam == "te" and mode[2] < 1:
            raise InvalidModeIndices(f"3D TE mode needs p >= 1, got {mode}")
        if fam is None and sum(1 for i in mode if i) < 2:
            raise InvalidModeIndices(f"3D cavity mode needs two nonzero indices, got {mode}")
    c = C0 / math.sqrt(eps_r * mu_r)
    return 0.5 * c * math.sqrt(sum((i / a) ** 2 for i, a in zip(mode, dimensions)))


@dataclass
class ModeGroup:
    """Analytic modes sharing one resonant frequency."""

    modes: list[tuple[int, ...]]
    f_ref: float

    @property
    def label(self) -> str:
        return "|".join(",".join(map(str, m)) for m in self.modes)


def _valid(mode, dimensions, family) -> bool:
    try:
        analytic_resonance(dimensions, mode, family=family)
    except InvalidModeIndices:
        return False
    return True


def lowest_mode_groups(
    dimensions: Sequence[float],
    count: int = 3,
    family: str | None = None,
    max_index: int = 6,
    nondegenerate: bool = False,
    rel_tol: float = 1e-9,
) -> list[ModeGroup]:
    """The ``count`` lowest distinct resonant frequencies with their index sets.

    With ``nondegenerate`` true, frequencies shared by several valid index
    sets are skipped.
    """
    modes = [
        m
        for m in itertools.product(range(max_index + 1), repeat=len(dimensions))
        if _valid(m, dimensions, family)
    ]
    modes.sort(key=lambda m: analytic_resonance(dimensions, m))
    groups: list[ModeGroup] = []
    for m in modes:
        f = analytic_resonance(dimensions, m)
        if groups and abs(groups[-1].f_ref - f) <= rel_tol * f:
            groups[-1].modes.append(m)
        else:
            groups.append(ModeGroup([m], f))
    if nondegenerate:
        groups = [g for g in groups if len(g.modes) == 1]
    return groups[:count]


@dataclass
class ResonanceRow:
    modes: list[tuple[int, ...]]
    f_ref: float
    f_meas: float | None

    @property
    def matched(self) -> bool:
        return self.f_meas is not None

    @property
    def rel_error(self) -> float:
        if self.f_meas is None:
            return math.nan
        return abs(self.f_ref - self.f_meas) / self.f_ref


@dataclass
class ResonanceReport:
    rows: list[ResonanceRow]
    resolution_hz: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def unmatched(self) -> list[ResonanceRow]:
        return [r for r in self.rows if not r.matched]

    def csv_rows(self) -> list[list]:
        out = []
        for r in self.rows:
            for m in r.modes:
                idx = list(m) + [0] * (3 - len(m))
                out.append(idx + [r.f_ref, r.f_meas if r.matched else math.nan, r.rel_error])
        return out

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "n", "p", "f_ref_hz", "f_meas_hz", "rel_error"])
            for row in self.csv_rows():
                w.writerow(row[:3] + [repr(float(v)) for v in row[3:]])

    def to_dict(self) -> dict:
        return {
            "resolution_hz": self.resolution_hz,
            "meta": self.meta,
            "modes": [
                {
                    "modes": [list(m) for m in r.modes],
                    "f_ref_hz": r.f_ref,
                    "f_meas_hz": r.f_meas,
                    "rel_error": None if not r.matched else r.rel_error,
                }
                for r in self.rows
            ],
        }

    def to_json(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def match_and_score(
    peaks: Sequence[float] | Peaks,
    modes: Sequence[ModeGroup | tuple[Sequence[int], float]],
    window: float = 0.05,
    resolution_hz: float | None = None,
) -> ResonanceReport:
    """Pair analytic modes with measured peaks and score them.

    Pairs are taken greedily in order of increasing relative distance; each
    peak and each analytic entry is used at most once, and a pair further
    apart than ``window * f_ref`` is never formed. Unpaired entries are kept
    in the report with no measured frequency.
    """
    if not modes:
        raise ValueError("need at least one analytic mode")
    freqs = np.asarray(peaks.freqs if isinstance(peaks, Peaks) else peaks, dtype=float)
    groups = [
        g if isinstance(g, ModeGroup) else ModeGroup([tuple(g[0])], float(g[1])) for g in modes
    ]
    cands = []
    for gi, g in enumerate(groups):
        for pi, f in enumerate(freqs):
            rel = abs(f - g.f_ref) / g.f_ref
            if rel <= window:
                cands.append((rel, gi, pi))
    cands.sort()
    taken_g: dict[int, int] = {}
    taken_p: set[int] = set()
    for _, gi, pi in cands:
        if gi in taken_g or pi in taken_p:
            continue
        taken_g[gi] = pi
        taken_p.add(pi)
    rows = [
        ResonanceRow(g.modes, g.f_ref, float(freqs[taken_g[gi]]) if gi in taken_g else None)
        for gi, g in enumerate(groups)
    ]
    return ResonanceReport(rows, resolution_hz)
