"""Acceptance criteria, one test each, at the stated tolerances and time budgets.

Every test records a PASS/FAIL line with the measured numbers before
asserting, so the full verdict list shows up in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from fdtd_dispersion.dispersion import (
    AXIS,
    GridSpec,
    NoRealRoot,
    PropagationAngle,
    WaveSpec,
    lemma_monotonicity_check,
    p_factor,
    q_factor,
    remark2_crossing,
    scan_angles,
    solve_knum,
)
from fdtd_dispersion.experiments import (
    dip_then_rise,
    exp_cavity_2d,
    exp_cavity_3d,
    measure_phase_velocity_1d,
    median3,
    non_increasing,
    predicted_cavity_error,
    representative_crossing_1d,
    run_1d_pulse,
)

CUBE = GridSpec(6e-3)
F5 = WaveSpec(5e9)
S_TENTHS = [round(0.1 * i, 10) for i in range(1, 11)]
S_CAVITY = [round(0.1 * i, 10) for i in range(2, 11)]


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_1_magic_time_step(verdict):
    with Timer() as tm:
        run = run_1d_pulse("fdtd22", 1.0)
    ok = run.linf_error < 1e-10 and tm.elapsed < 1.0
    verdict("criterion 1", ok, f"Linf={run.linf_error:.2e} (<1e-10), {tm.elapsed:.2f}s (<1s)")
    assert ok


def test_criterion_2_fdtd22_error_ordering(verdict):
    with Timer() as tm:
        e = [run_1d_pulse("fdtd22", s).l2_error for s in (0.5, 0.7, 1.0)]
    ordered = e[0] > e[1] > e[2]
    gaps = [e[0] - e[1] > 10 * e[1], e[1] - e[2] > 10 * e[2]]
    ok = ordered and all(gaps) and tm.elapsed < 5.0
    verdict(
        "criterion 2",
        ok,
        f"L2 S=0.5:{e[0]:.4f} S=0.7:{e[1]:.4f} S=1.0:{e[2]:.2e}; ordered={ordered}, "
        f"gap(0.5,0.7)>10*e(0.7)={gaps[0]}, gap(0.7,1.0)>10*e(1.0)={gaps[1]}, {tm.elapsed:.2f}s",
    )
    assert ok


def test_criterion_3_fdtd24_optimum(verdict):
    s_values = np.round(np.arange(0.05, 1.0 + 1e-9, 0.01), 10)
    with Timer() as tm:
        runs = [run_1d_pulse("fdtd24", s) for s in s_values]
    l2 = np.array([r.l2_error for r in runs])
    linf = np.array([r.linf_error for r in runs])
    i = int(np.argmin(l2))
    interior = 0 < i < l2.size - 1
    local_minima = int(np.sum((l2[1:-1] < l2[:-2]) & (l2[1:-1] < l2[2:])))
    unique = local_minima == 1 if interior else False
    n_rep, s_rep = representative_crossing_1d()
    ok = interior and unique and abs(s_values[i] - 0.44) <= 0.02 and tm.elapsed < 60.0
    verdict(
        "criterion 3",
        ok,
        f"L2 argmin S={s_values[i]:.2f} (target 0.44+-0.02, interior={interior}, "
        f"interior minima={local_minima}); Linf argmin S={s_values[int(np.argmin(linf))]:.2f}; "
        f"L2(0.05)={l2[0]:.4f} L2(0.44)={l2[39]:.4f} L2(1.0)={l2[-1]:.4f}; "
        f"dispersion crossing at the pulse centroid (N={n_rep:.1f}) S={s_rep:.3f}; {tm.elapsed:.1f}s",
    )
    assert ok


def _lemma_suite(scheme):
    k = F5.wavenumber(CUBE)
    worst_gap = math.inf
    worst_slope = -math.inf
    for s in S_TENTHS:
        scan = scan_angles(scheme, CUBE, F5, s, 31, 61)
        assert scan.n_failed == 0
        worst_gap = min(worst_gap, float(np.min(scan.k_num - k)))
    theta = np.linspace(0, math.pi, 31)
    phi = np.linspace(0, 2 * math.pi, 61)
    for th in theta:
        for ph in phi:
            est = lemma_monotonicity_check(scheme, CUBE, F5, PropagationAngle(th, ph), S_TENTHS)
            worst_slope = max(worst_slope, max(d for _, d in est))
    return k, worst_gap, worst_slope


def test_criterion_4_remark1_lemma1(verdict):
    with Timer() as tm:
        k, gap, slope = _lemma_suite("fdtd22")
    ok = gap >= -1e-10 * k and slope <= 1e-6 * k and tm.elapsed < 30.0
    verdict(
        "criterion 4",
        ok,
        f"min(k_num-k)={gap:.3e} (>= {-1e-10 * k:.1e}), max dk_num/dS={slope:.3e} "
        f"(<= {1e-6 * k:.1e}), {tm.elapsed:.1f}s",
    )
    assert ok


def test_criterion_5_lemma2_remark2(verdict):
    with Timer() as tm:
        k, _, slope = _lemma_suite("fdtd24")
        s_cross = remark2_crossing(CUBE, F5, AXIS)
    ok = slope <= 1e-6 * k and 0.0 < s_cross < 1.0 and tm.elapsed < 30.0
    verdict(
        "criterion 5",
        ok,
        f"max dk_num/dS={slope:.3e} (<= {1e-6 * k:.1e}), axis crossing S={s_cross:.6f}, {tm.elapsed:.1f}s",
    )
    assert ok


def test_criterion_6_sign_lemmas(verdict):
    with Timer() as tm:
        n, s = np.meshgrid(np.arange(2, 101), np.linspace(0.0, 1.0, 401)[1:], indexing="ij")
        q_max = float(np.max(q_factor(n, s)))
        th, ph = np.meshgrid(np.linspace(0, math.pi, 181), np.linspace(0, 2 * math.pi, 361), indexing="ij")
        p_min = min(float(np.min(p_factor(10, th, ph, a))) for a in (1.0, 1.05))
    ok = q_max < 0.0 and p_min >= 0.0 and tm.elapsed < 5.0
    verdict("criterion 6", ok, f"max Q={q_max:.3e} (<0), min P={p_min:.3e} (>=0), {tm.elapsed:.2f}s")
    assert ok


def test_criterion_7_arcsine_oracle(verdict):
    grid = GridSpec(5e-2, dim=1)
    rng = np.random.default_rng(12345)
    n_all = rng.uniform(2.0, 100.0, 1000)
    s_all = 1.0 - rng.uniform(0.0, 1.0, 1000)  # (0, 1]
    worst = 0.0
    both_rootless = 0
    mismatched = 0
    with Timer() as tm:
        for n, s in zip(n_all, s_all):
            w = WaveSpec.from_cells_per_wavelength(n, grid)
            arg = math.sin(math.pi * s / n) / s
            try:
                k_num = solve_knum("fdtd22", grid, w, s).k_num
            except NoRealRoot:
                k_num = None
            if arg > 1.0:
                # no real inverse exists for the oracle either
                both_rootless += k_num is None
                mismatched += k_num is not None
                continue
            if k_num is None:
                mismatched += 1
                continue
            oracle = 2.0 / grid.dx * math.asin(arg)
            worst = max(worst, abs(k_num - oracle) / oracle)
    ok = worst <= 1e-10 and mismatched == 0 and tm.elapsed < 1.0
    verdict(
        "criterion 7",
        ok,
        f"max rel diff={worst:.2e} (<=1e-10), {both_rootless} samples rootless for both, "
        f"{mismatched} disagreements, {tm.elapsed:.2f}s",
    )
    assert ok


def test_criterion_8_kernel_analyzer_cross_check(verdict):
    grid = GridSpec(1e-2, dim=1)
    worst = 0.0
    with Timer() as tm:
        for scheme in ("fdtd22", "fdtd24"):
            for n in (10, 20):
                for s in (0.3, 0.7, 1.0):
                    m = measure_phase_velocity_1d(scheme, n, s, dx=grid.dx)
                    p = solve_knum(scheme, grid, WaveSpec.from_cells_per_wavelength(n, grid), s)
                    worst = max(worst, abs(m.vp_ratio - p.vp_ratio) / p.vp_ratio)
    ok = worst < 1e-3 and tm.elapsed < 30.0
    verdict("criterion 8", ok, f"max rel vp deviation={worst:.2e} (<1e-3), {tm.elapsed:.1f}s")
    assert ok


def _trend_checks(res22, res24, dims):
    """Per-mode trend verdicts plus the estimator noise band."""
    t22, t24 = res22.re_table(), res24.re_table()
    noise = 0.0
    for res in (res22, res24):
        for run in res.runs:
            for g, row in zip(res.groups, run.report.rows):
                pred = predicted_cavity_error(res.scheme, dims, g.modes[0], run.s)
                noise = max(noise, abs(row.rel_error - pred))
    out = {}
    for label in t22:
        a, b = t22[label], t24[label]
        out[label] = (
            non_increasing(median3(a), slack=noise),
            dip_then_rise(median3(b)),
            bool(np.all(b <= a + noise)),
        )
    return out, noise


def test_criterion_9_cavity_trends(verdict):
    with Timer() as tm:
        cases = []
        for pol in ("tm", "te"):
            r22 = exp_cavity_2d("fdtd22", pol, s_values=S_CAVITY)
            r24 = exp_cavity_2d("fdtd24", pol, s_values=S_CAVITY)
            cases.append((f"2D {pol.upper()}", r22, r24, (1.0, 2.0)))
        r22 = exp_cavity_3d("fdtd22", s_values=S_CAVITY)
        r24 = exp_cavity_3d("fdtd24", s_values=S_CAVITY)
        cases.append(("3D cube", r22, r24, (1.0, 1.0, 1.0)))
    parts = []
    all_ok = True
    for name, a, b, dims in cases:
        checks, noise = _trend_checks(a, b, dims)
        c22 = all(v[0] for v in checks.values())
        c24 = all(v[1] for v in checks.values())
        cmp_ = all(v[2] for v in checks.values())
        all_ok &= c22 and c24 and cmp_
        t24 = b.re_table()
        dips = ", ".join(
            f"{lbl.split('|')[0]}:min@S={S_CAVITY[int(np.argmin(median3(v)))]:.1f}" for lbl, v in t24.items()
        )
        parts.append(
            f"{name} [(2,2) non-increasing={c22}; (2,4) dip-then-rise={c24} ({dips}); "
            f"(2,4)<=(2,2)={cmp_}; noise band={noise:.1e}]"
        )
    ok = all_ok and tm.elapsed < 600.0
    verdict("criterion 9", ok, "; ".join(parts) + f"; {tm.elapsed:.0f}s (<600s)")
    assert ok


def test_criterion_10_order_of_accuracy(verdict):
    inv_n = 1.0 / np.array([10.0, 20.0, 40.0, 80.0])
    slopes = {}
    with Timer() as tm:
        for scheme in ("fdtd22", "fdtd24"):
            nde = [
                solve_knum(scheme, CUBE, WaveSpec.from_cells_per_wavelength(1 / x, CUBE), 0.2).nde
                for x in inv_n
            ]
            slopes[scheme] = float(np.polyfit(np.log(inv_n), np.log(nde), 1)[0])
    ok = abs(slopes["fdtd22"] - 2.0) <= 0.1 and abs(slopes["fdtd24"] - 4.0) <= 0.2 and tm.elapsed < 5.0
    verdict(
        "criterion 10",
        ok,
        f"slope (2,2)={slopes['fdtd22']:.3f} (2+-0.1), slope (2,4)={slopes['fdtd24']:.3f} (4+-0.2), "
        f"axis direction, S=0.2, {tm.elapsed:.2f}s",
    )
    assert ok
