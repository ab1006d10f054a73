"""Acceptance criteria. Each test records one PASS/FAIL line, printed in the pytest summary."""

import math
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from opasqueeze.blochmessiah import decompose, squeezing_lengths, time_reversal_check, verify_constraints
from opasqueeze.gaussian import (
    GaussianModelParams,
    analytic_overlaps,
    gaussian_kernels,
    gaussian_mode,
    gaussian_zeta,
    lo_profile,
)
from opasqueeze.homodyne import efficiency_sweep, master_laser_curve, quantum_efficiency
from opasqueeze.spectral import inner_product, make_grid

from oracles import born_kernel

OMEGA_P = 4.709128918272133


def record(number, title, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    assert ok, line


def test_criterion_01_efficiency_plateau():
    start = time.perf_counter()
    p = GaussianModelParams.from_r(3.0, 20.0, 0.01, OMEGA_P)
    curve = efficiency_sweep(p, [-2, -1, 0, 1, 2])
    elapsed = time.perf_counter() - start
    ok = bool(np.all(curve.eta > 0.99)) and elapsed < 1.0
    record(1, "Gaussian efficiency plateau r=3", ok, f"min eta {curve.eta.min():.5f}, {elapsed:.3f} s")


def test_criterion_02_master_laser_asymptote():
    start = time.perf_counter()
    rs = np.linspace(0.25, 6.0, 24)
    curve = master_laser_curve(rs, 0.01)
    elapsed = time.perf_counter() - start
    monotone = bool(np.all(np.diff(curve.eta) < 0) and curve.eta[0] < 1)
    ok = abs(curve.eta[-1] - 0.86) <= 0.02 and monotone and elapsed < 5.0
    record(2, "master-laser asymptote", ok,
           f"eta(r=6) {curve.eta[-1]:.5f}, eta(0.25) {curve.eta[0]:.5f}, decreasing {monotone}, {elapsed:.3f} s")


def test_criterion_03_overlap_oracle():
    p = GaussianModelParams.from_r(1.0, 20.0, 0.01, OMEGA_P)
    worst_even = worst_odd = 0.0
    for rp in np.linspace(-2, 2, 9):
        d_lo = p.delta_lo(rp)
        half = max(8 * d_lo, (math.sqrt(41) + 8) / p.tau_s)
        step = min(d_lo, 1 / p.tau_s) / 8
        grid = make_grid(OMEGA_P / 2, 2 * half, int(2 * half / step) | 1)
        lo = lo_profile(p, d_lo, grid)
        numeric = np.array([inner_product(gaussian_mode(p, n, grid), lo) for n in range(21)])
        analytic = analytic_overlaps(p, d_lo, 10)
        worst_even = max(worst_even, float(np.max(np.abs(numeric[::2] - analytic[::2]))))
        worst_odd = max(worst_odd, float(np.max(np.abs(numeric[1::2]))))
    ok = worst_even < 1e-6 and worst_odd < 1e-10
    record(3, "overlap formula vs quadrature", ok, f"even error {worst_even:.2e}, odd max {worst_odd:.2e}")


def test_criterion_04_photon_number_sum_rule():
    p = GaussianModelParams.from_r(1.0, 20.0, 0.01, OMEGA_P)
    z = gaussian_zeta(p, np.arange(400))
    closed = abs(math.fsum(np.sinh(z) ** 2) - p.N)
    grid = p.default_grid(512)
    s = gaussian_kernels(p, grid).S.entries
    integral = float(np.sum(np.abs(s) ** 2) * grid.step**2)
    ok = closed < 1e-10 and abs(integral - p.N) < 0.01 * p.N
    record(4, "photon-number sum rule", ok, f"series error {closed:.1e}, kernel integral {integral:.6f}")


@pytest.mark.slow
def test_criterion_05_symplectic_constraints(bbo):
    worst, times = 0.0, []
    for ratio in (0.1, 1.0, 10.0):
        raw, comp = bbo.pair(ratio)
        worst = max(worst, verify_constraints(raw).worst, verify_constraints(comp).worst)
        times.append(bbo.seconds[(ratio, 0.0, 256, 200)])
    ok = worst < 1e-6 and max(times) <= 300
    record(5, "symplectic constraints at L/L_NL 0.1, 1, 10", ok,
           f"max deviation {worst:.2e}, slowest solve {max(times):.1f} s")


@pytest.mark.slow
def test_criterion_06_born_oracle(bbo):
    raw, _ = bbo.pair(0.1)
    ref = born_kernel(raw.medium, raw.pump.omega_p, raw.pump.tau_p, raw.grid.omega)
    err = float(np.max(np.abs(raw.S.entries - ref)) / np.max(np.abs(ref)))
    record(6, "first-order Born oracle at L/L_NL 0.1", err < 0.02, f"relative max-entry error {err:.2e}")


@pytest.mark.slow
def test_criterion_07_round_trip(bbo):
    _, g = bbo.pair(10.0)
    n = g.grid.n_points
    d1 = decompose(g, n)
    d2 = decompose(d1.as_green_pair(), n)
    residual = max(d1.residuals.values())
    drift = float(np.max(np.abs(d1.zetas - d2.zetas)))
    ok = residual < 1e-5 and drift < 1e-8
    record(7, "Bloch-Messiah round trip at L/L_NL 10", ok, f"residual {residual:.2e}, zeta drift {drift:.2e}")


def test_criterion_08_gaussian_oracle(gauss_r1):
    p, grid, g = gauss_r1
    with warnings.catch_warnings():
        # perturbative kernels break unitarity at O(N), below the error gate
        warnings.simplefilter("ignore")
        d = decompose(g, 6)
    zeta_err = float(np.max(np.abs(d.zetas - gaussian_zeta(p, np.arange(6)))))
    overlap = min(abs(inner_product(gaussian_mode(p, n, grid), d.output_modes[n])) for n in range(6))
    ok = zeta_err < 1e-4 and overlap > 0.999
    record(8, "Gaussian-oracle decomposition r=1", ok, f"zeta error {zeta_err:.1e}, min overlap {overlap:.6f}")


@pytest.mark.slow
def test_criterion_09_scaling_law(bbo):
    runs = [(r, bbo.decomposition(r)) for r in (0.5, 5.0, 15.0)]
    rep = squeezing_lengths(runs, length=1.0, n_modes=5)
    decreasing = bool(np.all(np.diff(rep.fitted) < 0))
    ok = bool(np.all(rep.spread < 0.05)) and decreasing
    record(9, "scaling law at L/L_NL 0.5, 5, 15", ok,
           f"max spread n<5 {rep.spread.max():.2e}, Lambda_0..4 {np.round(rep.fitted, 4).tolist()} mm")


@pytest.mark.slow
def test_criterion_10_time_reversal(bbo):
    flat = time_reversal_check(bbo.decomposition(1.0))[:6]
    chirped = time_reversal_check(bbo.decomposition(1.0, chirp=100.0))[:6]
    gain = float(np.min(chirped / np.maximum(flat, 1e-300)))
    ok = float(flat.max()) < 1e-3 and gain >= 10
    record(10, "time-reversal property", ok, f"flat max defect {flat.max():.1e}, chirp gain >= {gain:.1e}")


def test_criterion_11_efficiency_inversion():
    worst = 0.0
    for zeta in (0.5, 1.0, 2.0):
        for eta0 in (0.1, 0.5, 0.9):
            qp = eta0 * math.exp(2 * zeta) / 4 + (1 - eta0) / 4
            qm = eta0 * math.exp(-2 * zeta) / 4 + (1 - eta0) / 4
            worst = max(worst, abs(quantum_efficiency(qp, qm) - eta0))
    record(11, "efficiency formula inverts loss", worst < 1e-10, f"max error {worst:.1e}")


@pytest.mark.slow
def test_criterion_12_mode_profile_stability(bbo):
    a = bbo.decomposition(0.1).output_modes[0].intensity()
    b = bbo.decomposition(1.0).output_modes[0].intensity()
    diff = float(np.max(np.abs(a - b)) / max(a.max(), b.max()))
    record(12, "mode-profile stability L/L_NL 0.1 vs 1", diff < 0.05, f"max difference {100 * diff:.2f} % of peak")
