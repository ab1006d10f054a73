"""Shared fixtures. Numerical Green functions are expensive, so every solve is cached per session."""

import time
import warnings

import pytest

from opasqueeze.blochmessiah import decompose
from opasqueeze.dispersion import load_medium, omega_from_nm
from opasqueeze.gaussian import GaussianModelParams, gaussian_kernels
from opasqueeze.propagation import PumpPulse, compensate_linear_phase, signal_grid, solve_green_functions

LENGTH_MM = 1.0
TAU_P_FS = 26.0
PUMP_NM = 400.0

# (criterion number, line) pairs filled by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


class Solves:
    """Cache of (raw, compensated) Green pairs for the reference BBO waveguide."""

    def __init__(self):
        self._pairs = {}
        self._decs = {}
        self.seconds = {}

    def pair(self, ratio, chirp=0.0, n_points=256, steps=200):
        key = (ratio, chirp, n_points, steps)
        if key not in self._pairs:
            medium = load_medium("bbo", LENGTH_MM, LENGTH_MM / ratio, PUMP_NM)
            pump = PumpPulse.from_wavelength(PUMP_NM, TAU_P_FS, chirp)
            grid = signal_grid(pump, n_points, 1.6)
            start = time.perf_counter()
            with warnings.catch_warnings():
                # L/L_NL = 15 sits just above the default halving tolerance.
                warnings.simplefilter("ignore")
                raw = solve_green_functions(medium, pump, grid, steps=steps)
            self.seconds[key] = time.perf_counter() - start
            raw.metadata["setup"] = {"chirp": chirp, "n_points": n_points, "steps": steps}
            self._pairs[key] = (raw, compensate_linear_phase(raw))
        return self._pairs[key]

    def decomposition(self, ratio, chirp=0.0, n_points=256, steps=200, n_modes=10):
        key = (ratio, chirp, n_points, steps, n_modes)
        if key not in self._decs:
            _, g = self.pair(ratio, chirp, n_points, steps)
            self._decs[key] = decompose(g, n_modes)
        return self._decs[key]


@pytest.fixture(scope="session")
def bbo():
    return Solves()


@pytest.fixture(scope="session")
def gauss_r1():
    p = GaussianModelParams.from_r(1.0, 20.0, 0.01, omega_from_nm(PUMP_NM))
    grid = p.default_grid(512)
    return p, grid, gaussian_kernels(p, grid)
