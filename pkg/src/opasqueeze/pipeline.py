"""Config-driven pipeline: propagate, compensate, decompose, detect."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from opasqueeze.blochmessiah import decompose, verify_constraints
from opasqueeze.config import RunConfig
from opasqueeze.errors import GridMismatchError
from opasqueeze.gaussian import GaussianModelParams, gaussian_kernels, lo_profile
from opasqueeze.io import read_csv_table
from opasqueeze.propagation import (
    auto_span,
    compensate_linear_phase,
    signal_grid,
    solve_green_functions,
)
from opasqueeze.spectral import FrequencyGrid, SpectralAmplitude
from opasqueeze.dispersion import omega_from_nm


def worker_count(cfg: RunConfig, override: int | None = None) -> int:
    return override or cfg.threads or os.cpu_count() or 1


def numerical_grid(cfg: RunConfig) -> FrequencyGrid:
    pump = cfg.build_pump()
    span = cfg.grid.span_rad_per_fs
    if span == "auto":
        medium = cfg.build_medium(max(cfg.strengths()) or 1.0)
        span = auto_span(medium, pump, cfg.grid.n_points, cfg.grid.max_span_rad_per_fs)
    return signal_grid(pump, cfg.grid.n_points, float(span))


def setup_key(cfg: RunConfig) -> dict:
    """Everything that defines a run except the pump strength."""
    d = cfg.model_dump(mode="json")
    pump = dict(d["pump"])
    pump.pop("strength", None)
    pump.pop("nonlinear_length_mm", None)
    return {"medium": d["medium"], "pump": pump, "grid": d["grid"], "solver": d["solver"]}


def solve(cfg: RunConfig, strength: float, grid: FrequencyGrid, workers: int = 1):
    """Compensated Green pair at one pump strength."""
    medium = cfg.build_medium(strength)
    raw = solve_green_functions(
        medium, cfg.build_pump(), grid, steps=cfg.solver.steps, tol=cfg.solver.tolerance, workers=workers
    )
    raw.metadata["setup"] = setup_key(cfg)
    raw.metadata["strength"] = strength
    return compensate_linear_phase(raw)


def solve_all(cfg: RunConfig, workers: int = 1, strengths=None):
    """(strength, Green pair) for every configured strength, sweep points run in a bounded pool."""
    grid = numerical_grid(cfg)
    strengths = cfg.strengths() if strengths is None else strengths
    if workers <= 1 or len(strengths) == 1:
        return [(s, solve(cfg, s, grid, workers)) for s in strengths]
    with ThreadPoolExecutor(max_workers=min(workers, len(strengths))) as pool:
        pairs = list(pool.map(lambda s: solve(cfg, s, grid, 1), strengths))
    return list(zip(strengths, pairs))


def gaussian_params(cfg: RunConfig) -> GaussianModelParams:
    g = cfg.gaussian
    return GaussianModelParams.from_r(
        g.r, g.tau_s_fs, g.mean_photon_number, omega_from_nm(g.pump_wavelength_nm)
    )


def gaussian_grid(cfg: RunConfig, p: GaussianModelParams) -> FrequencyGrid:
    return p.default_grid(cfg.gaussian.n_points, cfg.gaussian.span_rad_per_fs)


def gaussian_pair(cfg: RunConfig):
    p = gaussian_params(cfg)
    return p, gaussian_kernels(p, gaussian_grid(cfg, p))


def decompose_pair(cfg: RunConfig, g):
    return decompose(g, min(cfg.analysis.n_modes, g.grid.n_points), cfg.analysis.cluster_tol)


def constraint_summary(pairs) -> list[dict]:
    return [{"strength": s, **verify_constraints(g).to_dict()} for s, g in pairs]


def build_lo(cfg: RunConfig, grid: FrequencyGrid, p: GaussianModelParams | None = None) -> SpectralAmplitude:
    lo = cfg.analysis.lo
    if lo is None:
        raise ValueError("analysis.lo is required for homodyne detection")
    if lo.kind == "file":
        return read_lo_file(lo.path, grid)
    if lo.r_prime is not None:
        if p is None:
            raise ValueError("lo.r_prime is only defined for the gaussian model; use bandwidth_rad_per_fs")
        bandwidth = p.delta_lo(lo.r_prime)
    else:
        bandwidth = lo.bandwidth_rad_per_fs
    x = grid.omega - grid.center
    return SpectralAmplitude(grid, np.exp(-(x**2) / bandwidth**2)).normalized()


def read_lo_file(path, grid: FrequencyGrid) -> SpectralAmplitude:
    """LO samples from CSV columns omega_rad_per_fs, re, im on exactly the analysis grid."""
    header, table = read_csv_table(path)
    if header[:3] != ["omega_rad_per_fs", "re", "im"]:
        raise ValueError(f"{path}: expected columns omega_rad_per_fs, re, im")
    omega = table[:, 0]
    if omega.size != grid.n_points or not np.allclose(omega, grid.omega, rtol=0, atol=1e-9 * grid.step):
        raise GridMismatchError(f"{path}: LO samples are not on the analysis grid")
    amp = SpectralAmplitude(grid, table[:, 1] + 1j * table[:, 2])
    if not math.isclose(amp.norm2(), 1.0, rel_tol=0, abs_tol=1e-6):
        raise ValueError(f"{path}: LO is not normalized (norm^2 = {amp.norm2():.6g})")
    return amp.normalized()


__all__ = [
    "build_lo",
    "constraint_summary",
    "decompose_pair",
    "gaussian_pair",
    "gaussian_params",
    "lo_profile",
    "numerical_grid",
    "solve",
    "solve_all",
]
