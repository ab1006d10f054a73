"""Green functions of a dispersive chi(2) waveguide with an undepleted pulsed pump.

The signal field obeys

    da(w)/dz = i k(w) a(w) + 1/(L_NL E0) * int dw' exp(i k_p(w+w') z) E_p(w+w') a^dag(w'),

with E0 the integral of the pump spectrum. Removing the linear term with
a~(w) = exp(-i k(w) z) a(w) leaves a smooth coupling carrying the phase
mismatch dk = k_p(w+w') - k(w) - k(w'). Writing the output as
a~(w) = int C(w,w') a_in(w') + S(w,w') a_in^dag(w') and tracking the pair
(C, conj S) gives a complex-linear system of dimension 2n that is
integrated with classical RK4 over z.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from opasqueeze.dispersion import omega_from_nm
from opasqueeze.errors import ConvergenceError
from opasqueeze.spectral import FrequencyGrid, KernelMatrix

log = logging.getLogger(__name__)

RAW = "raw"
MIDPOINT = "midpoint-compensated"


@dataclass(frozen=True)
class MediumSpec:
    """Crystal of length ``length`` (mm) with nonlinear length ``nonlinear_length`` (mm).

    ``signal_dispersion`` and ``pump_dispersion`` are objects with a
    ``k(omega)`` method returning rad/mm for omega in rad/fs.
    """

    length: float
    nonlinear_length: float
    signal_dispersion: Any
    pump_dispersion: Any

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("crystal length must be positive")
        if not self.nonlinear_length > 0:
            raise ValueError("nonlinear length must be positive (use inf for no pump)")

    @property
    def strength(self) -> float:
        """L / L_NL."""
        return self.length / self.nonlinear_length

    def with_strength(self, ratio: float) -> "MediumSpec":
        return replace(self, nonlinear_length=math.inf if ratio == 0 else self.length / ratio)


@dataclass(frozen=True)
class PumpPulse:
    """Gaussian pump of duration ``tau_p`` (fs) centered at ``omega_p`` (rad/fs).

    The spectral phase is flat at the reference plane, which the solver puts
    at the middle of the crystal. ``chirp`` (fs^2) adds a quadratic spectral
    phase chirp * (w - w_p)^2 / 2 on top.
    """

    omega_p: float
    tau_p: float
    chirp: float = 0.0

    @classmethod
    def from_wavelength(cls, wavelength_nm: float, tau_p: float, chirp: float = 0.0) -> "PumpPulse":
        return cls(omega_from_nm(wavelength_nm), tau_p, chirp)


def pump_spectrum(pump: PumpPulse, omega):
    """Pump spectral amplitude, scaled so that its integral over frequency is 1."""
    x = np.asarray(omega, dtype=float) - pump.omega_p
    amp = pump.tau_p / math.sqrt(2 * math.pi) * np.exp(-0.5 * pump.tau_p**2 * x**2)
    if pump.chirp:
        return amp * np.exp(0.5j * pump.chirp * x**2)
    return amp.astype(complex)


@dataclass(frozen=True)
class GreenPair:
    """Kernels C and S of the Bogoliubov transformation a_out = C a_in + S a_in^dag."""

    C: KernelMatrix
    S: KernelMatrix
    medium: MediumSpec | None = None
    pump: PumpPulse | None = None
    picture: str = RAW
    metadata: dict = field(default_factory=dict)

    @property
    def grid(self) -> FrequencyGrid:
        return self.C.grid_out


def signal_grid(pump: PumpPulse, n_points: int = 256, span: float = 1.6) -> FrequencyGrid:
    return FrequencyGrid(pump.omega_p / 2, span, n_points)


class _Coupling:
    """Weighted coupling matrix K(z) = step/L_NL * E_p(w+w') exp(i[k_p (z - L/2) - k z - k' z])."""

    def __init__(self, medium: MediumSpec, pump: PumpPulse, grid: FrequencyGrid):
        w = grid.omega
        total = w[:, None] + w[None, :]
        ks = np.asarray(medium.signal_dispersion.k(w), dtype=float)
        kp = np.asarray(medium.pump_dispersion.k(total), dtype=float)
        if not (np.all(np.isfinite(ks)) and np.all(np.isfinite(kp))):
            raise ValueError("dispersion model is not finite on the frequency grid")
        self.dk = kp - ks[:, None] - ks[None, :]
        weight = grid.step / medium.nonlinear_length
        self.base = weight * pump_spectrum(pump, total) * np.exp(-0.5j * kp * medium.length)

    def __call__(self, z: float) -> np.ndarray:
        return self.base * np.exp(1j * self.dk * z)


def _integrate(coupling: _Coupling, columns: np.ndarray, n: int, length: float, steps: int):
    """RK4 from 0 to ``length`` for the selected columns; returns (C_op, conj(S_op)) blocks."""
    h = length / steps
    p = np.zeros((n, columns.size), dtype=complex)
    p[columns, np.arange(columns.size)] = 1.0
    q = np.zeros_like(p)
    k_next = coupling(0.0)
    for i in range(steps):
        z = i * h
        k0 = k_next
        kh = coupling(z + 0.5 * h)
        k_next = coupling(z + h)
        kh_c = kh.conj()
        dp1, dq1 = k0 @ q, k0.conj() @ p
        dp2, dq2 = kh @ (q + 0.5 * h * dq1), kh_c @ (p + 0.5 * h * dp1)
        dp3, dq3 = kh @ (q + 0.5 * h * dq2), kh_c @ (p + 0.5 * h * dp2)
        dp4, dq4 = k_next @ (q + h * dq3), k_next.conj() @ (p + h * dp3)
        p = p + (h / 6) * (dp1 + 2 * dp2 + 2 * dp3 + dp4)
        q = q + (h / 6) * (dq1 + 2 * dq2 + 2 * dq3 + dq4)
    return p, q


def _probe_columns(n: int, count: int) -> np.ndarray:
    return np.unique(np.linspace(0, n - 1, count).round().astype(int))


def solve_green_functions(
    medium: MediumSpec,
    pump: PumpPulse,
    grid: FrequencyGrid,
    steps: int = 200,
    tol: float = 1e-6,
    workers: int = 1,
    check_convergence: bool = True,
    n_probe: int = 9,
) -> GreenPair:
    """Green functions in the interaction picture (``picture="raw"``).

    Columns of the fundamental solution are independent, so they are split
    into ``workers`` chunks integrated concurrently. Convergence is tested by
    repeating a probe subset of columns with half the step: a change above
    ``tol`` warns and above ``10 * tol`` raises ``ConvergenceError``
    (entries compared in dimensionless operator form).
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    n = grid.n_points
    meta = {"steps": steps, "workers": workers, "convergence_tol": tol}
    if math.isinf(medium.nonlinear_length):
        c_op = np.eye(n, dtype=complex)
        s_op = np.zeros((n, n), dtype=complex)
        meta["max_change_on_halving"] = 0.0
        return _pair(grid, c_op, s_op, medium, pump, meta)

    coupling = _Coupling(medium, pump, grid)
    chunks = [c for c in np.array_split(np.arange(n), max(1, workers)) if c.size]
    if len(chunks) == 1:
        results = [_integrate(coupling, chunks[0], n, medium.length, steps)]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(lambda c: _integrate(coupling, c, n, medium.length, steps), chunks))
    c_op = np.concatenate([r[0] for r in results], axis=1)
    s_op = np.concatenate([r[1] for r in results], axis=1).conj()

    if check_convergence:
        probe = _probe_columns(n, n_probe)
        p2, q2 = _integrate(coupling, probe, n, medium.length, 2 * steps)
        change = max(np.max(np.abs(p2 - c_op[:, probe])), np.max(np.abs(q2.conj() - s_op[:, probe])))
        meta["max_change_on_halving"] = float(change)
        meta["probe_columns"] = probe.tolist()
        log.debug("step-halving change %.3g with %d steps", change, steps)
        if change > 10 * tol:
            raise ConvergenceError(
                f"halving the z step changed the Green functions by {change:.3g} (> {10 * tol:.3g}); "
                "increase steps"
            )
        if change > tol:
            warnings.warn(f"step-halving change {change:.3g} exceeds tolerance {tol:.3g}", stacklevel=2)
    return _pair(grid, c_op, s_op, medium, pump, meta)


def _pair(grid, c_op, s_op, medium, pump, meta) -> GreenPair:
    return GreenPair(
        C=KernelMatrix.from_operator(grid, c_op),
        S=KernelMatrix.from_operator(grid, s_op),
        medium=medium,
        pump=pump,
        picture=RAW,
        metadata=meta,
    )


def compensate_linear_phase(g: GreenPair) -> GreenPair:
    """Refer both input and output planes to the middle of the crystal.

    Free propagation over half the crystal is undone on the output and
    applied to the input, a diagonal unitary change of basis that leaves the
    commutation constraints untouched.
    """
    if g.picture != RAW:
        raise ValueError(f"Green pair is already {g.picture!r}; compensation applies to raw pairs only")
    if g.medium is None:
        raise ValueError("compensation needs the medium dispersion")
    w = g.grid.omega
    half = np.exp(0.5j * np.asarray(g.medium.signal_dispersion.k(w), dtype=float) * g.medium.length)
    c = half[:, None] * g.C.entries * half.conj()[None, :]
    s = half[:, None] * g.S.entries * half[None, :]
    return replace(
        g,
        C=KernelMatrix(g.grid, g.grid, c),
        S=KernelMatrix(g.grid, g.grid, s),
        picture=MIDPOINT,
    )


def auto_span(
    medium: MediumSpec,
    pump: PumpPulse,
    n_points: int = 256,
    max_span: float = 1.6,
    threshold: float = 1e-3,
) -> float:
    """Smallest span (grown by 25 % steps) whose edge rows of the first-order kernel fall below ``threshold``.

    Sinc phase matching decays slowly, so the search stops at ``max_span``
    with a warning when the threshold is out of reach.
    """
    span = min(max_span, 20 * math.sqrt(2) / pump.tau_p)
    while True:
        grid = signal_grid(pump, n_points, span)
        w = grid.omega
        total = w[:, None] + w[None, :]
        ks = medium.signal_dispersion.k(w)
        dk = medium.pump_dispersion.k(total) - ks[:, None] - ks[None, :]
        born = np.abs(pump_spectrum(pump, total) * np.sinc(dk * medium.length / (2 * np.pi)))
        edge = max(born[0].max(), born[-1].max()) / born.max()
        if edge < threshold:
            return span
        if span >= max_span:
            warnings.warn(
                f"kernel edge level {edge:.2g} of peak exceeds {threshold:g} at the maximum span "
                f"{max_span:g} rad/fs",
                stacklevel=2,
            )
            return span
        span = min(max_span, 1.25 * span)
