"""Closed-form Gaussian model of a weakly pumped parametric amplifier.

The squeezing kernel is a two-dimensional Gaussian: narrow (width ``delta``,
set by the pump bandwidth) along the sum frequency and broad (width
``Delta``, set by phase matching) along the difference frequency. Its
singular values form a geometric sequence and its modes are Hermite
functions, which makes it the reference oracle for the numerical path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from opasqueeze.blochmessiah import SqueezerDecomposition
from opasqueeze.errors import ValidityWarning
from opasqueeze.propagation import GreenPair
from opasqueeze.spectral import (
    FrequencyGrid,
    KernelMatrix,
    SpectralAmplitude,
    hermite_mode,
    identity_kernel,
)

DEFAULT_M_MAX = 64


@dataclass(frozen=True)
class GaussianModelParams:
    omega_p: float
    delta: float
    Delta: float
    N: float

    def __post_init__(self):
        if not (0 < self.delta <= self.Delta):
            raise ValueError(f"need 0 < delta <= Delta, got delta={self.delta}, Delta={self.Delta}")
        if not self.N > 0:
            raise ValueError("mean photon number N must be positive")
        if self.N >= 0.1:
            warnings.warn(
                f"N={self.N} is outside the perturbative regime of the Gaussian model",
                ValidityWarning,
                stacklevel=3,
            )

    @classmethod
    def from_r(cls, r: float, tau_s: float, N: float, omega_p: float = 0.0) -> "GaussianModelParams":
        """Parameters with correlation ratio ``r`` and mode width ``tau_s``."""
        if r < 0:
            raise ValueError("r must be non-negative")
        base = math.sqrt(2.0) / tau_s
        return cls(omega_p=omega_p, delta=base * math.exp(-r), Delta=base * math.exp(r), N=N)

    @property
    def r(self) -> float:
        return 0.5 * math.log(self.Delta / self.delta)

    @property
    def tau_s(self) -> float:
        return math.sqrt(2.0 / (self.delta * self.Delta))

    def r_prime(self, delta_lo: float) -> float:
        return math.log(delta_lo / math.sqrt(self.delta * self.Delta))

    def delta_lo(self, r_prime: float) -> float:
        return math.sqrt(self.delta * self.Delta) * math.exp(r_prime)

    def default_grid(self, n_points: int = 512, span: float | None = None) -> FrequencyGrid:
        """Grid wide enough for the kernel tails and the first few dozen modes."""
        if span is None:
            span = max(16.0 / self.tau_s, 10.0 * self.Delta)
        return FrequencyGrid(self.omega_p / 2, span, n_points)


def _check_center(p: GaussianModelParams, grid: FrequencyGrid) -> None:
    if abs(grid.center - p.omega_p / 2) > grid.step:
        raise ValueError(
            f"grid center {grid.center} is not at the degenerate frequency {p.omega_p / 2}"
        )


def gaussian_kernels(p: GaussianModelParams, grid: FrequencyGrid) -> GreenPair:
    _check_center(p, grid)
    if grid.step > p.delta:
        warnings.warn(
            f"grid step {grid.step:.3g} rad/fs does not resolve the anticorrelation width "
            f"delta = {p.delta:.3g} rad/fs; the discrete kernel will not follow the closed form",
            ValidityWarning,
            stacklevel=2,
        )
    w = grid.omega
    total = w[:, None] + w[None, :] - p.omega_p
    diff = w[:, None] - w[None, :]
    amp = math.sqrt(2 * p.N / (math.pi * p.delta * p.Delta))
    s = amp * np.exp(-(total**2) / (2 * p.delta**2) - diff**2 / (2 * p.Delta**2))
    return GreenPair(
        C=identity_kernel(grid),
        S=KernelMatrix(grid, grid, s),
        picture="midpoint-compensated",
    )


def gaussian_zeta(p: GaussianModelParams, n) -> np.ndarray | float:
    """Squeezing parameter of mode ``n``: asinh(sqrt(N) tanh(r)**n / cosh(r))."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("mode index must be non-negative")
    r = p.r
    sinh_z = math.sqrt(p.N) * np.tanh(r) ** n / math.cosh(r)
    out = np.arcsinh(sinh_z)
    return float(out) if out.ndim == 0 else out


def gaussian_mode(p: GaussianModelParams, n: int, grid: FrequencyGrid) -> SpectralAmplitude:
    return hermite_mode(n, p.tau_s, grid)


def lo_profile(p: GaussianModelParams, delta_lo: float, grid: FrequencyGrid) -> SpectralAmplitude:
    """Gaussian local oscillator spectrum of bandwidth ``delta_lo``, flat phase."""
    if not delta_lo > 0:
        raise ValueError("delta_lo must be positive")
    x = grid.omega - p.omega_p / 2
    values = math.sqrt(2 / (delta_lo * math.sqrt(math.pi))) * np.exp(-(x**2) / delta_lo**2)
    return SpectralAmplitude(grid, values).normalized()


def overlap_series(r_prime: float, m_max: int) -> np.ndarray:
    """Even-index overlaps M_0, M_2, ..., M_{2 m_max} of a Gaussian LO with Hermite modes.

    Factorials are evaluated through log-gamma so large ``m_max`` is safe.
    """
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    m = np.arange(m_max + 1)
    t = math.tanh(r_prime)
    out = np.zeros(m_max + 1)
    out[0] = 1.0 / math.sqrt(math.cosh(r_prime))
    if t != 0.0 and m_max > 0:
        mm = m[1:]
        log_mag = (
            0.5 * gammaln(2 * mm + 1)
            - mm * math.log(2.0)
            - gammaln(mm + 1)
            + mm * math.log(abs(t))
            - 0.5 * math.log(math.cosh(r_prime))
        )
        out[1:] = np.sign(t) ** mm * np.exp(log_mag)
    return out


def analytic_overlaps(p: GaussianModelParams, delta_lo: float, m_max: int = DEFAULT_M_MAX) -> np.ndarray:
    """Overlaps M_0..M_{2 m_max} of the LO with the characteristic modes; odd entries vanish."""
    even = overlap_series(p.r_prime(delta_lo), m_max)
    out = np.zeros(2 * m_max + 1)
    out[::2] = even
    return out


def gaussian_decomposition(p: GaussianModelParams, grid: FrequencyGrid, n_modes: int) -> SqueezerDecomposition:
    """Analytic squeezer decomposition: input and output modes are the same Hermite functions.

    The kernel anticorrelates w and w', so its odd Hermite components enter
    S with a negative sign. With C the identity this forces a factor i on
    the odd modes; even modes stay real.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    _check_center(p, grid)
    modes = []
    for n in range(n_modes):
        h = gaussian_mode(p, n, grid)
        modes.append(h if n % 2 == 0 else SpectralAmplitude(grid, 1j * h.values))
    zetas = np.asarray(gaussian_zeta(p, np.arange(n_modes)), dtype=float)
    return SqueezerDecomposition(zetas=zetas, output_modes=modes, input_modes=modes)
