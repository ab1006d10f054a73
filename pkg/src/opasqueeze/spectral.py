"""Frequency grids, sampled spectral functions and Hermite mode functions.

Units: angular frequency in rad/fs, time in fs, length in mm.

Every integral over frequency is a plain Riemann sum with the uniform grid
step as weight. Kernel matrices store the kernel values K(w_i, w_j); the
weight is applied when the kernel acts on a function, never stored.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from opasqueeze.errors import GridMismatchError, ValidityWarning

MIN_POINTS = 16


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid, symmetric about ``center``."""

    center: float
    span: float
    n_points: int

    def __post_init__(self):
        if not self.span > 0:
            raise ValueError(f"grid span must be positive, got {self.span}")
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise ValueError(f"n_points must be an integer >= {MIN_POINTS}, got {self.n_points}")

    @property
    def step(self) -> float:
        return self.span / (self.n_points - 1)

    @property
    def omega(self) -> np.ndarray:
        # Built from offsets that are exact mirrors of each other.
        k = np.arange(self.n_points) - (self.n_points - 1) / 2
        return self.center + k * self.step

    @property
    def offsets(self) -> np.ndarray:
        """Detuning from the center, ``omega - center``."""
        k = np.arange(self.n_points) - (self.n_points - 1) / 2
        return k * self.step

    def mirror(self, values: np.ndarray) -> np.ndarray:
        """Reflect sampled values about the grid center."""
        return np.asarray(values)[..., ::-1]

    def same_as(self, other: "FrequencyGrid") -> bool:
        return (
            self.n_points == other.n_points
            and np.isclose(self.center, other.center, rtol=0, atol=1e-12 * max(1.0, abs(self.center)))
            and np.isclose(self.span, other.span, rtol=1e-12, atol=0)
        )

    def to_dict(self) -> dict:
        return {"center": float(self.center), "span": float(self.span), "n_points": int(self.n_points)}


def make_grid(center: float, span: float, n_points: int) -> FrequencyGrid:
    return FrequencyGrid(float(center), float(span), int(n_points))


def check_same_grid(a: FrequencyGrid, b: FrequencyGrid) -> None:
    if not a.same_as(b):
        raise GridMismatchError(f"grids differ: {a.to_dict()} vs {b.to_dict()}")


@dataclass(frozen=True)
class SpectralAmplitude:
    """Complex function of frequency sampled on a grid."""

    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} samples, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.step)

    def normalized(self) -> "SpectralAmplitude":
        return SpectralAmplitude(self.grid, self.values / np.sqrt(self.norm2()))

    def conj(self) -> "SpectralAmplitude":
        return SpectralAmplitude(self.grid, self.values.conj())

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass(frozen=True)
class KernelMatrix:
    """Kernel K(w, w') sampled as ``entries[i, j] = K(w_i, w'_j)``."""

    grid_out: FrequencyGrid
    grid_in: FrequencyGrid
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (self.grid_out.n_points, self.grid_in.n_points):
            raise ValueError(f"kernel shape {entries.shape} does not match its grids")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_operator(cls, grid: FrequencyGrid, matrix: np.ndarray) -> "KernelMatrix":
        """Wrap a weighted (operator) matrix, i.e. one that already includes the step."""
        return cls(grid, grid, np.asarray(matrix) / grid.step)

    def operator(self) -> np.ndarray:
        """Matrix whose product with a sample vector is the continuum operator action."""
        return self.entries * self.grid_in.step

    def apply(self, f: SpectralAmplitude) -> SpectralAmplitude:
        check_same_grid(self.grid_in, f.grid)
        return SpectralAmplitude(self.grid_out, self.operator() @ f.values)


def identity_kernel(grid: FrequencyGrid) -> KernelMatrix:
    """Discrete delta function: 1/step on the diagonal."""
    return KernelMatrix(grid, grid, np.eye(grid.n_points) / grid.step)


def inner_product(f: SpectralAmplitude, g: SpectralAmplitude) -> complex:
    """Integral of conj(f) * g over the grid."""
    check_same_grid(f.grid, g.grid)
    return complex(np.vdot(f.values, g.values) * f.grid.step)


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal Hermite functions h_0..h_{n_max} at ``x``, shape (n_max+1, len(x)).

    Uses the three-term recurrence for the normalized functions, which stays
    finite where the bare polynomials overflow.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1, x.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x**2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_mode(n: int, tau_s: float, grid: FrequencyGrid) -> SpectralAmplitude:
    """Hermite function of order ``n`` and temporal width ``tau_s`` centered on the grid.

    Sign follows the standard polynomials (positive leading coefficient).
    The samples are renormalized on the grid.
    """
    if n < 0:
        raise ValueError("mode index must be non-negative")
    if not tau_s > 0:
        raise ValueError("tau_s must be positive")
    h = hermite_functions(n, tau_s * grid.offsets)[n] * np.sqrt(tau_s)
    peak = np.max(np.abs(h))
    if peak == 0 or max(abs(h[0]), abs(h[-1])) > 1e-6 * peak:
        warnings.warn(
            f"grid span {grid.span:.4g} rad/fs truncates Hermite mode {n} (tau_s={tau_s:.4g} fs)",
            ValidityWarning,
            stacklevel=2,
        )
    return SpectralAmplitude(grid, h).normalized()
