"""Homodyne detection of multimode squeezed light.

Quadrature variances are normalized so that vacuum gives 1/4. Local
oscillator weight outside the supplied mode set is counted as vacuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from opasqueeze.blochmessiah import SqueezerDecomposition
from opasqueeze.errors import PhaseAlignmentError
from opasqueeze.spectral import SpectralAmplitude, check_same_grid

VACUUM = 0.25
ALIGN_TOL = 1e-6
NORM_TOL = 1e-8


class Projection(NamedTuple):
    overlaps: np.ndarray
    unmatched_fraction: float


@dataclass(frozen=True)
class HomodyneResult:
    overlaps: np.ndarray
    q_plus: float
    q_minus: float
    eta: float
    unmatched_fraction: float

    @property
    def squeezing_db(self) -> float:
        return squeezing_db(self.q_minus)

    @property
    def antisqueezing_db(self) -> float:
        return squeezing_db(self.q_plus)


def squeezing_db(variance: float) -> float:
    """Noise reduction in dB relative to vacuum (positive for squeezing)."""
    return -10.0 * math.log10(4.0 * variance)


def project_lo(lo: SpectralAmplitude, d: SqueezerDecomposition) -> Projection:
    """Coefficients M_n = <psi_n, lo> of the LO in the output-mode basis."""
    check_same_grid(lo.grid, d.grid)
    norm2 = lo.norm2()
    if abs(norm2 - 1.0) > NORM_TOL:
        raise ValueError(f"local oscillator must be normalized (norm^2 = {norm2:.12g})")
    overlaps = d.output_matrix().conj().T @ lo.values * lo.grid.step
    unmatched = max(0.0, 1.0 - float(np.sum(np.abs(overlaps) ** 2)))
    return Projection(overlaps, unmatched)


def mode_quadratures(zeta: float) -> tuple[float, float]:
    """(max, min) quadrature variance of a single squeezed mode."""
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    return VACUUM * math.exp(2 * zeta), VACUUM * math.exp(-2 * zeta)


def phase_alignment_defects(overlaps) -> np.ndarray:
    """Imaginary parts of the overlaps after removing the phase of the largest one.

    Phases only matter modulo pi, since a sign flip of the LO amplitude
    leaves the measured variance unchanged.
    """
    m = np.asarray(overlaps, dtype=complex)
    if m.size == 0 or not np.any(m):
        return np.zeros(m.size)
    ref = m[np.argmax(np.abs(m))]
    return np.abs((m * np.exp(-1j * np.angle(ref))).imag)


def detected_quadratures(overlaps, zetas, aligned: bool = True, unmatched_fraction: float | None = None):
    """Squeezed and antisqueezed variances seen by the LO.

    Valid when every contributing overlap shares one phase (mod pi), so the
    LO phase can select the squeezed quadrature of all modes at once.
    ``aligned=True`` enforces this and raises ``PhaseAlignmentError``
    otherwise. Returns (q_plus, q_minus).
    """
    m = np.asarray(overlaps, dtype=complex)
    z = np.asarray(zetas, dtype=float)
    if m.shape != z.shape:
        raise ValueError("overlaps and zetas must be aligned by mode index")
    if aligned:
        defects = phase_alignment_defects(m)
        if np.any(defects > ALIGN_TOL):
            raise PhaseAlignmentError(
                f"LO overlaps do not share a common phase (worst defect {defects.max():.3g})", defects
            )
    w = np.abs(m) ** 2
    total = float(np.sum(w))
    if total > 1 + 1e-10:
        raise ValueError(f"overlap weights sum to {total} > 1")
    if unmatched_fraction is None:
        unmatched_fraction = max(0.0, 1.0 - total)
    q_plus = VACUUM * (float(np.sum(w * np.exp(2 * z))) + unmatched_fraction)
    q_minus = VACUUM * (float(np.sum(w * np.exp(-2 * z))) + unmatched_fraction)
    return q_plus, q_minus


def quantum_efficiency(q_plus: float, q_minus: float) -> float:
    """Transmission of the loss channel that turns a pure squeezed state into (q_plus, q_minus).

    The vacuum point q_plus = q_minus = 1/4 is 0/0 and is assigned 1.
    """
    if not q_plus >= q_minus > 0:
        raise ValueError(f"need q_plus >= q_minus > 0, got {q_plus}, {q_minus}")
    if q_plus * q_minus < 1 / 16 - 1e-12:
        raise ValueError("variances violate the uncertainty bound")
    # Written in excess noise u = 4 q_plus - 1, v = 4 q_minus - 1 the formula
    # reads -u v / (u + v), which avoids cancelling terms of order one.
    u, v = 4 * q_plus - 1, 4 * q_minus - 1
    return _efficiency_from_excess(u, v, u + v)


def _efficiency_from_excess(u: float, v: float, total: float) -> float:
    if abs(total) < 1e-14:
        return 1.0
    return -u * v / total


def homodyne(lo: SpectralAmplitude, d: SqueezerDecomposition, aligned: bool = True) -> HomodyneResult:
    """Project ``lo`` on the output modes of ``d`` and evaluate the detected squeezing."""
    overlaps, unmatched = project_lo(lo, d)
    q_plus, q_minus = detected_quadratures(overlaps, d.zetas, aligned, unmatched)
    w = np.abs(overlaps) ** 2
    z = d.zetas
    u = float(np.sum(w * np.expm1(2 * z)))
    v = float(np.sum(w * np.expm1(-2 * z)))
    eta = _efficiency_from_excess(u, v, 4.0 * float(np.sum(w * np.sinh(z) ** 2)))
    return HomodyneResult(overlaps, q_plus, q_minus, eta, unmatched)


@dataclass(frozen=True)
class EfficiencyCurve:
    x: np.ndarray  # r' for a linewidth sweep, r for the master-laser curve
    eta: np.ndarray
    q_plus: np.ndarray
    q_minus: np.ndarray
    truncation_defect: np.ndarray  # 1 - sum M^2 of the series used


def series_length(r_prime: float, floor: float = 1e-17, cap: int = 20_000_000) -> int:
    """Number of even overlap terms after which M_{2m}^2 has fallen below ``floor``."""
    t2 = math.tanh(r_prime) ** 2
    if t2 == 0.0:
        return 0
    if t2 >= 1.0:
        return cap
    return min(cap, int(math.ceil(math.log(floor) / math.log(t2))) + 1)


def gaussian_detection(r: float, N: float, r_prime: float, m_max: int | None = None):
    """(q_plus, q_minus, truncation defect, eta) for the Gaussian model and a Gaussian LO.

    Variances are accumulated as excess over vacuum, so the weak-squeezing
    limit keeps full relative precision.
    """
    from opasqueeze.gaussian import overlap_series

    if m_max is None:
        m_max = series_length(r_prime)
    m2 = overlap_series(r_prime, m_max) ** 2
    even = 2 * np.arange(m_max + 1)
    sinh_z = math.sqrt(N) * np.exp(even * math.log(math.tanh(r))) / math.cosh(r) if r > 0 else None
    if sinh_z is None:
        sinh_z = np.where(even == 0, math.sqrt(N), 0.0)
    zetas = np.arcsinh(sinh_z)
    defect = max(0.0, 1.0 - float(np.sum(m2)))
    u = float(np.sum(m2 * np.expm1(2 * zetas)))
    v = float(np.sum(m2 * np.expm1(-2 * zetas)))
    total = 4.0 * float(np.sum(m2 * sinh_z**2))
    return VACUUM * (1 + u), VACUUM * (1 + v), defect, _efficiency_from_excess(u, v, total)


def efficiency_sweep(p, r_prime_values, m_max: int | None = None) -> EfficiencyCurve:
    """Efficiency of the Gaussian model versus LO bandwidth, r' = ln(delta_LO / sqrt(delta Delta)).

    ``m_max=None`` sums the overlap series until its terms drop below 1e-17.
    """
    return _curve(np.asarray(r_prime_values, dtype=float), lambda rp: gaussian_detection(p.r, p.N, rp, m_max))


def master_laser_curve(r_values, N: float, m_max: int | None = None) -> EfficiencyCurve:
    """Efficiency versus r when the LO bandwidth equals the pump bandwidth (r' = -r)."""
    return _curve(np.asarray(r_values, dtype=float), lambda r: gaussian_detection(r, N, -r, m_max))


def _curve(xs, fn) -> EfficiencyCurve:
    qp, qm, defects, etas = [], [], [], []
    for x in xs:
        a, b, d, eta = fn(float(x))
        qp.append(a)
        qm.append(b)
        defects.append(d)
        etas.append(eta)
    return EfficiencyCurve(xs, np.array(etas), np.array(qp), np.array(qm), np.array(defects))
