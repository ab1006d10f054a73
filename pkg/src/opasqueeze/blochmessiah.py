"""Splitting a Bogoliubov transformation into independent squeezers.

For kernels satisfying the bosonic constraints,

    C(w,w') = sum_n cosh(zeta_n) conj(psi_n(w)) phi_n(w')
    S(w,w') = sum_n sinh(zeta_n) conj(psi_n(w)) conj(phi_n(w'))

and mode n evolves as b_out = b_in cosh(zeta_n) + b_in^dag sinh(zeta_n).
Numerically everything is done on the weighted (operator) matrices
U = step * K, in which the discrete delta function is the identity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from opasqueeze.errors import ConstraintViolation, PairingError
from opasqueeze.propagation import MIDPOINT, GreenPair
from opasqueeze.spectral import FrequencyGrid, KernelMatrix, SpectralAmplitude, check_same_grid

CONSTRAINT_ERROR = 1e-3
CONSTRAINT_WARN = 1e-5
ZERO_FLOOR = 1e-12
# Below this fraction of the leading singular value the S-side singular
# vectors are too noisy to pair modes; the pairing is taken from C instead.
S_PAIRING_FLOOR = 1e-6
PAIRING_TOL = 1e-4


@dataclass(frozen=True)
class ConstraintReport:
    """Max-entry deviations of the two commutator constraints (dimensionless operator form)."""

    symmetry: float  # C S^T - (C S^T)^T
    unitarity: float  # C C^dag - S S^dag - 1

    @property
    def worst(self) -> float:
        return max(self.symmetry, self.unitarity)

    def to_dict(self) -> dict:
        return {"symmetry": self.symmetry, "unitarity": self.unitarity}


@dataclass(frozen=True)
class SqueezerDecomposition:
    zetas: np.ndarray
    output_modes: list
    input_modes: list
    residuals: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        zetas = np.array(self.zetas, dtype=float)
        if not (len(zetas) == len(self.output_modes) == len(self.input_modes)):
            raise ValueError("zetas and mode lists must have equal length")
        zetas.setflags(write=False)
        object.__setattr__(self, "zetas", zetas)

    def __len__(self):
        return len(self.zetas)

    @property
    def grid(self) -> FrequencyGrid:
        return self.output_modes[0].grid

    def output_matrix(self) -> np.ndarray:
        """Output modes as columns, shape (n_points, n_modes)."""
        return np.stack([m.values for m in self.output_modes], axis=1)

    def input_matrix(self) -> np.ndarray:
        return np.stack([m.values for m in self.input_modes], axis=1)

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        """Kernel entries (C, S) rebuilt from the stored squeezers."""
        psi, phi = self.output_matrix(), self.input_matrix()
        c = (psi.conj() * np.cosh(self.zetas)) @ phi.T
        s = (psi.conj() * np.sinh(self.zetas)) @ phi.conj().T
        return c, s

    def as_green_pair(self) -> GreenPair:
        c, s = self.reconstruct()
        grid = self.grid
        return GreenPair(KernelMatrix(grid, grid, c), KernelMatrix(grid, grid, s), picture=MIDPOINT)

    def truncated(self, n_modes: int) -> "SqueezerDecomposition":
        return SqueezerDecomposition(
            self.zetas[:n_modes],
            self.output_modes[:n_modes],
            self.input_modes[:n_modes],
            dict(self.residuals),
            dict(self.metadata),
        )


def verify_constraints(g: GreenPair) -> ConstraintReport:
    uc, us = g.C.operator(), g.S.operator()
    cs = uc @ us.T
    unit = uc @ uc.conj().T - us @ us.conj().T
    unit[np.diag_indices_from(unit)] -= 1.0
    return ConstraintReport(float(np.max(np.abs(cs - cs.T))), float(np.max(np.abs(unit))))


def takagi_block(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Takagi factorization m = R diag(d) R^T of a small complex symmetric matrix.

    Solved as a real symmetric eigenproblem of twice the size, which stays
    well defined when singular values are degenerate.
    """
    m = 0.5 * (m + m.T)
    k = m.shape[0]
    if k == 1:
        value = m[0, 0]
        phase = np.exp(0.5j * np.angle(value)) if value != 0 else 1.0
        return np.array([abs(value)]), np.array([[phase]], dtype=complex)
    a, b = m.real, m.imag
    big = np.block([[a, b], [b, -a]])
    vals, vecs = np.linalg.eigh(big)
    top = np.argsort(vals)[::-1][:k]
    r = vecs[:k, top] + 1j * vecs[k:, top]
    return vals[top], r


def _clusters(s: np.ndarray, tol: float) -> list[np.ndarray]:
    """Runs of consecutive singular values whose relative gap is below ``tol``."""
    groups, start = [], 0
    for i in range(1, len(s) + 1):
        if i == len(s) or (s[i - 1] - s[i]) > tol * s[i - 1]:
            groups.append(np.arange(start, i))
            start = i
    return groups


def _sign_reference(grid: FrequencyGrid) -> np.ndarray:
    # Even modes have a nonzero plain sum and odd ones a nonzero first moment,
    # so the ramp picks a sign for both kinds.
    return 1.0 + grid.offsets / (0.5 * grid.span)


def _sign_flips(grid: FrequencyGrid, modes: np.ndarray) -> np.ndarray:
    """+-1 per column so the ramp projection lies in the half-plane arg in (-pi/4, 3pi/4).

    The tilt keeps the choice stable for modes that are purely real or purely
    imaginary.
    """
    proj = _sign_reference(grid) @ modes
    return np.where(np.real(proj * np.exp(-0.25j * np.pi)) < 0, -1.0, 1.0)


def decompose(g: GreenPair, n_modes: int, tol: float = 1e-6) -> SqueezerDecomposition:
    """Bloch-Messiah reduction of a Green pair into its ``n_modes`` strongest squeezers.

    The SVD of S yields the squeezing parameters and candidate mode pairs.
    Within each cluster of (nearly) equal singular values the pairs are
    rotated so that C is diagonal as well, with real positive cosh terms;
    this fixes every mode up to a sign, chosen so that the mode has a
    positive projection on a rising ramp across the grid.
    """
    grid = g.grid
    n = grid.n_points
    if not 1 <= n_modes <= n:
        raise ValueError(f"n_modes must be between 1 and {n}, got {n_modes}")
    report = verify_constraints(g)
    if report.worst > CONSTRAINT_ERROR:
        raise ConstraintViolation(
            f"Green functions violate the bosonic constraints by {report.worst:.3g} "
            f"(limit {CONSTRAINT_ERROR:g})"
        )
    if report.worst > CONSTRAINT_WARN:
        warnings.warn(
            f"Green functions satisfy the bosonic constraints only to {report.worst:.3g}", stacklevel=2
        )

    uc, us = g.C.operator(), g.S.operator()
    x, s, yh = np.linalg.svd(us)
    y = yh.conj().T
    lead = s[0] if s.size else 0.0
    if lead > 0:
        s = np.where(s > ZERO_FLOOR * lead, s, 0.0)
        n_paired = int(np.count_nonzero(s > S_PAIRING_FLOOR * lead))
    else:
        s = np.zeros_like(s)
        n_paired = 0
    zetas = np.arcsinh(s)

    for idx in _clusters(s[:n_paired], tol):
        m = x[:, idx].conj().T @ uc @ y[:, idx].conj()
        _, r = takagi_block(m)
        x[:, idx] = x[:, idx] @ r
        y[:, idx] = y[:, idx] @ r
    if n_paired < n:
        # Weak or absent squeezing: C = X cosh(zeta) Y^T fixes the input modes.
        y[:, n_paired:] = (uc.T @ x[:, n_paired:].conj()) / np.cosh(zetas[n_paired:])

    flips = _sign_flips(grid, x.conj())
    x *= flips
    y *= flips

    c_rec = (x * np.cosh(zetas)) @ y.T
    s_rec = (x * s) @ y.conj().T
    residuals = {
        "C": float(np.max(np.abs(c_rec - uc))),
        "S": float(np.max(np.abs(s_rec - us))),
    }

    k = min(n_modes, n_paired)
    if k > 1:
        block = x[:, :k].conj().T @ uc @ y[:, :k].conj()
        off = block - np.diag(np.diag(block))
        leak = float(np.max(np.abs(off)) / np.max(np.abs(np.diag(block))))
        if leak > PAIRING_TOL:
            raise PairingError(
                f"mode pairs do not diagonalize C (leakage {leak:.3g}); "
                "near-degenerate squeezers were not grouped, increase tol"
            )

    root = math.sqrt(grid.step)
    out_modes = [SpectralAmplitude(grid, x[:, i].conj() / root) for i in range(n_modes)]
    in_modes = [SpectralAmplitude(grid, y[:, i] / root) for i in range(n_modes)]
    meta = {"picture": g.picture, "constraints": report.to_dict(), "setup": g.metadata.get("setup")}
    return SqueezerDecomposition(zetas[:n_modes], out_modes, in_modes, residuals, meta)


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray
    modes: list

    def reconstruct(self) -> np.ndarray:
        psi = np.stack([m.values for m in self.modes], axis=1)
        return (psi.conj() * self.coefficients) @ psi.conj().T


def takagi_biphoton(psi: KernelMatrix, tol: float = 1e-6) -> SchmidtDecomposition:
    """Schmidt decomposition Psi(w,w') = sum_n c_n conj(psi_n(w)) conj(psi_n(w')) of a symmetric kernel."""
    check_same_grid(psi.grid_out, psi.grid_in)
    grid = psi.grid_out
    p = psi.operator()
    scale = np.max(np.abs(p))
    if scale > 0 and np.max(np.abs(p - p.T)) > 1e-8 * scale:
        raise ValueError("biphoton amplitude is not symmetric")
    x, s, _ = np.linalg.svd(p)
    nonzero = s > ZERO_FLOOR * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    n_nz = int(np.count_nonzero(nonzero))
    s = np.where(nonzero, s, 0.0)
    for idx in _clusters(s[:n_nz], tol):
        m = x[:, idx].conj().T @ p @ x[:, idx].conj()
        _, r = takagi_block(m)
        x[:, idx] = x[:, idx] @ r
    # Sign flips keep w w^T unchanged.
    psi_vecs = x.conj() / math.sqrt(grid.step)
    psi_vecs *= _sign_flips(grid, psi_vecs)
    modes = [SpectralAmplitude(grid, psi_vecs[:, i]) for i in range(grid.n_points)]
    return SchmidtDecomposition(s, modes)


def time_reversal_check(d: SqueezerDecomposition) -> np.ndarray:
    """Per mode, min over phase of ||psi_n - e^{i a} conj(phi_n)||."""
    step = d.grid.step
    out = []
    for psi, phi in zip(d.output_modes, d.input_modes):
        target = phi.values.conj()
        phase = np.exp(1j * np.angle(np.vdot(target, psi.values)))
        out.append(math.sqrt(np.sum(np.abs(psi.values - phase * target) ** 2) * step))
    return np.array(out)


def parity_defects(d: SqueezerDecomposition) -> np.ndarray:
    """Per output mode, distance to the nearest function of definite parity about the grid center."""
    step = d.grid.step
    out = []
    for psi in d.output_modes:
        v, mirrored = psi.values, psi.values[::-1]
        best = min(np.sum(np.abs(v - mirrored) ** 2), np.sum(np.abs(v + mirrored) ** 2))
        out.append(0.5 * math.sqrt(best * step))
    return np.array(out)


@dataclass(frozen=True)
class ScalingReport:
    ratios: np.ndarray  # L / L_NL of each run
    lengths: np.ndarray  # zeta_n * L_NL, shape (runs, modes), mm
    fitted: np.ndarray  # least-squares Lambda_n, mm
    spread: np.ndarray  # (max - min) / mean of zeta_n * L_NL
    max_valid_ratio: float
    spread_limit: float

    @property
    def valid(self) -> bool:
        return bool(np.all(self.ratios <= self.max_valid_ratio) and np.all(self.spread < self.spread_limit))

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.fitted) < 0))


def squeezing_lengths(
    runs,
    length: float = 1.0,
    n_modes: int | None = None,
    max_valid_ratio: float = 15.0,
    spread_limit: float = 0.05,
) -> ScalingReport:
    """Squeezing lengths Lambda_n = zeta_n L_NL from runs at different pump strengths.

    ``runs`` holds (L/L_NL, decomposition) pairs for crystals of length
    ``length`` (mm) that differ only in pump strength. Lambda_n is fitted as
    zeta_n = Lambda_n / L_NL through the origin.
    """
    runs = list(runs)
    if len(runs) < 3:
        raise ValueError("at least three pump strengths are needed to test the scaling law")
    ratios = np.array([float(r) for r, _ in runs])
    if np.any(ratios <= 0) or len(np.unique(ratios)) != len(ratios):
        raise ValueError("pump strengths must be positive and distinct")
    decs = [d for _, d in runs]
    first = decs[0]
    for d in decs[1:]:
        check_same_grid(first.grid, d.grid)
        a, b = first.metadata.get("setup"), d.metadata.get("setup")
        if a is not None and b is not None and a != b:
            raise ValueError("runs differ in more than the pump strength")
    available = min(len(d) for d in decs)
    k = available if n_modes is None else min(n_modes, available)
    zetas = np.stack([d.zetas[:k] for d in decs])
    inv_lnl = ratios / length
    lengths = zetas / inv_lnl[:, None]
    fitted = (inv_lnl @ zetas) / (inv_lnl @ inv_lnl)
    spread = (lengths.max(axis=0) - lengths.min(axis=0)) / lengths.mean(axis=0)
    return ScalingReport(ratios, lengths, fitted, spread, max_valid_ratio, spread_limit)
