"""Wave-vector models k(omega) for the signal and pump fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

C_UM_PER_FS = 0.299792458
C_MM_PER_FS = 2.99792458e-4


def wavelength_um(omega):
    return 2 * math.pi * C_UM_PER_FS / np.asarray(omega, dtype=float)


def omega_from_nm(wavelength_nm: float) -> float:
    return 2 * math.pi * C_UM_PER_FS / (wavelength_nm * 1e-3)


@dataclass(frozen=True)
class Sellmeier:
    """Refractive index n^2 = A + B/(lambda^2 - C) - D lambda^2, lambda in um."""

    A: float
    B: float
    C: float
    D: float

    def index(self, omega):
        lam2 = wavelength_um(omega) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            n2 = self.A + self.B / (lam2 - self.C) - self.D * lam2
        if np.any(~np.isfinite(n2)) or np.any(n2 <= 0):
            raise ValueError("Sellmeier formula gives no real index on part of the frequency range")
        return np.sqrt(n2)

    def k(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self.index(omega) * omega / C_MM_PER_FS


@dataclass(frozen=True)
class Extraordinary:
    """Extraordinary wave of a uniaxial crystal propagating at ``theta`` (rad) to the optic axis."""

    ordinary: Sellmeier
    extraordinary: Sellmeier
    theta: float

    def index(self, omega):
        no = self.ordinary.index(omega)
        ne = self.extraordinary.index(omega)
        c, s = math.cos(self.theta), math.sin(self.theta)
        return 1.0 / np.sqrt(c**2 / no**2 + s**2 / ne**2)

    def k(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self.index(omega) * omega / C_MM_PER_FS


@dataclass(frozen=True)
class Taylor:
    """k(omega) = sum_j coefficients[j] (omega - omega_ref)^j / j!  (rad/mm, fs/mm, fs^2/mm, ...)."""

    omega_ref: float
    coefficients: tuple = field(default=(0.0,))

    def k(self, omega):
        x = np.asarray(omega, dtype=float) - self.omega_ref
        out = np.zeros_like(x)
        for j, c in enumerate(self.coefficients):
            out = out + c * x**j / math.factorial(j)
        return out


def _sellmeier(d: dict) -> Sellmeier:
    return Sellmeier(**{key: float(d[key]) for key in ("A", "B", "C", "D")})


def load_datasets(path: str | Path | None = None) -> dict:
    if path is None:
        text = resources.files("opasqueeze.data").joinpath("media.yaml").read_text()
    else:
        text = Path(path).read_text()
    data = yaml.safe_load(text)
    if data.get("units", {}).get("wavelength") != "um":
        raise ValueError("dispersion dataset must declare wavelength units 'um'")
    return data["media"]


def type1_phase_matching_angle(crystal: dict, omega_p: float) -> float:
    """Angle (rad) at which an e-polarized pump phase matches degenerate o-polarized signal/idler."""
    o, e = _sellmeier(crystal["ordinary"]), _sellmeier(crystal["extraordinary"])
    target = float(o.index(omega_p / 2))
    no_p, ne_p = float(o.index(omega_p)), float(e.index(omega_p))
    s2 = (1 / target**2 - 1 / no_p**2) / (1 / ne_p**2 - 1 / no_p**2)
    if not 0.0 <= s2 <= 1.0:
        raise ValueError("crystal cannot be phase matched for this pump frequency")
    return math.asin(math.sqrt(s2))


def type1_models(name: str, omega_p: float, theta_deg: float | None = None, path=None):
    """Signal (ordinary) and pump (extraordinary) models for type-I degenerate conversion."""
    media = load_datasets(path)
    if name not in media:
        raise ValueError(f"unknown medium {name!r}; known: {sorted(media)}")
    crystal = media[name]
    if crystal.get("kind") != "uniaxial-sellmeier":
        raise ValueError(f"medium {name!r} is not a uniaxial Sellmeier dataset")
    theta = (
        type1_phase_matching_angle(crystal, omega_p)
        if theta_deg is None
        else math.radians(theta_deg)
    )
    o, e = _sellmeier(crystal["ordinary"]), _sellmeier(crystal["extraordinary"])
    return o, Extraordinary(o, e, theta), theta


def load_medium(
    name: str,
    length_mm: float,
    nonlinear_length_mm: float,
    pump_wavelength_nm: float = 400.0,
    theta_deg: float | None = None,
    path=None,
):
    """MediumSpec for a named crystal in the type-I degenerate geometry."""
    from opasqueeze.propagation import MediumSpec

    signal, pump, _ = type1_models(name, omega_from_nm(pump_wavelength_nm), theta_deg, path)
    return MediumSpec(length_mm, nonlinear_length_mm, signal, pump)
