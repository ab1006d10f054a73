"""Run configuration (YAML).

Every physical quantity is given under a key that names its unit; unknown
keys are rejected so a misspelt unit never falls back to a default.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from opasqueeze import dispersion
from opasqueeze.propagation import MediumSpec, PumpPulse


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SellmeierInline(_Strict):
    A: float
    B: float
    C: float
    D: float


class TaylorInline(_Strict):
    omega_ref_rad_per_fs: float
    # j-th entry is d^j k / d omega^j in rad fs^j / mm
    coefficients_rad_fsj_per_mm: list[float]


class DispersionInline(_Strict):
    sellmeier_um: SellmeierInline | None = None
    taylor: TaylorInline | None = None

    @model_validator(mode="after")
    def _one(self):
        if (self.sellmeier_um is None) == (self.taylor is None):
            raise ValueError("give exactly one of sellmeier_um or taylor")
        return self

    def build(self):
        if self.taylor is not None:
            return dispersion.Taylor(self.taylor.omega_ref_rad_per_fs, tuple(self.taylor.coefficients_rad_fsj_per_mm))
        return dispersion.Sellmeier(**self.sellmeier_um.model_dump())


class MediumConfig(_Strict):
    length_mm: float = Field(gt=0)
    dataset: str | None = "bbo"
    dataset_file: str | None = None
    theta_deg: float | None = None
    signal: DispersionInline | None = None
    pump: DispersionInline | None = None

    @model_validator(mode="after")
    def _source(self):
        inline = (self.signal is not None, self.pump is not None)
        if any(inline) and not all(inline):
            raise ValueError("inline dispersion needs both signal and pump models")
        return self


class PumpConfig(_Strict):
    wavelength_nm: float = Field(gt=0)
    tau_fs: float = Field(gt=0)
    chirp_fs2: float = 0.0
    strength: float | list[float] | None = None
    nonlinear_length_mm: float | list[float] | None = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.strength is None) == (self.nonlinear_length_mm is None):
            raise ValueError("give exactly one of strength (L/L_NL) or nonlinear_length_mm")
        return self


class GridConfig(_Strict):
    n_points: int = Field(default=256, ge=16)
    span_rad_per_fs: float | Literal["auto"] = 1.6
    max_span_rad_per_fs: float = 1.6


class SolverConfig(_Strict):
    steps: int = Field(default=200, ge=1)
    tolerance: float = 1e-6


class LOConfig(_Strict):
    kind: Literal["gaussian", "file"] = "gaussian"
    bandwidth_rad_per_fs: float | None = None
    r_prime: float | None = None
    path: str | None = None

    @model_validator(mode="after")
    def _spec(self):
        if self.kind == "file" and not self.path:
            raise ValueError("file LO needs a path")
        if self.kind == "gaussian" and (self.bandwidth_rad_per_fs is None) == (self.r_prime is None):
            raise ValueError("gaussian LO needs exactly one of bandwidth_rad_per_fs or r_prime")
        return self


class AnalysisConfig(_Strict):
    n_modes: int = 10
    # leading modes the scaling verdict is based on
    scaling_modes: int = Field(default=5, ge=1)
    cluster_tol: float = 1e-6
    lo: LOConfig | None = None
    aligned: bool = True


class Sweep(_Strict):
    start: float
    stop: float
    points: int = Field(ge=2)


class GaussianConfig(_Strict):
    r: float = Field(ge=0)
    tau_s_fs: float = Field(gt=0)
    mean_photon_number: float = Field(gt=0)
    pump_wavelength_nm: float = 400.0
    n_points: int = Field(default=512, ge=16)
    span_rad_per_fs: float | None = None
    m_max: int | None = None
    r_prime_sweep: Sweep = Sweep(start=-3.0, stop=3.0, points=61)
    master_laser_r_sweep: Sweep = Sweep(start=0.25, stop=6.0, points=24)


class OutputConfig(_Strict):
    directory: str = "out"
    gnuplot: bool = False


class RunConfig(_Strict):
    medium: MediumConfig | None = None
    pump: PumpConfig | None = None
    grid: GridConfig = GridConfig()
    solver: SolverConfig = SolverConfig()
    analysis: AnalysisConfig = AnalysisConfig()
    gaussian: GaussianConfig | None = None
    outputs: OutputConfig = OutputConfig()
    threads: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _pairs(self):
        if (self.medium is None) != (self.pump is None):
            raise ValueError("medium and pump sections go together")
        if self.medium is None and self.gaussian is None:
            raise ValueError("config needs a medium/pump pair or a gaussian section")
        return self

    # derived objects

    def strengths(self) -> list[float]:
        p = self.pump
        if p.strength is not None:
            vals = p.strength if isinstance(p.strength, list) else [p.strength]
            return [float(v) for v in vals]
        vals = p.nonlinear_length_mm if isinstance(p.nonlinear_length_mm, list) else [p.nonlinear_length_mm]
        return [0.0 if math.isinf(v) else self.medium.length_mm / v for v in vals]

    def build_pump(self) -> PumpPulse:
        return PumpPulse.from_wavelength(self.pump.wavelength_nm, self.pump.tau_fs, self.pump.chirp_fs2)

    def build_medium(self, strength: float) -> MediumSpec:
        m = self.medium
        l_nl = math.inf if strength == 0 else m.length_mm / strength
        if m.signal is not None:
            return MediumSpec(m.length_mm, l_nl, m.signal.build(), m.pump.build())
        if m.dataset is None:
            raise ValueError("medium needs a dataset name or inline dispersion")
        return dispersion.load_medium(
            m.dataset, m.length_mm, l_nl, self.pump.wavelength_nm, m.theta_deg, m.dataset_file
        )

    def digest(self) -> str:
        text = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_config(path: str | Path) -> RunConfig:
    data = yaml.safe_load(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return RunConfig.model_validate(data)
