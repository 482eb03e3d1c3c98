"""Run configuration: a single flat, documented schema with built-in
defaults matching the experiment's operating values.

Precedence: command-line flags override config-file values, which override
the built-in defaults. The fully resolved configuration is echoed into
every output file so any run can be reproduced from its own output.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

from pydantic import BaseModel, Field, field_validator

from .engine import DetuningDistribution, EngineLevels
from .params import CalibrationParams, RateConstants, SpinParams, TWO_PI

ENV_OUT_DIR = "NVENGINE_OUT"


class RunConfig(BaseModel):
    """Flat configuration for the service, the CLI and figure reproduction.

    Units: rates in MHz, Rabi frequencies and detunings in Mrad/s, times in
    us, magnetic field in Tesla, actions in units of hbar. Frequencies named
    *_mhz are plain frequencies (the 2*pi is applied internally).
    """

    # decay and pump rates
    gamma_rad_mhz: float = 65.9
    k_1s_mhz: float = 53.3
    k_0s_mhz: float = 7.9
    k_s0_mhz: float = 0.98
    k_s1_mhz: float = 0.73

    # spin Hamiltonians and field
    b_field_t: float = 0.2
    theta_deg: float = 0.6
    zfs_mode: str = "physical"        # 'physical' or 'table'
    omega_10_mhz: float = 2600.0      # work-transition frequency
    ground_singlet_thz: float = 89.0

    # calibration
    r_khz_per_mw: float = 436.0
    laser_power_max_mw: float = 4.0

    # engine operating point
    gamma_opt_mhz: float = 0.76       # optical excitation rate, engine runs
    gamma_ref_mhz: float = 0.5        # reduced-operator expansion point
    omega_mrad_s: float = 1.6         # peak Rabi frequency
    duty: float = 1.0 / 3.0
    gamma_th_mhz: float = 0.41        # bath coupling used on the action axis
    fwhm_mhz: float = 7.0             # measured inhomogeneous linewidth
    theory_fwhm_mhz: float = 3.0      # broadening used for theory curves

    # sweep grids
    omega_grid_mrad_s: list[float] = Field(
        default_factory=lambda: [0.8, 1.6, 3.2])
    action_grid_hbar: list[float] = Field(
        default_factory=lambda: [0.02, 0.035, 0.05, 0.075, 0.1, 0.15,
                                 0.25, 0.4, 0.6, 0.8])
    tau_w_us: float = 0.01            # fixed work stroke of the dephasing sweep
    pop_action_hbar: float = 0.05     # fixed non-dephasing action
    tau_th_grid_t2: list[float] = Field(
        default_factory=lambda: [round(x, 4) for x in
                                 [0.25 + i * (2.4 - 0.25) / 11 for i in range(12)]])
    kappa_gamma_grid_mhz: list[float] = Field(
        default_factory=lambda: [round(0.25 + 0.075 * i, 4) for i in range(11)])
    kappa_tau_cyc_us: float = 0.06
    saturation_grid_mw: list[float] = Field(
        default_factory=lambda: [round(0.25 * i, 2) for i in range(1, 17)])
    emulation_gamma_grid_mhz: list[float] = Field(
        default_factory=lambda: [round(0.05 * i, 2) for i in range(21)])
    emulation_t_max_us: float = 10.0
    field_grid_t: list[float] = Field(
        default_factory=lambda: [round(0.002 + 0.002 * i, 4) for i in range(125)])

    # numerics
    n_detuning_nodes: int = 1201
    n_mc: int = 4096                  # default Monte-Carlo sample count
    mc_band_samples: int = 256        # per-point samples for figure bands
    noise_fraction: float = 0.01      # synthetic calibration noise

    # output
    seed: int = 1234
    out_format: str = "csv"           # 'csv', 'json' or 'both'
    out_dir: str = ""                 # empty: $NVENGINE_OUT or ./out

    @field_validator("zfs_mode")
    @classmethod
    def _check_zfs(cls, v):
        if v not in ("physical", "table"):
            raise ValueError("zfs_mode must be 'physical' or 'table'")
        return v

    @field_validator("out_format")
    @classmethod
    def _check_format(cls, v):
        if v not in ("csv", "json", "both"):
            raise ValueError("out_format must be 'csv', 'json' or 'both'")
        return v

    @field_validator("duty")
    @classmethod
    def _check_duty(cls, v):
        if not 0 < v < 1:
            raise ValueError("duty must be in (0, 1)")
        return v

    # adapters into the core dataclasses

    def rate_constants(self) -> RateConstants:
        return RateConstants(
            gamma_rad=self.gamma_rad_mhz, k_1s=self.k_1s_mhz,
            k_0s=self.k_0s_mhz, k_s0=self.k_s0_mhz, k_s1=self.k_s1_mhz,
            gamma_opt=self.gamma_opt_mhz)

    def spin_params(self) -> SpinParams:
        return SpinParams(b_field=self.b_field_t, theta_deg=self.theta_deg,
                          zfs_mode=self.zfs_mode)

    def calibration(self) -> CalibrationParams:
        return CalibrationParams(r_khz_per_mw=self.r_khz_per_mw,
                                 ground_singlet_thz=self.ground_singlet_thz)

    def levels(self) -> EngineLevels:
        return EngineLevels(omega_10=TWO_PI * self.omega_10_mhz)

    def detuning(self, theory: bool = False) -> DetuningDistribution:
        fwhm = self.theory_fwhm_mhz if theory else self.fwhm_mhz
        return DetuningDistribution(fwhm=TWO_PI * fwhm)

    def resolve_out_dir(self) -> Path:
        if self.out_dir:
            return Path(self.out_dir)
        return Path(os.environ.get(ENV_OUT_DIR, "out"))


def load_config(path: str | Path | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Three-layer merge: defaults, then the JSON file, then overrides."""
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            file_data = json.load(fh)
        if not isinstance(file_data, dict):
            raise ValueError("config file must hold a JSON object")
        data.update(file_data)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**data)


def parse_override(text: str):
    """Parse a KEY=VALUE override; values are JSON when possible."""
    if "=" not in text:
        raise ValueError(f"override {text!r} is not KEY=VALUE")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value
