"""Request/response models of the simulation service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import RunConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class EngineRequest(BaseModel):
    """One engine evaluation. Give either action_hbar (with duty) or the
    stroke durations explicitly."""

    mode: str = "two_stroke"
    omega_mrad_s: float = 1.6
    duty: float = 1.0 / 3.0
    action_hbar: float | None = None
    tau_w_us: float | None = None
    tau_th_us: float | None = None
    gamma_opt_mhz: float = 0.76
    gamma_th_mhz: float = 0.41
    fwhm_mhz: float = 3.0
    omega_10_mhz: float = 2600.0
    n_detuning_nodes: int = 1201
    full_seven_level: bool = False


class PowerRow(BaseModel):
    mode: str
    omega: float
    gamma: float
    gamma_th: float | None = None
    duty: float | None = None
    tau_cyc: float | None = None
    action_hbar: float | None = None
    action_formal: float | None = None
    work_per_cycle: float | None = None
    power: float
    bound: float | None = None


class EngineSweepRequest(BaseModel):
    base: EngineRequest = Field(default_factory=EngineRequest)
    modes: list[str] = Field(default_factory=lambda: ["two_stroke"])
    omega_grid_mrad_s: list[float] | None = None
    action_grid_hbar: list[float] | None = None
    include_continuous: bool = False


class EngineSweepResponse(BaseModel):
    rows: list[PowerRow]


class KappaRequest(BaseModel):
    gamma_grid_mhz: list[float] = Field(default_factory=lambda: [0.5])
    mode: str = "two_stroke"
    duty: float = 1.0 / 3.0
    tau_cyc_us: float = 0.06
    with_uncertainty: bool = False
    n_samples: int = 256
    seed: int = 1234


class KappaRow(BaseModel):
    gamma_mhz: float
    kappa_mhz: float
    sigma_kappa_mhz: float | None = None
    mode: str
    h_variation: float


class KappaResponse(BaseModel):
    rows: list[KappaRow]


class CalibrateRequest(BaseModel):
    powers_mw: list[float]
    fluorescence: list[float]


class CalibrateResponse(BaseModel):
    r_khz_per_mw: float
    sigma_r_khz_per_mw: float
    amplitude: float
    sigma_amplitude: float
    residual_rms: float


class BoundTestRequest(BaseModel):
    p_measured: float
    sigma_measured: float
    p_bound: float
    sigma_bound: float


class BoundTestResponse(BaseModel):
    t: float
    p: float


class PropagateRequest(BaseModel):
    target: str = "kappa"            # currently: kappa
    gamma_mhz: float = 0.5
    mode: str = "two_stroke"
    duty: float = 1.0 / 3.0
    tau_cyc_us: float = 0.06
    n_samples: int = 4096
    seed: int = 1234


class PropagateResponse(BaseModel):
    mean: float
    sigma: float
    percentiles: dict[str, float]
    n_samples: int
    n_failed: int
    seed: int


class ReproduceRequest(BaseModel):
    """Config overrides applied on top of the built-in defaults."""

    config: dict = Field(default_factory=dict)


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class FigureResponse(BaseModel):
    figure: str
    columns: list[str]
    rows: list[list]
    checks: list[CheckModel]
    passed: bool
    config: RunConfig


class SelftestResponse(BaseModel):
    checks: list[CheckModel]
    passed: bool
