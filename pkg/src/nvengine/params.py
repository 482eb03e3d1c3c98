"""Model parameters and unit conventions.

Units used throughout the package: time in us, rates in MHz (1/us),
angular frequencies in Mrad/s (so omega*t is in radians when t is in us).
All 2*pi factors are resolved here, at construction time; hbar = 1
internally and is reattached only in reported work/power units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# SI constants, used only for effective temperatures and the spin-bath
# coherence-time estimate.
PLANCK_H = 6.62607015e-34        # J s
HBAR = 1.054571817e-34           # J s
BOLTZMANN_KB = 1.380649e-23      # J/K
BOHR_MAGNETON_SI = 9.2740100783e-24   # J/T
VACUUM_PERMEABILITY = 4e-7 * math.pi  # T^2 m^3 / J

# Level ordering used everywhere: three ground sublevels, three excited
# sublevels, then the metastable singlet.
LEVEL_LABELS = ("G0", "G-1", "G+1", "E0", "E-1", "E+1", "S")
N_LEVELS = 7

# Projector onto the excited triplet; fluorescence is proportional to it.
EXCITED_PROJECTOR = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0])

# Index aliases into LEVEL_LABELS.
IDX_G0, IDX_GM1, IDX_GP1, IDX_E0, IDX_EM1, IDX_EP1, IDX_S = range(7)


@dataclass(frozen=True)
class RateConstants:
    """Spontaneous decay and pump rates of the 7-level model (MHz).

    Defaults are the accepted literature values for an orientation-averaged
    NV- ensemble; one-sigma uncertainties ride along for Monte-Carlo use.
    """

    gamma_rad: float = 65.9       # radiative E -> G decay
    k_1s: float = 53.3            # E(+-1) -> S intersystem crossing
    k_0s: float = 7.9             # E0 -> S intersystem crossing
    k_s0: float = 0.98            # S -> G0 decay
    k_s1: float = 0.73            # S -> G(+-1) decay, split evenly
    gamma_opt: float = 0.5        # optical excitation rate (laser dependent)

    sigma_gamma_rad: float = 1.9
    sigma_k_1s: float = 2.5
    sigma_k_0s: float = 1.4
    sigma_k_s0: float = 0.31
    sigma_k_s1: float = 0.11

    def __post_init__(self):
        for name in ("gamma_rad", "k_1s", "k_0s", "k_s0", "k_s1", "gamma_opt"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be non-negative")

    def with_gamma(self, gamma_opt: float) -> "RateConstants":
        if gamma_opt < 0:
            raise ValueError("gamma_opt must be non-negative")
        return RateConstants(
            self.gamma_rad, self.k_1s, self.k_0s, self.k_s0, self.k_s1,
            gamma_opt,
            self.sigma_gamma_rad, self.sigma_k_1s, self.sigma_k_0s,
            self.sigma_k_s0, self.sigma_k_s1,
        )


# Zero-field splitting interpretation. The tabulated source value carries an
# explicit /3 factor whose spin-operator convention is ambiguous; the
# physical mode restores the standard 2.87 GHz ground-state gap so that the
# 2*pi*2600 MHz work transition sits near B = 0.2 T.
ZFS_TABLE = "table"
ZFS_PHYSICAL = "physical"


@dataclass(frozen=True)
class SpinParams:
    """Ground/excited spin-1 Hamiltonian parameters.

    Angular frequencies in Mrad/s; field in Tesla; angle in degrees off the
    NV symmetry axis.
    """

    g_factor: float = 2.00
    mu_b: float = TWO_PI * 14.0e3          # Mrad/s per Tesla (2pi x 14.0 GHz/T)
    d_gs: float = TWO_PI * 2870.0 / 3.0    # tabulated ground splitting entry
    d_es: float = TWO_PI * 1440.0 / 3.0    # tabulated excited splitting entry
    b_field: float = 0.2
    theta_deg: float = 0.6
    zfs_mode: str = ZFS_PHYSICAL

    def zero_field_splittings(self) -> tuple[float, float]:
        """Return (ground, excited) zero-field splittings in Mrad/s."""
        if self.zfs_mode == ZFS_PHYSICAL:
            return 3.0 * self.d_gs, 3.0 * self.d_es
        if self.zfs_mode == ZFS_TABLE:
            return self.d_gs, self.d_es
        raise ValueError(f"unknown zfs_mode {self.zfs_mode!r}")


@dataclass(frozen=True)
class CalibrationParams:
    """Optical and microwave calibration constants with uncertainties."""

    r_khz_per_mw: float = 436.0            # excitation rate per laser power
    sigma_r_khz_per_mw: float = 25.0
    rabi_per_sqrt_mw: float = TWO_PI * 0.244   # Mrad/s per sqrt(mW)
    sigma_rabi_per_sqrt_mw: float = TWO_PI * 0.002
    cross_section_cm2: float = 3.1e-17
    sigma_cross_section_cm2: float = 0.8e-17
    spot_diameter_um: float = 2.2
    ground_singlet_thz: float = 89.0       # ground-singlet splitting, THz
    sigma_ground_singlet_thz: float = 10.0
    laser_wavelength_nm: float = 532.0

    def gamma_of_power(self, power_mw: float | np.ndarray):
        """Optical excitation rate (MHz) at a given laser power (mW)."""
        return self.r_khz_per_mw * 1e-3 * np.asarray(power_mw, dtype=float)


def gaussian_sigma_from_fwhm(fwhm: float) -> float:
    return fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def t2_star_from_fwhm(fwhm: float) -> float:
    """1/e ensemble free-induction decay time for a Gaussian detuning spread.

    <exp(i*delta*t)> = exp(-(sigma*t)^2/2) reaches 1/e at t = sqrt(2)/sigma,
    i.e. sqrt(16 ln 2)/fwhm. The default pair (2pi x 7 MHz, 75 ns) satisfies
    this relation.
    """
    if fwhm <= 0:
        raise ValueError("fwhm must be positive")
    return math.sqrt(2.0) / gaussian_sigma_from_fwhm(fwhm)
