"""Microscopic heat engines in the NV- center level system.

Core package: 7-level optical rate model, emulated 4-level thermal baths,
Liouville-space two-stroke and continuous engine cycles, stochastic power
bounds, the fluorescence-to-power measurement chain, and Monte-Carlo
uncertainty propagation. A FastAPI service (nvengine.service) exposes the
computations; the command-line client (nvengine.cli) drives it.
"""

from .params import (
    CalibrationParams,
    RateConstants,
    SpinParams,
)
from .engine import (
    CycleConfig,
    DetuningDistribution,
    EngineLevels,
    PowerResult,
)
from .thermal_emulation import ThermalOperator, build_L
from .fluorescence import KappaResult, kappa
from .uncertainty import bound_violation_test, propagate

__version__ = "0.1.0"

__all__ = [
    "CalibrationParams",
    "RateConstants",
    "SpinParams",
    "CycleConfig",
    "DetuningDistribution",
    "EngineLevels",
    "PowerResult",
    "ThermalOperator",
    "build_L",
    "KappaResult",
    "kappa",
    "bound_violation_test",
    "propagate",
    "__version__",
]
