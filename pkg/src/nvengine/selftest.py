"""Golden-value self test: fixed reference numbers the build must
reproduce on a fresh checkout, runnable against overridden inputs as a
negative control."""

from __future__ import annotations

import numpy as np

from .config import RunConfig
from .export import CheckResult
from .numerics import eig
from .nv_model import optical_generator
from .thermal_emulation import build_L, gamma_derivative, transfer_rate
from .uncertainty import bound_violation_test

# Published eigenvalues of the optical generator at the 0.5 MHz reference
# excitation rate. The -74.28 entry is only consistent with the unrounded
# crossing rate (7.93 rather than the tabulated 7.9 MHz) and is checked at
# a widened tolerance; see notes in the acceptance suite.
GOLDEN_EIGENVALUES = [0.0, -0.15, -0.22, -1.84, -74.28, -119.47, -119.48]
EIGENVALUE_TOLERANCES = [0.02, 0.02, 0.02, 0.02, 0.05, 0.02, 0.02]

GOLDEN_L0 = np.array([
    [-0.05, 0.00, 0.00, 0.97],
    [0.00, -0.22, 0.00, 0.36],
    [0.00, 0.00, -0.22, 0.36],
    [0.05, 0.22, 0.22, -1.71],
])
GOLDEN_L1 = np.array([
    [-0.11, 0.00, 0.00, -0.01],
    [0.00, -0.45, 0.00, 0.00],
    [0.00, 0.00, -0.45, 0.00],
    [0.11, 0.45, 0.45, 0.00],
])


def run_selftest(cfg: RunConfig | None = None) -> list[CheckResult]:
    cfg = cfg or RunConfig()
    rc = cfg.rate_constants()
    checks = []

    vals = np.sort(eig(optical_generator(rc.with_gamma(cfg.gamma_ref_mhz)))
                   .values.real)[::-1]
    deltas = np.abs(vals - np.asarray(GOLDEN_EIGENVALUES))
    ok = bool(np.all(deltas <= EIGENVALUE_TOLERANCES))
    checks.append(CheckResult(
        "optical_generator_eigenvalues", ok,
        "max deviation {:.4f} MHz (per-entry deltas: {})".format(
            float(deltas.max()),
            ", ".join(f"{d:.4f}" for d in deltas))))

    op = build_L(rc, cfg.gamma_ref_mhz)
    d0 = np.abs(op.raw_matrix - GOLDEN_L0).max()
    checks.append(CheckResult(
        "reduced_bath_operator", bool(d0 <= 0.01),
        f"max entry deviation {d0:.4f} MHz"))

    l1 = gamma_derivative(rc, cfg.gamma_ref_mhz, step=0.01, raw=True)
    d1 = np.abs(l1 - GOLDEN_L1).max()
    checks.append(CheckResult(
        "reduced_bath_operator_derivative", bool(d1 <= 0.01),
        f"max entry deviation {d1:.4f} MHz/MHz"))

    rate = transfer_rate(build_L(rc, cfg.gamma_opt_mhz))
    checks.append(CheckResult(
        "work_pair_transfer_rate", bool(abs(rate - 0.41) <= 0.02),
        f"{rate:.4f} MHz at gamma = {cfg.gamma_opt_mhz} MHz (quoted 0.41)"))

    res = bound_violation_test(2.4, 1.0, 0.0, 1e-30)
    checks.append(CheckResult(
        "one_sided_significance", bool(abs(res.p - 0.0082) <= 1e-4),
        f"p(t=2.4) = {res.p:.5f}"))

    return checks
