"""Monte-Carlo propagation of parameter uncertainties and the one-sided
test for stochastic-bound violation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PropagationError
from .params import CalibrationParams, RateConstants


@dataclass(frozen=True)
class ParameterSample:
    """One draw of the uncertain inputs: decay rates, excitation-rate
    calibration, drive calibration and ensemble linewidth."""

    rates: RateConstants
    r_khz_per_mw: float
    rabi_per_sqrt_mw: float
    fwhm: float


def draw_samples(n_samples: int, seed: int,
                 rc: RateConstants | None = None,
                 cal: CalibrationParams | None = None,
                 fwhm: float | None = None,
                 sigma_fwhm: float | None = None) -> list[ParameterSample]:
    """Independent Gaussian draws around the defaults, truncated at zero
    (negative draws are rejected and redrawn). Deterministic in the seed;
    draws are made up front so evaluation order cannot change results."""
    rc = rc or RateConstants()
    cal = cal or CalibrationParams()
    if fwhm is None:
        fwhm = 2.0 * math.pi * 7.0
    if sigma_fwhm is None:
        sigma_fwhm = 0.1 * fwhm
    rng = np.random.default_rng(seed)

    def positive_normal(mean, sigma, size):
        out = rng.normal(mean, sigma, size)
        while np.any(out <= 0):
            bad = out <= 0
            out[bad] = rng.normal(mean, sigma, int(bad.sum()))
        return out

    cols = {
        "gamma_rad": positive_normal(rc.gamma_rad, rc.sigma_gamma_rad, n_samples),
        "k_1s": positive_normal(rc.k_1s, rc.sigma_k_1s, n_samples),
        "k_0s": positive_normal(rc.k_0s, rc.sigma_k_0s, n_samples),
        "k_s0": positive_normal(rc.k_s0, rc.sigma_k_s0, n_samples),
        "k_s1": positive_normal(rc.k_s1, rc.sigma_k_s1, n_samples),
        "r": positive_normal(cal.r_khz_per_mw, cal.sigma_r_khz_per_mw, n_samples),
        "rabi": positive_normal(cal.rabi_per_sqrt_mw, cal.sigma_rabi_per_sqrt_mw, n_samples),
        "fwhm": positive_normal(fwhm, sigma_fwhm, n_samples),
    }
    samples = []
    for i in range(n_samples):
        rates = RateConstants(
            gamma_rad=float(cols["gamma_rad"][i]),
            k_1s=float(cols["k_1s"][i]),
            k_0s=float(cols["k_0s"][i]),
            k_s0=float(cols["k_s0"][i]),
            k_s1=float(cols["k_s1"][i]),
            gamma_opt=rc.gamma_opt,
        )
        samples.append(ParameterSample(
            rates=rates,
            r_khz_per_mw=float(cols["r"][i]),
            rabi_per_sqrt_mw=float(cols["rabi"][i]),
            fwhm=float(cols["fwhm"][i]),
        ))
    return samples


@dataclass(frozen=True)
class PropagationResult:
    mean: float
    sigma: float
    percentiles: dict
    n_samples: int
    n_failed: int
    seed: int


def propagate(quantity, n_samples: int = 4096, seed: int = 0,
              rc: RateConstants | None = None,
              cal: CalibrationParams | None = None,
              max_failure_fraction: float = 0.01) -> PropagationResult:
    """Sample statistics of ``quantity(sample)`` over Monte-Carlo draws of
    the uncertain parameters. Evaluations may raise; more than
    ``max_failure_fraction`` failures aborts with PropagationError."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    samples = draw_samples(n_samples, seed, rc=rc, cal=cal)
    values = []
    n_failed = 0
    for sample in samples:
        try:
            values.append(float(quantity(sample)))
        except Exception:
            n_failed += 1
            if n_failed > max_failure_fraction * n_samples:
                raise PropagationError(
                    f"{n_failed} of {n_samples} evaluations failed")
    arr = np.asarray(values)
    pct = {p: float(np.percentile(arr, p)) for p in (2.5, 16, 50, 84, 97.5)}
    return PropagationResult(
        mean=float(arr.mean()), sigma=float(arr.std(ddof=1)),
        percentiles=pct, n_samples=n_samples, n_failed=n_failed, seed=seed)


def normal_tail(t: float) -> float:
    """One-sided upper tail of the standard normal, P(Z > t)."""
    return 0.5 * math.erfc(t / math.sqrt(2.0))


@dataclass(frozen=True)
class TestResult:
    t: float
    p: float


def bound_violation_test(p_measured: float, sigma_measured: float,
                         p_bound: float, sigma_bound: float) -> TestResult:
    """One-sided test of the null hypothesis P_measured - P_bound <= 0.

    t = (P_measured - P_bound) / sqrt(sigma_m^2 + sigma_b^2); small p
    rejects the null, i.e. the bound is violated.
    """
    if sigma_measured <= 0 or sigma_bound <= 0:
        raise ValueError("uncertainties must be positive")
    t = (p_measured - p_bound) / math.hypot(sigma_measured, sigma_bound)
    return TestResult(t=t, p=normal_tail(t))
