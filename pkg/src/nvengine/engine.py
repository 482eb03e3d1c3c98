"""Liouville-space simulation of two-stroke and continuous microscopic heat
engines on the NV- work transition.

State vector basis: two coherences (rho_01, rho_10) of the G0 <-> G+1 work
pair followed by the populations, either the reduced 4-level set
{G0, G-1, G+1, S} (default, dimension 6) or the full 7-level set
(dimension 9). Work is extracted by a resonant drive on the inverted
G0/G+1 pair; the thermal stroke applies the emulated bath generator while
the drive is off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import ConstraintError, DegeneracyError
from .numerics import mat_exp, spectral_norm
from .params import (
    BOHR_MAGNETON_SI,
    HBAR,
    RateConstants,
    TWO_PI,
    VACUUM_PERMEABILITY,
    gaussian_sigma_from_fwhm,
    t2_star_from_fwhm,
)
from .thermal_emulation import ThermalOperator, build_L, transfer_rate

MODE_TWO_STROKE = "two_stroke"
MODE_DEPHASED = "dephased_two_stroke"
MODE_CONTINUOUS = "continuous"

# Indices of the driven populations in the Liouville ordering; identical for
# the 6- and 9-dimensional variants.
_IDX_C01, _IDX_C10, _IDX_P0 = 0, 1, 2
_IDX_P1 = 4

LONGEST_CYCLE_US = 0.18


@dataclass(frozen=True)
class EngineLevels:
    """Energies entering the work readout (Mrad/s). The upper work level is
    G0 at omega_10 above G+1; omega_12 is carried for completeness but
    multiplies components the cycle never changes."""

    omega_10: float = TWO_PI * 2600.0
    omega_12: float = 0.0

    def __post_init__(self):
        if self.omega_10 <= 0:
            raise ValueError("omega_10 must be positive")


@dataclass(frozen=True)
class DetuningDistribution:
    """Gaussian inhomogeneous detuning spread across the ensemble."""

    fwhm: float = TWO_PI * 7.0

    @property
    def sigma(self) -> float:
        return gaussian_sigma_from_fwhm(self.fwhm)

    @property
    def t2_star(self) -> float:
        return t2_star_from_fwhm(self.fwhm)


@dataclass(frozen=True)
class CycleConfig:
    """One engine operating point.

    omega/delta in Mrad/s, stroke times in us, gamma (optical excitation)
    and gamma_th (the bath coupling used for the action axis) in MHz.
    """

    omega: float
    tau_w: float
    tau_th: float
    gamma: float = 0.76
    gamma_th: float = 0.41
    delta: float = 0.0
    mode: str = MODE_TWO_STROKE

    def __post_init__(self):
        if self.tau_w < 0 or self.tau_th < 0:
            raise ValueError("stroke durations must be non-negative")
        if self.mode not in (MODE_TWO_STROKE, MODE_DEPHASED, MODE_CONTINUOUS):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def tau_cyc(self) -> float:
        return self.tau_w + self.tau_th

    @property
    def duty(self) -> float:
        if self.tau_cyc == 0:
            raise ValueError("zero-length cycle has no duty cycle")
        return self.tau_w / self.tau_cyc

    @classmethod
    def from_action(cls, action_hbar: float, duty: float, omega: float,
                    gamma: float = 0.76, gamma_th: float = 0.41,
                    mode: str = MODE_TWO_STROKE, delta: float = 0.0):
        """Operating point at a given action, using the closed-form action
        s = [omega*d + gamma_th*(1-d)] * tau_cyc."""
        if not 0 < duty < 1:
            raise ValueError("duty must be in (0, 1)")
        coeff = omega * duty + gamma_th * (1.0 - duty)
        if coeff <= 0:
            raise ValueError("action coefficient must be positive")
        tau_cyc = action_hbar / coeff
        return cls(omega=omega, tau_w=duty * tau_cyc,
                   tau_th=(1.0 - duty) * tau_cyc, gamma=gamma,
                   gamma_th=gamma_th, delta=delta, mode=mode)


@dataclass(frozen=True)
class PowerResult:
    """Ensemble work/power of one operating point, hbar = 1 units:
    work in hbar*Mrad/s, power in hbar*Mrad/s per us."""

    mode: str
    omega: float
    gamma: float
    gamma_th: float
    duty: float
    tau_cyc: float
    work_per_cycle: float
    power: float
    action_hbar: float
    action_formal: float
    bound: float


def _dim_of(pop_block: np.ndarray) -> int:
    return 2 + np.asarray(pop_block).shape[0]


def work_superoperator(omega: float, delta: float, dim: int = 6) -> np.ndarray:
    """Hermitian drive superoperator on (c01, c10, p0, p1), embedded in the
    full Liouville basis; zero on all other components."""
    h = np.zeros((dim, dim), dtype=complex)
    h[_IDX_C01, _IDX_C01] = -delta
    h[_IDX_C10, _IDX_C10] = delta
    half = 0.5 * omega
    h[_IDX_C01, _IDX_P0] = -half
    h[_IDX_C01, _IDX_P1] = half
    h[_IDX_C10, _IDX_P0] = half
    h[_IDX_C10, _IDX_P1] = -half
    h[_IDX_P0, _IDX_C01] = -half
    h[_IDX_P0, _IDX_C10] = half
    h[_IDX_P1, _IDX_C01] = half
    h[_IDX_P1, _IDX_C10] = -half
    return h


def dephasing_projector(dim: int = 6) -> np.ndarray:
    d = np.eye(dim)
    d[_IDX_C01, _IDX_C01] = 0.0
    d[_IDX_C10, _IDX_C10] = 0.0
    return d


def thermal_generator(pop_block: np.ndarray, gamma: float, delta: float) -> np.ndarray:
    """Thermal-stroke generator: coherences decay at the optical excitation
    rate and rotate at the detuning; populations evolve under the bath
    block (reduced 4-level operator or the full 7-level generator)."""
    pop_block = np.asarray(pop_block)
    dim = _dim_of(pop_block)
    gen = np.zeros((dim, dim), dtype=complex)
    gen[_IDX_C01, _IDX_C01] = -gamma
    gen[_IDX_C10, _IDX_C10] = -gamma
    gen[2:, 2:] = pop_block
    return gen - 1j * work_superoperator(0.0, delta, dim)


def work_generator(omega: float, delta: float, dim: int = 6) -> np.ndarray:
    """Work-stroke generator: purely coherent drive, no dissipator."""
    return -1j * work_superoperator(omega, delta, dim)


def cycle_propagator(cfg: CycleConfig, pop_block: np.ndarray) -> np.ndarray:
    """Propagator of one full cycle (work stroke first); the dephased mode
    erases coherences at the start and end of the work stroke."""
    if cfg.mode == MODE_CONTINUOUS:
        raise ValueError("the continuous mode has no cycle propagator")
    dim = _dim_of(pop_block)
    u_w = mat_exp(work_generator(cfg.omega, cfg.delta, dim), cfg.tau_w)
    u_th = mat_exp(thermal_generator(pop_block, cfg.gamma, cfg.delta), cfg.tau_th)
    if cfg.mode == MODE_DEPHASED:
        d = dephasing_projector(dim)
        return u_th @ d @ u_w @ d
    return u_th @ u_w


def periodic_steady_state(u_cycle: np.ndarray, gap_tol: float = 1e-9,
                          residual_tol: float = 1e-9) -> np.ndarray:
    """Fixed point of a cycle propagator: the eigenvector with eigenvalue
    closest to 1, normalized to unit population sum.

    Raises DegeneracyError when a second eigenvalue is within gap_tol of 1
    (the fixed point is then not unique)."""
    u_cycle = np.asarray(u_cycle)
    values, vectors = np.linalg.eig(u_cycle)
    order = np.argsort(np.abs(values - 1.0))
    if np.abs(values[order[1]] - 1.0) < gap_tol:
        raise DegeneracyError("cycle propagator has a degenerate fixed point")
    rho = vectors[:, order[0]]
    total = rho[2:].sum()
    if abs(total) < 1e-12:
        raise DegeneracyError("fixed point has zero total population")
    rho = rho / total
    if np.abs(rho[2:].imag).max() > 1e-7 or np.any(rho[2:].real < -1e-7):
        raise DegeneracyError("fixed point is not a physical population state")
    residual = np.linalg.norm(u_cycle @ rho - rho)
    if residual > residual_tol * max(1.0, np.linalg.norm(u_cycle)):
        raise DegeneracyError(f"fixed-point residual {residual:.2e} too large")
    # clean tiny numerical asymmetries
    rho[2:] = rho[2:].real
    rho[_IDX_C10] = np.conj(rho[_IDX_C01])
    return rho


def work_per_cycle(cfg: CycleConfig, pop_block: np.ndarray,
                   levels: EngineLevels) -> float:
    """Per-cycle work output at the configured detuning: the energy released
    on the work transition, omega_10 times the upper-level population drop
    over the work stroke, evaluated at the cycle's fixed point."""
    if cfg.omega == 0.0:
        return 0.0
    dim = _dim_of(pop_block)
    rho0 = periodic_steady_state(cycle_propagator(cfg, pop_block))
    if cfg.mode == MODE_DEPHASED:
        rho0 = dephasing_projector(dim) @ rho0
    u_w = mat_exp(work_generator(cfg.omega, cfg.delta, dim), cfg.tau_w)
    after = u_w @ rho0
    return levels.omega_10 * float(rho0[_IDX_P0].real - after[_IDX_P0].real)


def detuning_average(f, dist: DetuningDistribution, n_nodes: int = 1201,
                     span: float = 5.0) -> float:
    """Ensemble average int f(delta) N(delta) d delta for an even f.

    Dense mirrored trapezoid: the per-center response has resonant features
    much narrower than the ensemble width, so fixed low-order Gaussian
    quadrature is not usable here. f is assumed even in delta (true for all
    engine work functions; asserted in tests)."""
    if dist.fwhm <= 1e-12:
        return float(f(0.0))
    sigma = dist.sigma
    deltas = np.linspace(0.0, span * sigma, n_nodes)
    vals = np.array([f(d) for d in deltas], dtype=float)
    weights = np.exp(-deltas ** 2 / (2.0 * sigma ** 2)) / (math.sqrt(2.0 * math.pi) * sigma)
    return 2.0 * float(np.trapezoid(vals * weights, deltas))


@dataclass(frozen=True)
class ActionBreakdown:
    """Per-cycle action in units of hbar, plus the bath-rate readings that
    feed the closed-form expression."""

    simplified: float         # [omega*d + gamma_th*(1-d)] * tau_cyc
    formal: float             # integral of the generator operator norm
    gamma_th_config: float
    transfer_gamma: float     # work-pair population-transfer rate of L
    generator_norm_gamma: float


def action_per_cycle(cfg: CycleConfig, op: ThermalOperator) -> ActionBreakdown:
    """Closed-form and operator-norm readings of the cycle action."""
    tau_cyc = cfg.tau_cyc
    if tau_cyc == 0:
        return ActionBreakdown(0.0, 0.0, cfg.gamma_th,
                               transfer_rate(op), 0.0)
    duty = cfg.duty
    simplified = (cfg.omega * duty + cfg.gamma_th * (1.0 - duty)) * tau_cyc
    h1 = work_superoperator(cfg.omega, cfg.delta)
    h2 = thermal_generator(op.matrix, cfg.gamma, cfg.delta)
    norm_th = spectral_norm(h2)
    formal = spectral_norm(h1) * cfg.tau_w + norm_th * cfg.tau_th
    return ActionBreakdown(simplified, formal, cfg.gamma_th,
                           transfer_rate(op), norm_th)


def stochastic_bound_work(omega: float, tau_w: float, levels: EngineLevels) -> float:
    """Upper bound on the per-cycle work of any fully dephased engine with
    the same drive and stroke length: (1/4) omega_10 tau_w^2 omega^2."""
    return 0.25 * levels.omega_10 * tau_w ** 2 * omega ** 2


def stochastic_bound(cfg: CycleConfig, levels: EngineLevels) -> float:
    """Stochastic power bound (1/4) omega_10 d^2 omega^2 tau_cyc."""
    if cfg.tau_cyc == 0:
        return 0.0
    return stochastic_bound_work(cfg.omega, cfg.tau_w, levels) / cfg.tau_cyc


def ensemble_power(cfg: CycleConfig, op: ThermalOperator, levels: EngineLevels,
                   dist: DetuningDistribution, n_nodes: int = 1201,
                   full_generator: np.ndarray | None = None) -> PowerResult:
    """Detuning-averaged power of a stroke-mode engine.

    ``full_generator`` switches the population block from the reduced
    4-level operator to the full 7-level optical generator."""
    if cfg.mode == MODE_CONTINUOUS:
        raise ValueError("use continuous_power for the continuous mode")
    pop_block = op.matrix if full_generator is None else full_generator

    def w_of(delta):
        return work_per_cycle(replace(cfg, delta=delta), pop_block, levels)

    w_avg = detuning_average(w_of, dist, n_nodes=n_nodes)
    action = action_per_cycle(cfg, op)
    return PowerResult(
        mode=cfg.mode, omega=cfg.omega, gamma=cfg.gamma,
        gamma_th=cfg.gamma_th, duty=cfg.duty, tau_cyc=cfg.tau_cyc,
        work_per_cycle=w_avg, power=w_avg / cfg.tau_cyc,
        action_hbar=action.simplified, action_formal=action.formal,
        bound=stochastic_bound(cfg, levels),
    )


def continuous_steady_state(gen: np.ndarray, gap_tol: float = 1e-9) -> np.ndarray:
    """Null vector of a continuous-engine generator, unit population sum."""
    values, vectors = np.linalg.eig(gen)
    order = np.argsort(np.abs(values))
    if np.abs(values[order[1]]) < gap_tol:
        raise DegeneracyError("continuous generator has a degenerate null space")
    rho = vectors[:, order[0]]
    total = rho[2:].sum()
    if abs(total) < 1e-12:
        raise DegeneracyError("null vector has zero total population")
    rho = rho / total
    rho[2:] = rho[2:].real
    rho[_IDX_C10] = np.conj(rho[_IDX_C01])
    return rho


def continuous_power_single(omega_cont: float, pop_block: np.ndarray,
                            gamma_coh: float, delta: float,
                            levels: EngineLevels) -> float:
    """Power of a continuously driven engine at one detuning: the coherent
    energy flow out of the work transition at the generator's fixed point."""
    if omega_cont == 0.0:
        return 0.0
    dim = _dim_of(pop_block)
    gen = thermal_generator(pop_block, gamma_coh, delta) \
        + work_generator(omega_cont, 0.0, dim)
    rho = continuous_steady_state(gen)
    flow = work_generator(omega_cont, delta, dim) @ rho
    return -levels.omega_10 * float(flow[_IDX_P0].real)


def matched_continuous(cfg: CycleConfig, op: ThermalOperator):
    """Continuous-engine parameters time-average-matched to a two-stroke
    config: drive d*omega, and the thermal generator (bath block and
    coherence decay together) scaled by the thermal-stroke fraction (1-d).

    Scaling the generator, rather than re-deriving the bath at a reduced
    excitation rate, is what makes the two-stroke cycle converge to the
    continuous engine as the action goes to zero."""
    duty = cfg.duty
    return duty * cfg.omega, (1.0 - duty) * op.matrix, (1.0 - duty) * cfg.gamma


def continuous_power(omega_cont: float, pop_block: np.ndarray, gamma_coh: float,
                     levels: EngineLevels, dist: DetuningDistribution,
                     n_nodes: int = 1201) -> PowerResult:
    """Detuning-averaged continuous-engine power."""
    p_avg = detuning_average(
        lambda d: continuous_power_single(omega_cont, pop_block, gamma_coh, d, levels),
        dist, n_nodes=n_nodes)
    return PowerResult(
        mode=MODE_CONTINUOUS, omega=omega_cont, gamma=gamma_coh,
        gamma_th=math.nan, duty=math.nan, tau_cyc=math.nan,
        work_per_cycle=math.nan, power=p_avg,
        action_hbar=0.0, action_formal=0.0, bound=math.nan,
    )


def dephased_work_expansion(cfg: CycleConfig, state: np.ndarray,
                            levels: EngineLevels) -> float:
    """Small-action dephased work: (1/4) omega_10 tau_w^2 omega^2 times the
    work-pair inversion of the given state; exact dephased work differs
    from this at relative order (s/hbar)^2."""
    state = np.asarray(state)
    inversion = float(state[_IDX_P0].real - state[_IDX_P1].real)
    return 0.25 * levels.omega_10 * cfg.tau_w ** 2 * cfg.omega ** 2 * inversion


def solve_gamma_for_transfer_action(rc: RateConstants, tau_th: float,
                                    target_action: float,
                                    gamma_range=(1e-4, 50.0)) -> float:
    """Optical excitation rate at which the thermal-stroke population
    transfer action equals the target: transfer_rate(L(gamma)) * tau_th."""
    if tau_th <= 0 or target_action <= 0:
        raise ConstraintError("tau_th and target action must be positive")

    def defect(gamma):
        return transfer_rate(build_L(rc, gamma)) * tau_th - target_action

    lo, hi = gamma_range
    try:
        return float(brentq(defect, lo, hi, xtol=1e-10, rtol=1e-12))
    except ValueError as exc:
        raise ConstraintError(
            f"no excitation rate in [{lo}, {hi}] gives transfer action "
            f"{target_action} at tau_th={tau_th}") from exc


def decoherence_sweep(rc: RateConstants, levels: EngineLevels,
                      dist: DetuningDistribution, tau_th_grid,
                      omega: float = 1.6, tau_w: float = 0.01,
                      pop_action: float = 0.05, n_nodes: int = 1201):
    """Work vs thermal-stroke duration at fixed coherent and fixed
    population-transfer action: only the dephasing exposure grows with
    tau_th. Returns rows (tau_th, tau_th/t2*, gamma, work, bound_work)."""
    thermal_target = pop_action - omega * tau_w
    if thermal_target <= 0:
        raise ConstraintError("pop_action must exceed the work-stroke action")
    t2 = dist.t2_star
    bound_w = stochastic_bound_work(omega, tau_w, levels)
    rows = []
    for tau_th in np.asarray(tau_th_grid, dtype=float):
        gamma = solve_gamma_for_transfer_action(rc, tau_th, thermal_target)
        op = build_L(rc, gamma)
        cfg = CycleConfig(omega=omega, tau_w=tau_w, tau_th=tau_th, gamma=gamma,
                          mode=MODE_TWO_STROKE)
        res = ensemble_power(cfg, op, levels, dist, n_nodes=n_nodes)
        rows.append((float(tau_th), float(tau_th / t2), gamma,
                     res.work_per_cycle, bound_w))
    return rows


@dataclass(frozen=True)
class T2Estimate:
    t2_us: float
    exceeds_cycle_times: bool


def homogeneous_t2_estimate(density_cm3: float) -> T2Estimate:
    """Dipolar spin-bath coherence time 1/(alpha n) with
    alpha = mu0 g^2 mu_B^2 / (4 pi hbar); flags whether it exceeds the
    longest cycle time so homogeneous dephasing can be neglected."""
    if density_cm3 <= 0:
        raise ValueError("density must be positive")
    g_s = 2.0
    alpha = VACUUM_PERMEABILITY * g_s ** 2 * BOHR_MAGNETON_SI ** 2 \
        / (4.0 * math.pi * HBAR)          # m^3 / s
    n_m3 = density_cm3 * 1e6
    t2_s = 1.0 / (alpha * n_m3)
    t2_us = t2_s * 1e6
    return T2Estimate(t2_us, t2_us > LONGEST_CYCLE_US)
