"""Seven-level optical rate model of the NV- center.

Builds the transfer-rate matrix and the population-evolution generator,
applies the magnetic-field basis change through element-wise-squared
mixing weights, and provides steady states, fluorescence, the
laser-power calibration fit, and effective bath temperatures.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import DegeneracyError, FitError
from .numerics import eig, ode_propagate
from .params import (
    BOLTZMANN_KB,
    EXCITED_PROJECTOR,
    IDX_G0,
    IDX_GM1,
    IDX_GP1,
    IDX_S,
    N_LEVELS,
    PLANCK_H,
    RateConstants,
    SpinParams,
    TWO_PI,
)

# Spin-1 operators in the basis {+1, 0, -1}, S_z = diag(1, 0, -1).
SPIN_Z = np.diag([1.0, 0.0, -1.0])
SPIN_X = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / math.sqrt(2.0)
SPIN_Y = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]]) / math.sqrt(2.0)

# Mapping between the spin basis {+1, 0, -1} used for the Hamiltonians and
# the level ordering {G0, G-1, G+1} used by the rate matrix.
_SPIN_TO_LEVEL = {0: IDX_GP1, 1: IDX_G0, 2: IDX_GM1}


def build_rate_matrix(rc: RateConstants) -> np.ndarray:
    """Transfer-rate matrix R, R[i, j] = rate from level i to level j (MHz).

    Spin-preserving optical pumping G -> E at gamma_opt, radiative decay
    E -> G at gamma_rad, intersystem crossing E -> S, and singlet decay
    S -> G with the +-1 branch split evenly.
    """
    r = np.zeros((N_LEVELS, N_LEVELS))
    for i in range(3):
        r[i, 3 + i] = rc.gamma_opt
        r[3 + i, i] = rc.gamma_rad
    r[3 + 0, IDX_S] = rc.k_0s
    r[3 + 1, IDX_S] = rc.k_1s
    r[3 + 2, IDX_S] = rc.k_1s
    r[IDX_S, IDX_G0] = rc.k_s0
    r[IDX_S, IDX_GM1] = 0.5 * rc.k_s1
    r[IDX_S, IDX_GP1] = 0.5 * rc.k_s1
    return r


def build_generator(rate_matrix: np.ndarray) -> np.ndarray:
    """Population-evolution generator M with M[i, j] = R[j, i] for i != j
    and diagonal entries removing each level's total outflow.

    Columns sum to zero, so d(sigma)/dt = M sigma conserves population.
    """
    r = np.asarray(rate_matrix, dtype=float)
    if np.any(r < 0):
        raise ValueError("rate matrix entries must be non-negative")
    return r.T - np.diag(r.sum(axis=1))


def spin_hamiltonian(sp: SpinParams, manifold: str) -> np.ndarray:
    """Spin-1 Hamiltonian of the requested manifold in Mrad/s.

    Basis {+1, 0, -1}. Field of magnitude b_field tilted theta_deg off the
    symmetry axis; the Zeeman sign is chosen so the +1 sublevel is the one
    pulled below 0 for positive fields.
    """
    d_gs, d_es = sp.zero_field_splittings()
    if manifold == "ground":
        d = d_gs
    elif manifold == "excited":
        d = d_es
    else:
        raise ValueError("manifold must be 'ground' or 'excited'")
    theta = math.radians(sp.theta_deg)
    bz = sp.b_field * math.cos(theta)
    bx = sp.b_field * math.sin(theta)
    zeeman = sp.g_factor * sp.mu_b * (bz * SPIN_Z + bx * SPIN_X)
    return d * (SPIN_Z @ SPIN_Z) - zeeman


def mixing_weights(sp: SpinParams, manifold: str,
                   degeneracy_tol: float = 1e-6) -> np.ndarray:
    """Element-wise |U|^2 weights between zero-field and field eigenstates.

    Row i gives the zero-field-state composition of the field eigenstate
    assigned (by maximum overlap) to zero-field label i; rows and columns
    are doubly stochastic. Raises DegeneracyError at exact level crossings,
    where the weights are not well defined.
    """
    if sp.b_field == 0.0:
        return np.eye(3)
    h = spin_hamiltonian(sp, manifold)
    vals, vecs = np.linalg.eigh(h)
    if np.min(np.abs(np.diff(np.sort(vals)))) < degeneracy_tol:
        raise DegeneracyError(
            "spin levels are degenerate at this field; perturb b_field")
    overlap = np.abs(vecs) ** 2  # overlap[k, n]: zero-field k in eigenstate n
    assignment = np.argmax(overlap, axis=0)
    if sorted(assignment) != [0, 1, 2]:
        raise DegeneracyError(
            "ambiguous eigenstate labelling near a level crossing")
    weights = np.zeros((3, 3))
    for n in range(3):
        weights[assignment[n], :] = overlap[:, n]
    return weights


def zeeman_transform(rate_matrix: np.ndarray, sp: SpinParams) -> np.ndarray:
    """Rate matrix in the field eigenbasis: R -> W R W^T with W the
    block-diagonal |U|^2 mixing weights (identity on the singlet)."""
    w = np.eye(N_LEVELS)
    wg = _to_level_order(mixing_weights(sp, "ground"))
    we = _to_level_order(mixing_weights(sp, "excited"))
    w[0:3, 0:3] = wg
    w[3:6, 3:6] = we
    return w @ np.asarray(rate_matrix) @ w.T


def _to_level_order(weights_spin: np.ndarray) -> np.ndarray:
    """Reorder a {+1, 0, -1}-basis weight matrix to {G0, G-1, G+1} order."""
    order = [1, 2, 0]  # spin-basis rows picked for (G0, G-1, G+1)
    return weights_spin[np.ix_(order, order)]


def optical_generator(rc: RateConstants, sp: SpinParams | None = None) -> np.ndarray:
    """Generator M for the given rates, optionally in a magnetic field."""
    r = build_rate_matrix(rc)
    if sp is not None and sp.b_field != 0.0:
        r = zeeman_transform(r, sp)
    return build_generator(r)


def steady_state(generator: np.ndarray, gap_tol: float = 1e-9) -> np.ndarray:
    """Normalized null vector of a population-conserving generator."""
    dec = eig(generator)
    near_zero = np.abs(dec.values.real) < gap_tol
    if int(np.count_nonzero(near_zero)) > 1:
        raise DegeneracyError("generator has multiple stationary states")
    v = dec.vectors[:, 0].real
    total = v.sum()
    if abs(total) < 1e-12:
        raise DegeneracyError("stationary vector has zero total population")
    v = v / total
    if np.any(v < -1e-9):
        raise DegeneracyError("stationary vector has negative components")
    return v


def fluorescence_rate(sigma: np.ndarray) -> float:
    """Excited-triplet population; fluorescence up to a constant factor."""
    return float(EXCITED_PROJECTOR @ np.asarray(sigma))


def saturation_curve(powers_mw, r_khz_per_mw: float, amplitude: float,
                     rc: RateConstants | None = None) -> np.ndarray:
    """Model fluorescence vs laser power: amplitude times the steady-state
    excited population at gamma_opt = r * power."""
    rc = rc or RateConstants()
    powers = np.atleast_1d(np.asarray(powers_mw, dtype=float))
    out = np.empty_like(powers)
    for i, p in enumerate(powers):
        gen = optical_generator(rc.with_gamma(r_khz_per_mw * 1e-3 * p))
        out[i] = amplitude * fluorescence_rate(steady_state(gen))
    return out


@dataclass(frozen=True)
class CalibrationFit:
    r_khz_per_mw: float
    amplitude: float
    sigma_r: float
    sigma_amplitude: float
    residual_rms: float


def fit_gamma_calibration(powers_mw, fluorescence,
                          rc: RateConstants | None = None,
                          p0=(300.0, None)) -> CalibrationFit:
    """Least-squares fit of the saturation model to (power, fluorescence)
    data; returns the excitation rate per laser power and the overall
    fluorescence coefficient with residual-based one-sigma errors."""
    powers = np.asarray(powers_mw, dtype=float)
    fluor = np.asarray(fluorescence, dtype=float)
    if powers.size < 5:
        raise ValueError("need at least 5 calibration points")
    if np.any(powers < 0):
        raise ValueError("laser powers must be non-negative")
    rc = rc or RateConstants()

    def model(p, r, a):
        return saturation_curve(p, r, a, rc)

    a0 = p0[1]
    if a0 is None:
        ref = saturation_curve(powers.max() or 1.0, p0[0], 1.0, rc)[0]
        a0 = float(fluor.max() / ref) if ref > 0 else 1.0
    try:
        popt, pcov = curve_fit(
            model, powers, fluor, p0=(p0[0], a0),
            bounds=([1e-3, 0.0], [1e5, np.inf]), xtol=1e-10, maxfev=2000)
    except RuntimeError as exc:
        raise FitError(f"calibration fit did not converge: {exc}") from exc
    resid = fluor - model(powers, *popt)
    return CalibrationFit(
        r_khz_per_mw=float(popt[0]),
        amplitude=float(popt[1]),
        sigma_r=float(np.sqrt(pcov[0, 0])),
        sigma_amplitude=float(np.sqrt(pcov[1, 1])),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
    )


def read_saturation_csv(text: str):
    """Parse saturation data: header 'power_mW,fluorescence_counts'."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header[:2]] != ["power_mW", "fluorescence_counts"]:
        raise ValueError("expected header 'power_mW,fluorescence_counts'")
    powers, fluor = [], []
    for row in reader:
        if not row:
            continue
        powers.append(float(row[0]))
        fluor.append(float(row[1]))
    return np.array(powers), np.array(fluor)


@dataclass(frozen=True)
class EffectiveTemperatures:
    """Bath temperatures emulated by the optical cycle, in Kelvin.

    A negative-temperature flag marks pairs whose up-rate exceeds the
    down-rate (population inversion); that is physical here, not an error.
    """

    t_cold: float
    t_hot: float
    cold_inverted: bool
    hot_inverted: bool


def _pair_temperature(rate_up: float, rate_down: float, delta_e: float):
    if rate_up <= 0 or rate_down <= 0:
        raise ValueError("rates must be strictly positive")
    ratio = rate_up / rate_down
    if ratio == 1.0:
        return math.inf, False
    t = delta_e / (BOLTZMANN_KB * math.log(rate_down / rate_up))
    return t, ratio > 1.0


def effective_temperatures(thermal_matrix: np.ndarray,
                           ground_singlet_thz: float = 89.0) -> EffectiveTemperatures:
    """Temperatures of the emulated cold (G0 <-> S) and hot (G+-1 <-> S)
    baths from the up/down rate ratios of the reduced 4-level generator,
    using the ground-singlet energy splitting.

    rate_up/rate_down = exp(-dE / kB T) with dE = h * (splitting in THz).
    """
    lred = np.asarray(thermal_matrix, dtype=float)
    delta_e = PLANCK_H * ground_singlet_thz * 1e12
    cold_up, cold_down = lred[3, 0], lred[0, 3]
    hot_up = lred[3, 1] + lred[3, 2]
    hot_down = lred[1, 3] + lred[2, 3]
    t_cold, cold_inv = _pair_temperature(cold_up, cold_down, delta_e)
    t_hot, hot_inv = _pair_temperature(hot_up, hot_down, delta_e)
    return EffectiveTemperatures(t_cold, t_hot, cold_inv, hot_inv)


def steady_state_ode_oracle(generator: np.ndarray, t_final: float = 1e3) -> np.ndarray:
    """Long-time ODE relaxation from a uniform start; cross-check for
    steady_state."""
    n = generator.shape[0]
    sigma = ode_propagate(generator, np.full(n, 1.0 / n), (0.0, t_final))
    sigma = sigma.real
    return sigma / sigma.sum()
