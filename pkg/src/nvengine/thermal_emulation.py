"""Reduction of the 7-level optical cycle to an effective 4-level thermal
generator on {G0, G-1, G+1, S}.

The slow eigenpairs of the optical generator (the ones with negligible
excited-state weight) determine a reduced operator L that reproduces the
ground+singlet dynamics; after a minimal population-conservation
correction it satisfies thermal-operator axioms over the operating range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PartitionError, ReductionError
from .numerics import eig, mat_exp
from .params import RateConstants
from .nv_model import optical_generator

# 4x7 projector selecting {G0, G-1, G+1, S} from the 7-level basis.
REDUCTION_PROJECTOR = np.zeros((4, 7))
REDUCTION_PROJECTOR[0, 0] = 1.0
REDUCTION_PROJECTOR[1, 1] = 1.0
REDUCTION_PROJECTOR[2, 2] = 1.0
REDUCTION_PROJECTOR[3, 6] = 1.0

N_SLOW = 4


@dataclass(frozen=True)
class SlowFastPartition:
    """Slow (ground+singlet) and fast (excited-dominated) eigenpairs of the
    optical generator, with the classification margin that separated them."""

    slow_values: np.ndarray
    slow_vectors: np.ndarray
    fast_values: np.ndarray
    fast_vectors: np.ndarray
    margin: float


def partition_eigenpairs(generator: np.ndarray,
                         min_margin: float = 2.0) -> SlowFastPartition:
    """Split the 7 eigenpairs into 4 slow and 3 fast by the ratio of
    excited-state weight to total weight of each eigenvector.

    The margin is the gap (ratio of excited-weight fractions) between the
    two groups; below ``min_margin`` the classification is ambiguous.
    """
    dec = eig(np.asarray(generator))
    excited_frac = np.empty(7)
    for i in range(7):
        v = np.abs(dec.vectors[:, i])
        excited_frac[i] = v[3:6].max() / v.max()
    order = np.argsort(excited_frac)
    slow_idx, fast_idx = order[:N_SLOW], order[N_SLOW:]
    margin = float(excited_frac[fast_idx].min()
                   / max(excited_frac[slow_idx].max(), 1e-300))
    if margin < min_margin:
        raise PartitionError(
            f"slow/fast classification margin {margin:.2f} is below {min_margin}")
    slow_order = slow_idx[np.argsort(-dec.values.real[slow_idx])]
    fast_order = fast_idx[np.argsort(-dec.values.real[fast_idx])]
    return SlowFastPartition(
        slow_values=dec.values[slow_order],
        slow_vectors=dec.vectors[:, slow_order],
        fast_values=dec.values[fast_order],
        fast_vectors=dec.vectors[:, fast_order],
        margin=margin,
    )


@dataclass(frozen=True)
class ThermalOperator:
    """Effective 4-level bath generator on {G0, G-1, G+1, S} (MHz).

    ``matrix`` is population conserving (columns sum to zero after the
    minimal diagonal correction); ``raw_matrix`` is the uncorrected
    eigen-construction, which leaks slightly into the excited manifold.
    ``thermal_axioms_ok`` records whether all up-rates stay below the
    corresponding down-rates (it fails by design once the pumping is strong
    enough to invert the hot pair).
    """

    matrix: np.ndarray
    raw_matrix: np.ndarray
    gamma_ref: float
    thermal_axioms_ok: bool

    @property
    def conservation_corrected(self) -> bool:
        return True


def _axioms_hold(lmat: np.ndarray, tol: float = 1e-9) -> bool:
    off_ok = True
    n = lmat.shape[0]
    for i in range(n):
        for j in range(n):
            if i == j:
                off_ok &= lmat[i, i] <= tol
            else:
                off_ok &= lmat[i, j] >= -tol
    # up-rate (into the energetically higher singlet) must not exceed the
    # down-rate for each ground<->singlet pair
    for g in range(3):
        off_ok &= lmat[3, g] <= lmat[g, 3] + tol
    return bool(off_ok)


def build_reduced_operator(generator: np.ndarray,
                           gamma_ref: float = 0.5) -> ThermalOperator:
    """Reduced 4-level generator determined by the four slow eigenpairs:
    L has eigenvectors P sigma_i with the slow eigenvalues lambda_i.

    Population conservation is then imposed by the minimal change, adding
    each column's residual sum to its diagonal entry only.
    """
    part = partition_eigenpairs(generator)
    reduced = REDUCTION_PROJECTOR @ part.slow_vectors
    if np.linalg.cond(reduced) > 1e10:
        raise ReductionError("reduced slow eigenvectors are near-singular")
    raw = (reduced @ np.diag(part.slow_values) @ np.linalg.inv(reduced)).real
    corrected = raw - np.diag(raw.sum(axis=0))
    return ThermalOperator(
        matrix=corrected,
        raw_matrix=raw,
        gamma_ref=gamma_ref,
        thermal_axioms_ok=_axioms_hold(corrected),
    )


def build_L(rc: RateConstants, gamma_opt: float | None = None) -> ThermalOperator:
    """Thermal operator at the given optical excitation rate."""
    gamma = rc.gamma_opt if gamma_opt is None else gamma_opt
    return build_reduced_operator(optical_generator(rc.with_gamma(gamma)),
                                  gamma_ref=gamma)


def gamma_derivative(rc: RateConstants, gamma_ref: float = 0.5,
                     step: float = 0.01, raw: bool = True) -> np.ndarray:
    """Central finite-difference d L / d gamma_opt at the expansion point."""
    hi = build_L(rc, gamma_ref + step)
    lo = build_L(rc, gamma_ref - step)
    a = hi.raw_matrix if raw else hi.matrix
    b = lo.raw_matrix if raw else lo.matrix
    return (a - b) / (2.0 * step)


def transfer_rate(op: ThermalOperator) -> float:
    """Total thermal population-transfer rate acting on the work transition:
    the pumping-out rates of G0 and G+1 combined.

    This is the bath coupling rate that multiplies the thermal-stroke
    duration in the engine's population-transfer action; at the operating
    excitation rate it reproduces the quoted 0.41 MHz coupling.
    """
    l = op.matrix
    return float(abs(l[0, 0]) + abs(l[2, 2]))


def emulation_error(generator: np.ndarray, op: ThermalOperator,
                    sigma0: np.ndarray, t_grid, norm: str = "l2") -> np.ndarray:
    """Percent population difference between reduced and full evolution,
    || P exp(M t) sigma0 - exp(L t) P sigma0 || over the time grid.

    Euclidean norm by default ('l1' selects the summed absolute
    difference), expressed in percent of total population.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    out = np.empty(t_grid.size)
    for k, t in enumerate(t_grid):
        full = REDUCTION_PROJECTOR @ (mat_exp(generator, t) @ sigma0)
        red = mat_exp(op.matrix, t) @ (REDUCTION_PROJECTOR @ sigma0)
        diff = full - red
        if norm == "l1":
            out[k] = 100.0 * float(np.abs(diff).sum())
        elif norm == "l2":
            out[k] = 100.0 * float(np.linalg.norm(diff))
        else:
            raise ValueError("norm must be 'l1' or 'l2'")
    return out


def default_validation_state(excited_fraction: float = 0.005) -> np.ndarray:
    """Equal ground+singlet populations with a small excited admixture."""
    sigma = np.empty(7)
    sigma[[0, 1, 2, 6]] = (1.0 - excited_fraction) / 4.0
    sigma[3:6] = excited_fraction / 3.0
    return sigma


def emulation_error_surface(rc: RateConstants, sigma0, t_grid, gamma_grid,
                            norm: str = "l2") -> np.ndarray:
    """Error surface over (gamma, t); row k belongs to gamma_grid[k]."""
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    rows = []
    for gamma in gamma_grid:
        gamma = max(float(gamma), 1e-9)
        gen = optical_generator(rc.with_gamma(gamma))
        op = build_L(rc, gamma)
        rows.append(emulation_error(gen, op, sigma0, t_grid, norm=norm))
    return np.vstack(rows)


def bath_rates(op: ThermalOperator) -> tuple[float, float]:
    """(hot, cold) thermalization rates of the emulated baths: the sum of
    up and down rates for the G+-1 <-> S channels and the G0 <-> S channel."""
    l = op.matrix
    cold = l[3, 0] + l[0, 3]
    hot = (l[3, 1] + l[1, 3]) + (l[3, 2] + l[2, 3])
    return float(hot), float(cold)
