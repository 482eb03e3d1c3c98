"""Dense small-matrix kernels: exponentials, eigendecompositions, the
diagonalization-based pseudo-inverse, an adaptive ODE oracle, and Gaussian
ensemble averaging.

Everything operates on plain numpy arrays (n <= ~32). These are the
substrate routines for the rate-equation, reduced-bath, engine and
measurement-chain modules; all are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import DegeneracyError, StiffnessError


def _require_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def mat_exp(a: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(a*t) by scaling-and-squaring (Pade order 13 internally)."""
    a = _require_square(a)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    return expm(a * t)


def exp_integral(a: np.ndarray, t: float) -> np.ndarray:
    """integral_0^t exp(a*u) du, via the augmented-matrix exponential.

    Exact for any a (including singular a, where 1/a would not exist).
    """
    a = _require_square(a)
    n = a.shape[0]
    aug = np.zeros((2 * n, 2 * n), dtype=np.result_type(a.dtype, float))
    aug[:n, :n] = a
    aug[:n, n:] = np.eye(n)
    return expm(aug * t)[:n, n:]


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs ordered by descending real part of the eigenvalue.

    Eigenvectors are unit norm, with the sign/phase convention that the
    largest-magnitude component of each vector is real and positive.
    ``vectors[:, i]`` belongs to ``values[i]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.vectors @ np.diag(self.values) @ np.linalg.inv(self.vectors)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    pivot = v[k]
    if pivot == 0:
        return v
    return v * (np.conj(pivot) / abs(pivot))


def eig(a: np.ndarray, cond_limit: float = 1e12) -> EigenDecomposition:
    """Eigendecomposition with deterministic ordering and phase convention.

    Raises DegeneracyError when the eigenvector matrix is too ill-conditioned
    for the matrix to be treated as diagonalizable.
    """
    a = _require_square(a)
    values, vectors = np.linalg.eig(a)
    if np.linalg.cond(vectors) > cond_limit:
        raise DegeneracyError(
            "matrix is defective or near-defective "
            f"(eigenvector condition number exceeds {cond_limit:g})")
    order = np.lexsort((-values.imag, -values.real))
    values = values[order]
    vectors = vectors[:, order]
    for i in range(vectors.shape[1]):
        v = _fix_phase(vectors[:, i])
        vectors[:, i] = v / np.linalg.norm(v)
    return EigenDecomposition(values, vectors)


def pseudo_inverse(a: np.ndarray, zero_tol: float | None = None) -> np.ndarray:
    """Pseudo-inverse through diagonalization: a = U D U^-1, invert the
    eigenvalues with |D_ii| above ``zero_tol`` and zero the rest.

    Default tolerance is 1e-9 times the largest |eigenvalue|; the spectra
    this is used on have one analytically-zero eigenvalue well separated
    from the rest.
    """
    dec = eig(a)
    w = dec.values
    if zero_tol is None:
        zero_tol = 1e-9 * float(np.abs(w).max())
    inv_w = np.where(np.abs(w) > zero_tol, 1.0 / np.where(np.abs(w) > zero_tol, w, 1.0), 0.0)
    result = dec.vectors @ np.diag(inv_w) @ np.linalg.inv(dec.vectors)
    if np.all(np.isreal(a)) and np.allclose(result.imag, 0, atol=1e-9 * max(1.0, np.abs(result.real).max())):
        return result.real
    return result


def ode_propagate(generator, sigma0: np.ndarray, t_span,
                  rtol: float = 1e-10, atol: float = 1e-13) -> np.ndarray:
    """Adaptive integration of d(sigma)/dt = generator(t) @ sigma.

    ``generator`` may be a constant matrix or a callable t -> matrix.
    Serves as the independent oracle for matrix-exponential propagation and
    for periodic fixed points.
    """
    sigma0 = np.asarray(sigma0)
    if callable(generator):
        gen = generator
    else:
        g_const = _require_square(generator)
        gen = lambda t: g_const  # noqa: E731

    complex_input = np.iscomplexobj(sigma0) or np.iscomplexobj(gen(t_span[0]))
    y0 = sigma0.astype(complex if complex_input else float)

    def rhs(t, y):
        return gen(t) @ y

    sol = solve_ivp(rhs, (t_span[0], t_span[-1]), y0, method="DOP853",
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise StiffnessError(f"ODE integration failed: {sol.message}")
    return sol.y[:, -1]


def ode_cycle_map(stroke_generators, stroke_durations,
                  rtol: float = 1e-10, atol: float = 1e-13):
    """ODE-integrated affine map of one period of a piecewise-constant,
    possibly driven, linear system.

    Each stroke is (generator, drive) with drive a constant vector or None.
    Returns (A, b) such that one period maps sigma -> A @ sigma + b. Long
    Floquet runs are then exact matrix powers of this ODE-built map, keeping
    the route independent of the matrix-exponential path.
    """
    n = np.asarray(stroke_generators[0]).shape[0]
    A = np.eye(n, dtype=complex)
    b = np.zeros(n, dtype=complex)
    for gen, dur in zip(stroke_generators, stroke_durations):
        gen = np.asarray(gen, dtype=complex)
        cols = []
        for j in range(n):
            e = np.zeros(n, dtype=complex)
            e[j] = 1.0
            cols.append(ode_propagate(gen, e, (0.0, dur), rtol=rtol, atol=atol))
        step = np.stack(cols, axis=1)
        A = step @ A
        b = step @ b
    return A, b


def gauss_hermite_nodes(n_points: int, sigma: float):
    """Nodes/weights for averaging over a zero-mean normal of width sigma."""
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    x, w = np.polynomial.hermite.hermgauss(n_points)
    return math.sqrt(2.0) * sigma * x, w / math.sqrt(math.pi)


def gauss_average(f, fwhm: float, n_points: int = 41) -> float:
    """Average of f(delta) over a normal detuning distribution with the
    given full width at half maximum, by Gauss-Hermite quadrature.

    Appropriate for integrands smooth on the sigma scale; resonant
    integrands need the dense grids used by the engine module.
    """
    if fwhm <= 0:
        raise ValueError("fwhm must be positive")
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    nodes, weights = gauss_hermite_nodes(n_points, sigma)
    vals = np.array([f(x) for x in nodes], dtype=float)
    return float(np.dot(weights, vals))


def spectral_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a), 2))
