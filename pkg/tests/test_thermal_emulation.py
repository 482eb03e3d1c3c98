import numpy as np
import pytest

from nvengine.numerics import mat_exp
from nvengine.nv_model import optical_generator, steady_state
from nvengine.params import RateConstants
from nvengine.thermal_emulation import (
    REDUCTION_PROJECTOR,
    bath_rates,
    build_L,
    default_validation_state,
    emulation_error,
    emulation_error_surface,
    gamma_derivative,
    partition_eigenpairs,
    transfer_rate,
)

# Published reduced operator at the 0.5 MHz reference excitation rate and
# its derivative with excitation rate (both to print precision).
L0_PUBLISHED = np.array([
    [-0.05, 0.00, 0.00, 0.97],
    [0.00, -0.22, 0.00, 0.36],
    [0.00, 0.00, -0.22, 0.36],
    [0.05, 0.22, 0.22, -1.71],
])
L1_PUBLISHED = np.array([
    [-0.11, 0.00, 0.00, -0.01],
    [0.00, -0.45, 0.00, 0.00],
    [0.00, 0.00, -0.45, 0.00],
    [0.11, 0.45, 0.45, 0.00],
])

SLOW_EIGS = [0.0, -0.15, -0.22, -1.84]
FAST_EIGS = [-74.28, -119.47, -119.48]


def test_projector_shape_and_orthogonality():
    p = REDUCTION_PROJECTOR
    assert p.shape == (4, 7)
    np.testing.assert_array_equal(p.sum(axis=1), np.ones(4))
    np.testing.assert_allclose(p @ p.T, np.eye(4), atol=1e-14)


def test_partition_reference_point(generator_05):
    part = partition_eigenpairs(generator_05)
    np.testing.assert_allclose(part.slow_values.real, SLOW_EIGS, atol=0.01)
    np.testing.assert_allclose(part.fast_values.real, FAST_EIGS, atol=0.04)
    assert part.margin >= 10.0


def test_partition_slow_vectors_have_small_excited_weight(generator_05):
    part = partition_eigenpairs(generator_05)
    for i in range(4):
        v = np.abs(part.slow_vectors[:, i])
        assert v[3:6].max() <= 0.1 * v.max()


def test_partition_first_slow_vector(generator_05):
    part = partition_eigenpairs(generator_05)
    v = part.slow_vectors[:, 0].real
    published = [0.99, 0.09, 0.09, 0.01, 0.00, 0.00, 0.06]
    np.testing.assert_allclose(v, published, atol=0.01)


def test_partition_survives_weak_pumping(rates):
    part = partition_eigenpairs(optical_generator(rates.with_gamma(1e-3)))
    assert part.slow_values.size == 4


def test_reduced_operator_golden_values(rates):
    op = build_L(rates, 0.5)
    np.testing.assert_allclose(op.raw_matrix, L0_PUBLISHED, atol=0.01)
    l1 = gamma_derivative(rates, 0.5, step=0.01, raw=True)
    np.testing.assert_allclose(l1, L1_PUBLISHED, atol=0.01)


def test_conservation_correction(rates):
    op = build_L(rates, 0.5)
    np.testing.assert_allclose(op.matrix.sum(axis=0), 0.0, atol=1e-10)
    # the correction touches only the diagonal
    off_raw = op.raw_matrix - np.diag(np.diag(op.raw_matrix))
    off_cor = op.matrix - np.diag(np.diag(op.matrix))
    np.testing.assert_allclose(off_raw, off_cor, atol=1e-14)


def test_thermal_axioms_on_operating_range(rates):
    # up-rates stay below down-rates up to ~0.8 MHz pumping; beyond that the
    # emulated hot bath passes through infinite temperature
    for gamma in np.linspace(0.05, 0.8, 16):
        op = build_L(rates, float(gamma))
        assert op.thermal_axioms_ok, f"axioms fail at gamma={gamma}"
        l = op.matrix
        off = l - np.diag(np.diag(l))
        assert np.all(off >= -1e-12)
        assert np.all(np.diag(l) <= 1e-12)
    assert not build_L(rates, 1.0).thermal_axioms_ok


def test_reduced_eigenvalues_match_slow_eigenvalues(rates, generator_05):
    part = partition_eigenpairs(generator_05)
    op = build_L(rates, 0.5)
    raw_eigs = np.sort(np.linalg.eigvals(op.raw_matrix).real)[::-1]
    np.testing.assert_allclose(raw_eigs, part.slow_values.real, atol=1e-6)
    cor_eigs = np.sort(np.linalg.eigvals(op.matrix).real)[::-1]
    np.testing.assert_allclose(cor_eigs, part.slow_values.real, atol=0.02)


def test_reduced_fixed_point_consistency(rates, generator_05):
    # e^{Lt} P sigma_i stays consistent with the slow eigenvalue decay
    part = partition_eigenpairs(generator_05)
    op = build_L(rates, 0.5)
    for i in range(4):
        psig = REDUCTION_PROJECTOR @ part.slow_vectors[:, i]
        lhs = mat_exp(op.raw_matrix, 0.7) @ psig
        rhs = np.exp(part.slow_values[i] * 0.7) * psig
        assert np.linalg.norm(lhs - rhs) < 1e-8


def test_zero_pump_limit_structure(rates):
    op = build_L(rates, 1e-6)
    l = op.matrix
    # no pumping: only singlet decay survives
    np.testing.assert_allclose(np.diag(l)[:3], 0.0, atol=1e-4)
    assert l[0, 3] == pytest.approx(rates.k_s0, abs=1e-3)
    assert l[1, 3] == pytest.approx(0.5 * rates.k_s1, abs=1e-3)


def test_transfer_rate_reproduces_quoted_bath_coupling(rates):
    # work-pair transfer rate at the operating excitation rate matches the
    # quoted 0.41 +- 0.02 MHz bath coupling
    assert transfer_rate(build_L(rates, 0.76)) == pytest.approx(0.41, abs=0.02)


def test_emulation_error_zero_at_t_zero(rates, generator_05):
    op = build_L(rates, 0.5)
    sigma0 = default_validation_state()
    err = emulation_error(generator_05, op, sigma0, [0.0])
    assert err[0] < 1e-10


def test_emulation_error_grows_from_zero(rates, generator_05):
    # the error rises from zero on the fast-relaxation scale (the excited
    # transient), overshoots near 0.03 us, then drifts up slowly; assert the
    # initial rise and that it stays positive
    op = build_L(rates, 0.5)
    sigma0 = default_validation_state()
    t = np.linspace(0.0, 0.03, 7)
    err = emulation_error(generator_05, op, sigma0, t)
    assert np.all(np.diff(err) > 0)
    late = emulation_error(generator_05, op, sigma0, [0.5, 10.0])
    assert np.all(late > 0)


def test_emulation_error_surface_below_half_percent(rates):
    sigma0 = default_validation_state()
    surface = emulation_error_surface(
        rates, sigma0, np.linspace(0.0, 10.0, 21), np.linspace(0.0, 1.0, 11))
    assert surface.max() < 0.5


def test_bath_rates_zero_pump_limit(rates):
    hot, cold = bath_rates(build_L(rates, 1e-6))
    assert cold == pytest.approx(rates.k_s0, abs=1e-3)
    assert hot == pytest.approx(rates.k_s1, abs=1e-3)


def test_bath_rates_monotone_in_pumping(rates):
    gammas = np.linspace(0.1, 1.0, 10)
    hots, colds = zip(*(bath_rates(build_L(rates, float(g))) for g in gammas))
    assert np.all(np.diff(hots) > 0)
    assert np.all(np.diff(colds) > 0)
    assert min(hots) > 0 and min(colds) > 0


def test_reduced_steady_state_matches_full_model(rates):
    # the reduced operator reproduces the full model's ground+singlet
    # steady-state populations
    gen = optical_generator(rates.with_gamma(0.5))
    full = REDUCTION_PROJECTOR @ steady_state(gen)
    op = build_L(rates, 0.5)
    red = steady_state(op.matrix)
    np.testing.assert_allclose(red, full / full.sum(), atol=2e-3)
