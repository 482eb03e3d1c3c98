import math

import numpy as np
import pytest

from nvengine.errors import DegeneracyError
from nvengine.numerics import eig
from nvengine.params import (
    IDX_G0,
    IDX_GP1,
    IDX_S,
    RateConstants,
    SpinParams,
    ZFS_TABLE,
)
from nvengine.nv_model import (
    build_generator,
    build_rate_matrix,
    effective_temperatures,
    fit_gamma_calibration,
    fluorescence_rate,
    mixing_weights,
    optical_generator,
    read_saturation_csv,
    saturation_curve,
    spin_hamiltonian,
    steady_state,
    steady_state_ode_oracle,
    zeeman_transform,
)
from nvengine.thermal_emulation import build_L

# Computed eigenvalues of the generator at the 0.5 MHz reference point
# (regression values, frozen from this implementation).
REFERENCE_EIGS = [0.0, -0.14632315, -0.22305559, -1.84203799,
                  -74.24607970, -119.47555915, -119.47694441]


def test_rate_matrix_entries(rates):
    r = build_rate_matrix(rates.with_gamma(0.5))
    assert r[3, IDX_S] == pytest.approx(7.9)       # E0 -> S
    assert r[5, IDX_S] == pytest.approx(53.3)      # E+1 -> S
    assert r[IDX_S, IDX_G0] == pytest.approx(0.98)
    assert r[IDX_S, IDX_GP1] == pytest.approx(0.365)
    assert r[0, 3] == pytest.approx(0.5)


def test_rate_matrix_zero_pump_block(rates):
    r = build_rate_matrix(rates.with_gamma(0.0))
    assert np.all(r[0:3, 3:6] == 0.0)


def test_rate_matrix_nonzero_count(rates):
    # 3 pump + 3 radiative + 3 crossing + 3 singlet-decay entries
    r = build_rate_matrix(rates.with_gamma(0.5))
    assert np.count_nonzero(r) == 12


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        RateConstants(gamma_rad=-1.0)


def test_generator_columns_sum_to_zero(rates):
    m = build_generator(build_rate_matrix(rates.with_gamma(0.5)))
    np.testing.assert_allclose(m.sum(axis=0), 0.0, atol=1e-12)
    off = m - np.diag(np.diag(m))
    assert np.all(off >= 0.0)


def test_zero_rates_give_zero_generator():
    np.testing.assert_array_equal(build_generator(np.zeros((7, 7))), 0.0)


def test_generator_eigenvalues_regression(generator_05):
    vals = np.sort(eig(generator_05).values.real)[::-1]
    np.testing.assert_allclose(vals, REFERENCE_EIGS, rtol=0, atol=1e-6)


def test_reference_eigenvalue_consistency_with_unrounded_crossing_rate(rates):
    # With k_0s = 7.93 (inside its quoted error bar) every entry of the
    # published eigenvalue list is reproduced to print precision; the
    # tabulated 7.9 shifts the -74.28 entry to -74.25. See the acceptance
    # suite for the strict golden comparison.
    published = [0.0, -0.15, -0.22, -1.84, -74.28, -119.47, -119.48]
    rc = RateConstants(k_0s=7.93).with_gamma(0.5)
    vals = np.sort(eig(optical_generator(rc)).values.real)[::-1]
    np.testing.assert_allclose(vals, published, atol=0.01)


def test_spin_hamiltonian_zero_field(spin_params):
    sp = SpinParams(b_field=0.0)
    h = spin_hamiltonian(sp, "ground")
    d = sp.zero_field_splittings()[0]
    np.testing.assert_allclose(h, np.diag([d, 0.0, d]), atol=1e-12)


def test_spin_hamiltonian_hermitian(spin_params):
    for manifold in ("ground", "excited"):
        h = spin_hamiltonian(spin_params, manifold)
        np.testing.assert_allclose(h, h.conj().T, atol=1e-9)


def test_plus_one_level_is_lowered(spin_params):
    # the work transition: +1 pulled below 0 under the applied field
    h = spin_hamiltonian(spin_params, "ground")
    vals = np.linalg.eigvalsh(h)
    d = spin_params.zero_field_splittings()[0]
    zeeman = spin_params.g_factor * spin_params.mu_b * spin_params.b_field
    assert vals.min() == pytest.approx(d - zeeman, rel=1e-3)


def test_ground_anticrossing_near_expected_field():
    # +1 crosses 0 where the Zeeman shift equals the zero-field splitting,
    # near 0.1 T; the small tilt turns it into an avoided crossing.
    gaps = []
    fields = np.linspace(0.08, 0.13, 201)
    for b in fields:
        h = spin_hamiltonian(SpinParams(b_field=b), "ground")
        vals = np.sort(np.linalg.eigvalsh(h))
        gaps.append(vals[1] - vals[0])
    b_min = fields[int(np.argmin(gaps))]
    assert 0.095 < b_min < 0.11
    assert min(gaps) > 0.0


def test_excited_anticrossing_near_half_field():
    gaps = []
    fields = np.linspace(0.035, 0.07, 201)
    for b in fields:
        h = spin_hamiltonian(SpinParams(b_field=b), "excited")
        vals = np.sort(np.linalg.eigvalsh(h))
        gaps.append(vals[1] - vals[0])
    b_min = fields[int(np.argmin(gaps))]
    assert 0.045 < b_min < 0.058


def test_table_mode_scales_down_splitting():
    ph = SpinParams(b_field=0.0).zero_field_splittings()[0]
    tab = SpinParams(b_field=0.0, zfs_mode=ZFS_TABLE).zero_field_splittings()[0]
    assert ph == pytest.approx(3.0 * tab)


def test_work_transition_frequency_near_operating_point():
    # at 0.2 T the 0 <-> +1 gap sits near 2pi x 2730 Mrad/s, close to the
    # 2pi x 2600 MHz operating frequency (exact at ~0.195 T)
    h = spin_hamiltonian(SpinParams(b_field=0.1954), "ground")
    vals = np.sort(np.linalg.eigvalsh(h))
    gap = vals[1] - vals[0]
    assert gap == pytest.approx(2 * math.pi * 2600.0, rel=0.01)


def test_mixing_weights_doubly_stochastic(spin_params):
    for manifold in ("ground", "excited"):
        w = mixing_weights(spin_params, manifold)
        np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-10)
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-10)


def test_zeeman_transform_identity_at_zero_field(rates):
    r = build_rate_matrix(rates.with_gamma(0.5))
    sp = SpinParams(b_field=0.0, theta_deg=0.0)
    np.testing.assert_allclose(zeeman_transform(r, sp), r, atol=1e-12)


def test_zeeman_transform_preserves_block_outflows(rates, spin_params):
    r = build_rate_matrix(rates.with_gamma(0.5))
    rt = zeeman_transform(r, spin_params)
    # total outflow of each manifold block is invariant
    np.testing.assert_allclose(rt[0:3, 3:6].sum(axis=1),
                               r[0:3, 3:6].sum(axis=1), atol=1e-10)
    np.testing.assert_allclose(rt[3:6, 0:3].sum(axis=1),
                               r[3:6, 0:3].sum(axis=1), atol=1e-10)
    assert rt[IDX_S, IDX_S] == pytest.approx(0.0, abs=1e-12)


def test_zeeman_transform_degeneracy_guard(rates):
    r = build_rate_matrix(rates.with_gamma(0.5))
    sp0 = SpinParams(theta_deg=0.0)
    b_cross = 3.0 * sp0.d_gs / (sp0.g_factor * sp0.mu_b)  # exact crossing
    with pytest.raises(DegeneracyError):
        zeeman_transform(r, SpinParams(b_field=b_cross, theta_deg=0.0))


def test_steady_state_dark_without_pumping(rates):
    m = optical_generator(rates.with_gamma(0.0))
    # the zero-pump generator leaves the ground manifold degenerate, so
    # relax from a uniform start instead
    sigma = steady_state_ode_oracle(m, t_final=2e3)
    assert np.all(sigma[3:7] < 1e-9)
    assert sigma.sum() == pytest.approx(1.0)


def test_steady_state_matches_ode_oracle(generator_05):
    direct = steady_state(generator_05)
    relaxed = steady_state_ode_oracle(generator_05, t_final=1e3)
    assert np.max(np.abs(direct - relaxed)) < 1e-8


def test_steady_state_population_inversion_at_operating_point(rates):
    sp = SpinParams()  # 0.2 T, 0.6 degrees
    gen = optical_generator(rates.with_gamma(0.76), sp)
    sigma = steady_state(gen)
    assert sigma[IDX_G0] > sigma[IDX_GP1]
    assert sigma.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(sigma >= -1e-12)


def test_steady_state_field_sweep_has_sharp_features(rates):
    # fluorescence vs field shows its strongest derivatives at the two
    # anti-crossings, near 0.05 T and 0.1 T
    fields = np.linspace(0.02, 0.15, 131)
    fluor = []
    for b in fields:
        gen = optical_generator(rates.with_gamma(0.76), SpinParams(b_field=b))
        fluor.append(fluorescence_rate(steady_state(gen)))
    d = np.abs(np.gradient(np.asarray(fluor), fields))
    top = fields[np.argsort(d)[::-1][:12]]
    assert np.any((top > 0.04) & (top < 0.06))
    assert np.any((top > 0.09) & (top < 0.11))


def test_fluorescence_rate_limits():
    assert fluorescence_rate(np.array([1, 0, 0, 0, 0, 0, 0.0])) == 0.0
    assert fluorescence_rate(np.array([0, 0, 0, 1 / 3, 1 / 3, 1 / 3, 0.0])) == pytest.approx(1.0)


def test_saturation_curve_monotone_concave(rates):
    powers = np.linspace(0.02, 4.0, 13)
    f = saturation_curve(powers, 436.0, 1.0, rates)
    df = np.diff(f)
    assert np.all(df > 0)
    assert np.all(np.diff(df) < 0)
    # clearly sublinear at high power (ratio 0.845 at 4 mW)
    tangent = f[0] / powers[0] * powers
    assert f[-1] < 0.87 * tangent[-1]


def test_calibration_round_trip_noiseless(rates):
    powers = np.linspace(0.25, 4.0, 10)
    data = saturation_curve(powers, 436.0, 3.7e4, rates)
    fit = fit_gamma_calibration(powers, data, rates)
    assert fit.r_khz_per_mw == pytest.approx(436.0, rel=1e-3)
    assert fit.amplitude == pytest.approx(3.7e4, rel=1e-3)


def test_calibration_rejects_short_series():
    with pytest.raises(ValueError):
        fit_gamma_calibration([1, 2, 3], [1, 2, 3])


def test_read_saturation_csv_round_trip():
    text = "power_mW,fluorescence_counts\n0.5,100.0\n1.0,180.0\n"
    p, f = read_saturation_csv(text)
    np.testing.assert_allclose(p, [0.5, 1.0])
    np.testing.assert_allclose(f, [100.0, 180.0])
    with pytest.raises(ValueError):
        read_saturation_csv("a,b\n1,2\n")


def test_effective_temperature_definitions():
    # rate_up/rate_down = 1/e corresponds to kB T = dE
    lred = np.zeros((4, 4))
    lred[3, 0] = 1.0 / math.e
    lred[0, 3] = 1.0
    lred[3, 1] = lred[3, 2] = 0.5 / math.e
    lred[1, 3] = lred[2, 3] = 0.5
    temps = effective_temperatures(lred, ground_singlet_thz=89.0)
    expected = 6.62607015e-34 * 89e12 / 1.380649e-23
    assert temps.t_cold == pytest.approx(expected, rel=1e-12)
    assert temps.t_hot == pytest.approx(expected, rel=1e-12)
    assert not temps.cold_inverted


def test_effective_temperature_equal_rates_infinite():
    lred = np.zeros((4, 4))
    lred[3, 0] = lred[0, 3] = 0.5
    lred[3, 1] = lred[1, 3] = 0.25
    lred[3, 2] = lred[2, 3] = 0.25
    temps = effective_temperatures(lred)
    assert math.isinf(temps.t_cold)
    assert math.isinf(temps.t_hot)


def test_cold_bath_colder_than_hot_bath(rates):
    op = build_L(rates, 0.76)
    temps = effective_temperatures(op.matrix)
    assert 0 < temps.t_cold < temps.t_hot
