import math

import numpy as np
import pytest

from nvengine.errors import PropagationError
from nvengine.fluorescence import kappa
from nvengine.params import RateConstants
from nvengine.uncertainty import (
    bound_violation_test,
    draw_samples,
    normal_tail,
    propagate,
)


def test_seeded_determinism():
    q = lambda s: s.rates.gamma_rad
    a = propagate(q, n_samples=256, seed=42)
    b = propagate(q, n_samples=256, seed=42)
    assert a.mean == b.mean and a.sigma == b.sigma
    c = propagate(q, n_samples=256, seed=43)
    assert c.mean != a.mean


def test_identity_quantity_recovers_input_sigma():
    res = propagate(lambda s: s.rates.k_1s, n_samples=10_000, seed=1)
    assert res.mean == pytest.approx(53.3, rel=0.01)
    assert res.sigma == pytest.approx(2.5, rel=0.05)


def test_zero_sigma_inputs_give_zero_sigma():
    rc = RateConstants(sigma_gamma_rad=1e-12, sigma_k_1s=1e-12,
                       sigma_k_0s=1e-12, sigma_k_s0=1e-12, sigma_k_s1=1e-12)
    res = propagate(lambda s: s.rates.gamma_rad + s.rates.k_0s,
                    n_samples=200, seed=3, rc=rc)
    assert res.sigma < 1e-10


def test_truncation_keeps_draws_positive():
    samples = draw_samples(2000, seed=9)
    for s in samples[:50]:
        assert s.rates.k_s0 > 0 and s.rates.k_s1 > 0
    assert min(s.rates.k_s0 for s in samples) > 0


def test_truncation_bias_small():
    # all sigma/mu <= 0.32 (k_s0 is the worst); bias under 0.5% of the mean
    res = propagate(lambda s: s.rates.k_s0, n_samples=20_000, seed=7)
    assert abs(res.mean - 0.98) / 0.98 < 0.005


def test_propagation_failure_guard():
    def flaky(sample):
        raise RuntimeError("boom")
    with pytest.raises(PropagationError):
        propagate(flaky, n_samples=200, seed=0)


def test_propagate_requires_enough_samples():
    with pytest.raises(ValueError):
        propagate(lambda s: 1.0, n_samples=10, seed=0)


def test_kappa_band_is_smooth_and_nonzero(rates):
    # one-sigma band on the conversion factor, a light version of the
    # published uncertainty band
    sigmas = []
    for gamma in (0.4, 0.7, 1.0):
        res = propagate(
            lambda s, g=gamma: kappa(s.rates, g, n_per_stroke=8).kappa,
            n_samples=128, seed=11)
        sigmas.append(res.sigma / res.mean)
    assert all(0.001 < s < 0.2 for s in sigmas)
    assert max(sigmas) / min(sigmas) < 3.0


def test_normal_tail_reference_points():
    assert normal_tail(0.0) == pytest.approx(0.5, abs=1e-15)
    assert normal_tail(1.6449) == pytest.approx(0.05, abs=1e-4)
    assert normal_tail(2.4) == pytest.approx(0.0082, abs=1e-4)


def test_normal_tail_symmetry_and_monotonicity():
    ts = np.linspace(-3, 3, 25)
    ps = [normal_tail(t) for t in ts]
    assert all(np.diff(ps) < 0)
    for t in (0.3, 1.1, 2.7):
        assert normal_tail(t) + normal_tail(-t) == pytest.approx(1.0, abs=1e-12)


def test_bound_violation_test_statistic():
    res = bound_violation_test(10.0, 2.0, 4.0, 1.5)
    assert res.t == pytest.approx(6.0 / math.hypot(2.0, 1.5))
    assert 0 < res.p < 0.01


def test_bound_violation_published_significance():
    # t = 2.4 corresponds to the one-sided p value 0.0082
    res = bound_violation_test(2.4, 1.0, 0.0, 1e-30)
    assert res.t == pytest.approx(2.4, rel=1e-9)
    assert res.p == pytest.approx(0.0082, abs=1e-4)


def test_bound_violation_rejects_bad_sigmas():
    with pytest.raises(ValueError):
        bound_violation_test(1.0, 0.0, 0.0, 1.0)
