import cmath
import math

import numpy as np
import pytest

from regencomp import limit_laws as ll
from regencomp.util import derive_rng


def test_stable_cf_basics():
    assert ll.stable_cf(1.5, 0.0) == pytest.approx(1.0)
    u = 1.3
    assert ll.stable_cf(1.5, -u) == pytest.approx(np.conj(ll.stable_cf(1.5, u)), abs=1e-15)
    grid = np.linspace(-5, 5, 41)
    assert np.all(np.abs(ll.stable_cf(1.7, grid)) <= 1.0 + 1e-12)
    with pytest.raises(ValueError):
        ll.stable_cf(2.0, 1.0)
    with pytest.raises(ValueError):
        ll.stable_cf(0.9, 1.0)


def test_stable_cf_spot_value():
    # Gamma(-1/2) = -2 sqrt(pi), cos(3pi/4) = -sqrt(2)/2: |cf(1)| = e^{-sqrt(2 pi)}
    assert abs(complex(ll.stable_cf(1.5, 1.0))) == pytest.approx(
        math.exp(-math.sqrt(2.0 * math.pi)), abs=1e-14)


def test_limit_law_scales():
    assert ll.LimitLaw(2.0, "power", p=1.0).scale == pytest.approx(3.0 ** -0.5)
    assert ll.LimitLaw(1.5, "power", p=0.0).scale == 1.0       # index-0 degeneracy
    assert ll.LimitLaw(2.0, "exp").scale == pytest.approx(2.0 ** -0.5)
    assert ll.LimitLaw(1.5, "power", p=1.0).scale == pytest.approx(2.5 ** (-1 / 1.5))
    with pytest.raises(ValueError):
        ll.LimitLaw(2.5, "point")
    with pytest.raises(ValueError):
        ll.LimitLaw(2.0, "wedge")


def test_integral_cf_spot_values():
    # Gaussian base: -(1/2) Int_0^1 (1-y)^2 dy = -1/6 ; -(1/2) Int e^{-2y} = -1/4
    j = ll.LimitLaw(2.0, "power", p=1.0).integral_log_cf(1.0)
    k = ll.LimitLaw(2.0, "exp").integral_log_cf(1.0)
    assert j == pytest.approx(-1.0 / 6.0, abs=1e-12)
    assert k == pytest.approx(-0.25, abs=1e-12)
    assert ll.LimitLaw(1.3, "power", p=2.0).integral_log_cf(0.0) == 0.0


def test_integral_cf_matches_closed_form_sample():
    for alpha, p, kind in ((1.3, 2.0, "power"), (1.7, 1.0, "power"), (1.5, 0.0, "exp")):
        law = ll.LimitLaw(alpha, kind, p=p)
        for u in (-2.5, -1.0, 0.5, 3.0):
            assert abs(law.integral_log_cf(u) - complex(law.log_cf(u))) < 1e-9


def test_degenerate_scale_sampling():
    law = ll.LimitLaw(2.0, "point", scale_mult=0.0)
    assert np.all(ll.sample_reference(law, 5, 100) == 0.0)


def test_normal_branch_variance():
    law = ll.LimitLaw(2.0, "power", p=1.0)     # variance 1/3
    x = ll.sample_reference(law, 99, 100_000)
    assert abs(x.var() - 1.0 / 3.0) / (1.0 / 3.0) < 0.03
    assert law.variance() == pytest.approx(1.0 / 3.0)
    assert ll.LimitLaw(1.5, "point").variance() is None


def test_stable_sampler_cf_match():
    law = ll.LimitLaw(1.5, "point")
    x = law.sample(derive_rng(101), 30_000)
    u = np.arange(0.25, 3.01, 0.25)
    err = np.abs(ll.empirical_cf(x, u) - ll.stable_cf(1.5, u)).max()
    assert err < 0.04


def test_stable_cdf_matches_sample():
    law = ll.LimitLaw(1.3, "point")
    x = law.sample(derive_rng(102), 20_000)
    d, p = ll.ks_distance(x, law)
    assert d < 0.02


def test_ks_null_calibration():
    law = ll.LimitLaw(2.0, "point")
    rng = derive_rng(103)
    ok = 0
    for _ in range(100):
        d, p = ll.ks_distance(rng.normal(size=10_000), law)
        ok += p > 0.01
    assert ok >= 95


def test_ks_degenerate_and_shift():
    law = ll.LimitLaw(2.0, "point")
    d, _ = ll.ks_distance(np.zeros(500), law)
    assert d >= 0.5
    rng = derive_rng(104)
    d, _ = ll.ks_distance(rng.normal(1.0, 1.0, 10_000), law)
    assert 0.25 <= d <= 0.45         # sup |Phi(x) - Phi(x-1)| ~ 0.3829
    with pytest.raises(ValueError):
        ll.ks_distance([], law)


def test_cf_distance_detects_mismatch():
    rng = derive_rng(105)
    law = ll.LimitLaw(2.0, "point")
    close = ll.cf_distance(rng.normal(size=50_000), law)
    far = ll.cf_distance(rng.normal(0.0, 2.0, 50_000), law)
    assert close < 0.02 < far


def test_cms_parametrization_against_quantile_symmetry():
    # skew -1 at alpha near 2 looks nearly symmetric; at lower alpha the left
    # tail must be the heavy one
    x = ll.LimitLaw(1.3, "point").sample(derive_rng(106), 50_000)
    q01, q99 = np.quantile(x, [0.01, 0.99])
    assert -q01 > q99
