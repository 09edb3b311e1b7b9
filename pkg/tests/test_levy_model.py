import math

import numpy as np
import pytest
from scipy import special

from regencomp import levy_model as lm
from regencomp.quadrature import adaptive
from regencomp.util import UnsupportedRegimeError


def test_gamma_laplace_exponent_closed_form(gamma1):
    # Frullani integral: log(1 + t)
    assert gamma1.phi_hat(10.0) == pytest.approx(math.log(11.0), rel=1e-12)
    assert gamma1.phi_hat_prime(9.0) == pytest.approx(0.1, rel=1e-12)
    # cross-check against the generic quadrature route
    assert lm.LevyModel.phi_hat(gamma1, 10.0) == pytest.approx(math.log(11.0), rel=1e-9)


def test_phi_at_zero_and_monotone(gamma1, uniform_w, atom_log2):
    for model in (gamma1, uniform_w, atom_log2):
        assert model.phi(0.0) == 0.0
        ts = np.logspace(-2, 4, 25)
        vals = [model.phi(t) for t in ts]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_single_atom_closed_forms(atom_log2):
    assert atom_log2.phi_hat(3.0) == pytest.approx(7.0 / 8.0, abs=1e-14)
    assert atom_log2.phi_hat_prime(1.0) == pytest.approx(math.log(2.0) / 2.0, rel=1e-13)
    # quadrature route agrees (the base class sees only the atoms)
    assert lm.LevyModel.phi_hat(atom_log2, 3.0) == pytest.approx(7.0 / 8.0, rel=1e-12)
    assert atom_log2.tail(1.0) == 0.0          # atom log 2 < 1
    assert atom_log2.tail(0.5) == 1.0


def test_exp_increment_closed_forms(uniform_w):
    # dual route: closed forms vs the generic adaptive quadrature
    for t in (0.7, 3.0, 40.0):
        assert uniform_w.phi(t) == pytest.approx(lm.LevyModel.phi(uniform_w, t), rel=1e-9)
        assert uniform_w.phi_prime(t) == pytest.approx(
            lm.LevyModel.phi_prime(uniform_w, t), rel=1e-8)
    assert uniform_w.phi_hat(4.0) == pytest.approx(0.8, rel=1e-12)
    assert uniform_w.m == 1.0 and uniform_w.s2 == 2.0


def test_gamma_tail_tauberian(gamma1):
    x = 1e-6
    ratio = gamma1.tail(x) / gamma1.phi_hat(1.0 / x)
    assert abs(ratio - 1.0) < 0.05
    assert gamma1.tail(2.0) == pytest.approx(float(special.exp1(2.0)), rel=1e-12)


def test_heavy_composite_tail_and_scale():
    hc = lm.HeavyComposite(beta=2.0, alpha=1.5, C=1.0)
    assert hc.tail(4.0) == pytest.approx(4.0 ** -1.5, rel=1e-14)
    assert lm.solve_scale_c(hc.slow_part, 1.5, 8.0) == pytest.approx(4.0, abs=1e-6)
    assert not np.isfinite(hc.s2)
    assert hc.m == pytest.approx(hc._lp.m + 1.5 / 0.5, rel=1e-12)


def test_norm_constants_gamma_spec_point(gamma1):
    nc = lm.norm_constants(gamma1, math.exp(10.0), "Kn")
    assert nc.a_n == pytest.approx(math.sqrt(10.0) * math.log(1.0 + math.exp(10.0)), rel=2e-4)
    assert nc.branch == "poly_log/finite_variance"
    assert gamma1.m == 1.0 and gamma1.s2 == 1.0


def test_bounded_centering_forms(atom_log2, uniform_w):
    # deterministic 1 - W = 1/2: indicator form integrates an indicator
    for n in (10.0, 1000.0):
        expect = max(0.0, math.log(n) - math.log(2.0)) / math.log(2.0)
        got = lm.bounded_centering(atom_log2, n, "indicator")
        assert got == pytest.approx(expect, abs=1e-12)
    # |log(1-W)| ~ Exp(1) for uniform W
    L = math.log(50.0)
    assert lm.bounded_centering(uniform_w, 50.0, "indicator") == pytest.approx(
        L - 1.0 + math.exp(-L), rel=1e-12)
    # corrected = integral + renewal O(1): for the exponential walk the
    # constant is Int_0^1 Phi(z)/z dz + s2/(2 m^2), with the head integral
    # summable as sum_{k>=2} (-1)^k / ((k-1) k!)
    head = sum((-1.0) ** k / ((k - 1) * math.factorial(k)) for k in range(2, 22))
    diff = lm.bounded_centering(uniform_w, 1e4, "corrected") - \
        lm.bounded_centering(uniform_w, 1e4, "integral")
    assert diff == pytest.approx(head + 1.0, abs=1e-8)
    with pytest.raises(UnsupportedRegimeError):
        lm.bounded_centering(atom_log2, 100.0, "corrected")   # arithmetic walk


def test_unsupported_regimes(gamma1, atom_log2, uniform_w):
    with pytest.raises(UnsupportedRegimeError):
        lm.norm_constants(gamma1, 100, "Kn1")     # open two-component case
    with pytest.raises(UnsupportedRegimeError):
        lm.norm_constants(atom_log2, 100, "Kn")   # degenerate walk variance
    with pytest.raises(UnsupportedRegimeError):
        lm.norm_constants(uniform_w, 100, "Kn1")  # no finite-nu singleton limit
    with pytest.raises(UnsupportedRegimeError):
        lm.limit_law_for(lm.LogPower(1.0), "Kn1")


def test_conjecture_escape_hatch(gamma1):
    nc = lm.norm_constants(gamma1, 1000, "Kn1", allow_conjecture=True)
    assert nc.branch == "poly_log/conjectured"
    assert nc.a_n == pytest.approx(math.sqrt(math.log(1000.0)), rel=1e-12)
    law = lm.limit_law_for(gamma1, "Kn1", allow_conjecture=True)
    assert law.alpha == 2.0
    assert law.scale == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_jump_rate_spec_example(gamma1):
    # retained jump rate at eps = 1e-8 is E1(1e-8) = -log(1e-8) - gamma_E + O(eps)
    expect = -math.log(1e-8) - 0.5772156649015329
    assert gamma1.jump_rate(1e-8) == pytest.approx(expect, abs=1e-6)
    assert gamma1.jump_rate(1e-8) == pytest.approx(17.84, abs=5e-3)


def test_drift_loss_matches_quadrature():
    for model, eps in ((lm.LogPower(2.0), 1e-7), (lm.DeHaanExp(1.0, 0.8), 1e-7),
                       (lm.GammaSubordinator(1.0), 1e-6)):
        quad = adaptive(lambda v: np.exp(-v) * model._v_density(v),
                        math.log(1.0 / eps), math.log(1.0 / eps) + 90.0, abs_floor=1e-300)
        assert abs(model.drift_loss(eps) - quad) < 1e-10


def test_gamma_trunc_second_moment(gamma1):
    # Int_0^x y e^{-y} dy = 1 - (1+x) e^{-x}
    for x in (0.5, 2.0, 10.0):
        assert lm.trunc_second_moment(gamma1, x) == pytest.approx(
            1.0 - (1.0 + x) * math.exp(-x), rel=1e-9)


def test_phi_exp_vec_matches_adaptive(gamma1):
    ss = np.array([-20.0, -3.0, 0.0, 5.0, 14.0, 100.0])
    fast = gamma1.phi_exp_vec(ss)
    slow = np.array([gamma1.phi_exp(float(s)) for s in ss])
    assert np.allclose(fast, slow, rtol=1e-6)


def test_config_round_trip():
    for name, cfg in lm.PRESETS.items():
        model = lm.model_from_config(name)
        again = lm.model_from_config(model.to_config())
        assert again.to_config() == model.to_config()
    with pytest.raises(ValueError):
        lm.model_from_config({"family": "gamma", "params": {"rate": 1.0},
                              "declared_condition": "bounded"})
    with pytest.raises(ValueError):
        lm.model_from_config("no_such_preset")


def test_jump_samplers_match_tails():
    # empirical tail of sampled jumps vs nu[x,inf)/nu[eps,inf) on a grid
    rng = np.random.default_rng(1234)
    eps = 1e-4
    for model in (lm.GammaSubordinator(1.0), lm.LogPower(2.0),
                  lm.DeHaanExp(1.0, 0.8), lm.HeavyComposite(2.0, 1.5, 1.0)):
        x = model.sample_jump_sizes(rng, 200_000, eps)
        rate = model.jump_rate(eps)
        for q in (1e-3, 0.05, 0.8):
            emp = float((x >= q).mean())
            exact = model.tail(q) / rate
            assert abs(emp - exact) < 4.0 * math.sqrt(exact * (1 - exact) / x.size) + 1e-4, \
                (model.name, q, emp, exact)


def test_finite_atomic_normalizes_masses():
    model = lm.FiniteAtomic([(1.0, 2.0), (2.0, 6.0)])
    assert model._atom_w.tolist() == [0.25, 0.75]
    assert model.total_mass == 1.0
    assert model.lattice_span is None          # two atoms: span not declared
    assert lm.FiniteAtomic([(0.7, 3.0)]).lattice_span == 0.7
