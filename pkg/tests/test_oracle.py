import math

import numpy as np
import pytest

from regencomp import oracle as orc
from regencomp.occupancy import DecrementMatrix
from regencomp.util import derive_rng


def test_exact_law_single_atom(atom_log2):
    law2 = orc.exact_joint_law(atom_log2, 2)
    assert law2.marginal_K()[2] == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert law2.marginal_K()[1] == pytest.approx(1.0 / 3.0, abs=1e-12)
    law3 = orc.exact_joint_law(atom_log2, 3)
    assert law3.marginal_K()[1] == pytest.approx(1.0 / 7.0, abs=1e-12)
    assert law3.marginal_K()[2] == pytest.approx(4.0 / 7.0, abs=1e-12)
    assert law3.marginal_K()[3] == pytest.approx(2.0 / 7.0, abs=1e-12)
    assert law3.mean_K() == pytest.approx(15.0 / 7.0, abs=1e-12)


def test_exact_law_base_case(atom_log2):
    law = orc.exact_joint_law(atom_log2, 1)
    assert law.pmf == {(1, 1): pytest.approx(1.0)}


def test_exact_law_cap(gamma1):
    with pytest.raises(ValueError):
        orc.exact_joint_law(gamma1, orc.DP_N_CAP + 1)


def test_mean_K_monotone(gamma1, atom_log2):
    for model in (gamma1, atom_log2):
        dm = DecrementMatrix(model)
        means = [orc.exact_joint_law(model, n, dm=dm).mean_K() for n in range(1, 11)]
        assert all(b >= a for a, b in zip(means, means[1:]))
        k1s = [orc.exact_joint_law(model, n, dm=dm).mean_K1() for n in range(1, 11)]
        assert all(v >= 0 for v in k1s)


def test_tv_distance():
    p = {(1, 1): 0.5, (2, 0): 0.5}
    q = {(1, 1): 0.25, (2, 0): 0.25, (3, 0): 0.5}
    assert orc.tv_distance(p, q) == pytest.approx(0.5)
    assert orc.tv_distance(p, p) == 0.0


def test_centering_swap_bound_constants():
    # independent series oracle: Int_0^1 (1-e^{-y})/y dy = sum (-1)^{k+1}/(k k!)
    series = sum((-1.0) ** (k + 1) / (k * math.factorial(k)) for k in range(1, 25))
    assert orc.CENTERING_SWAP_LOWER == pytest.approx(-series, abs=1e-12)
    assert orc.CENTERING_SWAP_UPPER == pytest.approx(0.2193839344, abs=1e-9)
    assert orc.CENTERING_SWAP_LOWER == pytest.approx(-0.7965996, abs=1e-6)


def test_centering_swap_deterministic_half():
    rep = orc.check_centering_swap(("deterministic", 0.5), [0.0, 1.0, 10.0])
    assert rep["ok"]
    row0 = rep["rows"][0]
    assert row0["f1"] == 0.0 and row0["f2"] == 0.0 and row0["diff"] == 0.0
    # x = 10: f2 saturates at log 2
    row10 = rep["rows"][-1]
    assert row10["f2"] == pytest.approx(math.log(2.0), abs=1e-9)
    assert orc.CENTERING_SWAP_LOWER <= row10["diff"] <= orc.CENTERING_SWAP_UPPER


def test_centering_swap_uniform_and_sample():
    assert orc.check_centering_swap(("uniform",), [1.0, 5.0, 20.0])["ok"]
    rng = derive_rng(200)
    assert orc.check_centering_swap(("sample", rng.random(400) * 0.98 + 0.01), [1.0, 5.0])["ok"]
    with pytest.raises(ValueError):
        orc.check_centering_swap(("deterministic", 1.5), [1.0])


def test_renewal_smoothing_constant_v(gamma1):
    # v constant: both sides reduce to the elementary renewal theorem
    rep = orc.check_renewal_smoothing(gamma1, "const", [100.0], 2000, rng_seed=201)
    assert abs(rep["rows"][0]["ratio"] - 1.0) < 0.05


def test_renewal_smoothing_lattice_requires_arithmetic(gamma1):
    with pytest.raises(ValueError):
        orc.check_renewal_smoothing(gamma1, "phi", [50.0], 100, lattice=True)
    with pytest.raises(ValueError):
        orc.check_renewal_smoothing(gamma1, "nope", [50.0], 100)
