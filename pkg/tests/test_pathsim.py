import math

import numpy as np
import pytest

from regencomp import pathsim as ps
from regencomp.limit_laws import LimitLaw, ks_distance
from regencomp.util import HorizonError, derive_rng


def test_deterministic_step_path():
    path = ps.SubordinatorPath(np.array([1.0, 2.0, 3.0]), np.array([1.0, 1.0, 1.0]),
                               0.0, 3.0)
    assert ps.first_passage(path, 1.5) == 2.0
    assert ps.first_passage(path, 0.0) == 1.0      # level 0: first jump
    assert path.value_at(2.5) == 2.0
    assert path.value_at(0.5) == 0.0
    with pytest.raises(HorizonError):
        ps.first_passage(path, 3.5)


def test_path_validation():
    with pytest.raises(ValueError):
        ps.SubordinatorPath(np.array([2.0, 1.0]), np.array([1.0, 1.0]), 0.0, 3.0)
    with pytest.raises(ValueError):
        ps.SubordinatorPath(np.array([1.0]), np.array([-1.0]), 0.0, 2.0)


def test_atomic_path_structure(atom_log2):
    path = ps.simulate_path(atom_log2, ("until_level", 5.0), 0.0, 11)
    assert np.allclose(path.jump_sizes, math.log(2.0))
    assert path.final_level > 5.0
    assert path.cum_sums[-2] <= 5.0            # stops at first passage
    # inter-arrival times are standard exponential (unit total mass)
    rng = derive_rng(12)
    waits = np.concatenate([np.diff(np.concatenate(
        [[0.0], ps.simulate_path(atom_log2, ("until_level", 40.0), 0.0, rng).jump_times]))
        for _ in range(200)])
    se = waits.std() / math.sqrt(waits.size)
    assert abs(waits.mean() - 1.0) < 4 * se


def test_until_level_zero(atom_log2):
    # T(0) is the first arrival time, mean 1/nu[eps, inf) = 1
    rng = derive_rng(13)
    t0 = np.array([ps.simulate_path(atom_log2, ("until_level", 0.0), 0.0, rng).jump_times[0]
                   for _ in range(3000)])
    assert abs(t0.mean() - 1.0) < 4 / math.sqrt(t0.size)


def test_fixed_horizon(gamma1):
    path = ps.simulate_path(gamma1, ("fixed", 3.0), 1e-6, 7)
    assert path.horizon == 3.0
    assert path.jump_times[-1] <= 3.0
    assert abs(path.final_level - path.jump_sizes.sum()) < 1e-9


def test_renewal_walk_counts(uniform_w):
    walk = ps.RenewalWalk(np.full(30, math.log(2.0)))
    assert ps.renewal_count(walk, 1.0) == 2      # ceil(1/log 2)
    assert ps.renewal_count(walk, 0.0) == 1
    with pytest.raises(HorizonError):
        ps.renewal_count(walk, 40.0)
    # standard exponential increments: E rho(y) = y + 1 exactly
    rng = derive_rng(14)
    for y in (2.5, 6.0):
        counts = [ps.renewal_count(ps.simulate_walk(uniform_w, y + 1.0, rng), y)
                  for _ in range(3000)]
        mean = np.mean(counts)
        se = np.std(counts) / math.sqrt(len(counts))
        assert abs(mean - (y + 1.0)) <= 3.5 * se


def test_atom_first_passage_renewal_mean(atom_log2):
    # E T(s) = floor(s/log 2) + 1 at unit rate; ~ s/log2 within 2% at s = 100
    T = ps.sample_first_passage(atom_log2, 100.0, 4000, derive_rng(15))
    target = 100.0 / math.log(2.0)
    assert abs(T.mean() - target) / target < 0.02


def test_gamma_fpt_exact_vs_path(gamma1):
    # dual route: exact marginal inversion vs the truncated jump path
    t = 50.0
    exact = ps.sample_first_passage(gamma1, t, 4000, derive_rng(16), method="exact")
    path = ps.sample_first_passage(gamma1, t, 4000, derive_rng(17), eps=1e-7, method="path")
    assert abs(exact.mean() - path.mean()) < 4 * math.sqrt(t) / math.sqrt(4000) * 2
    assert abs(exact.std() - path.std()) / path.std() < 0.1
    qs = np.linspace(0.05, 0.95, 19)
    qe, qp = np.quantile(exact, qs), np.quantile(path, qs)
    assert np.max(np.abs(qe - qp)) < 1.2     # ~ sd/6 at t=50


def test_normalized_fpt_gamma_clt(gamma1):
    z = ps.normalized_fpt(gamma1, 2000.0, 4000, derive_rng(18), method="exact")
    ks, _ = ks_distance(z, LimitLaw(2.0, "point"))
    assert ks < 0.05
    assert abs(z.mean()) < 0.1


def test_normalized_fpt_compound_poisson_self_check(atom_log2):
    # deterministic jump sizes: all T-variance comes from the waits; the
    # statistic still obeys a CLT against its own fitted normal
    t = 2000.0
    z = ps.normalized_fpt(atom_log2, t, 4000, derive_rng(19), method="path")
    zz = (z - z.mean()) / z.std()
    ks, _ = ks_distance(zz, LimitLaw(2.0, "point"))
    assert ks < 0.05


def test_batch_paths_passage_indexing(gamma1):
    rng = derive_rng(20)
    pb = ps.batch_paths(gamma1, 12.0, 64, rng, 1e-6)
    rows = np.arange(64)
    after = pb.cum[rows, pb.n_jumps - 1]
    assert np.all(after > 12.0)
    before = np.where(pb.n_jumps > 1, pb.cum[rows, np.maximum(pb.n_jumps - 2, 0)], 0.0)
    assert np.all(before <= 12.0)
