"""Named verification suites: module invariants and the acceptance criteria.

Every check runs with pinned seeds and pinned tolerances and returns a
CheckResult; the CLI and the test suite consume the same registry. `fast`
shrinks replicate counts for smoke runs only; the official gate is the full
setting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compensator import sample_occupancy_compensators
from .experiment import ExperimentConfig, emit, run_experiment
from .levy_model import (bounded_centering, limit_law_for, model_from_config,
                         norm_constants)
from .limit_laws import LimitLaw, empirical_cf, ks_distance, stable_cf
from .occupancy import (DecrementMatrix, sample_compositions_decrement,
                        sample_compositions_path, sample_poisson_counts)
from .oracle import (check_centering_swap, check_renewal_smoothing, empirical_joint, exact_joint_law,
                     tv_distance)
from .pathsim import (RenewalWalk, normalized_fpt, renewal_count, simulate_path,
                      simulate_walk)
from .quadrature import adaptive
from .util import UnsupportedRegimeError, derive_rng

SEED = 20260808


@dataclass
class CheckResult:
    cid: str
    name: str
    passed: bool
    summary: str
    expected_fail: bool = False
    details: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.passed:
            return "PASS"
        return "FAIL (expected; see criterion docstring)" if self.expected_fail else "FAIL"


_MODELS: dict = {}


def preset(name: str):
    if name not in _MODELS:
        _MODELS[name] = model_from_config(name)
    return _MODELS[name]


def _fixed_n_counts(model, n, reps, seed, tag, mode="cells"):
    """Chunked (K, K1) samples with deterministic per-chunk streams."""
    ks, k1s = [], []
    chunk = 2000 if mode == "cells" else 10000
    ci = 0
    done = 0
    while done < reps:
        r = min(chunk, reps - done)
        k, k1 = sample_compositions_path(model, n, r, derive_rng(seed, tag, n, ci),
                                         mode=mode)
        ks.append(k)
        k1s.append(k1)
        done += r
        ci += 1
    return np.concatenate(ks), np.concatenate(k1s)


# ============================================================================
# acceptance criteria
# ============================================================================

def crit_01_oracle_equivalence(fast=False):
    """DP joint law vs path and decrement samplers, TV < 0.02."""
    reps = 20_000 if fast else 100_000
    ns = (2, 4, 6) if fast else tuple(range(2, 11))
    worst = {"path": 0.0, "decrement": 0.0}
    for mi, name in enumerate(("atom_log2", "gamma1")):
        model = preset(name)
        dm = DecrementMatrix(model)
        for n in ns:
            law = exact_joint_law(model, n, dm=dm).pmf
            K, K1 = _fixed_n_counts(model, n, reps, SEED + 1, mi, mode="points")
            worst["path"] = max(worst["path"], tv_distance(law, empirical_joint(K, K1)))
            Kd, K1d = sample_compositions_decrement(model, n, reps,
                                                    derive_rng(SEED + 1, 50 + mi, n), dm=dm)
            worst["decrement"] = max(worst["decrement"],
                                     tv_distance(law, empirical_joint(Kd, K1d)))
    ok = worst["path"] < 0.02 and worst["decrement"] < 0.02
    return CheckResult("C01", "oracle equivalence (DP vs path vs decrement)", ok,
                       f"max TV path={worst['path']:.4f} decrement={worst['decrement']:.4f} (tol 0.02)")


def crit_02_exact_small_values(fast=False):
    """P{K2=2} = 2/3 and E K3 = 15/7 for the single atom: DP to 1e-9, MC to 3 se."""
    model = preset("atom_log2")
    law2 = exact_joint_law(model, 2)
    law3 = exact_joint_law(model, 3)
    p22 = law2.marginal_K().get(2, 0.0)
    ek3 = law3.mean_K()
    dp_ok = abs(p22 - 2.0 / 3.0) < 1e-9 and abs(ek3 - 15.0 / 7.0) < 1e-9
    reps = 20_000 if fast else 100_000
    K2, _ = _fixed_n_counts(model, 2, reps, SEED + 2, 0, mode="points")
    K3, _ = _fixed_n_counts(model, 3, reps, SEED + 2, 1, mode="points")
    phat = (K2 == 2).mean()
    se_p = math.sqrt(2.0 / 9.0 / reps)
    mean3 = K3.mean()
    var3 = sum(k * k * p for k, p in law3.marginal_K().items()) - ek3 ** 2
    se_m = math.sqrt(var3 / reps)
    mc_ok = abs(phat - 2.0 / 3.0) <= 3 * se_p and abs(mean3 - 15.0 / 7.0) <= 3 * se_m
    return CheckResult("C02", "exact small values (single atom)", dp_ok and mc_ok,
                       f"DP: P(K2=2)={p22:.12f}, EK3={ek3:.12f}; "
                       f"MC: {phat:.4f} ({abs(phat-2/3)/se_p:.1f} se), {mean3:.4f} ({abs(mean3-15/7)/se_m:.1f} se)")


def crit_03_cf_consistency(fast=False):
    """Kernel-quadrature log-CF vs closed-form scaled-stable log-CF, < 1e-8."""
    u_grid = np.arange(-3.0, 3.0 + 1e-9, 0.25)
    worst = 0.0
    for alpha in (2.0, 1.7, 1.3):
        for beta in (0.0, 1.0, 2.0):
            law = LimitLaw(alpha, "power", p=beta)
            for u in u_grid:
                worst = max(worst, abs(law.integral_log_cf(u) - complex(law.log_cf(u))))
        law = LimitLaw(alpha, "exp")
        for u in u_grid:
            worst = max(worst, abs(law.integral_log_cf(u) - complex(law.log_cf(u))))
    spot_j = LimitLaw(2.0, "power", p=1.0).integral_log_cf(1.0)
    spot_k = LimitLaw(2.0, "exp").integral_log_cf(1.0)
    spots_ok = abs(spot_j - (-1.0 / 6.0)) < 1e-10 and abs(spot_k - (-0.25)) < 1e-10
    ok = worst < 1e-8 and spots_ok
    return CheckResult("C03", "limit-law CF consistency (quadrature vs closed form)", ok,
                       f"max |diff|={worst:.2e} (tol 1e-8); spots J(1)={spot_j.real:.8f} K(1)={spot_k.real:.8f}")


def _compensator_stats(model, t, reps, seed, **kw):
    out = {}
    chunk = 1500
    ci, done = 0, 0
    while done < reps:
        r = min(chunk, reps - done)
        d = sample_occupancy_compensators(model, t, r, derive_rng(seed, ci), **kw)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                out.setdefault(k, []).append(v)
        done += r
        ci += 1
    return {k: np.concatenate(v) for k, v in out.items()}


def crit_04_compensator_variance(fast=False):
    """E(A-K)^2 within 20% of m^{-1} Int_1^t Phi(u)/u du at t = 1e4 (gamma)."""
    model = preset("gamma1")
    t = 1e3 if fast else 1e4
    reps = 2000 if fast else 10_000
    d = _compensator_stats(model, t, reps, SEED + 4)
    lhs = float(np.mean((d["A"] - d["K"]) ** 2))
    rhs = model.int_phi_exp(0.0, math.log(t)) / model.m
    ratio = lhs / rhs
    ok = 0.8 <= ratio <= 1.2
    return CheckResult("C04", "compensator variance law E(A-K)^2", ok,
                       f"ratio={ratio:.4f} (band [0.8, 1.2]), E(A-K)^2={lhs:.2f}, target={rhs:.2f}")


def crit_05_discrete_vs_continuous(fast=False):
    """Exp-increment model: E(K-A)^2/log t in [0.7,1.3]/m, E(K-B)^2/log t < 0.3."""
    model = preset("uniform_w")
    t = 1e4 if fast else 1e5
    reps = 2000 if fast else 10_000
    d = _compensator_stats(model, t, reps, SEED + 5, include_B=True)
    r_a = float(np.mean((d["K"] - d["A"]) ** 2)) / math.log(t)
    r_b = float(np.mean((d["K"] - d["B"]) ** 2)) / math.log(t)
    ok = 0.7 / model.m <= r_a <= 1.3 / model.m and r_b < 0.3
    return CheckResult("C05", "discrete vs continuous compensator variance", ok,
                       f"E(K-A)^2/log t={r_a:.3f} (band [0.7,1.3]), E(K-B)^2/log t={r_b:.3f} (< 0.3)")


def _bounded_clt_samples(fast=False):
    model = preset("uniform_w")
    grid = (1_000, 31_623, 1_000_000) if not fast else (1_000, 10_000, 100_000)
    reps = 2_000 if fast else 10_000
    out = []
    for gi, n in enumerate(grid):
        K, _ = _fixed_n_counts(model, n, reps, SEED + 6, gi)
        out.append((n, K))
    return model, out


def crit_06_bounded_clt(fast=False):
    """The compound Poisson CLT gate, literal form plus smoothed diagnostic.

    Literal: (K_n - b_int)/a vs N(0,1), KS strictly decreasing and < 0.05 at
    the top of the grid. This cannot pass (O(1) centering offset plus the
    lattice floor ~0.054 of an integer statistic under a continuous KS); it is
    reported honestly. The supplementary form uses the exact renewal centering
    and within-cell uniform smoothing, both limit-preserving, and is gated at
    the same stated tolerances.
    """
    model, samples = _bounded_clt_samples(fast)
    law = LimitLaw(2.0, "point")
    rng = derive_rng(SEED + 6, 999)
    ks_lit, ks_smooth = [], []
    for gi, (n, K) in enumerate(samples):
        nc = norm_constants(model, n, "Kn", centering="integral")
        ks_lit.append(ks_distance((K - nc.b_n) / nc.a_n, law)[0])
        b_corr = bounded_centering(model, n, "corrected")
        jitter = rng.random(K.size) - 0.5
        ks_smooth.append(ks_distance((K + jitter - b_corr) / nc.a_n, law)[0])
    lit_ok = all(b < a for a, b in zip(ks_lit, ks_lit[1:])) and ks_lit[-1] < 0.05
    smooth_ok = all(b < a for a, b in zip(ks_smooth, ks_smooth[1:])) and ks_smooth[-1] < 0.05
    fmt = lambda v: "/".join(f"{x:.3f}" for x in v)
    lit = CheckResult("C06", "compound Poisson CLT, literal centering/statistic", lit_ok,
                      f"KS={fmt(ks_lit)} (need decreasing, final < 0.05)",
                      expected_fail=True)
    sup = CheckResult("C06s", "compound Poisson CLT, renewal centering + cell smoothing"
                      " [supplementary diagnostic]", smooth_ok,
                      f"KS={fmt(ks_smooth)} (decreasing, final < 0.05)")
    return [lit, sup]


def crit_07_gamma_trend(fast=False):
    """Gamma(1) block-count trend toward the kernel-averaged normal limit."""
    model = preset("gamma1")
    grid = (1_000, 31_623, 1_000_000) if not fast else (1_000, 10_000, 100_000)
    reps = 1_500 if fast else 10_000
    law = limit_law_for(model, "Kn")      # normal, variance 1/3
    ks_list, mean_last, var_last = [], 0.0, 0.0
    for gi, n in enumerate(grid):
        K, _ = _fixed_n_counts(model, n, reps, SEED + 7, gi)
        nc = norm_constants(model, n, "Kn")
        z = (K - nc.b_n) / nc.a_n
        ks_list.append(ks_distance(z, law)[0])
        if gi == len(grid) - 1:
            mean_last, var_last = float(z.mean()), float(z.var(ddof=1))
    ok = (all(b < a for a, b in zip(ks_list, ks_list[1:]))
          and abs(mean_last) < 0.3 and 0.2 <= var_last <= 0.5)
    return CheckResult("C07", "gamma(1) block-count trend (target var 1/3)", ok,
                       f"KS={'/'.join(f'{x:.3f}' for x in ks_list)} decreasing; "
                       f"final mean={mean_last:.3f} (<0.3), var={var_last:.3f} ([0.2,0.5])")


def crit_08_fpt_clt(fast=False):
    """First-passage marginal CLT for gamma(1): KS vs N(0,1) < 0.05 at t=1e4."""
    t = 1e3 if fast else 1e4
    reps = 2000 if fast else 10_000
    z = normalized_fpt(preset("gamma1"), t, reps, derive_rng(SEED + 8), method="exact")
    ks, _ = ks_distance(z, LimitLaw(2.0, "point"))
    return CheckResult("C08", "first-passage CLT (gamma, exact inverse sampling)", ks < 0.05,
                       f"KS={ks:.4f} (tol 0.05) at t={t:g}, g(t)=sqrt(t)")


def crit_09_stable_calibration(fast=False):
    """alpha=1.5 sampler CF vs the analytic stable CF; spot |cf(1)|."""
    law = LimitLaw(1.5, "point")
    count = 30_000 if fast else 100_000
    x = law.sample(derive_rng(SEED + 9), count)
    u = np.arange(0.25, 3.0 + 1e-9, 0.25)
    err = float(np.abs(empirical_cf(x, u) - stable_cf(1.5, u)).max())
    spot = abs(complex(stable_cf(1.5, 1.0)))
    spot_target = math.exp(-math.sqrt(2.0 * math.pi))
    ok = err < 0.02 and abs(spot - spot_target) < 0.005
    return CheckResult("C09", "stable branch calibration (alpha=1.5)", ok,
                       f"max CF err={err:.4f} (tol 0.02); |cf(1)|={spot:.4f} vs {spot_target:.4f}")


def crit_10_analytic_side_checks(fast=False):
    """Centering-swap bounds and renewal smoothing ratios."""
    we1 = check_centering_swap(("deterministic", 0.5), [0.0, 1.0, 5.0, 10.0, 20.0])
    we2 = check_centering_swap(("uniform",), [1.0, 5.0, 20.0])
    bounds_ok = (abs(we1["lower"] + 0.7966) < 5e-5 and abs(we1["upper"] - 0.2194) < 5e-5)
    reps = 2000 if fast else 10_000
    ps = check_renewal_smoothing(preset("gamma1"), "phi", [200.0], reps, rng_seed=SEED + 10)
    ratio = ps["rows"][0]["ratio"]
    span = math.log(2.0)
    ps_lat = check_renewal_smoothing(preset("atom_log2"), "phi", [200 * span], reps,
                          rng_seed=SEED + 110, lattice=True)
    ratio_lat = ps_lat["rows"][0]["ratio"]
    ok = (we1["ok"] and we2["ok"] and bounds_ok
          and 0.93 <= ratio <= 1.07 and 0.9 <= ratio_lat <= 1.1)
    return CheckResult("C10", "analytic side checks (centering-swap bounds, renewal smoothing)", ok,
                       f"bounds ok={we1['ok'] and we2['ok']}; smoothing ratio={ratio:.4f} "
                       f"([0.93,1.07]); lattice ratio={ratio_lat:.4f} ([0.9,1.1])")


def crit_11_determinism(fast=False, tmp_dir=None):
    """Same master_seed => bit-identical CSV/JSON output."""
    import tempfile
    base = tmp_dir or tempfile.mkdtemp(prefix="regencomp_det_")
    cfg = dict(model="gamma1", statistic="Kn", grid=(500, 2000), replicates=200,
               master_seed=SEED + 11, dump_raw=True)
    outs = []
    for i in (0, 1):
        res = run_experiment(ExperimentConfig(**cfg))
        paths = emit(res, ("csv", "json"), f"{base}/run{i}", stem="det")
        outs.append({p.name: p.read_bytes() for p in paths})
    same = all(outs[0][k] == outs[1][k] for k in outs[0])
    return CheckResult("C11", "determinism (bit-identical re-run)", same,
                       f"files identical={same} ({sorted(outs[0])})")


ACCEPTANCE = [
    crit_01_oracle_equivalence,
    crit_02_exact_small_values,
    crit_03_cf_consistency,
    crit_04_compensator_variance,
    crit_05_discrete_vs_continuous,
    crit_06_bounded_clt,
    crit_07_gamma_trend,
    crit_08_fpt_clt,
    crit_09_stable_calibration,
    crit_10_analytic_side_checks,
    crit_11_determinism,
]


def run_acceptance(fast=False, report=print):
    results = []
    for fn in ACCEPTANCE:
        out = fn(fast=fast)
        for res in (out if isinstance(out, list) else [out]):
            results.append(res)
            if report:
                report(f"[acceptance] {res.cid:4s} {res.status:36s} {res.name}: {res.summary}")
    return results


# ============================================================================
# invariant suite
# ============================================================================

def _all_presets():
    return [preset(k) for k in ("atom_log2", "two_atoms", "uniform_w", "gamma1",
                                "log_power2", "de_haan", "heavy15")]


def inv_admissibility():
    bad = []
    for model in _all_presets():
        val = float(np.dot(model._atom_w, np.minimum(model._atom_x, 1.0))) if model._atom_x.size else 0.0
        if model._has_density:
            val += adaptive(lambda v: np.minimum(np.exp(-np.minimum(v, 700.0)), 1.0) * model._v_density(v),
                            model._v_lo, model._v_lo + 200.0, rel_tol=1e-8, abs_floor=1e-12)
        if not (np.isfinite(val) and np.isfinite(model.m)):
            bad.append(model.name)
    return CheckResult("I01", "nu admissibility: Int min(x,1) nu(dx) and m finite",
                       not bad, f"violations: {bad or 'none'}")


def inv_monotonicity():
    ts = np.logspace(-3, 6, 40)
    bad = []
    for model in _all_presets():
        phi = np.array([model.phi(t) for t in ts])
        phat = np.array([model.phi_hat(t) for t in ts])
        pp = np.array([model.phi_prime(t) for t in ts])
        if np.any(np.diff(phi) < -1e-12) or np.any(np.diff(phat) < -1e-12) \
                or np.any(np.diff(pp) > 1e-12) or np.any(phi < 0) or phi[0] > phat[0] + 1e-12:
            bad.append(model.name)
    return CheckResult("I02", "exponent monotonicity on grids", not bad,
                       f"violations: {bad or 'none'}")


def inv_hat_gap_vanishes():
    bad = []
    for name in ("gamma1", "uniform_w", "two_atoms"):
        model = preset(name)
        gap3 = model.phi_hat(1e3) - model.phi(1e3)
        gap6 = model.phi_hat(1e6) - model.phi(1e6)
        # both gaps may already sit at the double-precision floor
        if not (-1e-12 <= gap6 < max(10 * gap3, 1e-12)):
            bad.append((name, gap3, gap6))
    return CheckResult("I03", "PhiHat - Phi vanishes at infinity", not bad,
                       f"violations: {bad or 'none'}")


def inv_karamata():
    rows = {}
    for name in ("gamma1", "log_power2"):
        model = preset(name)
        x = 1e-8
        rows[name] = model.tail(x) / model.phi(1.0 / x)
    ok = all(0.9 <= r <= 1.1 for r in rows.values())
    return CheckResult("I04", "Tauberian tail match at x=1e-8", ok,
                       f"ratios: { {k: round(v, 4) for k, v in rows.items()} } (band [0.9,1.1])")


def inv_condition_poly_log():
    rows = {}
    for name in ("gamma1", "log_power2", "heavy15"):
        model = preset(name)
        T = 1e3
        ratio = math.exp(model.log_phi_exp(2 * T) - model.log_phi_exp(T))
        rows[name] = ratio / 2.0 ** model.beta
    ok = all(abs(r - 1.0) < 0.05 for r in rows.values())
    return CheckResult("I05", "poly-log growth index: phi(2T)/phi(T) -> 2^beta", ok,
                       f"normalized ratios: { {k: round(v, 4) for k, v in rows.items()} }")


def inv_condition_de_haan():
    model = preset("de_haan")
    T = 1e3
    h = model.de_haan_h(T)
    lp_t = model.log_phi_exp(T)
    worst = max(abs(math.exp(model.log_phi_exp(T - u * h) - lp_t) - math.exp(-u))
                for u in (-2.0, -1.0, 1.0, 2.0))
    return CheckResult("I06", "de Haan class: phi(T - u h(T))/phi(T) -> e^-u", worst < 0.05,
                       f"max error={worst:.4f} (tol 0.05) at T=1e3, h={h:.2f}")


def inv_slow_variation():
    model = preset("gamma1")
    devs = [abs(model.phi(2 * t) / model.phi(t) - 1.0) for t in (1e3, 1e6, 1e9)]
    dh = preset("de_haan")
    hdevs = [abs(dh.de_haan_h(math.log(2 * t)) / dh.de_haan_h(math.log(t)) - 1.0)
             for t in (1e3, 1e6, 1e9)]
    ok = all(a > b for a, b in zip(devs, devs[1:])) and devs[-1] < 0.1 \
        and all(a > b for a, b in zip(hdevs, hdevs[1:])) and hdevs[-1] < 0.1
    return CheckResult("I07", "slow variation of Phi and h(log .)", ok,
                       f"Phi devs {['%.3f' % d for d in devs]}, h devs {['%.3f' % d for d in hdevs]}")


def inv_path_accounting():
    model = preset("gamma1")
    eps = 1e-6
    path = simulate_path(model, ("until_level", 30.0), eps, derive_rng(SEED, 300))
    recon = abs(path.final_level - path.jump_sizes.sum())
    quad = adaptive(lambda v: np.exp(-v) * model._v_density(v), math.log(1.0 / eps),
                    math.log(1.0 / eps) + 80.0, abs_floor=1e-300)
    drift_err = abs(path.drift_loss - quad)
    mono = np.all(np.diff(path.cum_sums) > 0) and np.all(path.jump_sizes >= eps)
    ok = recon < 1e-9 and drift_err < 1e-10 and bool(mono)
    return CheckResult("I08", "path accounting: reconstruction + drift loss", ok,
                       f"recon={recon:.1e}, |drift-quad|={drift_err:.2e} (tol 1e-10)")


def inv_fpt_inverse():
    model = preset("gamma1")
    path = simulate_path(model, ("until_level", 20.0), 1e-6, derive_rng(SEED, 301))
    ok = all(path.first_passage(path.value_at(v)) >= v - 1e-12
             for v in path.jump_times[:-1])
    return CheckResult("I09", "first-passage inverse relation T(S(v)) >= v", ok, f"ok={ok}")


def inv_renewal_exact():
    walk = RenewalWalk(np.full(40, math.log(2.0)))
    ok1 = renewal_count(walk, 1.0) == 2 and renewal_count(walk, 0.0) == 1
    rng = derive_rng(SEED, 302)
    model = preset("uniform_w")
    ys = (3.0, 7.0)
    ok2 = True
    for y in ys:
        counts = [renewal_count(simulate_walk(model, y + 1.0, rng), y) for _ in range(4000)]
        mean = float(np.mean(counts))
        se = float(np.std(counts) / math.sqrt(len(counts)))
        ok2 &= abs(mean - (y + 1.0)) <= 3 * se
    return CheckResult("I10", "renewal counts: lattice exact + E rho(y) = y+1", ok1 and ok2,
                       f"lattice ok={ok1}, poisson-mean ok={ok2}")


def inv_martingale_A():
    model = preset("gamma1")
    t, u, reps = 50.0, 2.0, 30_000
    rng = derive_rng(SEED, 303)
    eps = model.default_eps(t, 8.0)
    rate = model.jump_rate(eps)
    J = int(u * rate + 6 * math.sqrt(u * rate) + 30)
    diffs = []
    done = 0
    while done < reps:
        r = min(4000, reps - done)
        waits = rng.exponential(1.0 / rate, (r, J))
        times = np.cumsum(waits, axis=1)
        while times[:, -1].min() <= u:
            extra = rng.exponential(1.0 / rate, (r, J // 2))
            times = np.hstack([times, times[:, -1:] + np.cumsum(extra, axis=1)])
        sizes = model.sample_jump_sizes(rng, times.size, eps).reshape(times.shape)
        cum = np.cumsum(sizes, axis=1)
        lev_before = np.hstack([np.zeros((r, 1)), cum[:, :-1]])
        in_win = times <= u
        p = np.exp(-lev_before) - np.exp(-cum)
        occ = rng.poisson(t * p * in_win)
        N = (occ >= 1).sum(axis=1)
        seg = np.clip(np.diff(np.hstack([np.zeros((r, 1)), np.minimum(times, u)]), axis=1), 0.0, None)
        A = (model.phi_exp_vec(math.log(t) - lev_before) * seg).sum(axis=1)
        diffs.append(N - A)
        done += r
    d = np.concatenate(diffs)
    se = d.std() / math.sqrt(d.size)
    ok = abs(d.mean()) <= 3 * se
    return CheckResult("I11", "martingale property of A(t,u) at t=50, u=2", ok,
                       f"mean(N-A)={d.mean():.4f} ({abs(d.mean())/se:.2f} se)")


def inv_EB_equals_EK():
    model = preset("uniform_w")
    d = _compensator_stats(model, 1e3, 20_000, SEED + 304, include_B=True)
    diff = d["K"] - d["B"]
    se = diff.std() / math.sqrt(diff.size)
    ok = abs(diff.mean()) <= 3 * se
    return CheckResult("I12", "compensator identity E B = E K", ok,
                       f"mean(K-B)={diff.mean():.4f} ({abs(diff.mean())/se:.2f} se)")


def inv_sampler_equiv_two_atoms():
    model = preset("two_atoms")
    dm = DecrementMatrix(model)
    worst = 0.0
    for n in range(2, 11):
        law = exact_joint_law(model, n, dm=dm).pmf
        K, K1 = _fixed_n_counts(model, n, 100_000, SEED + 305, 7, mode="points")
        worst = max(worst, tv_distance(law, empirical_joint(K, K1)))
        Kd, K1d = sample_compositions_decrement(model, n, 100_000, derive_rng(SEED + 305, 70 + n), dm=dm)
        worst = max(worst, tv_distance(law, empirical_joint(Kd, K1d)))
    return CheckResult("I13", "two-atom sampler equivalence (n=2..10)", worst < 0.02,
                       f"max TV={worst:.4f} (tol 0.02)")


def inv_deletion_consistency():
    model = preset("atom_log2")
    reps = 60_000
    rng = derive_rng(SEED, 306)
    _, _, parts5 = sample_compositions_path(model, 5, reps, rng, mode="points", return_parts=True)
    k_deleted = []
    for comp in parts5:
        parts = list(comp.parts)
        j = rng.choice(5)
        acc = 0
        for i, p in enumerate(parts):
            if j < acc + p:
                parts[i] -= 1
                break
            acc += p
        k_deleted.append(sum(1 for p in parts if p > 0))
    K4, _ = _fixed_n_counts(model, 4, reps, SEED + 306, 0, mode="points")
    law_del = {k: v / reps for k, v in zip(*np.unique(k_deleted, return_counts=True))}
    law_dir = {k: v / reps for k, v in zip(*np.unique(K4, return_counts=True))}
    tv = 0.5 * sum(abs(law_del.get(k, 0) - law_dir.get(k, 0))
                   for k in set(law_del) | set(law_dir))
    return CheckResult("I14", "sampling consistency: delete a uniform point (n=5 -> 4)",
                       tv < 0.02, f"TV={tv:.4f} (tol 0.02)")


def inv_poisson_coherence():
    model = preset("atom_log2")
    t, n = 5.0, 5
    K, _, pi = sample_poisson_counts(model, t, 400_000, derive_rng(SEED, 307))
    sel = K[pi == n]
    Kn, _ = _fixed_n_counts(model, n, 100_000, SEED + 307, 0, mode="points")
    law_c = {k: v / sel.size for k, v in zip(*np.unique(sel, return_counts=True))}
    law_n = {k: v / Kn.size for k, v in zip(*np.unique(Kn, return_counts=True))}
    tv = 0.5 * sum(abs(law_c.get(k, 0) - law_n.get(k, 0)) for k in set(law_c) | set(law_n))
    return CheckResult("I15", "poissonized/fixed-n coherence at t=5, n=5", tv < 0.03,
                       f"TV={tv:.4f} over {sel.size} conditioned draws (tol 0.03)")


HAND_BRANCH_TABLE = {
    # (preset, target) -> (branch prefix, law kind, alpha, scale)
    ("gamma1", "Kn"): ("poly_log/finite_variance", "power", 2.0, 3.0 ** -0.5),
    ("uniform_w", "Kn"): ("bounded/finite_variance", "point", 2.0, 1.0),
    ("two_atoms", "Kn"): ("bounded/finite_variance", "point", 2.0, 1.0),
    ("log_power2", "Kn"): ("poly_log/finite_variance", "power", 2.0, 5.0 ** -0.5),
    ("log_power2", "Kn1"): ("poly_log/finite_variance", "power", 2.0, 3.0 ** -0.5),
    ("de_haan", "Kn"): ("de_haan_gamma/finite_variance", "exp", 2.0, 2.0 ** -0.5),
    ("de_haan", "Kn1"): ("de_haan_gamma/finite_variance", "exp", 2.0, 2.0 ** -0.5),
    ("heavy15", "Kn"): ("poly_log/stable_tail", "power", 1.5, 4.0 ** (-2.0 / 3.0)),
    ("heavy15", "Kn1"): ("poly_log/stable_tail", "power", 1.5, 2.5 ** (-2.0 / 3.0)),
}

REFUSALS = [("gamma1", "Kn1"), ("atom_log2", "Kn"), ("uniform_w", "Kn1")]


def validate_branch_table():
    """Startup assertion: selected (branch, law) matches the hand table."""
    for (name, target), (branch, kind, alpha, scale) in HAND_BRANCH_TABLE.items():
        model = preset(name)
        nc = norm_constants(model, 1000, target)
        law = limit_law_for(model, target)
        if not nc.branch.startswith(branch):
            raise AssertionError(f"{name}/{target}: branch {nc.branch} != {branch}")
        if law.kind != kind or law.alpha != alpha or abs(law.scale - scale) > 1e-12:
            raise AssertionError(f"{name}/{target}: law {law} != ({kind},{alpha},{scale})")
    for name, target in REFUSALS:
        try:
            norm_constants(preset(name), 1000, target)
        except UnsupportedRegimeError:
            continue
        raise AssertionError(f"{name}/{target} should refuse")


def inv_branch_table():
    try:
        validate_branch_table()
        ok, msg = True, "hand table matches selector; refusal cases refuse"
    except AssertionError as exc:
        ok, msg = False, str(exc)
    beta0 = LimitLaw(1.7, "power", p=0.0).scale
    ok = ok and abs(beta0 - 1.0) < 1e-15
    return CheckResult("I16", "branch-selection table + index-0 degeneracy", ok, msg)


def inv_decrement_rows():
    worst = 0.0
    for name in ("gamma1", "uniform_w", "two_atoms", "log_power2"):
        dm = DecrementMatrix(preset(name))
        for k in (1, 2, 5, 12, 25):
            row = dm.q_row(k)
            worst = max(worst, abs(row.sum() - 1.0))
    # cross-check the gamma beta-integral route against the binomial expansion
    # (safe regime: small m and k, where the alternating sum keeps precision)
    from .occupancy import first_block_integral
    from scipy import special as sp
    g = preset("gamma1")
    route_diff = 0.0
    for kk, mm in ((6, 1), (8, 3), (10, 5)):
        val = first_block_integral(g, kk, mm)
        j = np.arange(mm + 1)
        frullani = float(-np.dot(sp.comb(mm, j) * (-1.0) ** j, np.log(g.rate + kk - mm + j)))
        route_diff = max(route_diff, abs(val - frullani) / frullani)
    ok = worst < 1e-9 and route_diff < 1e-9
    return CheckResult("I17", "decrement rows normalize; dual integral routes agree", ok,
                       f"max |sum-1|={worst:.2e} (tol 1e-9), route agreement={route_diff:.2e}")


def inv_poissonized_mean():
    model = preset("gamma1")
    t = 1e3
    K, _, pi = sample_poisson_counts(model, t, 20_000, derive_rng(SEED, 308))
    b = model.int_phi_exp(0.0, math.log(t)) / model.m
    c_hat = model.s2 / (2 * model.m ** 2) * model.phi_exp_vec(np.array([math.log(t)]))[0] \
        + model.int_phi_exp(-60.0, 0.0) / model.m
    ok = abs(K.mean() - b - c_hat) <= 0.1 * b and abs(pi.mean() - t) <= 3 * math.sqrt(t / pi.size)
    return CheckResult("I18", "poissonized means: E K(t) band and E pi_t = t", ok,
                       f"mean K={K.mean():.2f} vs b+O(1)={b + c_hat:.2f} (10% of b={b:.1f}); "
                       f"mean pi={pi.mean():.1f}")


def inv_A1_identity():
    model = preset("gamma1")
    t = 1e3
    d = _compensator_stats(model, t, 10_000, SEED + 309, include_A1=True)
    sq = (d["K1"] - d["A1"]) ** 2
    ratio_identity = sq.mean() / d["A1"].mean()
    ratio_phi = sq.mean() / (model.phi(t) / model.m)
    se = sq.std() / math.sqrt(sq.size) / d["A1"].mean()
    ok = abs(ratio_identity - 1.0) <= max(5 * se, 0.05) and 0.85 <= ratio_phi <= 1.15
    return CheckResult("I19", "singleton compensator: E(K1-A1)^2 = E A1 ~ Phi(t)/m", ok,
                       f"identity ratio={ratio_identity:.4f}, vs Phi/m={ratio_phi:.4f} (band 15%)")


INVARIANTS = [
    inv_admissibility, inv_monotonicity, inv_hat_gap_vanishes, inv_karamata,
    inv_condition_poly_log, inv_condition_de_haan, inv_slow_variation,
    inv_path_accounting, inv_fpt_inverse, inv_renewal_exact, inv_martingale_A,
    inv_EB_equals_EK, inv_sampler_equiv_two_atoms, inv_deletion_consistency,
    inv_poisson_coherence, inv_branch_table, inv_decrement_rows,
    inv_poissonized_mean, inv_A1_identity,
]


def run_invariants(fast=False, report=print):
    results = []
    for fn in INVARIANTS:
        res = fn()
        results.append(res)
        if report:
            report(f"[invariant] {res.cid:4s} {res.status:4s} {res.name}: {res.summary}")
    return results
