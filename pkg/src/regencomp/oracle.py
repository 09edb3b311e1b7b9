"""Independent exact computations at small scale.

The DP over the decrement matrix gives the exact joint law of (K_n, K_{n,1})
for n <= 14; it simultaneously gates the q formula, the sequential sampler and
the path sampler through total-variation comparisons. Two further checkers
verify the centering-swap bounds and the renewal smoothing asymptotics
numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import special

from .levy_model import LevyModel
from .occupancy import DecrementMatrix
from .pathsim import batch_paths
from .quadrature import adaptive, fixed_gauss
from .util import derive_rng

DP_N_CAP = 14

#: two-sided bounds for the centering-swap difference f1 - f2
CENTERING_SWAP_LOWER = -float(adaptive(lambda y: -np.expm1(-y) / y, 1e-300, 1.0))
CENTERING_SWAP_UPPER = float(special.exp1(1.0))


@dataclass(frozen=True)
class ExactLaw:
    """Exact joint pmf of (K_n, K_{n,1})."""

    n: int
    pmf: dict

    def mean_K(self) -> float:
        return sum(k * p for (k, _), p in self.pmf.items())

    def mean_K1(self) -> float:
        return sum(k1 * p for (_, k1), p in self.pmf.items())

    def marginal_K(self) -> dict:
        out = {}
        for (k, _), p in self.pmf.items():
            out[k] = out.get(k, 0.0) + p
        return out

    def total(self) -> float:
        return sum(self.pmf.values())


def exact_joint_law(model: LevyModel, n: int, dm: Optional[DecrementMatrix] = None) -> ExactLaw:
    """DP on first-block deletion: P{(K_j, K_{j,1})} for j = 0..n, return j = n.

    Recursion: the law at j mixes the laws at j - m over the first-block size
    m ~ q(j, .), adding one block (a singleton when m = 1).
    """
    if not 1 <= n <= DP_N_CAP:
        raise ValueError(f"exact law capped at n = {DP_N_CAP}")
    dm = dm or DecrementMatrix(model)
    laws = [{(0, 0): 1.0}]
    for j in range(1, n + 1):
        row = dm.q_row(j)
        cur: dict = {}
        for m in range(1, j + 1):
            qjm = row[m - 1]
            if qjm == 0.0:
                continue
            for (k, k1), p in laws[j - m].items():
                key = (k + 1, k1 + (1 if m == 1 else 0))
                cur[key] = cur.get(key, 0.0) + qjm * p
        laws.append(cur)
    law = ExactLaw(n, laws[n])
    if abs(law.total() - 1.0) > 1e-9:
        raise RuntimeError(f"DP mass {law.total()} != 1")
    for (k, k1) in law.pmf:
        if not (1 <= k <= n and 0 <= k1 <= k and k1 + 2 * (k - k1) <= n):
            raise RuntimeError(f"infeasible support point {(k, k1)} for n = {n}")
    return law


def empirical_joint(K: Iterable[int], K1: Iterable[int]) -> dict:
    K = np.asarray(K)
    K1 = np.asarray(K1)
    pmf: dict = {}
    for k, k1 in zip(K.tolist(), K1.tolist()):
        pmf[(k, k1)] = pmf.get((k, k1), 0.0) + 1.0
    return {key: v / K.size for key, v in pmf.items()}


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# ----------------------------------------------------------------------------
# centering-swap bounds
# ----------------------------------------------------------------------------

def _v_moments(v_spec):
    """(E exp(-e^y V) as a function of y, exact f2) for a V specification.

    f2(x) = Int_0^x P{V < e^{-y}} dy = E min(x, |log V|) in closed form.
    """
    kind = v_spec[0]
    if kind == "deterministic":
        v = float(v_spec[1])
        if not 0.0 < v < 1.0:
            raise ValueError("V must lie in (0,1)")
        return (lambda y: np.exp(-np.exp(y) * v)), (lambda x: min(x, math.log(1.0 / v)))
    if kind == "uniform":
        def mgf(y):
            t = np.exp(np.minimum(y, 700.0))
            return -np.expm1(-t) / t
        return mgf, (lambda x: -math.expm1(-x))
    if kind == "sample":
        v = np.asarray(v_spec[1], float)
        if np.any((v <= 0) | (v >= 1)):
            raise ValueError("sample values must lie in (0,1)")
        mgf = lambda y: np.array([np.exp(-np.exp(yy) * v).mean() for yy in np.atleast_1d(y)])
        return mgf, (lambda x: float(np.minimum(x, -np.log(v)).mean()))
    raise ValueError(f"unknown V spec {v_spec!r}")


def check_centering_swap(v_spec, x_grid) -> dict:
    """Verify the two-sided bound on f1(x) - f2(x) at every grid x.

    f1(x) = Int_0^x E exp(-e^y V) dy,  f2(x) = Int_0^x P{V < e^{-y}} dy.
    """
    mgf, f2_of = _v_moments(v_spec)
    rows = []
    max_violation = 0.0
    for x in x_grid:
        x = float(x)
        f1 = fixed_gauss(mgf, 0.0, x, panel_width=0.05) if x > 0 else 0.0
        f2 = f2_of(x) if x > 0 else 0.0
        diff = f1 - f2
        violation = max(0.0, diff - CENTERING_SWAP_UPPER, CENTERING_SWAP_LOWER - diff)
        max_violation = max(max_violation, violation)
        rows.append({"x": x, "f1": f1, "f2": f2, "diff": diff,
                     "ok": violation <= 5e-7})
    return {"rows": rows, "lower": CENTERING_SWAP_LOWER, "upper": CENTERING_SWAP_UPPER,
            "max_violation": max_violation, "ok": all(r["ok"] for r in rows)}


# ----------------------------------------------------------------------------
# renewal smoothing asymptotics
# ----------------------------------------------------------------------------

def check_renewal_smoothing(model: LevyModel, v_choice: str, t_grid, replicates: int,
                 rng_seed=0, eps: Optional[float] = None, lattice: bool = False) -> dict:
    """Monte Carlo ratio of Int_[0,t] v(t-z) dE T(z) to its renewal limit.

    The left side is evaluated without grid error: per path, dT puts mass
    wait_{k+1} at z = C_k, so the integral is the finite sum
    sum_k v(t - C_k) wait_{k+1} over C_k <= t. The right side is
    m^{-1} Int_0^t v(z) dz (nonarithmetic), or the span-weighted lattice sum
    m^{-1} delta sum_j v(t - j delta) for an arithmetic model evaluated at
    lattice-aligned t.
    """
    if v_choice == "phi":
        v_of = lambda z: model.phi_exp_vec(np.asarray(z, float))
    elif v_choice == "phi_prime":
        v_of = lambda z: model.phi_prime_exp_vec(np.asarray(z, float))
    elif v_choice == "const":
        v_of = lambda z: np.ones_like(np.asarray(z, float))
    else:
        raise ValueError("v_choice must be phi, phi_prime or const")
    if lattice and model.lattice_span is None:
        raise ValueError("lattice form needs an arithmetic model")
    rng = derive_rng(rng_seed) if not isinstance(rng_seed, np.random.Generator) else rng_seed
    rows = []
    for t in t_grid:
        t = float(t)
        if eps is None and not model.is_finite:
            # T-statistics only need the drift bias eps*t/m well under the
            # T-fluctuation scale; 100 virtual points is a comfortable budget
            eps_t = min(1e-4, model.default_eps(100.0, t))
        else:
            eps_t = eps or 0.0
        lhs_sum = 0.0
        chunk = max(1, int(3e6 / max((model.jump_rate(eps_t) if eps_t else 1.0) * t / model.m, 10.0)))
        done = 0
        while done < replicates:
            r = min(chunk, replicates - done)
            pb = batch_paths(model, t, r, rng, eps_t, want_times=True)
            lev = np.hstack([np.zeros((r, 1)), pb.cum[:, :-1]])
            ok = lev <= t
            lhs_sum += float(np.sum(np.where(ok, v_of(t - lev) * pb.waits, 0.0)))
            done += r
        lhs = lhs_sum / replicates
        if lattice:
            d = model.lattice_span
            js = np.arange(0, int(round(t / d)) + 1)
            rhs = d * float(v_of(t - js * d).sum()) / model.m
        else:
            rhs = fixed_gauss(v_of, 0.0, t, panel_width=min(0.25, t / 64)) / model.m
        rows.append({"t": t, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs})
    return {"rows": rows, "v": v_choice, "lattice": lattice}
