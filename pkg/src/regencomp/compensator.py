"""Compensators of the occupied-gap counters.

Continuous time, along a path of S:

    A(t, u)   = Int_0^u Phi(t e^{-S(v)}) dv
    A1(t, u)  = Int_0^u Phi'(t e^{-S(v)}) t e^{-S(v)} dv

S is constant between jumps, so both are finite sums of panel values. In
discrete time, along the renewal walk R of a compound Poisson S,

    B(t) = sum_k Phi(t e^{-R_{k-1}})

with Phi the tilted exponent: each term is exactly P{gap k occupied | R_{k-1}},
which is what makes K - B a martingale difference sum.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .levy_model import LevyModel
from .occupancy import _gap_probs, _sample_points
from .pathsim import PathBatch, RenewalWalk, SubordinatorPath, batch_paths
from .util import HorizonError, derive_rng

TERMINAL_CUTOFF = 1e-12


def _levels_before(path: SubordinatorPath) -> np.ndarray:
    return np.concatenate([[0.0], path.cum_sums[:-1]])


def compensator_A(path: SubordinatorPath, model: LevyModel, t: float,
                  u: float = math.inf) -> float:
    """A(t, u), exactly piecewise over the path's jump intervals.

    For u = inf the path must reach Phi(t e^{-S}) < 1e-12 (else HorizonError);
    the analytic remainder past that point is available separately.
    """
    if t <= 0 or u < 0:
        raise ValueError("need t > 0 and u >= 0")
    if u == 0.0:
        return 0.0
    s_args = math.log(t) - _levels_before(path)
    vals = model.phi_exp_vec(s_args)
    times = path.jump_times
    if math.isinf(u):
        tail = model.phi_exp_vec(np.array([math.log(t) - path.final_level]))[0]
        if tail >= TERMINAL_CUTOFF:
            raise HorizonError(
                f"terminal value not reached: Phi(t e^-S) = {tail:.3e} >= {TERMINAL_CUTOFF}",
                partial=path)
        widths = np.diff(np.concatenate([[0.0], times]))
        return float(np.dot(vals, widths))
    cut = np.minimum(times, u)
    widths = np.diff(np.concatenate([[0.0], cut]))
    total = float(np.dot(vals, widths))
    if u > times[-1]:
        total += float(model.phi_exp_vec(np.array([math.log(t) - path.final_level]))[0]) * (u - times[-1])
    return total


def a_remainder_bound(path: SubordinatorPath, model: LevyModel, t: float) -> float:
    """Upper bound on the A(t) mass beyond the simulated horizon:
    Phi'(0+) t e^{-S_end} E Int e^{-(S(v)-S_end)} dv <= Phi'(0+) t e^{-S_end} / PhiHat_eps(1)."""
    denom = model.phi_hat(1.0) - (model.drift_loss(path.truncation_eps) if path.truncation_eps else 0.0)
    return model.phi_prime_zero * t * math.exp(-path.final_level) / max(denom, 1e-12)


def compensator_A1(path: SubordinatorPath, model: LevyModel, t: float,
                   u: float = math.inf) -> float:
    """A1(t, u): same panels with integrand Phi'(t e^{-S}) t e^{-S}."""
    if t <= 0 or u < 0:
        raise ValueError("need t > 0 and u >= 0")
    if u == 0.0:
        return 0.0
    s_args = math.log(t) - _levels_before(path)
    vals = model.phi_prime_exp_vec(s_args)
    times = path.jump_times
    if math.isinf(u):
        tail = model.phi_exp_vec(np.array([math.log(t) - path.final_level]))[0]
        if tail >= TERMINAL_CUTOFF:
            raise HorizonError("terminal value not reached for A1", partial=path)
        widths = np.diff(np.concatenate([[0.0], times]))
        return float(np.dot(vals, widths))
    cut = np.minimum(times, u)
    widths = np.diff(np.concatenate([[0.0], cut]))
    total = float(np.dot(vals, widths))
    if u > times[-1]:
        total += float(model.phi_prime_exp_vec(np.array([math.log(t) - path.final_level]))[0]) * (u - times[-1])
    return total


def compensator_B(walk: RenewalWalk, model: LevyModel, t: float) -> float:
    """B(t) = sum_k Phi(t e^{-R_{k-1}}) along the walk (finite nu)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if not model.is_finite:
        raise ValueError("the discrete-time compensator needs a probability nu")
    r = walk.partial_sums
    tail = model.phi_exp_vec(np.array([math.log(t) - r[-1]]))[0]
    if tail >= TERMINAL_CUTOFF:
        raise HorizonError(
            f"walk too short: Phi(t e^-R) = {tail:.3e} at its end; extend the walk",
            partial=walk)
    return float(model.phi_exp_vec(math.log(t) - r[:-1]).sum())


# ----------------------------------------------------------------------------
# batched joint sampling of (K, K1, A, A1, B) on shared paths
# ----------------------------------------------------------------------------

def dump_stats_csv(stats: dict, t: float, file) -> None:
    """Rows (replicate_id, t, K, K1, A, A1?, B?) from a batch run."""
    cols = [c for c in ("K", "K1", "A", "A1", "B") if c in stats]
    file.write("replicate_id,t," + ",".join(cols) + "\n")
    n = len(stats["K"])
    for i in range(n):
        vals = ",".join(repr(float(stats[c][i])) for c in cols)
        file.write(f"{i},{t!r},{vals}\n")


def stop_level_for(model: LevyModel, t: float) -> float:
    """Level past which both occupancy mass and compensator integrands are
    below budget: t e^{-S} Phi'(0+) < 1e-12 and expected atoms < e^-30."""
    return math.log(max(t, 2.0)) + 30.5 + max(0.0, math.log(max(model.phi_prime_zero, 1e-12)))


def sample_occupancy_compensators(model: LevyModel, t: float, reps: int, rng,
                                  eps: Optional[float] = None,
                                  include_A1: bool = False,
                                  include_B: bool = False) -> dict:
    """Replicates of K(t), K(t,1) and compensator terminal values on one
    shared path batch per replicate (the pairing K - A is what the variance
    identities compare, so both sides must see the same truncation)."""
    rng = rng if isinstance(rng, np.random.Generator) else derive_rng(rng)
    if include_B and not model.is_finite:
        raise ValueError("B requires a probability nu")
    level = stop_level_for(model, t)
    if eps is None:
        eps = model.default_eps(t, level)
    pb: PathBatch = batch_paths(model, level, reps, rng, eps, want_times=True)
    p, mask = _gap_probs(pb)
    counts = rng.poisson(t * p)
    K = np.count_nonzero(counts[:, :-1], axis=1)
    K1 = (counts[:, :-1] == 1).sum(axis=1)
    spill = counts[:, -1]
    for r in np.nonzero(spill)[0]:
        kk, kk1 = _sample_points(model, int(spill[r]), 1, rng, eps, False)
        K[r] += kk[0]
        K1[r] += kk1[0]

    lev_before = np.hstack([np.zeros((reps, 1)), pb.cum[:, :-1]])
    s_args = math.log(t) - lev_before
    out = {"K": K, "K1": K1, "pi": counts.sum(axis=1), "eps": eps}
    phi_vals = model.phi_exp_vec(s_args)
    out["A"] = np.sum(np.where(mask, phi_vals * pb.waits, 0.0), axis=1)
    end_lev = np.take_along_axis(pb.cum, pb.n_jumps[:, None] - 1, axis=1)[:, 0]
    out["A_tail_bound"] = model.phi_prime_zero * t * np.exp(-end_lev) \
        / max(model.phi_hat(1.0) - model.drift_loss(eps) if eps else model.phi_hat(1.0), 1e-12)
    if include_A1:
        psi_vals = model.phi_prime_exp_vec(s_args)
        out["A1"] = np.sum(np.where(mask, psi_vals * pb.waits, 0.0), axis=1)
    if include_B:
        out["B"] = np.sum(np.where(mask, phi_vals, 0.0), axis=1)
    return out
