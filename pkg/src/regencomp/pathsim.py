"""Subordinator path simulation, renewal walks, first-passage functionals.

Truncated jump representation: jumps of size >= eps arrive as a marked Poisson
process with rate nu[eps, inf) and sizes from the normalized restriction of nu.
No drift surrogate is added for the discarded mass (it would create spurious
range points); the discarded mass is tracked as the drift_loss diagnostic and
budgeted by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .levy_model import GammaSubordinator, LevyModel, growth_g
from .util import HorizonError, derive_rng


@dataclass(frozen=True)
class SubordinatorPath:
    """One truncated path: S(v) = sum of jumps at times <= v."""

    jump_times: np.ndarray
    jump_sizes: np.ndarray
    truncation_eps: float
    horizon: float
    cum_sums: np.ndarray = field(default=None)
    drift_loss: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.jump_times, float)
        s = np.asarray(self.jump_sizes, float)
        if t.size != s.size:
            raise ValueError("jump times and sizes must align")
        if t.size and (np.any(np.diff(t) <= 0) or np.any(s <= 0)):
            raise ValueError("need strictly increasing times and positive sizes")
        if t.size and t[-1] > self.horizon + 1e-12:
            raise ValueError("jump beyond horizon")
        if self.cum_sums is None:
            object.__setattr__(self, "cum_sums", np.cumsum(s))

    def value_at(self, v: float) -> float:
        """S(v); right-continuous, S(0) = 0."""
        k = np.searchsorted(self.jump_times, v, side="right")
        return 0.0 if k == 0 else float(self.cum_sums[k - 1])

    def first_passage(self, s: float) -> float:
        """T(s) = inf{v : S(v) > s}."""
        if s < 0:
            raise ValueError("level must be nonnegative")
        k = np.searchsorted(self.cum_sums, s, side="right")
        if k >= self.cum_sums.size:
            raise HorizonError(f"path tops out at {self.final_level:.6g} <= level {s:.6g}",
                               partial=self)
        return float(self.jump_times[k])

    @property
    def final_level(self) -> float:
        return float(self.cum_sums[-1]) if self.cum_sums.size else 0.0


def simulate_path(model: LevyModel, horizon_rule, eps: float, rng_seed) -> SubordinatorPath:
    """Simulate one truncated path.

    horizon_rule: ("fixed", v_max) runs to time v_max; ("until_level", s) runs
    until S(v) > s. For finite nu, eps is ignored (every jump is kept).
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else derive_rng(rng_seed)
    eps_eff = 0.0 if model.is_finite else float(eps)
    if not model.is_finite and eps_eff <= 0:
        raise ValueError("infinite nu requires a positive truncation eps")
    rate = model.jump_rate(eps_eff) if eps_eff > 0 else model.total_mass
    kind, bound = horizon_rule
    times, sizes = [], []
    t_now, level = 0.0, 0.0
    block = max(16, int(rate * (bound if kind == "fixed" else bound / max(model.m, 1e-12) + 10)) + 8)
    for _ in range(200):
        waits = rng.exponential(1.0 / rate, block)
        jumps = model.sample_jump_sizes(rng, block, eps_eff)
        times.append(t_now + np.cumsum(waits))
        sizes.append(jumps)
        t_now = times[-1][-1]
        level += jumps.sum()
        if kind == "fixed" and t_now >= bound:
            break
        if kind == "until_level" and level > bound:
            break
    else:
        raise HorizonError(
            f"horizon unreachable within iteration cap (reached level {level:.6g})",
            partial=(np.concatenate(times), np.concatenate(sizes)))
    t_all = np.concatenate(times)
    s_all = np.concatenate(sizes)
    if kind == "fixed":
        keep = t_all <= bound
        t_all, s_all = t_all[keep], s_all[keep]
        horizon = float(bound)
    else:
        cum = np.cumsum(s_all)
        n = int(np.argmax(cum > bound)) + 1
        t_all, s_all = t_all[:n], s_all[:n]
        horizon = float(t_all[-1])
    return SubordinatorPath(t_all, s_all, eps_eff, horizon,
                            drift_loss=model.drift_loss(eps_eff) if eps_eff > 0 else 0.0)


def first_passage(path: SubordinatorPath, s: float) -> float:
    return path.first_passage(s)


def dump_path_csv(path: SubordinatorPath, file) -> None:
    """Write the jump representation as (jump_time, jump_size) rows."""
    file.write("jump_time,jump_size\n")
    for t, x in zip(path.jump_times, path.jump_sizes):
        file.write(f"{t!r},{x!r}\n")


# ----------------------------------------------------------------------------
# batched level-crossing paths (matrix form, used by occupancy/compensators)
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PathBatch:
    """reps x J jump matrices; row i is a path run until cum > level."""

    sizes: np.ndarray
    cum: np.ndarray
    n_jumps: np.ndarray          # per-row jumps to first passage of level
    level: float
    rate: float
    eps: float
    waits: Optional[np.ndarray] = None   # inter-arrival times, if requested


def batch_paths(model: LevyModel, level: float, reps: int, rng,
                eps: float = 0.0, want_times: bool = False) -> PathBatch:
    """Simulate `reps` truncated paths until each crosses `level`."""
    eps_eff = 0.0 if model.is_finite else float(eps)
    rate = model.jump_rate(eps_eff) if eps_eff > 0 else model.total_mass
    mean_jump = max((model.m - (model.drift_loss(eps_eff) if eps_eff > 0 else 0.0)) / rate, 1e-300)
    est = level / mean_jump
    J = int(est * 1.08 + 6.0 * math.sqrt(est + 1.0) + 24)
    sizes = model.sample_jump_sizes(rng, reps * J, eps_eff).reshape(reps, J)
    cum = np.cumsum(sizes, axis=1)
    while True:
        short = cum[:, -1] <= level
        if not short.any():
            break
        add = max(32, J // 3)
        extra = model.sample_jump_sizes(rng, reps * add, eps_eff).reshape(reps, add)
        sizes = np.hstack([sizes, extra])
        cum = np.hstack([cum, cum[:, -1:] + np.cumsum(extra, axis=1)])
        J = sizes.shape[1]
    n_jumps = np.argmax(cum > level, axis=1) + 1
    waits = rng.exponential(1.0 / rate, sizes.shape) if want_times else None
    return PathBatch(sizes, cum, n_jumps, float(level), float(rate), eps_eff, waits)


# ----------------------------------------------------------------------------
# renewal walks (finite nu)
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RenewalWalk:
    """Zero-delayed walk R_k; partial_sums stores R_0 = 0, R_1, ..."""

    increments: np.ndarray
    partial_sums: np.ndarray = field(default=None)

    def __post_init__(self):
        inc = np.asarray(self.increments, float)
        if np.any(inc <= 0):
            raise ValueError("increments must be positive")
        if self.partial_sums is None:
            object.__setattr__(self, "partial_sums",
                               np.concatenate([[0.0], np.cumsum(inc)]))


def simulate_walk(model: LevyModel, level: float, rng_seed) -> RenewalWalk:
    """Walk with i.i.d. nu increments run until R_k > level (nu a probability)."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else derive_rng(rng_seed)
    if not model.is_finite:
        raise ValueError("renewal walks require a finite (probability) nu")
    chunks, total = [], 0.0
    while total <= level:
        inc = model.sample_jump_sizes(rng, max(32, int((level - total) / model.m) + 16), 0.0)
        chunks.append(inc)
        total += inc.sum()
    inc = np.concatenate(chunks)
    cum = np.cumsum(inc)
    n = int(np.argmax(cum > level)) + 1
    return RenewalWalk(inc[:n])


def renewal_count(walk: RenewalWalk, y: float) -> int:
    """rho(y) = inf{k >= 0 : R_k > y}; >= 1 for y >= 0."""
    if y < 0:
        raise ValueError("y must be nonnegative")
    r = walk.partial_sums
    k = int(np.searchsorted(r, y, side="right"))
    if k >= r.size:
        raise HorizonError(f"walk tops out at {r[-1]:.6g} <= {y:.6g}", partial=walk)
    return k


# ----------------------------------------------------------------------------
# first-passage sampling
# ----------------------------------------------------------------------------

def sample_first_passage(model: LevyModel, s_level: float, reps: int, rng,
                         eps: Optional[float] = None, method: str = "auto") -> np.ndarray:
    """Replicates of T(s_level).

    method "exact" (gamma family only) inverts P{T(s) > v} = P{S(v) <= s}
    through the known time-v marginal; "path" walks the truncated jump
    representation. "auto" picks exact where available.
    """
    rng = rng if isinstance(rng, np.random.Generator) else derive_rng(rng)
    if method not in ("auto", "exact", "path"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "exact") and isinstance(model, GammaSubordinator):
        return _gamma_fpt_exact(model, s_level, reps, rng)
    if method == "exact":
        raise ValueError("exact first-passage sampling is only available for the gamma family")
    if eps is None:
        eps = model.default_eps(1.0, max(s_level, 1.0)) if not model.is_finite else 0.0
    out = np.empty(reps)
    chunk = max(1, min(reps, int(4e6 / max(model.jump_rate(eps) if eps > 0 else 1.0, 1.0)
                                 / max(s_level / model.m, 1.0)) + 1))
    for i0 in range(0, reps, chunk):
        r = min(chunk, reps - i0)
        pb = batch_paths(model, s_level, r, rng, eps, want_times=True)
        tcum = np.cumsum(pb.waits, axis=1)
        out[i0:i0 + r] = tcum[np.arange(r), pb.n_jumps - 1]
    return out


def _gamma_fpt_exact(model: GammaSubordinator, s: float, reps: int, rng) -> np.ndarray:
    u = rng.random(reps)
    z = model.rate * s
    lo = np.full(reps, 1e-12)
    hi = np.full(reps, z + 12.0 * math.sqrt(z) + 40.0)
    # P{S(v) <= s} = gammainc(v, z) decreases in v; solve gammainc(v, z) = u
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        too_low = special.gammainc(mid, z) > u
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    return 0.5 * (lo + hi)


def normalized_fpt(model: LevyModel, t: float, reps: int, rng_seed,
                   eps: Optional[float] = None, method: str = "auto") -> np.ndarray:
    """Replicates of (T(t) - t/m) / g(t), the marginal of the normalized
    first-passage process at the unit time point."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else derive_rng(rng_seed)
    g_of, _, _ = growth_g(model)
    T = sample_first_passage(model, t, reps, rng, eps=eps, method=method)
    return (T - t / model.m) / g_of(t)
