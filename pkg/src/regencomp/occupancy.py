"""Composition sampling and block counts.

Three routes produce the same law:

* the painting construction: n i.i.d. standard exponentials dropped into the
  gaps of a simulated path (`points` mode, the literal construction);
* conditional cell counts given the path: occupancy numbers of the ordered
  gaps are multinomial over the gap probabilities e^{-a} - e^{-b} (`cells`
  mode; identical conditional law, reaches large n);
* the sequential first-block (decrement) sampler driven by
  q(n, m) = C(n, m) Int (1-e^{-x})^m e^{-(n-m)x} nu(dx) / PhiHat(n).

The q formula is derived plumbing and only trusted through the
sampler-equivalence invariant (DP oracle vs both samplers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .levy_model import ExpIncrement, FiniteAtomic, GammaSubordinator, LevyModel, _log_tilt
from .pathsim import batch_paths
from .quadrature import adaptive
from .util import RegencompError, derive_rng

DECREMENT_N_CAP = 10_000


@dataclass(frozen=True)
class Composition:
    """Ordered positive parts summing to n."""

    parts: tuple

    def __post_init__(self):
        if any(int(p) != p or p < 1 for p in self.parts):
            raise ValueError("parts must be positive integers")
        object.__setattr__(self, "parts", tuple(int(p) for p in self.parts))

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def K(self) -> int:
        return len(self.parts)

    @property
    def K_r(self) -> dict:
        out = {}
        for p in self.parts:
            out[p] = out.get(p, 0) + 1
        return out


def block_counts(c: Composition) -> tuple[int, int]:
    """(number of blocks, number of singleton blocks)."""
    return c.K, sum(1 for p in c.parts if p == 1)


def dump_compositions_csv(compositions, file) -> None:
    """Rows (replicate_id, semicolon-joined parts, K, K1)."""
    file.write("replicate_id,parts,K,K1\n")
    for i, c in enumerate(compositions):
        k, k1 = block_counts(c)
        file.write(f"{i},{';'.join(map(str, c.parts))},{k},{k1}\n")


@dataclass(frozen=True)
class PoissonOccupancy:
    """Occupancy of the gaps by a Poisson(t)-thinned exponential cloud."""

    t: float
    counts: tuple
    pi: int
    K: int
    K1: int


# ----------------------------------------------------------------------------
# decrement matrix
# ----------------------------------------------------------------------------

def first_block_integral(model: LevyModel, k: int, m: int) -> float:
    """Int (1 - e^{-x})^m e^{-(k-m) x} nu(dx)."""
    if isinstance(model, FiniteAtomic):
        u = -np.expm1(-model._atom_x)
        return float(np.dot(model._atom_w, u ** m * np.exp(-(k - m) * model._atom_x)))
    if isinstance(model, ExpIncrement):
        # E[(1-W)^m W^{k-m}] with W uniform: Beta(m+1, k-m+1)
        return math.exp(special.betaln(m + 1, k - m + 1))
    if isinstance(model, GammaSubordinator):
        # w = e^{-x} turns the integral into Int (1-w)^m w^{a-1}/(-ln w) dw with
        # a = rate + k - m; its a-derivative is -Beta(a, m+1) and it vanishes at
        # a = inf, so it equals Int_a^inf Beta(u, m+1) du (no cancellation,
        # unlike the small-m binomial expansion -sum_j C(m,j)(-1)^j ln(a+j)).
        a = model.rate + k - m
        return adaptive(lambda y: np.exp(special.betaln(a * np.exp(y), m + 1)
                                         + math.log(a) + y),
                        0.0, 80.0 / m + 3.0, abs_floor=1e-300)

    def integrand(v):
        lt = _log_tilt(v)
        return np.exp(m * lt - (k - m) * np.exp(-np.minimum(v, 700.0))) * model._v_density(v)

    val = 0.0
    if model._atom_x.size:
        u = -np.expm1(-model._atom_x)
        val += float(np.dot(model._atom_w, u ** m * np.exp(-(k - m) * model._atom_x)))
    if model._has_density:
        val += adaptive(integrand, model._v_lo, max(model._v_lo + 60.0, math.log(k) + 45.0),
                        abs_floor=1e-300)
    return val


class DecrementMatrix:
    """Memoized law q(k, .) of the first block of a size-k composition.

    Rows are extended lazily entry by entry; the sequential sampler only ever
    needs the first few entries of a row (first blocks are small).
    """

    def __init__(self, model: LevyModel):
        self.model = model
        self._rows: dict[int, list] = {}
        self._cums: dict[int, list] = {}

    def _block_weight(self, k: int, m: int) -> float:
        return float(special.comb(k, m, exact=(k < 500))) * first_block_integral(self.model, k, m)

    def _extend(self, k: int, upto: int):
        row = self._rows.setdefault(k, [])
        cum = self._cums.setdefault(k, [])
        norm = self.model.phi_hat(k)
        while len(row) < min(upto, k):
            m = len(row) + 1
            q = self._block_weight(k, m) / norm
            row.append(q)
            cum.append((cum[-1] if cum else 0.0) + q)

    def q(self, k: int, m: int) -> float:
        if not 1 <= m <= k:
            raise ValueError("need 1 <= m <= k")
        self._extend(k, m)
        return self._rows[k][m - 1]

    def q_row(self, k: int) -> np.ndarray:
        """Full row q(k, 1..k); checked to sum to 1 within 1e-9."""
        self._extend(k, k)
        row = np.array(self._rows[k])
        if abs(row.sum() - 1.0) > 1e-9:
            raise RegencompError(f"decrement row {k} sums to {row.sum():.12f}")
        return row

    def sample_first_block(self, k: int, u: float) -> int:
        """Inverse-CDF draw with early exit."""
        if k == 1:
            return 1
        cum = self._cums.setdefault(k, [])
        m = 1
        while True:
            if len(cum) < m:
                self._extend(k, m)
            if u <= cum[m - 1] or m >= k:
                return m
            m += 1

    def sample_first_blocks(self, k: int, us: np.ndarray) -> np.ndarray:
        """Vectorized inverse-CDF for a batch of uniforms at the same k."""
        if k == 1:
            return np.ones(us.size, int)
        need = float(us.max())
        m = len(self._cums.get(k, []))
        while (m < k) and (m == 0 or self._cums[k][-1] < need):
            m += max(1, m // 2)
            self._extend(k, m)
        cum = np.array(self._cums[k])
        return np.minimum(np.searchsorted(cum, us, side="left") + 1, k)


# ----------------------------------------------------------------------------
# path-based sampling
# ----------------------------------------------------------------------------

def _counts_to_blocks(flat_ids, counts, n_cols, reps):
    rows = flat_ids // n_cols
    K = np.bincount(rows, minlength=reps)
    K1 = np.bincount(rows[counts == 1], minlength=reps)
    return K, K1


def sample_compositions_path(model: LevyModel, n: int, reps: int, rng,
                             eps: Optional[float] = None, mode: str = "points",
                             return_parts: bool = False):
    """Batch of (K_n, K_{n,1}) from the path construction.

    `points` drops explicit exponential points into gaps (literal
    construction); `cells` draws the conditional multinomial occupancy given
    the path. Both are exact; `cells` scales to n ~ 1e6.
    """
    rng = rng if isinstance(rng, np.random.Generator) else derive_rng(rng)
    if n < 1 or reps < 1:
        raise ValueError("need n >= 1 and reps >= 1")
    if mode == "points":
        return _sample_points(model, n, reps, rng, eps, return_parts)
    if mode == "cells":
        if return_parts:
            raise ValueError("parts extraction is only supported in points mode")
        return _sample_cells(model, n, reps, rng, eps)
    raise ValueError(f"unknown mode {mode!r}")


def _sample_points(model, n, reps, rng, eps, return_parts):
    E = rng.exponential(1.0, (reps, n))
    level = float(E.max()) * (1.0 + 1e-12) + 1e-12
    if eps is None:
        eps = model.default_eps(n, max(level, 1.0))
    pb = batch_paths(model, level, reps, rng, eps)
    n_cols = pb.cum.shape[1]
    col = np.arange(n_cols)[None, :]
    big = level * 2.0 + 4.0
    bins = np.where(col < pb.n_jumps[:, None], pb.cum, big + col)
    offset = big + n_cols + 1.0
    bins += offset * np.arange(reps)[:, None]
    pts = np.sort(E, axis=1) + offset * np.arange(reps)[:, None]
    cell = np.searchsorted(bins.ravel(), pts.ravel())      # global gap index
    uid, counts = np.unique(cell, return_counts=True)
    K, K1 = _counts_to_blocks(uid, counts, n_cols, reps)
    if not return_parts:
        return K, K1
    rows = uid // n_cols
    parts = [Composition(tuple(counts[rows == r])) for r in range(reps)]
    return K, K1, parts


def _gap_probs(pb):
    n_cols = pb.cum.shape[1]
    col = np.arange(n_cols)[None, :]
    mask = col < pb.n_jumps[:, None]
    expS = np.exp(-pb.cum)
    bounds = np.hstack([np.ones((pb.cum.shape[0], 1)), expS])
    p = np.where(mask, bounds[:, :-1] - bounds[:, 1:], 0.0)
    tail = np.take_along_axis(expS, pb.n_jumps[:, None] - 1, axis=1)
    p = np.hstack([p, tail])
    p[:, -1] = np.maximum(1.0 - p[:, :-1].sum(axis=1), 0.0)
    return p, mask


def _sample_cells(model, n, reps, rng, eps, margin=30.0):
    level = math.log(max(n, 2)) + margin
    if eps is None:
        eps = model.default_eps(n, level)
    pb = batch_paths(model, level, reps, rng, eps)
    p, _ = _gap_probs(pb)
    counts = rng.multinomial(int(n), p)
    K = np.count_nonzero(counts[:, :-1], axis=1)
    K1 = (counts[:, :-1] == 1).sum(axis=1)
    spill = counts[:, -1]
    for r in np.nonzero(spill)[0]:
        # points beyond the simulated level restart a fresh, independent
        # subproblem by memorylessness of the sample and of the path
        kk, kk1 = _sample_points(model, int(spill[r]), 1, rng, eps, False)
        K[r] += kk[0]
        K1[r] += kk1[0]
    return K, K1


def sample_poisson_counts(model: LevyModel, t: float, reps: int, rng,
                          eps: Optional[float] = None, margin=30.0):
    """Batch of (K(t), K(t,1), pi_t): independent Poisson cell counts."""
    rng = rng if isinstance(rng, np.random.Generator) else derive_rng(rng)
    level = math.log(max(t, 2.0)) + margin
    if eps is None:
        eps = model.default_eps(t, level)
    pb = batch_paths(model, level, reps, rng, eps)
    p, _ = _gap_probs(pb)
    counts = rng.poisson(t * p)
    K = np.count_nonzero(counts[:, :-1], axis=1)
    K1 = (counts[:, :-1] == 1).sum(axis=1)
    pi = counts.sum(axis=1)
    spill = counts[:, -1]
    for r in np.nonzero(spill)[0]:
        kk, kk1 = _sample_points(model, int(spill[r]), 1, rng, eps, False)
        K[r] += kk[0]
        K1[r] += kk1[0]
    return K, K1, pi


def sample_composition_path(model: LevyModel, n: int, eps: Optional[float] = None,
                            rng_seed=0) -> Composition:
    """One composition from the literal painting construction."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else derive_rng(rng_seed)
    _, _, parts = sample_compositions_path(model, n, 1, rng, eps=eps,
                                           mode="points", return_parts=True)
    return parts[0]


def sample_poissonized(model: LevyModel, t: float, eps: Optional[float] = None,
                       rng_seed=0) -> PoissonOccupancy:
    """One Poissonized occupancy: pi_t ~ Poisson(t) exponential points."""
    if t <= 0:
        raise ValueError("t must be positive")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else derive_rng(rng_seed)
    pi = int(rng.poisson(t))
    if pi == 0:
        return PoissonOccupancy(t, (), 0, 0, 0)
    comp = sample_composition_path(model, pi, eps=eps, rng_seed=rng)
    k, k1 = block_counts(comp)
    return PoissonOccupancy(t, comp.parts, pi, k, k1)


# ----------------------------------------------------------------------------
# decrement sampling
# ----------------------------------------------------------------------------

def sample_composition_decrement(model: LevyModel, n: int, rng_seed=0,
                                 dm: Optional[DecrementMatrix] = None) -> Composition:
    """One composition by sequential first-block deletion."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else derive_rng(rng_seed)
    if n > DECREMENT_N_CAP:
        raise ValueError(f"decrement sampler capped at n = {DECREMENT_N_CAP}; use the path sampler")
    dm = dm or DecrementMatrix(model)
    parts, k = [], int(n)
    while k > 0:
        m = dm.sample_first_block(k, rng.random())
        parts.append(m)
        k -= m
    return Composition(tuple(parts))


def sample_compositions_decrement(model: LevyModel, n: int, reps: int, rng,
                                  dm: Optional[DecrementMatrix] = None):
    """Batch of (K_n, K_{n,1}) from the decrement sampler (state-grouped)."""
    rng = rng if isinstance(rng, np.random.Generator) else derive_rng(rng)
    if n > DECREMENT_N_CAP:
        raise ValueError(f"decrement sampler capped at n = {DECREMENT_N_CAP}; use the path sampler")
    dm = dm or DecrementMatrix(model)
    state = np.full(reps, int(n))
    K = np.zeros(reps, int)
    K1 = np.zeros(reps, int)
    while True:
        active = state > 0
        if not active.any():
            break
        for k in np.unique(state[active]):
            idx = np.nonzero(state == k)[0]
            m = dm.sample_first_blocks(int(k), rng.random(idx.size))
            state[idx] -= m
            K[idx] += 1
            K1[idx] += (m == 1)
    return K, K1
