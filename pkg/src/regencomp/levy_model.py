"""Jump-measure model families and every deterministic functional built on them.

A model describes an increasing pure-jump Levy process S (no drift, no
killing) through its jump measure nu on (0, inf). The two exponents in play
are

    phi(t)     = Int (1 - exp(-t (1 - e^{-x}))) nu(dx)     (tilted exponent)
    phi_hat(t) = Int (1 - e^{-t x}) nu(dx)                 (Laplace exponent)

which agree at infinity. Growth of t -> phi(e^t) selects the limit-law branch:
polynomial in the log argument (index beta), de Haan's class Gamma (auxiliary
function h), or bounded (finite nu, compound Poisson).

All quadrature runs in the variable v = log(1/x); see quadrature module notes.
Instances are immutable after construction and safe to share across processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from .quadrature import adaptive, fixed_gauss, gauss_panel_nodes
from .util import UnsupportedRegimeError

EULER_GAMMA = 0.5772156649015329

# Spline window for the cached log-exponent interpolants (argument s = log t).
# The upper end covers renewal-smoothing checks at levels up to ~200; the
# exponents vary slowly there, so the grid coarsens past the working range.
_SPL_LO, _SPL_HI, _SPL_MID = -60.0, 240.0, 36.0


def _spline_grid():
    return np.concatenate([np.arange(_SPL_LO, _SPL_MID, 0.04),
                           np.arange(_SPL_MID, _SPL_HI + 1e-9, 0.5)])


class GrowthRegime(str, Enum):
    POLY_LOG = "poly_log"            # phi(e^t) ~ t^beta * slowly varying
    DE_HAAN_GAMMA = "de_haan_gamma"  # phi(e^t) in de Haan's class Gamma
    BOUNDED = "bounded"              # nu finite: compound Poisson


# ----------------------------------------------------------------------------
# stable elementary kernels (all vectorized over v = log(1/x), s = log t)
# ----------------------------------------------------------------------------

def _log_tilt(v):
    """log(1 - e^{-x}) with x = e^{-v}, stable over the whole real line."""
    v = np.asarray(v, float)
    x = np.exp(-np.minimum(v, 700.0))
    with np.errstate(divide="ignore"):
        out = np.where(x > 0.5,
                       np.log1p(-np.exp(-np.maximum(x, 0.5))),
                       np.log(np.maximum(-np.expm1(-np.minimum(x, 0.5)), 1e-320)))
    return np.where(v > 690.0, -v, out)


def occ_kernel(s, v):
    """1 - exp(-e^s (1 - e^{-e^{-v}})): occupancy probability factor."""
    z = np.asarray(s, float) + _log_tilt(v)
    return np.where(z > 36.8, 1.0, -np.expm1(-np.exp(np.minimum(z, 37.0))))


def tilt_decay_kernel(s, v):
    """(1 - e^{-x}) exp(-e^s (1 - e^{-x})) with x = e^{-v}: phi-prime integrand."""
    lt = _log_tilt(v)
    z = np.asarray(s, float) + lt
    return np.exp(lt - np.exp(np.minimum(z, 37.0))) * (z <= 36.8)


def hat_kernel(s, v):
    """1 - exp(-t x) = 1 - exp(-e^{s - v})."""
    z = np.asarray(s, float) - np.asarray(v, float)
    return np.where(z > 36.8, 1.0, -np.expm1(-np.exp(np.minimum(z, 37.0))))


def hat_decay_kernel(s, v):
    """x exp(-t x) with x = e^{-v}, t = e^s."""
    z = np.asarray(s, float) - np.asarray(v, float)
    return np.exp(-np.asarray(v, float) - np.exp(np.minimum(z, 37.0))) * (z <= 36.8)


# ----------------------------------------------------------------------------
# model base
# ----------------------------------------------------------------------------

class LevyModel:
    """Common machinery; subclasses fill in the measure and closed forms."""

    name: str = "base"
    regime: GrowthRegime
    beta: Optional[float] = None         # POLY_LOG index
    tail_alpha: Optional[float] = None   # declared tail index of nu at infinity
    kn1_ready: bool = False              # t*Phi'(t) nondecreasing, declared
    #: limit of the slowly varying part of phi(e^t)/t^beta, where finite.
    L1_limit: Optional[float] = None
    lattice_span: Optional[float] = None

    # measure description: optional density in v = log(1/x) plus optional atoms
    _v_lo: float = -7.5
    _atom_x: np.ndarray = np.empty(0)
    _atom_w: np.ndarray = np.empty(0)

    def _v_density(self, v):
        """nu transported to v = log(1/x); zero when the family is atomic."""
        return np.zeros_like(np.asarray(v, float))

    _has_density = True

    # -- moments ------------------------------------------------------------
    @cached_property
    def m(self) -> float:
        """E S(1) = Int x nu(dx)."""
        raise NotImplementedError

    @cached_property
    def s2(self) -> float:
        """Var S(1) = Int x^2 nu(dx); may be inf."""
        raise NotImplementedError

    @property
    def is_finite(self) -> bool:
        return self.regime is GrowthRegime.BOUNDED

    @cached_property
    def total_mass(self) -> float:
        return math.inf

    @cached_property
    def walk_variance(self) -> float:
        """Variance of a single jump when nu is a probability measure."""
        if not self.is_finite:
            raise UnsupportedRegimeError("walk variance only defined for finite nu")
        return self.s2 - self.m ** 2

    @cached_property
    def phi_prime_zero(self) -> float:
        """Phi'(0+) = Int (1 - e^{-x}) nu(dx), finite for every admissible nu."""
        val = float(np.sum(self._atom_w * (-np.expm1(-self._atom_x))))
        if self._has_density:
            val += adaptive(lambda v: -np.expm1(-np.exp(-v)) * self._v_density(v),
                            self._v_lo, 60.0, rel_tol=1e-12)
        return val

    # -- exponents (contract-grade adaptive evaluation) ----------------------
    def _quad_exponent(self, kernel, s: float) -> float:
        val = 0.0
        if self._atom_x.size:
            va = -np.log(self._atom_x)
            val += float(np.sum(self._atom_w * kernel(s, va)))
        if self._has_density:
            hi = max(s + 45.0, self._v_lo + 60.0)
            val += adaptive(lambda v: kernel(s, v) * self._v_density(v),
                            self._v_lo, hi, points=[s])
        return val

    def phi_exp(self, s: float) -> float:
        """phi evaluated at t = e^s; usable for arbitrarily large s."""
        return self._quad_exponent(occ_kernel, float(s))

    def phi(self, t: float) -> float:
        """Tilted exponent Phi(t); Phi(0) = 0, nondecreasing."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0.0:
            return 0.0
        return self.phi_exp(math.log(t))

    def phi_hat(self, t: float) -> float:
        """Laplace exponent of S."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0.0:
            return 0.0
        return self._quad_exponent(hat_kernel, math.log(t))

    def phi_prime(self, t: float) -> float:
        """d Phi / dt = Int (1-e^{-x}) exp(-t(1-e^{-x})) nu(dx); nonincreasing."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        return self._quad_exponent(tilt_decay_kernel, math.log(t) if t > 0 else -745.0)

    def phi_hat_prime(self, t: float) -> float:
        """d PhiHat / dt = Int x e^{-t x} nu(dx) (t > 0)."""
        if t <= 0:
            raise ValueError("t must be positive")
        return self._quad_exponent(hat_decay_kernel, math.log(t))

    def tail(self, x: float) -> float:
        """nu[x, inf), exactly per family."""
        raise NotImplementedError

    # -- cached vector evaluation (log-log splines) ---------------------------
    def _grid_exponent(self, kernel, s_grid):
        nodes, w = gauss_panel_nodes(self._v_lo, _SPL_HI + 46.0, 0.25, 8)
        dens = self._v_density(nodes) * w if self._has_density else None
        va = -np.log(self._atom_x) if self._atom_x.size else None
        out = np.empty_like(s_grid)
        for i0 in range(0, s_grid.size, 256):
            ss = s_grid[i0:i0 + 256, None]
            acc = np.zeros(ss.shape[0])
            if dens is not None:
                acc += kernel(ss, nodes[None, :]) @ dens
            if va is not None:
                acc += kernel(ss, va[None, :]) @ self._atom_w
            out[i0:i0 + 256] = acc
        return out

    @cached_property
    def _logphi_spline(self):
        s = _spline_grid()
        return CubicSpline(s, np.log(self._grid_exponent(occ_kernel, s)))

    @cached_property
    def _logpsi_spline(self):
        # psi(s) = e^s Phi'(e^s) = d phi(e^s) / ds
        s = _spline_grid()
        vals = self._grid_exponent(tilt_decay_kernel, s) * np.exp(s)
        return CubicSpline(s, np.log(vals))

    def phi_exp_vec(self, s):
        """Vectorized phi(e^s) via the cached interpolant (rel err ~1e-9)."""
        s = np.asarray(s, float)
        out = np.empty_like(s)
        low = s < _SPL_LO
        high = s > _SPL_HI
        mid = ~(low | high)
        if low.any():
            out[low] = self.phi_prime_zero * np.exp(s[low])
        if mid.any():
            out[mid] = np.exp(self._logphi_spline(s[mid]))
        if high.any():
            out[high] = [self.phi_exp(float(x)) for x in np.atleast_1d(s[high])]
        return out

    def phi_prime_exp_vec(self, s):
        """Vectorized e^s Phi'(e^s)."""
        s = np.asarray(s, float)
        out = np.empty_like(s)
        low = s < _SPL_LO
        high = s > _SPL_HI
        mid = ~(low | high)
        if low.any():
            out[low] = self.phi_prime_zero * np.exp(s[low])
        if mid.any():
            out[mid] = np.exp(self._logpsi_spline(s[mid]))
        if high.any():
            out[high] = [self._quad_exponent(tilt_decay_kernel, float(x)) * math.exp(x)
                         for x in np.atleast_1d(s[high])]
        return out

    def int_phi_exp(self, s_lo: float, s_hi: float) -> float:
        """Int_{s_lo}^{s_hi} phi(e^u) du, i.e. Int Phi(y)/y dy in y = e^u."""
        return fixed_gauss(self.phi_exp_vec, s_lo, s_hi, panel_width=0.05, order=8)

    def log_phi_exp(self, s: float) -> float:
        """log phi(e^s); overridden where phi itself would overflow."""
        return math.log(self.phi_exp(s))

    def de_haan_h(self, t: float) -> float:
        """Auxiliary function h(t) = Int_0^t phi(e^y) dy / phi(e^t)."""
        if self.regime is not GrowthRegime.DE_HAAN_GAMMA:
            raise UnsupportedRegimeError("auxiliary function requires the de Haan regime")
        if t <= _SPL_HI:
            return self.int_phi_exp(0.0, t) / self.phi_exp_vec(np.array([t]))[0]
        # large t: integrate exp(log phi(y) - log phi(t)) on a fine tail grid
        lp_t = self.log_phi_exp(t)
        grid = np.linspace(0.0, t, 4001)
        lp = np.array([self.log_phi_exp(float(y)) if y > _SPL_HI
                       else float(np.log(self.phi_exp_vec(np.array([max(y, _SPL_LO + 1)]))[0]))
                       for y in grid])
        return float(np.trapezoid(np.exp(lp - lp_t), grid))

    # -- jump machinery -------------------------------------------------------
    def jump_rate(self, eps: float) -> float:
        """nu[eps, inf): Poisson arrival rate of retained jumps."""
        return self.tail(eps)

    def sample_jump_sizes(self, rng, size: int, eps: float) -> np.ndarray:
        raise NotImplementedError

    def drift_loss(self, eps: float) -> float:
        """Int_0^eps x nu(dx): mass discarded by truncation."""
        raise NotImplementedError

    def default_eps(self, n_points: float, level: float) -> float:
        """Truncation threshold making n * tau * drift_loss <= 1e-3 (tau = level/m)."""
        if self.is_finite:
            return 0.0
        budget = 1e-3 * self.m / (max(n_points, 1.0) * max(level, 1.0))
        lo, hi = -700.0, math.log(0.25)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.drift_loss(math.exp(mid)) > budget:
                hi = mid
            else:
                lo = mid
        return math.exp(lo)

    # -- serialization --------------------------------------------------------
    def params(self) -> dict:
        return {}

    def to_config(self) -> dict:
        cond = {GrowthRegime.POLY_LOG: f"poly_log(beta={self.beta})",
                GrowthRegime.DE_HAAN_GAMMA: "de_haan_gamma",
                GrowthRegime.BOUNDED: "bounded"}[self.regime]
        return {"family": self.name, "params": self.params(), "declared_condition": cond}

    def __repr__(self):
        ps = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({ps})"


# ----------------------------------------------------------------------------
# families
# ----------------------------------------------------------------------------

class FiniteAtomic(LevyModel):
    """Finite atomic nu, normalized to a probability measure (compound Poisson)."""

    name = "finite_atomic"
    regime = GrowthRegime.BOUNDED
    _has_density = False

    def __init__(self, atoms):
        xs = np.array([float(x) for x, _ in atoms])
        ws = np.array([float(w) for _, w in atoms])
        if np.any(xs <= 0) or np.any(ws <= 0):
            raise ValueError("atoms need positive locations and masses")
        order = np.argsort(xs)
        self._atom_x = xs[order]
        self._atom_w = ws[order] / ws.sum()
        if len(xs) == 1:
            self.lattice_span = float(xs[0])

    def params(self):
        return {"atoms": [[float(x), float(w)] for x, w in zip(self._atom_x, self._atom_w)]}

    @cached_property
    def m(self):
        return float(np.dot(self._atom_w, self._atom_x))

    @cached_property
    def s2(self):
        return float(np.dot(self._atom_w, self._atom_x ** 2))

    @cached_property
    def total_mass(self):
        return 1.0

    def phi(self, t):
        if t < 0:
            raise ValueError("t must be nonnegative")
        return float(np.dot(self._atom_w, -np.expm1(np.expm1(-self._atom_x) * t)))

    def phi_exp(self, s):
        return float(np.dot(self._atom_w, occ_kernel(s, -np.log(self._atom_x))))

    def phi_exp_vec(self, s):
        s = np.asarray(s, float)
        return occ_kernel(s[..., None], -np.log(self._atom_x)) @ self._atom_w

    def phi_prime_exp_vec(self, s):
        s = np.asarray(s, float)[..., None]
        va = -np.log(self._atom_x)
        return (tilt_decay_kernel(s, va) @ self._atom_w) * np.exp(s[..., 0])

    def phi_hat(self, t):
        if t < 0:
            raise ValueError("t must be nonnegative")
        return float(np.dot(self._atom_w, -np.expm1(-self._atom_x * t)))

    def phi_prime(self, t):
        u = -np.expm1(-self._atom_x)
        return float(np.dot(self._atom_w, u * np.exp(-t * u)))

    def phi_hat_prime(self, t):
        return float(np.dot(self._atom_w, self._atom_x * np.exp(-t * self._atom_x)))

    def tail(self, x):
        return float(self._atom_w[self._atom_x >= x].sum())

    def sample_jump_sizes(self, rng, size, eps=0.0):
        return rng.choice(self._atom_x, p=self._atom_w, size=size)

    def drift_loss(self, eps):
        return float(np.dot(self._atom_w[self._atom_x < eps], self._atom_x[self._atom_x < eps]))

    def indicator_centering(self, L: float) -> float:
        # Int_0^L P{|log(1-W)| <= z} dz for W = e^{-jump}
        c = -np.log(-np.expm1(-self._atom_x))
        return float(np.dot(self._atom_w, np.maximum(0.0, L - c)))


class ExpIncrement(LevyModel):
    """nu(dx) = e^{-x} dx: jumps |log W| with W uniform on (0,1)."""

    name = "exp_increment"
    regime = GrowthRegime.BOUNDED
    _v_lo = -7.2

    def _v_density(self, v):
        # e^{-x} dx in v: e^{-e^{-v}} e^{-v}
        v = np.asarray(v, float)
        return np.exp(-np.exp(-np.minimum(v, 700.0)) - v)

    @cached_property
    def m(self):
        return 1.0

    @cached_property
    def s2(self):
        return 2.0

    @cached_property
    def total_mass(self):
        return 1.0

    def phi(self, t):
        # 1 - W ~ uniform(0,1): Phi(t) = 1 - (1 - e^{-t})/t
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0.0:
            return 0.0
        if t < 1e-5:
            return t / 2 - t * t / 6
        return 1.0 + math.expm1(-t) / t

    def phi_exp(self, s):
        return self.phi(math.exp(min(s, 700.0))) if s < 700 else 1.0

    def phi_exp_vec(self, s):
        t = np.exp(np.minimum(np.asarray(s, float), 700.0))
        small = t < 1e-5
        tt = np.maximum(t, 1e-300)
        return np.where(small, t / 2 - t * t / 6, 1.0 + np.expm1(-tt) / tt)

    def phi_prime(self, t):
        # Int_0^1 u e^{-t u} du
        if t < 1e-4:
            return 0.5 - t / 3 + t * t / 8
        return (1.0 - (1.0 + t) * math.exp(-t)) / (t * t)

    def phi_prime_exp_vec(self, s):
        t = np.exp(np.minimum(np.asarray(s, float), 350.0))
        small = t < 1e-4
        tt = np.maximum(t, 1e-300)
        val = np.where(small, 0.5 - t / 3, (1.0 - (1.0 + tt) * np.exp(-tt)) / (tt * tt))
        return val * t

    def phi_hat(self, t):
        # 1 - E W^t = t/(1+t)
        if t < 0:
            raise ValueError("t must be nonnegative")
        return t / (1.0 + t)

    def phi_hat_prime(self, t):
        return 1.0 / (1.0 + t) ** 2

    def tail(self, x):
        return math.exp(-x)

    def sample_jump_sizes(self, rng, size, eps=0.0):
        return rng.exponential(1.0, size)

    def drift_loss(self, eps):
        return 0.0 if eps <= 0 else float(-np.expm1(-eps) - eps * np.exp(-eps))

    def indicator_centering(self, L: float) -> float:
        # |log(1-W)| ~ Exp(1)
        return L - 1.0 + math.exp(-L)


class GammaSubordinator(LevyModel):
    """nu(dx) = x^{-1} e^{-rate x} dx; PhiHat(t) = log(1 + t/rate)."""

    name = "gamma"
    regime = GrowthRegime.POLY_LOG
    beta = 1.0
    L1_limit = 1.0
    kn1_ready = True   # t Phi'(t) -> 1 monotonely; the singleton-count limit still
    # excludes this family (index 1 with a finite slowly-varying limit); the law
    # selector reports as the open two-component case.

    def __init__(self, rate=1.0):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = float(rate)
        self._v_lo = -max(8.0 - math.log(rate), 1.0)

    def params(self):
        return {"rate": self.rate}

    def _v_density(self, v):
        v = np.asarray(v, float)
        return np.exp(-self.rate * np.exp(-np.minimum(v, 700.0)))

    @cached_property
    def m(self):
        return 1.0 / self.rate

    @cached_property
    def s2(self):
        return 1.0 / self.rate ** 2

    def phi_hat(self, t):
        if t < 0:
            raise ValueError("t must be nonnegative")
        return math.log1p(t / self.rate)

    def phi_hat_prime(self, t):
        return 1.0 / (self.rate + t)

    def tail(self, x):
        return float(special.exp1(self.rate * x))

    def marginal_cdf(self, v, s):
        """P{S(v) <= s}: the time-v marginal is Gamma(shape v, rate rate)."""
        return special.gammainc(v, self.rate * np.asarray(s, float))

    def sample_jump_sizes(self, rng, size, eps):
        # exact rejection per component: [eps,1/rate] log-uniform proposal with
        # acceptance e^{-rate x}; beyond, shifted-exponential proposal with
        # acceptance (1/rate)/x. Component picked by its true nu-mass.
        th = self.rate
        split = 1.0 / th
        c_low = float(special.exp1(th * eps) - special.exp1(1.0))
        c_high = float(special.exp1(1.0))
        out = np.empty(size)
        n_low = rng.binomial(size, c_low / (c_low + c_high)) if size else 0
        k = 0
        lo_log = math.log(eps)
        span = math.log(split) - lo_log
        while k < n_low:
            todo = n_low - k
            x = np.exp(lo_log + span * rng.random(int(todo * 1.35) + 8))
            x = x[rng.random(x.size) < np.exp(-th * x)][:todo]
            out[k:k + x.size] = x
            k += x.size
        while k < size:
            todo = size - k
            x = split + rng.exponential(split, int(todo * 2.1) + 8)
            x = x[rng.random(x.size) * x < split][:todo]
            out[k:k + x.size] = x
            k += x.size
        return rng.permutation(out)

    def drift_loss(self, eps):
        return float(-np.expm1(-self.rate * eps)) / self.rate


class LogPower(LevyModel):
    """nu[x, inf) = (log(1/x))^beta on (0, e^{-1}], zero beyond.

    The tail formula leaves an atom of mass 1 at x0 = e^{-1} on top of the
    density beta (log 1/x)^{beta-1} / x.
    """

    name = "log_power"
    regime = GrowthRegime.POLY_LOG
    L1_limit = 1.0

    def __init__(self, beta=2.0):
        if beta < 1.0:
            raise ValueError("beta must be >= 1")
        self.beta = float(beta)
        self.kn1_ready = beta > 1.0
        self._atom_x = np.array([math.exp(-1.0)])
        self._atom_w = np.array([1.0])
        self._v_lo = 1.0

    def params(self):
        return {"beta": self.beta}

    def _v_density(self, v):
        v = np.asarray(v, float)
        return np.where(v >= 1.0, self.beta * np.maximum(v, 1.0) ** (self.beta - 1.0), 0.0)

    @cached_property
    def m(self):
        b = self.beta
        return float(special.gamma(b + 1) * special.gammaincc(b, 1.0)) + math.exp(-1.0)

    @cached_property
    def s2(self):
        b = self.beta
        return float(2.0 ** (-b) * special.gamma(b + 1) * special.gammaincc(b, 2.0)) + math.exp(-2.0)

    def tail(self, x):
        if x > math.exp(-1.0):
            return 0.0
        return math.log(1.0 / x) ** self.beta

    def sample_jump_sizes(self, rng, size, eps):
        # tail value of the drawn jump is uniform on (0, tail(eps)); values
        # below 1 land on the atom at e^{-1}
        lam = self.tail(eps)
        u = rng.random(size) * lam
        v = np.maximum(u, 1.0) ** (1.0 / self.beta)
        return np.exp(-v)

    def drift_loss(self, eps):
        b = self.beta
        L = math.log(1.0 / eps)
        return float(special.gamma(b + 1) * special.gammaincc(b, L))


class DeHaanExp(LevyModel):
    """nu[x, inf) = exp(gamma (log(1/x))^delta) - 1 on (0, 1).

    phi(e^t) grows like exp(gamma t^delta): de Haan class Gamma with auxiliary
    function h(t) ~ t^{1-delta}/(gamma delta). Atomless; tail vanishes at 1.
    """

    name = "de_haan_exp"
    regime = GrowthRegime.DE_HAAN_GAMMA
    kn1_ready = True
    _has_density = True
    _v_lo = 0.0

    def __init__(self, gamma=1.0, delta=0.5):
        if gamma <= 0 or not 0.0 < delta < 1.0:
            raise ValueError("need gamma > 0 and delta in (0,1)")
        self.gamma = float(gamma)
        self.delta = float(delta)

    def params(self):
        return {"gamma": self.gamma, "delta": self.delta}

    def _v_density(self, v):
        v = np.asarray(v, float)
        g, d = self.gamma, self.delta
        vv = np.maximum(v, 1e-300)
        return np.where(v > 0, g * d * vv ** (d - 1.0) * np.exp(g * vv ** d), 0.0)

    def _quad_exponent(self, kernel, s):
        # v^{delta-1} endpoint singularity removed by w = v^delta on (0,1]
        g, d = self.gamma, self.delta
        inner = adaptive(lambda w: kernel(s, np.maximum(w, 1e-300) ** (1.0 / d)) * g * np.exp(g * w),
                         0.0, 1.0)
        hi = max(s + 45.0, 60.0)
        outer = adaptive(lambda v: kernel(s, v) * self._v_density(v), 1.0, hi, points=[s])
        return inner + outer

    def _grid_exponent(self, kernel, s_grid):
        g, d = self.gamma, self.delta
        w_nodes, w_w = gauss_panel_nodes(0.0, 1.0, 0.02, 8)
        v_in = np.maximum(w_nodes, 1e-300) ** (1.0 / d)
        dens_in = g * np.exp(g * w_nodes) * w_w
        v_nodes, v_w = gauss_panel_nodes(1.0, _SPL_HI + 46.0, 0.25, 8)
        dens_out = self._v_density(v_nodes) * v_w
        out = np.empty_like(s_grid)
        for i0 in range(0, s_grid.size, 256):
            ss = s_grid[i0:i0 + 256, None]
            out[i0:i0 + 256] = (kernel(ss, v_in[None, :]) @ dens_in
                                + kernel(ss, v_nodes[None, :]) @ dens_out)
        return out

    @cached_property
    def m(self):
        return self._moment(1)

    @cached_property
    def s2(self):
        return self._moment(2)

    def _moment(self, k):
        g, d = self.gamma, self.delta
        inner = adaptive(lambda w: np.exp(-k * np.maximum(w, 1e-300) ** (1.0 / d)) * g * np.exp(g * w), 0.0, 1.0)
        outer = adaptive(lambda v: np.exp(-k * v) * self._v_density(v), 1.0, 200.0)
        return inner + outer

    def tail(self, x):
        if x >= 1.0:
            return 0.0
        return math.expm1(self.gamma * math.log(1.0 / x) ** self.delta)

    def log_phi_exp(self, s):
        if s <= _SPL_HI:
            return math.log(self.phi_exp(s))
        # factor out the peak exp(gamma s^delta); the integrand concentrates
        # around v = s over the scale 1/(gamma delta s^{delta-1})
        g, d = self.gamma, self.delta
        peak = g * s ** d
        c = max(g * d * s ** (d - 1.0), 1e-12)
        lo = max(1e-12, s - 45.0 / c)

        def rest(v):
            v = np.maximum(np.asarray(v, float), 1e-300)
            return occ_kernel(s, v) * g * d * v ** (d - 1.0) * np.exp(g * v ** d - peak)

        val = adaptive(rest, lo, s + 45.0, rel_tol=1e-9, points=[s])
        # below lo the occupancy factor is 1 and the density integrates exactly
        val += math.expm1(g * lo ** d) * math.exp(-peak)
        return peak + math.log(val)

    def de_haan_h(self, t):
        if t <= _SPL_HI:
            return LevyModel.de_haan_h(self, t)
        # the mass of Int_0^t phi sits within ~h of t; e^-50 truncation error
        lp_t = self.log_phi_exp(t)
        h_est = t ** (1.0 - self.delta) / (self.gamma * self.delta)
        grid = np.linspace(max(0.0, t - 50.0 * h_est), t, 1201)
        lp = np.array([self.log_phi_exp(float(y)) for y in grid])
        return float(np.trapezoid(np.exp(lp - lp_t), grid))

    def sample_jump_sizes(self, rng, size, eps):
        lam = self.tail(eps)
        u = rng.random(size) * lam
        v = (np.log1p(u) / self.gamma) ** (1.0 / self.delta)
        return np.exp(-v)

    def drift_loss(self, eps):
        L = math.log(1.0 / eps)
        return adaptive(lambda v: np.exp(-v) * self._v_density(v), L, L + 80.0,
                        abs_floor=1e-300) if eps < 1.0 else 0.0


class HeavyComposite(LevyModel):
    """LogPower(beta) mass near 0 plus a Pareto density alpha C x^{-alpha-1} on [1, inf).

    Gives the poly-log growth regime at 0 together with a regularly varying
    tail of index alpha in (1, 2) at infinity (so Var S(1) = inf).
    """

    name = "heavy_composite"
    regime = GrowthRegime.POLY_LOG
    L1_limit = 1.0

    def __init__(self, beta=2.0, alpha=1.5, C=1.0):
        if not 1.0 < alpha < 2.0:
            raise ValueError("alpha must lie in (1,2)")
        if C <= 0:
            raise ValueError("C must be positive")
        self._lp = LogPower(beta)
        self.beta = float(beta)
        self.alpha = float(alpha)
        self.C = float(C)
        self.tail_alpha = float(alpha)
        self.kn1_ready = beta > 1.0
        self._atom_x = self._lp._atom_x
        self._atom_w = self._lp._atom_w
        self._v_lo = -(16.0 * math.log(10.0) + max(0.0, math.log(C))) / alpha - 2.0

    def params(self):
        return {"beta": self.beta, "alpha": self.alpha, "C": self.C}

    def _v_density(self, v):
        v = np.asarray(v, float)
        pareto = np.where(v <= 0, self.alpha * self.C * np.exp(self.alpha * v), 0.0)
        return pareto + self._lp._v_density(v)

    @cached_property
    def m(self):
        return self._lp.m + self.alpha * self.C / (self.alpha - 1.0)

    @cached_property
    def s2(self):
        return math.inf

    def tail(self, x):
        if x >= 1.0:
            return self.C * x ** (-self.alpha)
        return self.C + self._lp.tail(x)

    def slow_part(self, x):
        """L(x) with nu[x, inf) = x^{-alpha} L(x); constant C beyond 1."""
        return x ** self.alpha * self.tail(x)

    def sample_jump_sizes(self, rng, size, eps):
        lam_lp = self._lp.tail(eps)
        pick = rng.random(size) * (lam_lp + self.C) < lam_lp
        n_lp = int(pick.sum())
        out = np.empty(size)
        out[:n_lp] = self._lp.sample_jump_sizes(rng, n_lp, eps)
        out[n_lp:] = rng.random(size - n_lp) ** (-1.0 / self.alpha)
        return rng.permutation(out)

    def drift_loss(self, eps):
        return self._lp.drift_loss(eps)


# ----------------------------------------------------------------------------
# serialization / presets
# ----------------------------------------------------------------------------

_FAMILIES = {
    "finite_atomic": lambda p: FiniteAtomic(p["atoms"]),
    "exp_increment": lambda p: ExpIncrement(),
    "gamma": lambda p: GammaSubordinator(**p),
    "log_power": lambda p: LogPower(**p),
    "de_haan_exp": lambda p: DeHaanExp(**p),
    "heavy_composite": lambda p: HeavyComposite(**p),
}

PRESETS = {
    "gamma1": {"family": "gamma", "params": {"rate": 1.0}},
    "atom_log2": {"family": "finite_atomic", "params": {"atoms": [[math.log(2.0), 1.0]]}},
    "two_atoms": {"family": "finite_atomic",
                  "params": {"atoms": [[math.log(2.0), 0.6], [math.log(5.0), 0.4]]}},
    "uniform_w": {"family": "exp_increment", "params": {}},
    "log_power2": {"family": "log_power", "params": {"beta": 2.0}},
    # delta high enough that the class-Gamma ratio band holds at t = 1e3
    "de_haan": {"family": "de_haan_exp", "params": {"gamma": 1.0, "delta": 0.8}},
    "heavy15": {"family": "heavy_composite", "params": {"beta": 2.0, "alpha": 1.5, "C": 1.0}},
}


def model_from_config(cfg) -> LevyModel:
    """Build a model from {family, params[, declared_condition]} or a preset name."""
    if isinstance(cfg, str):
        if cfg not in PRESETS:
            raise ValueError(f"unknown model preset {cfg!r}; known: {sorted(PRESETS)}")
        cfg = PRESETS[cfg]
    fam = cfg.get("family")
    if fam not in _FAMILIES:
        raise ValueError(f"unknown family {fam!r}")
    model = _FAMILIES[fam](dict(cfg.get("params", {})))
    declared = cfg.get("declared_condition")
    if declared is not None and not declared.startswith(model.to_config()["declared_condition"].split("(")[0]):
        raise ValueError(f"declared condition {declared!r} inconsistent with family {fam!r}")
    return model


# ----------------------------------------------------------------------------
# normalizing constants
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class NormConstants:
    """Centering/normalization pair for a block-count statistic at size n."""

    b_n: float
    a_n: float
    g_of: Callable[[float], float]
    h_of: Optional[Callable[[float], float]]
    c_of: Optional[Callable[[float], float]]
    branch: str
    scale_arg: float


def solve_scale_c(L: Callable[[float], float], alpha: float, x: float) -> float:
    """The normalizer c(x) with x L(c)/c^alpha = 1, by bisection on [1, max(x^2, 10)]."""
    lo, hi = 1.0, max(x * x, 10.0)
    f = lambda c: x * L(c) / c ** alpha - 1.0
    if f(lo) < 0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def growth_g(model: LevyModel) -> tuple[Callable[[float], float], Optional[Callable[[float], float]], str]:
    """Scaling function g for the first-passage fluctuations, plus c() if stable.

    finite variance: g(x) = sqrt(s2 m^-3 x); infinite variance with tail index
    alpha: g(x) = m^{-1-1/alpha} c(x); otherwise g(x) = m^{-3/2} c(x) with c
    built from the truncated second moment.
    """
    m = model.m
    if np.isfinite(model.s2):
        s2 = model.s2
        return (lambda x: math.sqrt(s2 * x / m ** 3)), None, "finite_variance"
    if model.tail_alpha is not None:
        alpha = model.tail_alpha
        L = model.slow_part
        c_of = lambda x: solve_scale_c(L, alpha, x)
        return (lambda x: m ** (-1.0 - 1.0 / alpha) * c_of(x)), c_of, "stable_tail"

    def L_trunc(x):
        return trunc_second_moment(model, x)

    c_of = lambda x: solve_scale_c(L_trunc, 2.0, x)
    return (lambda x: m ** (-1.5) * c_of(x)), c_of, "infinite_variance"


def trunc_second_moment(model: LevyModel, x: float) -> float:
    """Int_0^x y^2 nu(dy)."""
    lo_v = math.log(1.0 / x)
    val = float(np.sum(model._atom_w[model._atom_x <= x] * model._atom_x[model._atom_x <= x] ** 2))
    if model._has_density:
        val += adaptive(lambda v: np.exp(-2.0 * v) * model._v_density(v),
                        max(lo_v, model._v_lo), max(lo_v, model._v_lo) + 120.0,
                        abs_floor=1e-300)
    return val


def bounded_centering(model: LevyModel, n: float, variant: str = "integral") -> float:
    """Centering b_n for the compound Poisson branch.

    integral:  m^{-1} Int_1^n Phi(z)/z dz
    indicator: m^{-1} Int_0^{log n} P{|log(1-W)| <= z} dz
    corrected: integral form plus the exact renewal O(1) constant
               m^{-1} Int_0^1 Phi(z)/z dz + s2/(2 m^2) (nonarithmetic walks)
    """
    if not model.is_finite:
        raise UnsupportedRegimeError("bounded centerings require finite nu")
    L = math.log(n)
    if variant == "integral":
        return model.int_phi_exp(0.0, L) / model.m
    if variant == "indicator":
        return model.indicator_centering(L) / model.m
    if variant == "corrected":
        if model.lattice_span is not None:
            raise UnsupportedRegimeError("corrected centering needs a nonarithmetic walk")
        head = model.int_phi_exp(-60.0, 0.0)
        return (model.int_phi_exp(0.0, L) + head) / model.m + model.s2 / (2.0 * model.m ** 2)
    raise ValueError(f"unknown centering variant {variant!r}")


def norm_constants(model: LevyModel, n, target: str = "Kn", centering: str = "integral",
                   allow_conjecture: bool = False) -> NormConstants:
    """Centering and normalization for K_n or K_{n,1} at sample size n.

    Follows the branch selected by the model's growth regime and moment
    structure; raises UnsupportedRegimeError where no limit theorem applies.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if target not in ("Kn", "Kn1"):
        raise ValueError("target must be 'Kn' or 'Kn1'")
    m = model.m
    s = math.log(n)
    g_of, c_of, moment_branch = growth_g(model)

    if model.regime is GrowthRegime.BOUNDED:
        if target == "Kn1":
            raise UnsupportedRegimeError("no singleton-count limit is available for finite nu")
        sigma2 = model.walk_variance
        if sigma2 <= 0:
            raise UnsupportedRegimeError("degenerate walk (single atom): normal scaling undefined")
        b = bounded_centering(model, n, centering)
        if moment_branch == "finite_variance":
            g_walk = lambda x: math.sqrt(sigma2 * x / m ** 3)
        else:
            g_walk = g_of
        return NormConstants(b, g_walk(s), g_walk, None, c_of,
                             f"bounded/{moment_branch}", s)

    h_of = model.de_haan_h if model.regime is GrowthRegime.DE_HAAN_GAMMA else None
    xi = h_of(s) if h_of else s
    phi_n = float(model.phi_exp_vec(np.array([s]))[0])
    if target == "Kn":
        b = model.int_phi_exp(0.0, s) / m
        a = g_of(xi) * phi_n
        branch = f"{model.regime.value}/{moment_branch}"
    else:
        b = phi_n / m
        try:
            _require_kn1(model)
            psi_n = float(model.phi_prime_exp_vec(np.array([s]))[0])  # n Phi'(n)
            a = psi_n * g_of(xi)
            branch = f"{model.regime.value}/{moment_branch}"
        except UnsupportedRegimeError:
            if not (allow_conjecture and model.regime is GrowthRegime.POLY_LOG
                    and model.beta == 1.0 and np.isfinite(model.s2)
                    and model.L1_limit is not None):
                raise
            a = model.L1_limit * math.sqrt(s)
            branch = "poly_log/conjectured"
    return NormConstants(b, a, g_of, h_of, c_of, branch, xi)


def _require_kn1(model: LevyModel):
    if model.regime is GrowthRegime.BOUNDED:
        raise UnsupportedRegimeError("no singleton-count limit is available for finite nu")
    if not model.kn1_ready:
        if model.regime is GrowthRegime.POLY_LOG and model.beta == 1.0:
            raise UnsupportedRegimeError(_CONJECTURE_MSG)
        raise UnsupportedRegimeError(
            "singleton-count limits need t * Phi'(t) nondecreasing (not declared for this family)")
    if (model.regime is GrowthRegime.POLY_LOG and model.beta == 1.0
            and np.isfinite(model.s2) and model.L1_limit is not None):
        raise UnsupportedRegimeError(_CONJECTURE_MSG)


_CONJECTURE_MSG = (
    "singleton-count scaling for finite-variance models whose exponent grows like "
    "c*log t is an open problem (a two-component normal limit is conjectured but "
    "unproven); pass allow_conjecture to run the exploratory, non-validated config")


def effective_alpha(model: LevyModel) -> float:
    """Stable index of the first-passage fluctuations (2 = Brownian branch)."""
    if model.tail_alpha is not None and not np.isfinite(model.s2):
        return float(model.tail_alpha)
    return 2.0


def limit_law_for(model: LevyModel, target: str = "Kn", allow_conjecture: bool = False):
    """The limit law of the normalized statistic, by branch.

    Block counts: power kernel with the growth index under the poly-log
    regime (index 0 degenerates to the plain marginal), exponential kernel
    under the de Haan regime, plain marginal for finite nu. Singleton counts
    shift the power index down by one. First-passage marginals are "point".
    """
    from .limit_laws import LimitLaw

    alpha = effective_alpha(model)
    if target in ("Kn", "Kt", "A", "B", "FPT"):
        if target == "B" and not model.is_finite:
            raise UnsupportedRegimeError("B is only defined for a probability nu")
        if target == "FPT" or model.regime is GrowthRegime.BOUNDED:
            return LimitLaw(alpha, "point")
        if model.regime is GrowthRegime.POLY_LOG:
            return LimitLaw(alpha, "power", p=model.beta)
        return LimitLaw(alpha, "exp")
    if target in ("Kn1", "A1"):
        try:
            _require_kn1(model)
        except UnsupportedRegimeError:
            if not (allow_conjecture and model.regime is GrowthRegime.POLY_LOG
                    and model.beta == 1.0 and np.isfinite(model.s2)
                    and model.L1_limit is not None):
                raise
            c = model.L1_limit
            var = model.s2 / model.m ** 3 + 1.0 / (model.m * c)
            return LimitLaw(2.0, "point", scale_mult=math.sqrt(var))
        if model.regime is GrowthRegime.DE_HAAN_GAMMA:
            return LimitLaw(alpha, "exp")
        return LimitLaw(alpha, "power", p=model.beta - 1.0)
    raise ValueError(f"unknown target {target!r}")
