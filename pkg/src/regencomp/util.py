"""Shared plumbing: errors, deterministic RNG derivation, config hashing."""

from __future__ import annotations

import hashlib
import json

import numpy as np


class RegencompError(Exception):
    """Base class for package errors."""


class QuadratureError(RegencompError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the achieved absolute error estimate and the value it belongs to.
    """

    def __init__(self, message, value=None, achieved=None, requested=None):
        super().__init__(message)
        self.value = value
        self.achieved = achieved
        self.requested = requested


class UnsupportedRegimeError(RegencompError):
    """No limit-theorem branch applies to the requested (model, statistic) pair."""


class HorizonError(RegencompError):
    """A path or walk does not cover the requested level/horizon.

    ``partial`` holds whatever was simulated so the caller can extend.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(RegencompError):
    """Invalid experiment configuration."""


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Deterministic child generator for (master_seed, key...).

    Aggregation across keys is order-independent; the same tuple always
    yields the same stream, which is what makes experiment re-runs
    bit-identical and chunks safe to run in parallel.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def config_hash(obj) -> str:
    """Stable sha256 of a JSON-serializable config object (first 16 hex chars)."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fmt_float(x) -> str:
    """Shortest round-trip decimal form, used for byte-stable CSV output."""
    return repr(float(x))
