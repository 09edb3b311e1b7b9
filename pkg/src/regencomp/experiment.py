"""Batch Monte Carlo convergence experiments.

A config names a model, a statistic, an n/t grid, a replicate count and a
master seed. For each grid point the runner simulates replicates in
deterministic vectorized chunks, forms (stat - b_n)/a_n with the branch
constants, and summarizes the fit to the branch limit law (KS statistic and
p-value, max CF distance). Output is a stable CSV/JSON schema carrying full
provenance.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .compensator import sample_occupancy_compensators, stop_level_for
from .levy_model import (GrowthRegime, LevyModel, limit_law_for, model_from_config,
                         norm_constants)
from .limit_laws import cf_distance, ks_distance
from .occupancy import (DECREMENT_N_CAP, sample_compositions_decrement,
                        sample_compositions_path, sample_poisson_counts)
from .pathsim import sample_first_passage
from .util import ConfigError, config_hash, derive_rng, fmt_float

STATISTICS = ("Kn", "Kn1", "Kt", "A", "A1", "B", "FPT")
CSV_COLUMNS = ("grid_value", "mean_raw", "var_raw", "b", "a", "mean_norm",
               "var_norm", "ks_stat", "ks_p", "cf_dist", "law_alpha", "law_scale")


@dataclass
class ExperimentConfig:
    model: dict | str
    statistic: str = "Kn"
    grid: tuple = ()
    replicates: int = 1000
    master_seed: int = 0
    sampler: str = "path"
    eps: Optional[float] = None
    centering: str = "integral"
    allow_conjecture: bool = False
    chunk_size: Optional[int] = None
    threads: int = 1
    out_dir: str = "out"
    formats: tuple = ("csv", "json")
    dump_raw: bool = False

    def validate(self):
        if self.statistic not in STATISTICS:
            raise ConfigError(f"unknown statistic {self.statistic!r}; choose from {STATISTICS}")
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise ConfigError("grid must be nonempty")
        if any(g <= 0 for g in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("grid must be positive and strictly increasing")
        if self.replicates < 100:
            raise ConfigError("need >= 100 replicates for distance summaries")
        if self.sampler not in ("path", "decrement"):
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if self.sampler == "decrement":
            if self.statistic not in ("Kn", "Kn1"):
                raise ConfigError("the decrement sampler only draws fixed-n compositions")
            if max(grid) > DECREMENT_N_CAP:
                raise ConfigError(f"decrement sampler capped at n = {DECREMENT_N_CAP}")
        if self.centering not in ("integral", "indicator", "corrected"):
            raise ConfigError(f"unknown centering {self.centering!r}")
        if self.statistic in ("Kn", "Kn1") and any(g != int(g) for g in grid):
            raise ConfigError("fixed-n statistics need integer grid values")
        self.grid = grid
        self.formats = tuple(self.formats)

    def canonical(self) -> dict:
        model = self.model if isinstance(self.model, dict) else {"preset": self.model}
        return {"model": model, "statistic": self.statistic, "grid": list(self.grid),
                "replicates": self.replicates, "master_seed": self.master_seed,
                "sampler": self.sampler, "eps": self.eps, "centering": self.centering,
                "allow_conjecture": self.allow_conjecture}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
        data = {}
        if "model" in doc:
            data["model"] = doc["model"] if isinstance(doc["model"], dict) else str(doc["model"])
        data.update(doc.get("experiment", {}))
        out = doc.get("output", {})
        if "dir" in out:
            data["out_dir"] = out["dir"]
        for key in ("formats", "dump_raw"):
            if key in out:
                data[key] = out[key]
        try:
            return cls.from_dict(data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class ExperimentResult:
    statistic: str
    rows: list
    provenance: dict
    raw: dict = field(default_factory=dict)   # grid_value -> normalized samples


# ----------------------------------------------------------------------------
# statistic sampling (chunk granularity; top-level for pickling)
# ----------------------------------------------------------------------------

_MODEL_CACHE: dict = {}


def _cached_model(model_cfg) -> LevyModel:
    key = json.dumps(model_cfg, sort_keys=True) if isinstance(model_cfg, dict) else model_cfg
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = model_from_config(model_cfg)
    return _MODEL_CACHE[key]


def _sample_chunk(model_cfg, statistic: str, sampler: str, gv: float, count: int,
                  eps: Optional[float], master_seed: int, gi: int, ci: int) -> np.ndarray:
    model = _cached_model(model_cfg)
    rng = derive_rng(master_seed, gi, ci)
    if statistic in ("Kn", "Kn1"):
        n = int(round(gv))
        if sampler == "decrement":
            K, K1 = sample_compositions_decrement(model, n, count, rng)
        else:
            K, K1 = sample_compositions_path(model, n, count, rng, eps=eps, mode="cells")
        return (K if statistic == "Kn" else K1).astype(float)
    if statistic == "Kt":
        K, _, _ = sample_poisson_counts(model, gv, count, rng, eps=eps)
        return K.astype(float)
    if statistic in ("A", "A1", "B"):
        out = sample_occupancy_compensators(model, gv, count, rng, eps=eps,
                                            include_A1=(statistic == "A1"),
                                            include_B=(statistic == "B"))
        return np.asarray(out[statistic], float)
    if statistic == "FPT":
        return sample_first_passage(model, gv, count, rng, eps=eps)
    raise ConfigError(f"unknown statistic {statistic!r}")


def _auto_chunk(model: LevyModel, statistic: str, gv: float, eps: Optional[float]) -> int:
    level = stop_level_for(model, gv) if statistic in ("A", "A1", "B", "Kt") \
        else math.log(max(gv, 2.0)) + 30.0
    if statistic == "FPT":
        level = gv
    eps_eff = eps if eps is not None else (0.0 if model.is_finite else model.default_eps(gv, level))
    rate = model.jump_rate(eps_eff) if eps_eff > 0 else 1.0
    est_jumps = max(rate * level / model.m, 4.0)
    return int(min(8192, max(64, 3e6 / est_jumps)))


def _constants_for(model: LevyModel, cfg: ExperimentConfig, gv: float):
    stat = cfg.statistic
    if stat == "FPT":
        from .levy_model import growth_g
        g_of, _, _ = growth_g(model)
        law = limit_law_for(model, "FPT")
        return gv / model.m, g_of(gv), law
    target = "Kn1" if stat in ("Kn1", "A1") else "Kn"
    if stat == "B" and not model.is_finite:
        raise ConfigError("statistic B requires a finite (probability) nu")
    nc = norm_constants(model, gv, target, centering=cfg.centering,
                        allow_conjecture=cfg.allow_conjecture)
    law_target = "Kn1" if target == "Kn1" else ("Kn" if stat in ("Kn", "Kt") else stat)
    law = limit_law_for(model, law_target, allow_conjecture=cfg.allow_conjecture)
    return nc.b_n, nc.a_n, law


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the configured study; deterministic given master_seed."""
    cfg.validate()
    model = _cached_model(cfg.model)
    if cfg.centering != "integral" and model.regime is not GrowthRegime.BOUNDED:
        raise ConfigError("alternate centerings only apply to the compound Poisson branch")
    rows = []
    raw = {}
    for gi, gv in enumerate(cfg.grid):
        b, a, law = _constants_for(model, cfg, gv)
        chunk = cfg.chunk_size or _auto_chunk(model, cfg.statistic, gv, cfg.eps)
        sizes = [chunk] * (cfg.replicates // chunk)
        if cfg.replicates % chunk:
            sizes.append(cfg.replicates % chunk)
        args = [(cfg.model, cfg.statistic, cfg.sampler, gv, sz, cfg.eps,
                 cfg.master_seed, gi, ci) for ci, sz in enumerate(sizes)]
        if cfg.threads > 1:
            with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
                parts = list(pool.map(_sample_chunk_star, args))
        else:
            parts = [_sample_chunk(*a) for a in args]
        stat = np.concatenate(parts)
        z = (stat - b) / a
        ks, p = ks_distance(z, law)
        rows.append({
            "grid_value": gv,
            "mean_raw": float(stat.mean()), "var_raw": float(stat.var(ddof=1)),
            "b": float(b), "a": float(a),
            "mean_norm": float(z.mean()), "var_norm": float(z.var(ddof=1)),
            "ks_stat": float(ks), "ks_p": float(p),
            "cf_dist": float(cf_distance(z, law)),
            "law_alpha": float(law.alpha), "law_scale": float(law.scale),
        })
        if cfg.dump_raw:
            raw[gv] = z
    provenance = {"config_hash": config_hash(cfg.canonical()),
                  "master_seed": cfg.master_seed,
                  "package_version": __version__,
                  "statistic": cfg.statistic,
                  "model": model.to_config()}
    return ExperimentResult(cfg.statistic, rows, provenance, raw)


def _sample_chunk_star(args):
    return _sample_chunk(*args)


# ----------------------------------------------------------------------------
# emission
# ----------------------------------------------------------------------------

def emit(result: ExperimentResult, formats=("csv", "json"), out_dir="out",
         stem="experiment") -> list:
    """Write result files; CSV and JSON carry identical numeric content."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if "csv" in formats:
        path = out / f"{stem}.csv"
        lines = [f"# config_hash={result.provenance['config_hash']}",
                 f"# master_seed={result.provenance['master_seed']}",
                 f"# package_version={result.provenance['package_version']}",
                 ",".join(CSV_COLUMNS)]
        for row in result.rows:
            lines.append(",".join(fmt_float(row[c]) for c in CSV_COLUMNS))
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    if "json" in formats:
        path = out / f"{stem}.json"
        doc = {"provenance": result.provenance, "rows": result.rows}
        path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        paths.append(path)
    if result.raw:
        path = out / f"{stem}_raw.csv"
        lines = ["grid_value,replicate,normalized"]
        for gv, z in result.raw.items():
            lines.extend(f"{fmt_float(gv)},{i},{fmt_float(v)}" for i, v in enumerate(z))
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def read_csv_rows(path) -> list:
    rows = []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append({k: float(v) for k, v in zip(header, line.split(","))})
    return rows
