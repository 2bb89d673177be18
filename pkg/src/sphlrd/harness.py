"""Monte Carlo size, power and consistency experiments.

Replicate ``r`` of an experiment with master seed ``s`` draws everything
from ``np.random.SeedSequence(s, spawn_key=(r,))``, spawned into three
independent streams (curve simulation, locations, observation noise), so
a table depends only on the configuration and seed, not on execution
order or worker count.  Projection directions are drawn once from ``s``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import csv
import json
import math
from pathlib import Path
import warnings

import numpy as np

from .harmonics import SieveBasis, sieve_from_budget
from .lrdtest import NullMoments, default_projections, hs_norm, null_calibration, test_statistic
from .observe import observe, sample_uniform_sphere, spatial_budget
from .reconstruct import design_matrix, reconstruct_series
from .simulate import example_model, null_spharma11_model, simulate_series
from .spectra import FourierCache, WeightKernel, bandwidth

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultTable",
    "parse_config",
    "load_config",
    "power_law_innovations",
    "test_sieve",
    "consistency_sieve",
    "run_size_experiment",
    "run_power_experiment",
    "run_consistency_experiment",
    "emit_table",
    "write_sidecar",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``example`` is 0 for the null SPHARMA(1,1) model or 1-3 for the LRD
    alternatives.  ``k_budget`` of None selects the log rule
    floor(log T) + 6.  ``innovation_decay`` sets lambda_n = (n+1)**(-decay).
    """

    T: int = 500
    gamma: float = 0.45
    beta: float = 0.25
    sigma2: float = 0.5
    example: int = 0
    R: int = 200
    seed: int = 42
    alpha: float = 0.05
    k_budget: int | None = None
    T_grid: tuple = ()
    burn_in: int = 500
    buffer_degrees: int = 2
    threads: int = 1
    innovation_decay: float = 2.5
    calibration: str = "exact"
    paired: bool = True
    norm_scale: str = "sum"
    allow_large_T: bool = False

    def __post_init__(self):
        if self.T < 50:
            raise ConfigError(f"T must be at least 50, got {self.T}")
        cap = max((self.T, *self.T_grid))
        if cap > 10_000 and not self.allow_large_T:
            raise ConfigError(f"T={cap} exceeds 10000; set allow_large_T=true to run it")
        if self.R < 1:
            raise ConfigError(f"R must be at least 1, got {self.R}")
        for name in ("beta", "gamma", "alpha"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if self.sigma2 < 0:
            raise ConfigError(f"sigma2 must be non-negative, got {self.sigma2}")
        if self.example not in (0, 1, 2, 3):
            raise ConfigError(f"example must be 0 (null), 1, 2 or 3, got {self.example}")
        if self.k_budget is not None and self.k_budget < 1:
            raise ConfigError(f"k_budget must be positive, got {self.k_budget}")
        if list(self.T_grid) != sorted(set(self.T_grid)) or any(t < 50 for t in self.T_grid):
            raise ConfigError("T_grid must be strictly increasing with entries >= 50")
        if self.burn_in < 0 or self.buffer_degrees < 0 or self.threads < 1:
            raise ConfigError("burn_in and buffer_degrees must be >= 0 and threads >= 1")
        if self.calibration not in ("exact", "pilot"):
            raise ConfigError(f"calibration must be 'exact' or 'pilot', got {self.calibration!r}")
        if self.norm_scale not in ("sum", "riemann"):
            raise ConfigError(f"norm_scale must be 'sum' or 'riemann', got {self.norm_scale!r}")
        if self.innovation_decay < 0:
            raise ConfigError("innovation_decay must be non-negative")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse flat ``key=value`` lines (``#`` starts a comment)."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, types[key], val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def _convert(key, typ, val):
    typ = str(typ)
    if key == "T_grid":
        return tuple(int(v) for v in val.replace(" ", "").split(",") if v)
    if key == "k_budget" and val.lower() in ("", "none", "log"):
        return None
    if typ.startswith("int"):
        return int(val)
    if typ.startswith("float"):
        return float(val)
    if typ.startswith("bool"):
        return _parse_bool(val)
    return val


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, **overrides)


def power_law_innovations(max_degree: int, decay: float) -> np.ndarray:
    """lambda_n = (n+1)**(-decay)."""
    return (np.arange(max_degree + 1) + 1.0) ** (-decay)


def test_sieve(cfg: ExperimentConfig) -> SieveBasis:
    """Reconstruction sieve for size/power runs: the budget rule, raised to max degree 3 if needed."""
    budget = cfg.k_budget if cfg.k_budget is not None else int(math.floor(math.log(cfg.T))) + 6
    sieve = sieve_from_budget(budget)
    return sieve if sieve.max_degree >= 3 else SieveBasis(3)


test_sieve.__test__ = False


def consistency_sieve(cfg: ExperimentConfig) -> SieveBasis:
    return sieve_from_budget(cfg.k_budget if cfg.k_budget is not None else 15)


@dataclass
class ResultTable:
    """Rows keyed by (T, gamma) holding per-projection rates or a norm."""

    kind: str  # "rate" or "norm"
    rows: list = field(default_factory=list)
    replicates: list = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        if self.kind == "norm":
            return ["norm"]
        width = max((len(r["values"]) for r in self.rows), default=6)
        return [f"proj{i + 1}" for i in range(width)]

    def add(self, T: int, gamma: float, values, R: int, seed: int) -> None:
        vals = np.atleast_1d(np.asarray(values, dtype=float))
        if self.kind == "rate" and np.any((vals < 0) | (vals > 1)):
            raise ValueError("rates must lie in [0, 1]")
        if self.kind == "norm" and np.any(vals < 0):
            raise ValueError("norms must be non-negative")
        self.rows.append({"T": T, "gamma": gamma, "values": vals, "R": R, "seed": seed})

    def values(self) -> np.ndarray:
        return np.array([r["values"] for r in self.rows])


def _streams(seed: int, r: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed, spawn_key=(r,)).spawn(3)]


@dataclass(frozen=True)
class _TestPlan:
    cfg: ExperimentConfig
    sieve: SieveBasis
    model: object
    moments: object
    wk: WeightKernel
    dirs: list
    M: int


def _replicate_test(plan: _TestPlan, r: int) -> dict:
    cfg = plan.cfg
    g_sim, g_loc, g_noise = _streams(cfg.seed, r)
    x = simulate_series(plan.model, cfg.T, cfg.burn_in, g_sim)
    loc = sample_uniform_sphere(plan.M, g_loc)
    obs = observe(x, loc, cfg.sigma2, g_noise)
    design = design_matrix(loc, plan.sieve)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        xh = reconstruct_series(obs, plan.sieve, design)
    ref = plan.moments.reference(design, loc, cfg.sigma2) if plan.moments is not None else None
    out = null_calibration(xh, plan.wk, plan.dirs, cfg.alpha, reference=ref, cache=FourierCache(xh))
    rec = out.to_record()
    rec["replicate"] = r
    return rec


def _map(fn, args, threads: int):
    if threads <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, *zip(*args)))


def _warn_budget(M: int, k: int) -> None:
    if M < k:
        warnings.warn(f"M={M} locations < sieve size k={k}; reconstruction is rank deficient", stacklevel=3)


def _run_test_experiment(cfg: ExperimentConfig, progress=None) -> ResultTable:
    sieve = test_sieve(cfg)
    truth = SieveBasis(sieve.max_degree + cfg.buffer_degrees)
    lam = power_law_innovations(truth.max_degree, cfg.innovation_decay)
    null = null_spharma11_model(truth, lam)
    model = null if cfg.example == 0 else example_model(cfg.example, sieve, cfg.buffer_degrees, lam)
    wk = WeightKernel(bandwidth(cfg.T, cfg.beta))
    M = spatial_budget(cfg.T, cfg.gamma)
    _warn_budget(M, sieve.size)
    moments = NullMoments(null, cfg.T, wk) if cfg.calibration == "exact" else None
    plan = _TestPlan(cfg, sieve, model, moments, wk, default_projections(sieve, cfg.seed, paired=cfg.paired), M)
    recs = _map(_replicate_test, [(plan, r) for r in range(cfg.R)], cfg.threads)
    if progress:
        progress(f"T={cfg.T} gamma={cfg.gamma}: {cfg.R} replicates done")
    table = ResultTable("rate")
    rates = np.mean([rec["reject"] for rec in recs], axis=0)
    table.add(cfg.T, cfg.gamma, rates, cfg.R, cfg.seed)
    table.replicates.extend(recs)
    return table


def run_size_experiment(cfg: ExperimentConfig, progress=None) -> ResultTable:
    """Empirical size under the null SPHARMA(1,1) model."""
    if cfg.example != 0:
        raise ConfigError("size experiments need example=0 (null model)")
    return _run_test_experiment(cfg, progress)


def run_power_experiment(cfg: ExperimentConfig, progress=None) -> ResultTable:
    """Empirical power under the LRD alternative of ``cfg.example``."""
    if cfg.example not in (1, 2, 3):
        raise ConfigError("power experiments need example 1, 2 or 3")
    return _run_test_experiment(cfg, progress)


def _replicate_norm(cfg: ExperimentConfig, T: int, sieve: SieveBasis, model, r: int, series_hook=None) -> float:
    wk = WeightKernel(bandwidth(T, cfg.beta))
    if series_hook is not None:
        xh = series_hook(T, r)
    else:
        g_sim, g_loc, g_noise = _streams(cfg.seed, r)
        x = simulate_series(model, T, cfg.burn_in, g_sim)
        loc = sample_uniform_sphere(spatial_budget(T, cfg.gamma), g_loc)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            xh = reconstruct_series(observe(x, loc, cfg.sigma2, g_noise), sieve)
    norm = hs_norm(test_statistic(xh, wk))
    if cfg.norm_scale == "sum":
        norm *= (T / (2.0 * math.pi)) ** 2
    return norm


def run_consistency_experiment(cfg: ExperimentConfig, T_grid=None, series_hook=None, progress=None) -> ResultTable:
    """Median HS norm of the sieve-projected statistic along ``T_grid``.

    With the default ``norm_scale="sum"`` the norm is reported without the
    two (2 pi / T) Riemann weights, i.e. multiplied by (T / 2 pi)**2.
    ``series_hook(T, r)`` replaces the simulated reconstruction (test hook).
    """
    grid = tuple(T_grid if T_grid is not None else (cfg.T_grid or (cfg.T,)))
    if list(grid) != sorted(set(grid)):
        raise ConfigError("T_grid must be strictly increasing")
    example = cfg.example or 1
    sieve = consistency_sieve(cfg)
    lam = power_law_innovations(sieve.max_degree + cfg.buffer_degrees, cfg.innovation_decay)
    model = example_model(example, sieve, cfg.buffer_degrees, lam)
    table = ResultTable("norm")
    for T in grid:
        _warn_budget(spatial_budget(T, cfg.gamma), sieve.size)
        args = [(cfg, T, sieve, model, r, series_hook) for r in range(cfg.R)]
        norms = _map(_replicate_norm, args, cfg.threads if series_hook is None else 1)
        table.add(T, cfg.gamma, [float(np.median(norms))], cfg.R, cfg.seed)
        table.replicates.append({"T": T, "norms": [float(v) for v in norms]})
        if progress:
            progress(f"T={T}: median norm {np.median(norms):.4e}")
    return table


def emit_table(table: ResultTable, path) -> None:
    """Write the table as CSV: T, gamma, proj1..proj6 (or norm), R, seed."""
    path = Path(path)
    fmt = "{:.4e}" if table.kind == "norm" else "{:.4f}"
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["T", "gamma", *table.columns, "R", "seed"])
            for row in table.rows:
                w.writerow([row["T"], f"{row['gamma']:g}", *(fmt.format(v) for v in row["values"]), row["R"], row["seed"]])
    except OSError as exc:
        raise OSError(f"cannot write table to {path}: {exc}") from exc


def write_sidecar(table: ResultTable, cfg: ExperimentConfig, path) -> None:
    """JSON with the configuration and every per-replicate record."""
    path = Path(path)
    payload = {"config": asdict(cfg), "kind": table.kind, "replicates": table.replicates}
    try:
        path.write_text(json.dumps(payload, indent=1))
    except OSError as exc:
        raise OSError(f"cannot write sidecar to {path}: {exc}") from exc
