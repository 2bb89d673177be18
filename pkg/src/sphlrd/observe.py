"""Noisy observations of the curve process at random points of S^2."""

from __future__ import annotations

from dataclasses import dataclass
import csv
import math
from pathlib import Path

import numpy as np

from .harmonics import evaluate_basis, to_spherical
from .simulate import CoefficientSeries, _seed_rng

__all__ = [
    "ObservationSet",
    "sample_uniform_sphere",
    "spatial_budget",
    "observe",
    "observe_redraw",
    "write_observations_csv",
]


@dataclass(frozen=True)
class ObservationSet:
    """Values Y_t(Z_i) = X_t(Z_i) + eps_{i,t}.

    ``locations`` is (M, 3) when one design is shared by every time step
    (the default), or (T, M, 3) in per-time redraw mode.
    """

    locations: np.ndarray
    values: np.ndarray
    noise_variance: float

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("observation values must be a (T, M) array")
        if loc.shape[-2:] != (vals.shape[1], 3) or loc.ndim not in (2, 3):
            raise ValueError(f"locations shape {loc.shape} does not match values {vals.shape}")
        if loc.ndim == 3 and loc.shape[0] != vals.shape[0]:
            raise ValueError("per-time locations must have one design per time step")
        if vals.shape[1] < 1:
            raise ValueError("need at least one location")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "values", vals)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def M(self) -> int:
        return self.values.shape[1]

    @property
    def shared_design(self) -> bool:
        return self.locations.ndim == 2


def sample_uniform_sphere(M: int, seed=None) -> np.ndarray:
    """M i.i.d. uniform points on S^2 as an (M, 3) array (normalized Gaussians)."""
    if M < 1:
        raise ValueError(f"need at least one point, got M={M}")
    g = _seed_rng(seed).standard_normal((M, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def spatial_budget(T: int, gamma: float) -> int:
    """Number of spatial locations M = max(1, floor(T**(2 gamma)))."""
    if T < 2:
        raise ValueError(f"T must be at least 2, got {T}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    # guard against T**x landing a hair under an exact integer
    return max(1, math.floor(T ** (2.0 * gamma) * (1.0 + 1e-12)))


def observe(series: CoefficientSeries, locations, sigma2: float, seed=None) -> ObservationSet:
    """Evaluate the series at fixed locations and add i.i.d. N(0, sigma2) noise."""
    if sigma2 < 0:
        raise ValueError(f"noise variance must be non-negative, got {sigma2}")
    loc = np.asarray(locations, dtype=float).reshape(-1, 3)
    if loc.shape[0] == 0:
        raise ValueError("empty location set")
    basis = evaluate_basis(loc, series.sieve.max_degree)
    y = series.values @ basis.T
    if sigma2 > 0:
        y = y + math.sqrt(sigma2) * _seed_rng(seed).standard_normal(y.shape)
    return ObservationSet(loc, y, sigma2)


def observe_redraw(series: CoefficientSeries, M: int, sigma2: float, seed=None) -> ObservationSet:
    """Like :func:`observe` but with a fresh uniform design at every time step."""
    if sigma2 < 0:
        raise ValueError(f"noise variance must be non-negative, got {sigma2}")
    rng = _seed_rng(seed)
    loc = np.stack([sample_uniform_sphere(M, rng) for _ in range(series.T)])
    y = np.empty((series.T, M))
    for t in range(series.T):
        y[t] = evaluate_basis(loc[t], series.sieve.max_degree) @ series.values[t]
    if sigma2 > 0:
        y += math.sqrt(sigma2) * rng.standard_normal(y.shape)
    return ObservationSet(loc, y, sigma2)


def write_observations_csv(obs: ObservationSet, path) -> None:
    """Write long-format rows (t, i, theta, phi, y)."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "i", "theta", "phi", "y"])
            for t in range(obs.T):
                loc = obs.locations if obs.shared_design else obs.locations[t]
                theta, phi = to_spherical(loc)
                for i in range(obs.M):
                    w.writerow([t, i, f"{theta[i]:.12g}", f"{phi[i]:.12g}", f"{obs.values[t, i]:.12g}"])
    except OSError as exc:
        raise OSError(f"cannot write observations to {path}: {exc}") from exc
