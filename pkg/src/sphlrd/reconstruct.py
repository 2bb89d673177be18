"""Series least-squares reconstruction of the curves from scattered data."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import warnings

import numpy as np

from .harmonics import SieveBasis, evaluate_basis
from .observe import ObservationSet
from .simulate import CoefficientSeries

__all__ = [
    "RCOND",
    "RankDeficientWarning",
    "DesignMatrix",
    "design_matrix",
    "mass_matrix_deviation",
    "reconstruct_snapshot",
    "reconstruct_series",
    "l2_error",
]

# singular values below RCOND * s_max are treated as zero in the pseudo-inverse
RCOND = 1e-10


class RankDeficientWarning(UserWarning):
    """The design has effective rank below the sieve size (e.g. M < k)."""


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """M x k matrix of basis rows b_k(Z_i) with a cached pseudo-inverse."""

    matrix: np.ndarray
    sieve: SieveBasis

    @property
    def M(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    @cached_property
    def _svd(self):
        u, s, vt = np.linalg.svd(self.matrix, full_matrices=False)
        keep = s > RCOND * (s[0] if s.size else 0.0)
        return u[:, keep], s[keep], vt[keep]

    @property
    def rank(self) -> int:
        return self._svd[1].size

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.k

    @cached_property
    def pinv(self) -> np.ndarray:
        """Moore-Penrose inverse, k x M; equals (B'B)^- B'."""
        u, s, vt = self._svd
        return (vt.T / s) @ u.T

    def solve(self, y: np.ndarray) -> np.ndarray:
        """Minimum-norm least-squares coefficients for one or many snapshots.

        ``y`` has length M, or shape (T, M) for T snapshots.
        """
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.M:
            raise ValueError(f"expected {self.M} observations per snapshot, got {y.shape[-1]}")
        if self.rank_deficient:
            warnings.warn(
                f"design rank {self.rank} < sieve size {self.k}; returning the minimum-norm solution",
                RankDeficientWarning,
                stacklevel=3,
            )
        return y @ self.pinv.T


def design_matrix(locations, sieve: SieveBasis) -> DesignMatrix:
    loc = np.asarray(locations, dtype=float).reshape(-1, 3)
    if loc.shape[0] == 0:
        raise ValueError("empty location set")
    return DesignMatrix(evaluate_basis(loc, sieve.max_degree), sieve)


def mass_matrix_deviation(design: DesignMatrix) -> float:
    """Squared Frobenius norm of B'B/M - I."""
    B = design.matrix
    gram = B.T @ B / design.M
    return float(np.sum((gram - np.eye(design.k)) ** 2))


def reconstruct_snapshot(y_t, design: DesignMatrix) -> np.ndarray:
    """Coefficient vector (B'B)^- B' y_t of one time step."""
    y_t = np.asarray(y_t, dtype=float)
    if y_t.ndim != 1:
        raise ValueError("a snapshot is a 1-D vector of length M")
    return design.solve(y_t)


def reconstruct_series(obs: ObservationSet, sieve: SieveBasis, design: DesignMatrix | None = None) -> CoefficientSeries:
    """Reconstruct every time step, factorizing a shared design only once."""
    if obs.shared_design:
        if design is None:
            design = design_matrix(obs.locations, sieve)
        elif design.M != obs.M or design.k != sieve.size:
            raise ValueError("design does not match the observations or sieve")
        return CoefficientSeries(design.solve(obs.values), sieve)
    out = np.empty((obs.T, sieve.size))
    for t in range(obs.T):
        out[t] = design_matrix(obs.locations[t], sieve).solve(obs.values[t])
    return CoefficientSeries(out, sieve)


def l2_error(truth: CoefficientSeries, estimate: CoefficientSeries) -> np.ndarray:
    """Squared L2(S^2) distance between curves at each t (orthonormal basis, zero padded)."""
    if truth.T != estimate.T:
        raise ValueError("series lengths differ")
    k = max(truth.k, estimate.k)
    a = np.zeros((truth.T, k))
    b = np.zeros((truth.T, k))
    a[:, : truth.k] = truth.values
    b[:, : estimate.k] = estimate.values
    return np.sum((a - b) ** 2, axis=1)
