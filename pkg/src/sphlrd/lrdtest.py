"""Plug-in LRD test statistic, random projections and Gaussian null calibration.

The statistic integrates the weighted periodogram over a shrinking window
around zero frequency,

    S = sqrt(T) * sum_{|w_s| <= sqrt(B_T)/2} F_{w_s} * (2 pi / T),

which collapses to a single weighted sum of periodograms, S = sum_s c_s I_s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import math

import numpy as np
from scipy import stats

from .harmonics import SieveBasis, degree_slice, evaluate_basis
from .reconstruct import DesignMatrix
from .simulate import SpectralModel, spectral_density
from .spectra import (
    FourierCache,
    WeightKernel,
    autocovariance_from_spectrum,
    expected_periodogram,
    fourier_frequencies,
    periodized_weight,
)

__all__ = [
    "EmptyWindowError",
    "TestStatistic",
    "ProjectionDirection",
    "TestOutcome",
    "NullReference",
    "NullMoments",
    "critical_value",
    "window_mask",
    "statistic_weights",
    "window_sum",
    "test_statistic",
    "hs_norm",
    "eigenspace_block",
    "embed_block",
    "default_projections",
    "null_reference",
    "null_calibration",
]


class EmptyWindowError(ValueError):
    """No Fourier frequency falls inside the integration window."""


def critical_value(alpha: float) -> float:
    """Two-sided standard normal critical value z_{1 - alpha/2}."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {alpha}")
    return float(stats.norm.ppf(1.0 - alpha / 2.0))


def window_mask(T: int, B: float) -> np.ndarray:
    """Fourier frequencies (FFT order) inside [-sqrt(B)/2, sqrt(B)/2].

    w = 0 always lies in the window; a window holding no other Fourier
    frequency is rejected since the integral then degenerates to the
    squared sample mean.
    """
    half = math.sqrt(B) / 2.0
    mask = np.abs(fourier_frequencies(T)) <= half * (1.0 + 1e-12)
    if mask.sum() < 2:
        raise EmptyWindowError(
            f"window |w| <= {half:.3g} holds no nonzero Fourier frequency at T={T}; increase T or B_T"
        )
    return mask


def statistic_weights(T: int, wk: WeightKernel) -> np.ndarray:
    """c_s with S = sum_s c_s I_s, in FFT order."""
    freqs = fourier_frequencies(T)
    win = freqs[window_mask(T, wk.bandwidth)]
    d = 2.0 * np.pi / T
    W = periodized_weight(wk, win[:, None] - freqs[None, :])
    return math.sqrt(T) * d * d * W.sum(axis=0)


def window_sum(kernel, T: int, B: float) -> np.ndarray:
    """sqrt(T) * sum over the window of kernel(w_s) * (2 pi / T).

    ``kernel`` is a callable of frequency or a constant array standing in
    for the weighted periodogram.
    """
    freqs = fourier_frequencies(T)[window_mask(T, B)]
    get = kernel if callable(kernel) else (lambda w: np.asarray(kernel))
    total = sum(np.asarray(get(w), dtype=complex) for w in freqs)
    return math.sqrt(T) * (2.0 * np.pi / T) * total


@dataclass(frozen=True)
class TestStatistic:
    __test__ = False

    kernel: np.ndarray
    T: int
    bandwidth: float

    @property
    def half_width(self) -> float:
        return math.sqrt(self.bandwidth) / 2.0

    @property
    def k(self) -> int:
        return self.kernel.shape[0]


def test_statistic(series, wk: WeightKernel, cache: FourierCache | None = None) -> TestStatistic:
    """Plug-in statistic of a (reconstructed) coefficient series."""
    cache = cache or FourierCache(series)
    if cache.T < 2:
        raise ValueError("need T >= 2")
    if not 0.0 < wk.bandwidth < 1.0:
        raise ValueError(f"B_T must lie in (0, 1), got {wk.bandwidth}")
    c = statistic_weights(cache.T, wk)
    K = cache.smooth(c).real
    return TestStatistic(0.5 * (K + K.T), cache.T, wk.bandwidth)


def hs_norm(kernel) -> float:
    """Hilbert-Schmidt norm (Frobenius norm in an orthonormal basis)."""
    K = kernel.kernel if isinstance(kernel, TestStatistic) else np.asarray(kernel)
    return float(np.linalg.norm(K))


def eigenspace_block(statistic, n: int) -> np.ndarray:
    """Sub-block of the kernel on degree-n rows and columns."""
    K = statistic.kernel if isinstance(statistic, TestStatistic) else np.asarray(statistic)
    N = math.isqrt(K.shape[0]) - 1
    if not 0 <= n <= N:
        raise ValueError(f"degree {n} outside the sieve (max degree {N})")
    sl = degree_slice(n)
    return K[sl, sl].copy()


def embed_block(block: np.ndarray, n: int, k: int) -> np.ndarray:
    """Place a degree-n block into an otherwise zero k x k kernel."""
    out = np.zeros((k, k), dtype=np.asarray(block).dtype)
    sl = degree_slice(n)
    out[sl, sl] = block
    return out


@dataclass(frozen=True)
class ProjectionDirection:
    """Pair of unit vectors; the projected statistic is <S u, v>."""

    u: np.ndarray
    v: np.ndarray
    label: str = ""

    def __post_init__(self):
        for name in ("u", "v"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if abs(np.linalg.norm(vec) - 1.0) > 1e-10:
                raise ValueError(f"{name} must have unit norm")
            object.__setattr__(self, name, vec)
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must have the same length")


def default_projections(sieve: SieveBasis, seed: int = 0, count: int = 6, paired: bool = True) -> list[ProjectionDirection]:
    """Random unit directions supported on degrees 1..3.

    With ``paired`` (default) each direction uses v = u, so the projection
    is the quadratic form <S u, u>; otherwise u and v are independent.
    """
    if sieve.max_degree < 3:
        raise ValueError(f"projections need degrees 1..3, sieve max degree is {sieve.max_degree}")
    rng = np.random.default_rng(seed)
    lo, hi = 1, 16  # flat indices of degrees 1..3
    dirs = []
    for m in range(count):
        vecs = []
        for _ in range(1 if paired else 2):
            g = np.zeros(sieve.size)
            g[lo:hi] = rng.standard_normal(hi - lo)
            vecs.append(g / np.linalg.norm(g))
        u = vecs[0]
        v = vecs[0] if paired else vecs[1]
        dirs.append(ProjectionDirection(u, v, f"proj{m + 1}"))
    return dirs


@dataclass
class TestOutcome:
    """Standardized projected statistics and per-projection decisions."""

    __test__ = False

    z: np.ndarray
    reject: np.ndarray
    degenerate: np.ndarray
    hs_norm: float
    block_norms: np.ndarray
    alpha: float
    labels: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "z": [None if not np.isfinite(x) else float(x) for x in self.z],
            "reject": [bool(r) for r in self.reject],
            "degenerate": [bool(d) for d in self.degenerate],
            "hs_norm": self.hs_norm,
            "block_norms": [float(b) for b in self.block_norms],
            "alpha": self.alpha,
            "labels": list(self.labels),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record())


@dataclass(frozen=True)
class NullReference:
    """Exact null moments of the statistic at the frequencies where c_s != 0.

    ``spectra[i]`` is E I_s of the reconstructed series at Fourier index
    ``index[i]``; ``weights`` are the matching c_s.
    """

    index: np.ndarray
    weights: np.ndarray
    spectra: np.ndarray

    def mean(self, u, v) -> float:
        return float(np.einsum("s,i,sij,j->", self.weights, u, self.spectra, v))

    def variance(self, u, v) -> float:
        fu = self.spectra @ u
        fv = self.spectra @ v
        fuu, fvv, fuv = fu @ u, fv @ v, fu @ v
        return float(np.sum(self.weights**2 * (fuu * fvv + fuv**2)))


class NullMoments:
    """Per-channel null periodogram expectations for one (model, T, W).

    Periodogram expectations are exact for the finite T.  Computed once per
    experiment and specialized to each design with :meth:`reference`.
    """

    def __init__(self, model: SpectralModel, T: int, wk: WeightKernel):
        if not model.is_null():
            raise ValueError("the null reference needs a model with all alpha = 0")
        c = statistic_weights(T, wk)
        self.index = np.flatnonzero(c != 0.0)
        self.weights = c[self.index]
        self.max_degree = model.sieve.max_degree
        heads = [n * n for n in range(self.max_degree + 1)]
        gamma = autocovariance_from_spectrum(lambda w: spectral_density(model, w)[:, heads], T - 1)
        per_degree = expected_periodogram(gamma, T)[self.index]
        self.channels = per_degree[:, model.sieve.degrees()]  # (S, K)

    def reference(self, design: DesignMatrix | None = None, locations=None, sigma2: float = 0.0) -> NullReference:
        """Null moments of S on the model's own coordinates, or after reconstruction.

        Reconstructed coefficients are A x_t + G eps_t, where G is the
        design's pseudo-inverse and A = G B_model maps every generated
        harmonic (including those above the reconstruction sieve) into the sieve.
        """
        diag = self.channels
        if design is None:
            spectra = np.einsum("si,ij->sij", diag, np.eye(diag.shape[1]))
            return NullReference(self.index, self.weights, spectra)
        if locations is None:
            raise ValueError("locations are required with a design")
        G = design.pinv
        A = G @ evaluate_basis(np.asarray(locations, dtype=float).reshape(-1, 3), self.max_degree)
        spectra = np.einsum("ia,sa,ja->sij", A, diag, A)
        if sigma2 > 0:
            spectra = spectra + (sigma2 / (2.0 * np.pi)) * (G @ G.T)[None]
        return NullReference(self.index, self.weights, spectra)


def null_reference(model: SpectralModel, T: int, wk: WeightKernel, design: DesignMatrix | None = None,
                   locations=None, sigma2: float = 0.0) -> NullReference:
    """Exact null moments of S for data from ``model`` reconstructed on ``design``."""
    return NullMoments(model, T, wk).reference(design, locations, sigma2)


def _pilot_moments(cache: FourierCache, wk: WeightKernel, u, v):
    pilot = wk.coarser()
    w = (2.0 * np.pi / cache.T) * periodized_weight(pilot, cache.freqs)
    F0 = cache.smooth(w).real
    F0 = 0.5 * (F0 + F0.T)
    fuu, fvv, fuv, fvu = u @ F0 @ u, v @ F0 @ v, u @ F0 @ v, v @ F0 @ u
    m = math.sqrt(cache.T * wk.bandwidth) * fuv
    var = 2.0 * np.pi * wk.l2_norm_sq * (fuu * fvv + fuv * fvu)
    return m, var


def null_calibration(series, wk: WeightKernel, dirs, alpha: float = 0.05,
                     reference: NullReference | None = None,
                     cache: FourierCache | None = None) -> TestOutcome:
    """Standardize each projected statistic and decide at level ``alpha``.

    With ``reference`` the centre and variance are the exact null moments
    it carries.  Without one, a pilot estimate F0 of the zero-frequency
    spectral density (bandwidth sqrt(B_T)) gives the centre
    sqrt(T B_T) <F0 u, v> and variance 2 pi |W|^2 (<F0u,u><F0v,v> + <F0u,v><F0v,u>).
    """
    dirs = list(dirs)
    if not dirs:
        raise ValueError("need at least one projection direction")
    crit = critical_value(alpha)
    cache = cache or FourierCache(series)
    S = test_statistic(series, wk, cache)
    z = np.full(len(dirs), np.nan)
    degenerate = np.zeros(len(dirs), dtype=bool)
    for i, d in enumerate(dirs):
        proj = float(d.u @ S.kernel @ d.v)
        if reference is None:
            m, var = _pilot_moments(cache, wk, d.u, d.v)
        else:
            m, var = reference.mean(d.u, d.v), reference.variance(d.u, d.v)
        if not var > 0.0:
            degenerate[i] = True
            continue
        z[i] = (proj - m) / math.sqrt(var)
    reject = np.where(degenerate, False, np.abs(np.nan_to_num(z)) > crit)
    N = math.isqrt(S.k) - 1
    blocks = np.array([np.linalg.norm(eigenspace_block(S, n)) for n in range(N + 1)])
    return TestOutcome(z, reject, degenerate, hs_norm(S), blocks, alpha, [d.label for d in dirs])
