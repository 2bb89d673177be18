"""SPHARMA(p, q) and multifractionally integrated SPHARMA coefficient series.

Every harmonic coefficient X_{nj}(t) is an independent scalar Gaussian
ARFIMA(p, alpha(n,j)/2, q) path.  AR/MA eigenvalues and the innovation
variance are shared within a degree; the LRD exponent alpha may vary
with the order j.  The per-channel spectral density is

    f_{n,j}(w) = lam_n / (2 pi) * |Psi_n(e^{-iw}) / Phi_n(e^{-iw})|**2
                 * |1 - e^{-iw}|**(-alpha(n,j))

with Phi_n(z) = 1 - sum_l phi_{n,l} z**l and Psi_n(z) = 1 + sum_l psi_{n,l} z**l.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import signal

from .harmonics import SieveBasis, flat_index

__all__ = [
    "SpectralPoleError",
    "SpectralModel",
    "LRDProfile",
    "CoefficientSeries",
    "EXAMPLE_BOUNDS",
    "default_innovations",
    "sobolev_innovations",
    "spharma11_eigenvalues",
    "null_spharma11_model",
    "example_profile",
    "example_model",
    "theoretical_spectrum",
    "spectral_density",
    "fractional_weights",
    "simulate_series",
]


class SpectralPoleError(ArithmeticError):
    """Raised when a spectral density is evaluated at its zero-frequency pole."""


def _seed_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class CoefficientSeries:
    """T x k array of harmonic coefficients X_{nj}(t) for a full-eigenspace sieve."""

    values: np.ndarray
    sieve: SieveBasis

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError(f"coefficient values must be 2-D (T, k), got shape {vals.shape}")
        if vals.shape[1] != self.sieve.size:
            raise ValueError(
                f"{vals.shape[1]} columns do not match sieve size {self.sieve.size} "
                f"(max degree {self.sieve.max_degree})"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficient series contains non-finite entries")
        object.__setattr__(self, "values", vals)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def scaled(self, c: float) -> "CoefficientSeries":
        return CoefficientSeries(c * self.values, self.sieve)

    def truncate(self, sieve: SieveBasis) -> "CoefficientSeries":
        """Keep only the coordinates of a smaller (nested) sieve."""
        if sieve.size > self.k:
            raise ValueError("target sieve is larger than the series sieve")
        return CoefficientSeries(self.values[:, : sieve.size], sieve)

    def field(self, basis_values: np.ndarray) -> np.ndarray:
        """Evaluate X_t at points given their basis rows (M x k) -> (T, M)."""
        return self.values @ np.asarray(basis_values)[:, : self.k].T


@dataclass(frozen=True)
class LRDProfile:
    """LRD exponents alpha(n, j) over a sieve, with their bounds."""

    alpha: np.ndarray
    lower: float
    upper: float
    dominant: int

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        object.__setattr__(self, "alpha", a)
        if not 0.0 < self.lower <= self.upper < 0.5:
            raise ValueError("LRD bounds must satisfy 0 < l_alpha <= L_alpha < 1/2")
        pos = a[a > 0]
        if np.any(pos < self.lower - 1e-15) or np.any(pos > self.upper + 1e-15):
            raise ValueError("alpha values outside [l_alpha, L_alpha]")


@dataclass(frozen=True)
class SpectralModel:
    """Per-degree SPHARMA(p, q) parameters plus per-harmonic LRD exponents.

    Attributes
    ----------
    ar : ndarray, shape (N+1, p)
        AR eigenvalues lambda_n(phi_l).
    ma : ndarray, shape (N+1, q)
        MA eigenvalues lambda_n(psi_l).
    innovation : ndarray, shape (N+1,)
        Innovation variance lambda_n(R_0^eta) of every order j of degree n.
    alpha : ndarray, shape ((N+1)**2,)
        LRD exponents in [0, 1/2), flattened harmonic order.
    """

    ar: np.ndarray
    ma: np.ndarray
    innovation: np.ndarray
    alpha: np.ndarray = field(default=None)

    def __post_init__(self):
        ar = np.atleast_2d(np.asarray(self.ar, dtype=float))
        ma = np.atleast_2d(np.asarray(self.ma, dtype=float))
        lam = np.asarray(self.innovation, dtype=float).ravel()
        ndeg = lam.size
        if ar.size == 0:
            ar = np.zeros((ndeg, 0))
        if ma.size == 0:
            ma = np.zeros((ndeg, 0))
        if ar.shape[0] != ndeg or ma.shape[0] != ndeg:
            raise ValueError("ar, ma and innovation must cover the same degrees")
        if np.any(lam < 0):
            raise ValueError("innovation eigenvalues must be non-negative")
        k = ndeg * ndeg
        alpha = np.zeros(k) if self.alpha is None else np.asarray(self.alpha, dtype=float).ravel()
        if alpha.size != k:
            raise ValueError(f"alpha must have {k} entries, got {alpha.size}")
        if np.any(alpha < 0) or np.any(alpha >= 0.5):
            raise ValueError("alpha(n, j) must lie in [0, 1/2)")
        for n in range(ndeg):
            phi = np.r_[1.0, -ar[n]]
            psi = np.r_[1.0, ma[n]]
            if ar.shape[1] and np.any(np.abs(np.roots(phi[::-1])) <= 1.0 + 1e-12):
                raise ValueError(f"AR polynomial of degree {n} is not stationary")
            if ar.shape[1] and ma.shape[1]:
                rphi = np.roots(phi[::-1])
                rpsi = np.roots(psi[::-1])
                if rphi.size and rpsi.size and np.min(np.abs(rphi[:, None] - rpsi[None, :])) < 1e-8:
                    raise ValueError(f"AR and MA polynomials of degree {n} share a root")
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "ma", ma)
        object.__setattr__(self, "innovation", lam)
        object.__setattr__(self, "alpha", alpha)

    @property
    def sieve(self) -> SieveBasis:
        return SieveBasis(self.innovation.size - 1)

    @property
    def p(self) -> int:
        return self.ar.shape[1]

    @property
    def q(self) -> int:
        return self.ma.shape[1]

    def is_null(self) -> bool:
        return not np.any(self.alpha > 0)

    def with_alpha(self, alpha) -> "SpectralModel":
        return SpectralModel(self.ar, self.ma, self.innovation, alpha)

    def srd_part(self) -> "SpectralModel":
        """Same SPHARMA dynamics with every LRD exponent set to zero."""
        return self.with_alpha(np.zeros_like(self.alpha))


def default_innovations(max_degree: int, s: float = 3.0, d: int = 2) -> np.ndarray:
    """Default per-order innovation variances (n+1)**(-(2s+d)/d) / (2n+1)."""
    n = np.arange(max_degree + 1, dtype=float)
    return (n + 1.0) ** (-(2.0 * s + d) / d) / (2.0 * n + 1.0)


def sobolev_innovations(max_degree: int, s: float = 3.0, d: int = 2) -> np.ndarray:
    """Per-order variances (n+1)**(-(2s+d)).

    The field energy beyond degree N then decays like N**(-2s), i.e.
    k**(-2s/d) in the sieve size k = (N+1)**2.
    """
    n = np.arange(max_degree + 1, dtype=float)
    return (n + 1.0) ** (-(2.0 * s + d))


def spharma11_eigenvalues(max_degree: int) -> tuple[np.ndarray, np.ndarray]:
    """AR and MA eigenvalues of the SPHARMA(1,1) size-study model.

    lambda_n(phi_1) = 0.7 ((n+1)/n)**(-3/2), lambda_n(psi_1) = 0.4 ((n+1)/n)**(-5/1.95);
    both are set to their n -> 0+ limit, 0, at n = 0.
    """
    n = np.arange(max_degree + 1, dtype=float)
    with np.errstate(divide="ignore"):
        ratio = np.where(n > 0, (n + 1.0) / np.where(n > 0, n, 1.0), np.inf)
    phi = np.where(n > 0, 0.7 * ratio ** (-1.5), 0.0)
    psi = np.where(n > 0, 0.4 * ratio ** (-5.0 / 1.95), 0.0)
    return phi, psi


def null_spharma11_model(sieve: SieveBasis, innovation=None) -> SpectralModel:
    """SPHARMA(1,1) null model (all alpha = 0) over the degrees of ``sieve``."""
    phi, psi = spharma11_eigenvalues(sieve.max_degree)
    lam = default_innovations(sieve.max_degree) if innovation is None else np.asarray(innovation, float)
    return SpectralModel(phi[:, None], psi[:, None], lam)


# (L_alpha, l_alpha) bounds of examples 1-3.
EXAMPLE_BOUNDS = {
    1: (0.4929, 0.2550),
    2: (0.4950, 0.2629),
    3: (0.4743, 0.2678),
}


def _dominant_index(example: int, sieve: SieveBasis) -> int:
    N = sieve.max_degree
    if example == 1:
        return sieve.size - 1  # last function of the top eigenspace
    if example == 2:
        if N < 3:
            raise ValueError("example 2 needs a sieve with max degree >= 3")
        return flat_index(3, 5)
    if example == 3:
        if N < 1:
            raise ValueError("example 3 needs a sieve with max degree >= 1")
        return flat_index(1, 1)
    raise ValueError(f"unknown example id {example!r}; expected 1, 2 or 3")


def example_profile(example: int, sieve: SieveBasis) -> LRDProfile:
    """alpha(n, j) of examples 1-3: l_alpha everywhere, L_alpha on the dominant index."""
    if example not in EXAMPLE_BOUNDS:
        raise ValueError(f"unknown example id {example!r}; expected 1, 2 or 3")
    upper, lower = EXAMPLE_BOUNDS[example]
    dom = _dominant_index(example, sieve)
    alpha = np.full(sieve.size, lower)
    alpha[dom] = upper
    return LRDProfile(alpha, lower, upper, dom)


def example_model(example: int, sieve: SieveBasis, buffer_degrees: int = 0, innovation=None) -> SpectralModel:
    """Multifractionally integrated SPHARMA(1,1) of an example.

    ``sieve`` fixes where the dominant index sits.  ``buffer_degrees`` extra
    degrees are appended to the generated truth so it is not confined to
    the reconstruction sieve; they carry L_alpha in example 1 and l_alpha
    otherwise.
    """
    prof = example_profile(example, sieve)
    truth = SieveBasis(sieve.max_degree + buffer_degrees)
    fill = prof.upper if example == 1 else prof.lower
    alpha = np.full(truth.size, fill)
    alpha[: sieve.size] = prof.alpha
    return null_spharma11_model(truth, innovation).with_alpha(alpha)


def _arma_gain(model: SpectralModel, omega: np.ndarray) -> np.ndarray:
    """|Psi_n / Phi_n|^2 at e^{-i omega}, shape (len(omega), N+1)."""
    z = np.exp(-1j * np.asarray(omega, dtype=float))[:, None]
    num = np.ones((z.shape[0], model.innovation.size), dtype=complex)
    den = np.ones_like(num)
    for l in range(model.q):
        num = num + model.ma[:, l][None, :] * z ** (l + 1)
    for l in range(model.p):
        den = den - model.ar[:, l][None, :] * z ** (l + 1)
    return np.abs(num) ** 2 / np.abs(den) ** 2


def spectral_density(model: SpectralModel, omega) -> np.ndarray:
    """Channel spectral densities f_{n,j}(omega), shape (len(omega), k).

    Poles (omega = 0 with alpha > 0) evaluate to ``inf``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    degrees = model.sieve.degrees()
    base = model.innovation[None, :] / (2.0 * np.pi) * _arma_gain(model, omega)
    base = base[:, degrees]
    gap = np.abs(1.0 - np.exp(-1j * omega))[:, None]
    with np.errstate(divide="ignore"):
        frac = np.where(model.alpha[None, :] > 0, gap ** (-model.alpha[None, :]), 1.0)
    return base * frac


def theoretical_spectrum(model: SpectralModel, n: int, j: int, omega: float) -> float:
    """f_{n,j}(omega) for one harmonic.

    Raises
    ------
    SpectralPoleError
        If omega is a multiple of 2 pi and alpha(n, j) > 0.
    """
    idx = flat_index(n, j)
    if idx >= model.alpha.size:
        raise ValueError(f"harmonic ({n}, {j}) is outside the model's degrees")
    a = model.alpha[idx]
    if a > 0 and abs(1.0 - np.exp(-1j * omega)) == 0.0:
        raise SpectralPoleError(f"f_{{{n},{j}}} has a pole at omega = {omega} (alpha = {a})")
    return float(spectral_density(model, [omega])[0, idx])


def fractional_weights(d: float, length: int) -> np.ndarray:
    """MA(infinity) coefficients of (1 - B)**(-d), truncated to ``length`` terms."""
    k = np.arange(1, length, dtype=float)
    return np.cumprod(np.r_[1.0, (k - 1.0 + d) / k])


def simulate_series(model: SpectralModel, T: int, burn_in: int = 500, seed=None,
                    frac_length: int | None = None) -> CoefficientSeries:
    """Simulate all channels of ``model`` for T time steps.

    Channels are driven by independent Gaussian innovations.  The SPHARMA
    part is run from zero initial conditions through ``burn_in`` warm-up
    steps; channels with alpha > 0 are then passed through the truncated
    binomial expansion of (1 - B)**(-alpha/2) with ``frac_length`` weights
    (default max(1000, 10 T)), using only outputs whose filter window is
    fully populated.
    """
    if T < 2:
        raise ValueError(f"T must be at least 2, got {T}")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    rng = _seed_rng(seed)
    lrd = not model.is_null()
    L = (frac_length or max(1000, 10 * T)) if lrd else 0
    n_total = burn_in + T + L
    degrees = model.sieve.degrees()
    k = degrees.size

    eta = rng.standard_normal((n_total, k)) * np.sqrt(model.innovation[degrees])[None, :]
    x = np.empty_like(eta)
    for n in range(model.innovation.size):
        cols = slice(n * n, (n + 1) ** 2)
        b = np.r_[1.0, model.ma[n]]
        a = np.r_[1.0, -model.ar[n]]
        x[:, cols] = signal.lfilter(b, a, eta[:, cols], axis=0)

    if lrd:
        for a_val in np.unique(model.alpha[model.alpha > 0]):
            cols = np.flatnonzero(model.alpha == a_val)
            w = fractional_weights(a_val / 2.0, L)
            x[:, cols] = signal.fftconvolve(x[:, cols], w[:, None], axes=0)[:n_total]
    return CoefficientSeries(x[n_total - T:], model.sieve)
