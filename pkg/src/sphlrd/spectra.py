"""fDFT, periodogram and weighted periodogram operators in harmonic coordinates.

Kernels are k x k complex arrays ``K`` acting on coefficient vectors; a
periodogram at frequency w is the outer product X_w X_w^H of the fDFT

    X_w = (2 pi T)**(-1/2) * sum_t x_t exp(-i w t).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .simulate import CoefficientSeries

__all__ = [
    "WeightKernel",
    "bandwidth",
    "epanechnikov",
    "fourier_frequencies",
    "fdft",
    "FourierCache",
    "periodogram",
    "fejer",
    "periodized_weight",
    "weighted_periodogram",
    "autocovariance_from_spectrum",
    "expected_periodogram",
]


def epanechnikov(x) -> np.ndarray:
    """W(x) = 3/4 (1 - x^2) on [-1, 1], zero elsewhere."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 1.0, 0.75 * (1.0 - x * x), 0.0)


@dataclass(frozen=True)
class WeightKernel:
    """Smoothing weight W with bandwidth B_T.

    ``l2_norm_sq`` is int W(x)^2 dx of the unscaled base function; it enters
    the asymptotic null variance.
    """

    bandwidth: float
    base: callable = field(default=epanechnikov, compare=False)
    l2_norm_sq: float = 0.6

    def __post_init__(self):
        if not 0.0 < self.bandwidth <= 2.0 * math.pi:
            raise ValueError(f"bandwidth must lie in (0, 2 pi], got {self.bandwidth}")

    def __call__(self, x) -> np.ndarray:
        return self.base(x)

    def coarser(self) -> "WeightKernel":
        """Same W with bandwidth sqrt(B_T) (pilot smoothing)."""
        return WeightKernel(math.sqrt(self.bandwidth), self.base, self.l2_norm_sq)


def bandwidth(T: int, beta: float = 0.25) -> float:
    """B_T = T**(-beta)."""
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    return float(T) ** (-beta)


def _values(series) -> np.ndarray:
    if isinstance(series, CoefficientSeries):
        return series.values
    x = np.asarray(series, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def fourier_frequencies(T: int) -> np.ndarray:
    """2 pi s / T in FFT order, with s >= T/2 wrapped to negative frequencies."""
    return 2.0 * np.pi * np.fft.fftfreq(T)


def fdft(series, omega: float) -> np.ndarray:
    """fDFT at an arbitrary frequency by direct summation."""
    x = _values(series)
    T = x.shape[0]
    e = np.exp(-1j * omega * np.arange(T))
    return (e @ x) / math.sqrt(2.0 * math.pi * T)


class FourierCache:
    """fDFT of every channel at all Fourier frequencies, computed once by FFT.

    ``dft[s]`` is the fDFT at ``freqs[s]``.
    """

    def __init__(self, series):
        x = _values(series)
        self.T = x.shape[0]
        self.dft = np.fft.fft(x, axis=0) / math.sqrt(2.0 * math.pi * self.T)
        self.freqs = fourier_frequencies(self.T)

    def periodogram(self, s: int) -> np.ndarray:
        v = self.dft[s]
        return np.outer(v, v.conj())

    def smooth(self, weights) -> np.ndarray:
        """sum_s weights[s] * I_s as a k x k kernel."""
        w = np.asarray(weights, dtype=float)
        return (self.dft.T * w) @ self.dft.conj()


def periodogram(series, omega: float) -> np.ndarray:
    """Rank-one periodogram kernel X_w X_w^H."""
    v = fdft(series, omega)
    return np.outer(v, v.conj())


def fejer(T: int, omega) -> np.ndarray | float:
    """Fejer kernel (1/T) [sin(T w/2) / sin(w/2)]^2, equal to T at multiples of 2 pi."""
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    w = np.asarray(omega, dtype=float)
    half = np.sin(w / 2.0)
    near = np.abs(half) < 1e-8
    safe = np.where(near, 1.0, half)
    out = np.where(near, float(T), np.sin(T * w / 2.0) ** 2 / (T * safe**2))
    return float(out) if out.ndim == 0 else out


def periodized_weight(wk: WeightKernel, x) -> np.ndarray | float:
    """W^(T)(x) = sum_j W((x + 2 pi j) / B_T) / B_T."""
    x = np.asarray(x, dtype=float)
    r = np.mod(x + np.pi, 2.0 * np.pi) - np.pi
    B = wk.bandwidth
    out = sum(wk((r + 2.0 * np.pi * j) / B) for j in (-1, 0, 1)) / B
    return float(out) if out.ndim == 0 else out


def weighted_periodogram(series, omega: float, wk: WeightKernel, cache: FourierCache | None = None) -> np.ndarray:
    """(2 pi / T) sum_s W^(T)(omega - w_s) I_s over the Fourier frequencies."""
    cache = cache or FourierCache(series)
    w = (2.0 * np.pi / cache.T) * periodized_weight(wk, omega - cache.freqs)
    return cache.smooth(w)


def autocovariance_from_spectrum(density, max_lag: int, grid: int | None = None) -> np.ndarray:
    """gamma(h) = int_{-pi}^{pi} f(w) e^{iwh} dw for h = 0..max_lag.

    ``density`` maps a frequency array to an (n_freq, channels) array of
    spectral densities; it must be smooth (no pole), and the integral is a
    periodic trapezoid rule on ``grid`` nodes (default a power of two of at
    least 8 * max_lag and 2**16).
    """
    n = grid or 1 << max(16, int(math.ceil(math.log2(8 * max(max_lag, 1)))))
    if n <= max_lag:
        raise ValueError("quadrature grid must exceed the largest lag")
    f = np.asarray(density(fourier_frequencies(n)), dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    gamma = 2.0 * np.pi * np.fft.ifft(f, axis=0).real
    return gamma[: max_lag + 1]


def expected_periodogram(gamma: np.ndarray, T: int) -> np.ndarray:
    """E I_s at the T Fourier frequencies from autocovariances gamma[0..T-1].

    E I(w) = (1/2pi) sum_{|h|<T} (1 - |h|/T) gamma(h) e^{-iwh}; returns a
    (T, channels) real array in FFT order.
    """
    g = np.asarray(gamma, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape[0] < T:
        raise ValueError(f"need autocovariances up to lag {T - 1}")
    h = np.arange(T, dtype=float)[:, None]
    folded = g[:T] * (1.0 - h / T) * np.where(h > 0, 2.0, 1.0)
    return np.fft.fft(folded, axis=0).real / (2.0 * np.pi)
