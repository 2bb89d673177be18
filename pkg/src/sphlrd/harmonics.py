"""Real spherical harmonics on the unit sphere S^2.

The basis is orthonormal with respect to the *normalized* surface measure
(total mass one), so the degree-0 function is identically 1 and

    sum_j S_{n,j}(z)**2 == 2n + 1

for every point z (addition theorem).

Within degree n the 2n+1 functions are ordered by order m = -n..n, with
j - 1 = m + n:

    m < 0  ->  Pbar_{n,|m|}(cos theta) * sin(|m| phi)
    m = 0  ->  Pbar_{n,0}(cos theta)
    m > 0  ->  Pbar_{n,m}(cos theta) * cos(m phi)

where Pbar are the fully normalized ("geodesy") associated Legendre
functions.  The flattened index of (n, j) is n**2 + j - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "DomainError",
    "SieveBasis",
    "multiplicity",
    "flat_index",
    "degree_order",
    "degree_slice",
    "sieve_from_budget",
    "normalized_legendre",
    "evaluate_basis",
    "to_cartesian",
    "to_spherical",
]

UNIT_TOL = 1e-12


class DomainError(ValueError):
    """Input lies outside the domain of a basis function (e.g. off the sphere)."""


def multiplicity(n: int) -> int:
    """Dimension of the degree-n eigenspace of the Laplace-Beltrami operator on S^2."""
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    return 2 * n + 1


def flat_index(n: int, j: int) -> int:
    """Linear index of harmonic (n, j), j in 1..2n+1."""
    if n < 0 or not 1 <= j <= 2 * n + 1:
        raise ValueError(f"invalid harmonic index (n={n}, j={j})")
    return n * n + j - 1


def degree_order(index: int) -> tuple[int, int]:
    """Inverse of :func:`flat_index`."""
    if index < 0:
        raise ValueError(f"index must be non-negative, got {index}")
    n = math.isqrt(index)
    return n, index - n * n + 1


def degree_slice(n: int) -> slice:
    """Slice selecting the degree-n coordinates of a flattened coefficient vector."""
    return slice(n * n, (n + 1) ** 2)


@dataclass(frozen=True)
class SieveBasis:
    """Truncated harmonic basis containing every degree up to ``max_degree``."""

    max_degree: int

    def __post_init__(self):
        if self.max_degree < 0:
            raise ValueError(f"max_degree must be non-negative, got {self.max_degree}")

    @property
    def size(self) -> int:
        return (self.max_degree + 1) ** 2

    def degrees(self) -> np.ndarray:
        """Degree n of every flattened coordinate."""
        return np.repeat(np.arange(self.max_degree + 1), 2 * np.arange(self.max_degree + 1) + 1)

    def evaluate(self, points) -> np.ndarray:
        return evaluate_basis(points, self.max_degree)


def sieve_from_budget(k_target: int) -> SieveBasis:
    """Largest full-eigenspace sieve with at most ``k_target`` functions."""
    if k_target < 1:
        raise ValueError(f"sieve budget must be >= 1, got {k_target}")
    return SieveBasis(math.isqrt(k_target) - 1)


def to_cartesian(theta, phi) -> np.ndarray:
    """Colatitude/longitude (radians) to unit 3-vectors, shape (..., 3)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def to_spherical(points) -> tuple[np.ndarray, np.ndarray]:
    """Unit 3-vectors to (colatitude in [0, pi], longitude in [0, 2 pi))."""
    pts = np.asarray(points, dtype=float)
    theta = np.arccos(np.clip(pts[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(pts[..., 1], pts[..., 0]), 2 * np.pi)
    return theta, phi


def normalized_legendre(lmax: int, x) -> np.ndarray:
    """Fully normalized associated Legendre functions Pbar_{n,m}(x).

    Normalized so that (1/2) * int_{-1}^{1} Pbar_{n,m}(x)**2 dx equals
    1 for m = 0 and 2 otherwise; since cos(m phi)**2 averages to 1/2 this
    gives unit mean square of Pbar cos(m phi) over the sphere.  Uses the
    standard column (fixed m) three-term recurrence seeded by the sectoral
    values, which is stable for the moderate degrees used here.

    Parameters
    ----------
    lmax : int
        Maximum degree.
    x : array_like
        cos(colatitude), values in [-1, 1].

    Returns
    -------
    ndarray, shape (lmax + 1, lmax + 1, npoints)
        ``out[n, m]``; entries with m > n are zero.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    p = np.zeros((lmax + 1, lmax + 1, x.size))
    p[0, 0] = 1.0
    if lmax == 0:
        return p
    p[1, 1] = math.sqrt(3.0) * u
    for m in range(2, lmax + 1):
        p[m, m] = math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * u * p[m - 1, m - 1]
    for m in range(0, lmax):
        p[m + 1, m] = math.sqrt(2.0 * m + 3.0) * x * p[m, m]
        for n in range(m + 2, lmax + 1):
            a = math.sqrt((2.0 * n - 1.0) * (2.0 * n + 1.0) / ((n - m) * (n + m)))
            b = math.sqrt(
                (2.0 * n + 1.0) * (n + m - 1.0) * (n - m - 1.0)
                / ((n - m) * (n + m) * (2.0 * n - 3.0))
            )
            p[n, m] = a * x * p[n - 1, m] - b * p[n - 2, m]
    return p


def _as_unit_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 3:
        raise DomainError(f"expected 3-vectors, got trailing dimension {pts.shape[-1]}")
    pts = pts.reshape(-1, 3)
    norms = np.linalg.norm(pts, axis=1)
    bad = np.abs(norms - 1.0) > UNIT_TOL
    if np.any(bad):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise DomainError(
            f"{int(bad.sum())} point(s) are not on the unit sphere (max |norm - 1| = {worst:.3e})"
        )
    return pts


def evaluate_basis(points, max_degree: int) -> np.ndarray:
    """Evaluate the real harmonic sieve at unit 3-vectors.

    Parameters
    ----------
    points : array_like, shape (3,) or (M, 3)
        Points on the unit sphere.
    max_degree : int
        Highest degree N; the output has (N+1)**2 columns.

    Returns
    -------
    ndarray
        Shape ((N+1)**2,) for a single point, (M, (N+1)**2) otherwise.

    Raises
    ------
    DomainError
        If any point is farther than 1e-12 from the unit sphere.
    """
    single = np.ndim(points) == 1
    pts = _as_unit_points(points)
    if max_degree < 0:
        raise ValueError(f"max_degree must be non-negative, got {max_degree}")
    _, phi = to_spherical(pts)
    plm = normalized_legendre(max_degree, pts[:, 2])
    out = np.empty((pts.shape[0], (max_degree + 1) ** 2))
    out[:, 0] = 1.0
    for n in range(1, max_degree + 1):
        base = n * n + n  # column of m = 0
        out[:, base] = plm[n, 0]
        for m in range(1, n + 1):
            out[:, base + m] = plm[n, m] * np.cos(m * phi)
            out[:, base - m] = plm[n, m] * np.sin(m * phi)
    return out[0] if single else out
