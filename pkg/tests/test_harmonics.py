import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import sph_harm_y

from sphlrd.harmonics import (
    DomainError,
    SieveBasis,
    degree_order,
    degree_slice,
    evaluate_basis,
    flat_index,
    multiplicity,
    normalized_legendre,
    sieve_from_budget,
    to_cartesian,
    to_spherical,
)

from conftest import uniform_points


def test_multiplicity_values():
    assert multiplicity(0) == 1
    assert multiplicity(3) == 7
    assert sum(multiplicity(l) for l in range(5)) == 25


def test_multiplicity_rejects_negative():
    with pytest.raises(ValueError):
        multiplicity(-1)


@given(st.integers(0, 40))
def test_flat_index_is_bijective_on_sieve(N):
    idx = [flat_index(n, j) for n in range(N + 1) for j in range(1, 2 * n + 2)]
    assert idx == list(range((N + 1) ** 2))
    assert all(flat_index(*degree_order(i)) == i for i in idx)


def test_sieve_size_and_degrees():
    s = SieveBasis(4)
    assert s.size == 25 == sum(multiplicity(n) for n in range(5))
    assert np.array_equal(np.bincount(s.degrees()), [1, 3, 5, 7, 9])
    assert degree_slice(2) == slice(4, 9)


@pytest.mark.parametrize("budget,N", [(1, 0), (3, 0), (4, 1), (9, 2), (15, 2), (16, 3), (12, 2)])
def test_sieve_from_budget(budget, N):
    assert sieve_from_budget(budget).max_degree == N


def test_constant_harmonic(rng):
    z = uniform_points(rng, 5)
    assert np.array_equal(evaluate_basis(z, 0), np.ones((5, 1)))
    assert evaluate_basis(z[0], 0).tolist() == [1.0]
    assert np.all(evaluate_basis(z, 6)[:, 0] == 1.0)


def test_addition_theorem(rng):
    N = 8
    b = evaluate_basis(uniform_points(rng, 100), N)
    for n in range(N + 1):
        np.testing.assert_allclose(np.sum(b[:, degree_slice(n)] ** 2, axis=1), 2 * n + 1, rtol=1e-11)


def _real_from_complex(theta, phi, N):
    # real harmonics built from scipy's complex ones, rescaled to unit mean square
    out = np.empty((theta.size, (N + 1) ** 2))
    for n in range(N + 1):
        for m in range(-n, n + 1):
            y = sph_harm_y(n, abs(m), theta, phi) * math.sqrt(4 * np.pi)
            sign = (-1) ** abs(m)
            if m == 0:
                val = y.real
            elif m > 0:
                val = math.sqrt(2) * sign * y.real
            else:
                val = math.sqrt(2) * sign * y.imag
            out[:, n * n + n + m] = val
    return out


def test_matches_complex_harmonic_oracle(rng):
    z = uniform_points(rng, 200)
    theta, phi = to_spherical(z)
    np.testing.assert_allclose(evaluate_basis(z, 10), _real_from_complex(theta, phi, 10), atol=1e-10)


def test_monte_carlo_orthonormality(rng):
    b = evaluate_basis(uniform_points(rng, 1_000_000), 3)
    gram = b.T @ b / b.shape[0]
    assert np.max(np.abs(gram - np.eye(16))) < 0.01


def test_legendre_poles_and_normalization():
    x = np.linspace(-1, 1, 20001)
    p = normalized_legendre(6, x)
    # (1/2) int P^2 dx = 1 for m = 0 and 2 otherwise
    for n in range(7):
        for m in range(n + 1):
            val = 0.5 * np.trapezoid(p[n, m] ** 2, x)
            assert val == pytest.approx(1.0 if m == 0 else 2.0, rel=1e-4)
    np.testing.assert_allclose(p[:, 1:, 0], 0.0, atol=1e-12)  # all m > 0 vanish at the pole


@pytest.mark.parametrize("bad", [[1.0, 1.0, 0.0], [0.0, 0.0, 1.0 + 1e-9], [0.0, 0.0, 0.0]])
def test_off_sphere_points_are_rejected(bad):
    with pytest.raises(DomainError):
        evaluate_basis(np.array(bad), 2)


def test_within_tolerance_is_accepted():
    evaluate_basis(np.array([0.0, 0.0, 1.0 + 5e-13]), 2)


@given(st.floats(0.0, math.pi), st.floats(0.0, 2 * math.pi, exclude_max=True))
def test_spherical_round_trip(theta, phi):
    t, p = to_spherical(to_cartesian(theta, phi))
    assert t == pytest.approx(theta, abs=1e-9)
    if 1e-6 < theta < math.pi - 1e-6:
        assert math.cos(p - phi) == pytest.approx(1.0, abs=1e-9)
