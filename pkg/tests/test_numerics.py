"""Kernel-level checks for the stencils, interpolation, and quadrature."""

import numpy as np
import pytest

from ribbonflex import numerics
from ribbonflex.errors import GridSizeError


def grid(n, a=0.0, b=1.0):
    t = np.linspace(a, b, n)
    return t, t[1] - t[0]


def test_first_derivative_exact_on_quartics():
    t, dx = grid(17)
    coeffs = [0.3, -1.2, 0.7, 2.0, -0.4]
    poly = np.polynomial.Polynomial(coeffs)
    d = numerics.derivative_samples(poly(t), dx, 1)
    assert np.allclose(d, poly.deriv()(t), rtol=0, atol=1e-11)


def test_second_derivative_exact_on_quartics():
    t, dx = grid(17)
    poly = np.polynomial.Polynomial([1.0, -0.5, 0.25, -2.0, 1.5])
    d = numerics.derivative_samples(poly(t), dx, 2)
    assert np.allclose(d, poly.deriv(2)(t), rtol=0, atol=1e-9)


def test_derivative_fourth_order_convergence():
    # trig polynomial of degree 3; error should drop ~16x per grid doubling
    def f(t):
        return np.sin(t) + 0.5 * np.cos(2 * t) - 0.2 * np.sin(3 * t)

    def fprime(t):
        return np.cos(t) - np.sin(2 * t) - 0.6 * np.cos(3 * t)

    errors = []
    for n in (51, 101, 201):
        t, dx = grid(n)
        d = numerics.derivative_samples(f(t), dx, 1)
        errors.append(np.max(np.abs(d - fprime(t))))
    for coarse, fine in zip(errors, errors[1:]):
        assert 12.0 <= coarse / fine <= 20.0


def test_derivative_vectorized_over_components():
    t, dx = grid(21)
    vals = np.stack([t, t**2, t**3], axis=1)
    d = numerics.derivative_samples(vals, dx, 1)
    j = 10  # t = 0.5
    assert np.allclose(d[j], [1.0, 1.0, 0.75], atol=1e-12)


def test_grid_too_small_raises():
    t, dx = grid(8)
    with pytest.raises(GridSizeError):
        numerics.derivative_samples(t, dx, 1)


def test_invalid_order_raises():
    t, dx = grid(12)
    with pytest.raises(ValueError):
        numerics.derivative_samples(t, dx, 3)


def test_half_nodes_exact_on_cubics():
    t, dx = grid(15)
    poly = np.polynomial.Polynomial([0.5, 1.0, -2.0, 0.75])
    mid = numerics.half_node_samples(poly(t))
    assert np.allclose(mid, poly(t[:-1] + dx / 2), atol=1e-13)


def test_cumulative_integral_exact_on_cubics():
    t, dx = grid(15)
    poly = np.polynomial.Polynomial([1.0, -1.0, 3.0, 2.0])
    integral = poly.integ()
    out = numerics.cumulative_integral(poly(t), dx)
    assert np.allclose(out, integral(t) - integral(t[0]), atol=1e-13)


def test_cumulative_integral_fourth_order():
    errors = []
    for n in (101, 201, 401):
        t, dx = grid(n)
        out = numerics.cumulative_integral(np.sin(3 * t), dx)
        exact = (1 - np.cos(3 * t)) / 3
        errors.append(np.max(np.abs(out - exact)))
    for coarse, fine in zip(errors, errors[1:]):
        assert 12.0 <= coarse / fine <= 20.0


def test_mixed_product_matches_determinant():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a, b, c = rng.normal(size=(3, 3))
        assert np.isclose(numerics.mixed(a, b, c), np.linalg.det([a, b, c]))


def test_mixed_product_vectorized():
    rng = np.random.default_rng(8)
    a, b, c = rng.normal(size=(3, 11, 3))
    vals = numerics.mixed(a, b, c)
    assert vals.shape == (11,)
    assert np.isclose(vals[4], np.linalg.det([a[4], b[4], c[4]]))
