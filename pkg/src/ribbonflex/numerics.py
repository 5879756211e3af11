"""Low-level numerical kernels: stencils, quadrature, interpolation.

Everything here operates on uniformly sampled data along axis 0 and is
4th-order accurate, so that differentiation error stays below integrator
error at the working resolutions.
"""

import numpy as np

from .errors import GridSizeError

# Minimum node count for the one-sided 4th-order stencils not to overlap.
MIN_NODES = 9

# First derivative, 5-point stencils (exact on polynomials of degree <= 4).
_D1_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_D1_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0

# Second derivative: 5-point central, 6-point one-sided (exact on degree <= 5
# one-sided, degree <= 5 central).
_D2_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_EDGE0 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
_D2_EDGE1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0

# Midpoint values from a cubic through 4 neighbouring nodes.
_MID_INTERIOR = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_MID_EDGE = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0


def _check_size(n):
    if n < MIN_NODES:
        raise GridSizeError(
            f"grid has {n} nodes; at least {MIN_NODES} are required for the "
            "4th-order stencils"
        )


def _correlate(values, weights, offset):
    """Weighted sum of rows values[j+offset : j+offset+len(weights)]."""
    n = values.shape[0]
    k = len(weights)
    out = np.zeros((n - k + 1,) + values.shape[1:])
    for s, w in enumerate(weights):
        if w != 0.0:
            out += w * values[s : s + n - k + 1]
    return out


def derivative_samples(values, dx, order=1):
    """Per-node derivative estimates of uniformly sampled data.

    4th-order central stencils in the interior, one-sided 4th-order stencils
    within two nodes of each end.  values has shape (N, ...); the derivative
    is taken along axis 0.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    _check_size(n)
    if order == 1:
        interior, e0, e1, sign = _D1_INTERIOR, _D1_EDGE0, _D1_EDGE1, -1.0
        scale = dx
    elif order == 2:
        interior, e0, e1, sign = _D2_INTERIOR, _D2_EDGE0, _D2_EDGE1, 1.0
        scale = dx * dx
    else:
        raise ValueError(f"order must be 1 or 2, got {order!r}")

    out = np.empty_like(values)
    out[2:-2] = _correlate(values, interior, 0)
    k = len(e0)
    head = values[:k]
    tail = values[-k:][::-1]
    out[0] = np.tensordot(e0, head, axes=(0, 0))
    out[1] = np.tensordot(e1, head, axes=(0, 0))
    out[-1] = sign * np.tensordot(e0, tail, axes=(0, 0))
    out[-2] = sign * np.tensordot(e1, tail, axes=(0, 0))
    out /= scale
    return out


def half_node_samples(values):
    """Cubic interpolation of uniformly sampled data at the N-1 midpoints."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    _check_size(n)
    out = np.empty((n - 1,) + values.shape[1:])
    out[1:-1] = _correlate(values, _MID_INTERIOR, 0)
    out[0] = np.tensordot(_MID_EDGE, values[:4], axes=(0, 0))
    out[-1] = np.tensordot(_MID_EDGE, values[-4:][::-1], axes=(0, 0))
    return out


def cumulative_integral(values, dx):
    """Cumulative integral with out[0] = 0, from sliding 4-point cubic fits.

    4th-order accurate with a smooth error, so the result can be
    re-differentiated without boundary noise.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    _check_size(n)
    inc = np.empty((n - 1,) + values.shape[1:])
    inc[1:-1] = (dx / 24.0) * (
        -values[:-3] + 13.0 * values[1:-2] + 13.0 * values[2:-1] - values[3:]
    )
    inc[0] = (dx / 24.0) * np.tensordot(
        np.array([9.0, 19.0, -5.0, 1.0]), values[:4], axes=(0, 0)
    )
    inc[-1] = (dx / 24.0) * np.tensordot(
        np.array([9.0, 19.0, -5.0, 1.0]), values[-4:][::-1], axes=(0, 0)
    )
    out = np.empty_like(values)
    out[0] = 0.0
    np.cumsum(inc, axis=0, out=out[1:])
    return out


def mixed(a, b, c):
    """Scalar triple product det(a, b, c), vectorized over leading axes."""
    return np.einsum("...i,...i->...", np.asarray(a), np.cross(b, c))


def dot(a, b):
    """Inner product along the last axis, vectorized."""
    return np.einsum("...i,...i->...", np.asarray(a), np.asarray(b))
