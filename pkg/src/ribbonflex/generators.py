"""Deterministic surface generators for the analysis and test corpus.

Kinds:
  REV        surface of revolution (rotationally symmetric in the ribbon
             index), flexible by symmetry
  CONE       stacked circles (rotationally symmetric in t), flexible
  RAND       seeded trig polynomials, rejection-sampled for genericity;
             generically rigid for 3+ ribbons
  DEV        developable by construction: the outer curves solve the ruling
             ODEs for prescribed constant coefficients
  TRANSLATE  parallel translates of one curve, degenerate on purpose
"""

import math

import numpy as np

from .errors import GenerationError
from .geometry import SampledCurve, SampledSurface, genericity_margin

KINDS = ("REV", "CONE", "RAND", "DEV", "TRANSLATE")

DEFAULT_GRID = (0.0, 1.0, 201)

_RAND_MIN_MARGIN = 0.05
_RAND_MAX_ROUNDS = 100


def generate(kind, ribbons=2, grid=DEFAULT_GRID, seed=0, params=None):
    """Build a sampled surface of the requested kind.

    grid is (a, b, n_nodes); params overrides kind-specific defaults.
    """
    kind = kind.upper()
    params = dict(params or {})
    a, b, n = grid
    n = int(n)
    t = np.linspace(a, b, n)
    if kind == "REV":
        return _revolution(t, a, b, ribbons, params)
    if kind == "CONE":
        return _cone(t, a, b, ribbons, params)
    if kind == "RAND":
        return _random_trig(t, a, b, ribbons, seed, params)
    if kind == "DEV":
        return _developable(t, a, b, ribbons, params)
    if kind == "TRANSLATE":
        return _translate(t, a, b, ribbons, params)
    raise ValueError(f"unknown generator kind {kind!r}; expected one of {KINDS}")


def _surface(a, b, rows):
    return SampledSurface(tuple(SampledCurve(a, b, r) for r in rows))


def _revolution(t, a, b, ribbons, params):
    theta = params.get("theta", math.pi / 6.0)
    rho = 2.0 + 0.5 * np.cos(t)
    z = t.copy()
    rows = []
    for i in range(ribbons + 1):
        rows.append(np.stack(
            [rho * math.cos(i * theta), rho * math.sin(i * theta), z], axis=1
        ))
    return _surface(a, b, rows)


def _cone(t, a, b, ribbons, params):
    r_base = params.get("r_base", 1.0)
    r_step = params.get("r_step", 0.3)
    rows = []
    for i in range(ribbons + 1):
        r = r_base + r_step * i
        z = params.get("z_lin", 1.0) * i + params.get("z_quad", 0.2) * i * i
        rows.append(np.stack(
            [r * np.cos(t), r * np.sin(t), np.full_like(t, z)], axis=1
        ))
    return _surface(a, b, rows)


def _random_trig(t, a, b, ribbons, seed, params):
    min_margin = params.get("min_margin", _RAND_MIN_MARGIN)
    rng = np.random.default_rng(seed)
    for _ in range(_RAND_MAX_ROUNDS):
        rows = []
        # Shared drift keeps the ruling directions nearly constant in t, so
        # the coplanarity margin cannot dip at isolated nodes; the spiral of
        # curve centers keeps consecutive rulings far from parallel.
        drift = rng.uniform(-1.0, 1.0, size=3)
        for i in range(ribbons + 1):
            base = rng.uniform(-0.3, 0.3, size=3)
            base += [0.9 * math.cos(2.1 * i), 0.9 * math.sin(2.1 * i), 1.1 * i]
            wobble = drift + rng.uniform(-0.15, 0.15, size=3)
            curve = np.tile(base, (len(t), 1)) + np.outer(t - a, wobble)
            for k in range(1, 4):
                ak = rng.uniform(-0.3, 0.3, size=3) / k
                bk = rng.uniform(-0.3, 0.3, size=3) / k
                curve = curve + np.outer(np.cos(k * t), ak)
                curve = curve + np.outer(np.sin(k * t), bk)
            rows.append(curve)
        surface = _surface(a, b, rows)
        if genericity_margin(surface) >= min_margin:
            return surface
    raise GenerationError(
        f"rejection sampling exhausted {_RAND_MAX_ROUNDS} rounds without "
        f"reaching genericity margin {min_margin}"
    )


def _developable(t, a, b, ribbons, params):
    """Middle curve prescribed analytically; the outer curves solve the
    linear ruling ODEs with constant coefficients, so each ribbon's ruling
    lies in the span of the adjacent tangents by construction."""
    if ribbons != 2:
        raise ValueError("the developable generator builds 2-ribbon surfaces")
    a0 = params.get("a0", 2.0)
    b0 = params.get("b0", -1.0)
    a1 = params.get("a1", 3.0)
    b1 = params.get("b1", -2.0)
    if a0 == 0.0 or b1 == 0.0:
        raise ValueError("ruling ODE coefficients a0 and b1 must be nonzero")
    # defaults keep the coplanarity margin near 0.5 across the grid and leave
    # flexing room on both sides of lambda = 0
    f0_start = np.asarray(params.get("f0_start", (-0.53, 0.38, 0.54)), float)
    f2_start = np.asarray(params.get("f2_start", (0.64, -0.94, 1.0)), float)

    def f1(tt):
        tt = np.asarray(tt, dtype=float)
        return np.stack([tt, tt**2, tt**3], axis=-1)

    def f1dot(tt):
        tt = np.asarray(tt, dtype=float)
        return np.stack([np.ones_like(tt), 2 * tt, 3 * tt**2], axis=-1)

    def rate0(tt, y):
        return (f1(tt) - y - b0 * f1dot(tt)) / a0

    def rate2(tt, y):
        return (y - f1(tt) - a1 * f1dot(tt)) / b1

    mid = f1(t)
    rows = [_rk4_path(rate0, f0_start, t), mid, _rk4_path(rate2, f2_start, t)]
    return _surface(a, b, rows)


def _rk4_path(rate, start, t):
    h = t[1] - t[0]
    out = np.empty((len(t), 3))
    out[0] = start
    y = start.astype(float)
    for j in range(len(t) - 1):
        tj = t[j]
        k1 = rate(tj, y)
        k2 = rate(tj + 0.5 * h, y + 0.5 * h * k1)
        k3 = rate(tj + 0.5 * h, y + 0.5 * h * k2)
        k4 = rate(tj + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[j + 1] = y
    return out


def _translate(t, a, b, ribbons, params):
    v = np.asarray(params.get("offset", (0.0, 0.0, 1.0)), float)
    base = np.stack([np.cos(t), np.sin(t), 0.3 * t], axis=1)
    rows = [base + i * v for i in range(ribbons + 1)]
    return _surface(a, b, rows)
