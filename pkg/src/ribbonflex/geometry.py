"""Sampled semidiscrete surfaces, frames, and inner-geometry invariants.

An n-ribbon surface is n+1 curves sampled on one shared uniform grid.  The
ruled strip between consecutive curves is a ribbon; its rulings are the
difference vectors delta_i(t) = f_{i+1}(t) - f_i(t).
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DegeneracyError

# Fixed global orthonormal reference basis used for all coordinate work.
REFERENCE_BASIS = np.eye(3)

# Scale-free coplanarity margin below which the genericity hypotheses are
# treated as violated and analysis aborts.
MARGIN_THRESHOLD = 1e-9


@dataclass(frozen=True)
class SampledCurve:
    """One space curve sampled at uniform nodes t_j = a + j*(b-a)/(N-1)."""

    a: float
    b: float
    samples: np.ndarray  # (N, 3)

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 2 or samples.shape[1] != 3:
            raise ValueError(f"samples must be (N, 3), got {samples.shape}")
        if samples.shape[0] < numerics.MIN_NODES:
            raise ValueError(
                f"need at least {numerics.MIN_NODES} nodes, got {samples.shape[0]}"
            )
        if not self.b > self.a:
            raise ValueError(f"grid end {self.b} must exceed start {self.a}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite entries")

    @property
    def n_nodes(self):
        return self.samples.shape[0]

    @property
    def dx(self):
        return (self.b - self.a) / (self.n_nodes - 1)

    @property
    def grid(self):
        return self.a + self.dx * np.arange(self.n_nodes)

    def derivative_samples(self, order=1):
        return numerics.derivative_samples(self.samples, self.dx, order)


def derivative(curve, order=1):
    """Per-node derivative curve (4th-order stencils, exact on degree <= 4)."""
    return SampledCurve(curve.a, curve.b, curve.derivative_samples(order))


@dataclass(frozen=True)
class SampledSurface:
    """n+1 curves on one shared grid; ribbon i runs between curves i, i+1."""

    curves: tuple

    def __post_init__(self):
        curves = tuple(self.curves)
        object.__setattr__(self, "curves", curves)
        if len(curves) < 2:
            raise ValueError("a surface needs at least 2 curves (1 ribbon)")
        first = curves[0]
        for c in curves[1:]:
            if (c.a, c.b, c.n_nodes) != (first.a, first.b, first.n_nodes):
                raise ValueError("all curves must share one grid")

    @classmethod
    def from_arrays(cls, a, b, positions):
        positions = np.asarray(positions, dtype=float)
        return cls(tuple(SampledCurve(a, b, p) for p in positions))

    @property
    def ribbons(self):
        return len(self.curves) - 1

    @property
    def a(self):
        return self.curves[0].a

    @property
    def b(self):
        return self.curves[0].b

    @property
    def n_nodes(self):
        return self.curves[0].n_nodes

    @property
    def dx(self):
        return self.curves[0].dx

    @property
    def grid(self):
        return self.curves[0].grid

    def positions(self):
        """All samples as one (n+1, N, 3) array."""
        return np.stack([c.samples for c in self.curves])

    def diameter(self):
        """Diagonal of the bounding box of all samples (scale reference)."""
        pos = self.positions().reshape(-1, 3)
        return float(np.linalg.norm(pos.max(axis=0) - pos.min(axis=0)))

    def subsurface(self, first, last):
        """Curves first..last inclusive as a new surface."""
        if not 0 <= first < last <= self.ribbons:
            raise ValueError(f"invalid curve range [{first}, {last}]")
        return SampledSurface(self.curves[first : last + 1])

    def ruling(self, i):
        """Samples of delta_i = f_{i+1} - f_i, shape (N, 3)."""
        return self.curves[i + 1].samples - self.curves[i].samples


@dataclass(frozen=True)
class LocalFrame:
    """Frame data of interior curve i at one node: tangent, curvature and the
    two adjacent rulings with their t-derivatives."""

    i: int
    t: float
    f1dot: np.ndarray
    f1ddot: np.ndarray
    df0: np.ndarray
    df1: np.ndarray
    df0dot: np.ndarray
    df1dot: np.ndarray

    def margin(self):
        """Scale-free coplanarity margin of (f1dot, df0, df1), in [0, 1]."""
        return _margin_of(self.f1dot, self.df0, self.df1)


@dataclass(frozen=True)
class FrameField:
    """Vectorized LocalFrame data for one interior curve over all nodes."""

    a: float
    b: float
    f1dot: np.ndarray  # (N, 3) each
    f1ddot: np.ndarray
    df0: np.ndarray
    df1: np.ndarray
    df0dot: np.ndarray
    df1dot: np.ndarray
    i: int = 1

    @property
    def n_nodes(self):
        return self.f1dot.shape[0]

    @property
    def dx(self):
        return (self.b - self.a) / (self.n_nodes - 1)

    @property
    def grid(self):
        return self.a + self.dx * np.arange(self.n_nodes)

    def at(self, j):
        return LocalFrame(
            i=self.i,
            t=self.grid[j],
            f1dot=self.f1dot[j],
            f1ddot=self.f1ddot[j],
            df0=self.df0[j],
            df1=self.df1[j],
            df0dot=self.df0dot[j],
            df1dot=self.df1dot[j],
        )

    def at_half_nodes(self):
        """Frame data interpolated at the N-1 grid midpoints."""
        mid = numerics.half_node_samples
        return FrameField(
            a=self.a,
            b=self.b,
            f1dot=mid(self.f1dot),
            f1ddot=mid(self.f1ddot),
            df0=mid(self.df0),
            df1=mid(self.df1),
            df0dot=mid(self.df0dot),
            df1dot=mid(self.df1dot),
            i=self.i,
        )

    def margins(self):
        """Per-node scale-free coplanarity margin."""
        return _margin_of(self.f1dot, self.df0, self.df1)

    def triple(self):
        """Per-node mixed product (f1dot, df0, df1)."""
        return numerics.mixed(self.f1dot, self.df0, self.df1)


def frame_field(surface, i):
    """FrameField of interior curve i built from the raw samples.

    Difference fields equal raw sample differences exactly; derivatives come
    from the 4th-order stencils.
    """
    if not 1 <= i <= surface.ribbons - 1:
        raise ValueError(
            f"curve {i} is not interior (surface has {surface.ribbons} ribbons)"
        )
    dx = surface.dx
    f1dot = surface.curves[i].derivative_samples(1)
    df0 = surface.ruling(i - 1)
    df1 = surface.ruling(i)
    return FrameField(
        a=surface.a,
        b=surface.b,
        f1dot=f1dot,
        f1ddot=surface.curves[i].derivative_samples(2),
        df0=df0,
        df1=df1,
        df0dot=numerics.derivative_samples(df0, dx, 1),
        df1dot=numerics.derivative_samples(df1, dx, 1),
        i=i,
    )


def frame_at(surface, i, j):
    """LocalFrame of interior curve i at node j."""
    ff = frame_field(surface, i)
    if not 0 <= j < ff.n_nodes:
        raise ValueError(f"node {j} out of range [0, {ff.n_nodes})")
    return ff.at(j)


@dataclass(frozen=True)
class InvariantField:
    """The inner-geometry quantities preserved by flexions, per node.

    Families (for all admissible i):
      curve_speed[i]         |f_i'|          i = 0..n
      ruling_length[i]       |delta_i|       i = 0..n-1
      tangent_ruling_prev[i] <f_{i+1}', delta_i>   i = 0..n-1
      tangent_ruling_next[i] <f_i', delta_i>       i = 0..n-1
      tangent_tangent[i]     <f_i', f_{i+1}'>      i = 0..n-1

    For one ribbon pair (n = 2) this is exactly the 11 scalar functions of
    the flexion definition.
    """

    a: float
    b: float
    curve_speed: np.ndarray
    ruling_length: np.ndarray
    tangent_ruling_prev: np.ndarray
    tangent_ruling_next: np.ndarray
    tangent_tangent: np.ndarray

    # degree of each family in the surface scale (1 = length, 2 = product)
    FAMILY_DEGREE = {
        "curve_speed": 1,
        "ruling_length": 1,
        "tangent_ruling_prev": 2,
        "tangent_ruling_next": 2,
        "tangent_tangent": 2,
    }

    def families(self):
        return {
            "curve_speed": self.curve_speed,
            "ruling_length": self.ruling_length,
            "tangent_ruling_prev": self.tangent_ruling_prev,
            "tangent_ruling_next": self.tangent_ruling_next,
            "tangent_tangent": self.tangent_tangent,
        }

    def max_abs_difference(self, other):
        """Per-family max over curves/nodes of |self - other|."""
        mine, theirs = self.families(), other.families()
        return {
            name: float(np.max(np.abs(mine[name] - theirs[name])))
            for name in mine
        }


def inner_geometry(surface):
    """All preserved inner-geometry quantities of the surface."""
    tangents = np.stack([c.derivative_samples(1) for c in surface.curves])
    rulings = np.stack([surface.ruling(i) for i in range(surface.ribbons)])
    return InvariantField(
        a=surface.a,
        b=surface.b,
        curve_speed=np.linalg.norm(tangents, axis=-1),
        ruling_length=np.linalg.norm(rulings, axis=-1),
        tangent_ruling_prev=numerics.dot(tangents[1:], rulings),
        tangent_ruling_next=numerics.dot(tangents[:-1], rulings),
        tangent_tangent=numerics.dot(tangents[:-1], tangents[1:]),
    )


def _margin_of(f1dot, df0, df1):
    norms = (
        np.linalg.norm(f1dot, axis=-1)
        * np.linalg.norm(df0, axis=-1)
        * np.linalg.norm(df1, axis=-1)
    )
    det = np.abs(numerics.mixed(f1dot, df0, df1))
    # zero-length vectors yield NaN margins, which every gate treats as
    # degenerate
    with np.errstate(invalid="ignore", divide="ignore"):
        return det / norms


def genericity_margin(surface):
    """Min over interior curves and nodes of the scale-free coplanarity
    margin |det(f_i', delta_{i-1}, delta_i)| / (|f_i'| |delta_{i-1}| |delta_i|).

    Raises DegeneracyError if any factor vector has zero length, naming the
    offending curve and node.
    """
    if surface.ribbons < 2:
        raise ValueError("genericity margin needs at least 2 ribbons")
    worst = np.inf
    for i in range(1, surface.ribbons):
        ff = frame_field(surface, i)
        for name, vecs in (("tangent", ff.f1dot), ("ruling", ff.df0), ("ruling", ff.df1)):
            lengths = np.linalg.norm(vecs, axis=-1)
            if np.any(lengths == 0.0):
                j = int(np.argmin(lengths))
                raise DegeneracyError(
                    f"zero-length {name} vector at curve {i}, node {j}",
                    curve=i,
                    node=j,
                )
        worst = min(worst, float(np.min(ff.margins())))
    return worst


def require_margin(surface, threshold=MARGIN_THRESHOLD):
    """Raise DegeneracyError (naming the first offending node) if the
    genericity margin dips below threshold anywhere.

    Zero-length frame vectors produce NaN margins; the negated comparison
    treats those as degenerate too.
    """
    for i in range(1, surface.ribbons):
        margins = frame_field(surface, i).margins()
        bad = np.nonzero(~(margins >= threshold))[0]
        if bad.size:
            j = int(bad[0])
            raise DegeneracyError(
                f"genericity margin {margins[j]:.3e} below {threshold:.1e} "
                f"at curve {i}, node {j}",
                curve=i,
                node=j,
            )
