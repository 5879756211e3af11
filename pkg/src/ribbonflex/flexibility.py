"""Infinitesimal flexibility criteria for 3-ribbon (and wider) surfaces.

The central objects are the mixed-product functionals Lambda and H_1, H_2 of
a 3-ribbon surface.  Their combination chi = Lambda' - (H_2 - H_1) Lambda
vanishes exactly on infinitesimally flexible surfaces; equivalently the
monodromy condition Lambda(t2) exp(int H_1) = Lambda(t1) exp(int H_2) holds
for all t1, t2.  An n-ribbon surface is infinitesimally flexible iff every
consecutive 3-ribbon window is.
"""

import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import geometry, numerics
from .errors import DegeneracyError, TrajectoryError
from .geometry import MARGIN_THRESHOLD

_mixed = numerics.mixed

#: floor protecting the scale-free chi normalization
_CHI_FLOOR = 1e-30


def default_tol_chi():
    """Verdict threshold on normalized max |chi|; overridable by environment."""
    return float(os.environ.get("RIBBONFLEX_TOL_CHI", "1e-6"))


def _pair_frames(surface):
    """FrameFields of the two interior curves of a 3-ribbon surface."""
    if surface.ribbons != 3:
        raise ValueError("a 3-ribbon surface (4 curves) is required")
    return geometry.frame_field(surface, 1), geometry.frame_field(surface, 2)


def lambda_field(surface3):
    """Lambda(t) samples over the grid.

    Lambda = [(f1', f1'', d0) / (f2', f2'', d2)] *
             [(f2', d1, d2)^2 / (f1', d0, d1)^2]
    """
    fr1, fr2 = _pair_frames(surface3)
    return _lambda_from_frames(fr1, fr2)


def lambda_fn(surface3, node):
    """Lambda at one grid node."""
    return float(lambda_field(surface3)[node])


def h_field(surface, i):
    """H_i(t) samples: the logarithmic t-derivative rate of the flexion
    transport along ribbon pair (i-1, i)."""
    return _h_from_frames(geometry.frame_field(surface, i))


def h_fn(surface, i, node):
    """H_i at one grid node."""
    return float(h_field(surface, i)[node])


def _segment_integral(values, dx, node1, node2):
    """Signed composite-Simpson integral of grid samples between two nodes."""
    if node1 == node2:
        return 0.0
    lo, hi = sorted((node1, node2))
    seg = simpson(values[lo : hi + 1], dx=dx)
    return float(seg if node2 > node1 else -seg)


def continuous_shift(ribbon2, dphi_t1, node1, node2):
    """Transport the flexion rate of Phi = <d0, d1> from node1 to node2:
    DPhi(t2) = DPhi(t1) * exp(int_{t1}^{t2} H_1 dt)."""
    if ribbon2.ribbons != 2:
        raise ValueError("continuous shift acts on a 2-ribbon surface")
    h1 = h_field(ribbon2, 1)
    return float(dphi_t1 * np.exp(_segment_integral(h1, ribbon2.dx, node1, node2)))


def discrete_shift(surface3, dphi1, node):
    """Jump the flexion rate across the middle curve: DPhi_2 = Lambda * DPhi_1."""
    return float(lambda_fn(surface3, node) * dphi1)


def d_curvature_sq(surface3, dphi1, node, which=1):
    """Flexion rate of |f_i''|^2 at a node, driven by DPhi_1.

    which=1: D<f1'', f1''> = 2 (f1', f1'', d0)(f1', f1'', d1) / (f1', d0, d1)^2 * DPhi_1
    which=2: D<f2'', f2''> = (f2', f2'', d1) / (f1', f1'', d1) * D<f1'', f1''>
    """
    fr1, fr2 = _pair_frames(surface3)
    j = node
    t1 = _mixed(fr1.f1dot[j], fr1.f1ddot[j], fr1.df0[j])
    t2 = _mixed(fr1.f1dot[j], fr1.f1ddot[j], fr1.df1[j])
    den = _mixed(fr1.f1dot[j], fr1.df0[j], fr1.df1[j])
    if den == 0.0:
        raise DegeneracyError("frame triple product vanished", node=j)
    d_sq1 = 2.0 * t1 * t2 / (den * den) * dphi1
    if which == 1:
        return float(d_sq1)
    if which != 2:
        raise ValueError("which must be 1 or 2")
    if t2 == 0.0:
        raise DegeneracyError("(f1', f1'', d1) vanished", node=j)
    ratio = _mixed(fr2.f1dot[j], fr2.f1ddot[j], fr2.df0[j]) / t2
    return float(ratio * d_sq1)


@dataclass(frozen=True)
class ChiResult:
    """chi samples with the scale used for the verdict."""

    values: np.ndarray
    scale: float
    normalized_max: float
    lambda_values: np.ndarray
    h1: np.ndarray
    h2: np.ndarray


def _lambda_from_frames(fr1, fr2):
    num1 = _mixed(fr1.f1dot, fr1.f1ddot, fr1.df0)
    den1 = _mixed(fr2.f1dot, fr2.f1ddot, fr2.df1)
    num2 = _mixed(fr2.f1dot, fr2.df0, fr2.df1)
    den2 = _mixed(fr1.f1dot, fr1.df0, fr1.df1)
    for name, vals in (("(f2', f2'', d2)", den1), ("(f1', d0, d1)", den2)):
        if np.any(vals == 0.0):
            j = int(np.argmin(np.abs(vals)))
            raise DegeneracyError(f"mixed product {name} vanished at node {j}",
                                  node=j)
    return (num1 / den1) * (num2 * num2) / (den2 * den2)


def _h_from_frames(fr):
    den = _mixed(fr.f1dot, fr.df0, fr.df1)
    if np.any(den == 0.0):
        j = int(np.argmin(np.abs(den)))
        raise DegeneracyError(f"frame triple product vanished at node {j}",
                              node=j)
    num = _mixed(fr.f1dot, fr.df0dot, fr.df1) + _mixed(fr.f1dot, fr.df0, fr.df1dot)
    return num / den


def chi_from_frames(fr1, fr2, dx, span):
    """chi evaluated from the two interior frame fields of a 3-ribbon window."""
    lam = _lambda_from_frames(fr1, fr2)
    h1 = _h_from_frames(fr1)
    h2 = _h_from_frames(fr2)
    lam_dot = numerics.derivative_samples(lam, dx, 1)
    values = lam_dot - (h2 - h1) * lam
    scale = max(
        float(np.max(np.abs(lam_dot))),
        float(np.max((np.abs(h1) + np.abs(h2)) * np.abs(lam))),
        float(np.max(np.abs(lam))) / span,
        _CHI_FLOOR,
    )
    return ChiResult(
        values=values,
        scale=scale,
        normalized_max=float(np.max(np.abs(values)) / scale),
        lambda_values=lam,
        h1=h1,
        h2=h2,
    )


def chi(surface3):
    """chi = Lambda' - (H_2 - H_1) Lambda with a scale-free normalized max.

    The normalization divides max |chi| by the magnitude of the terms that
    could have produced it (and by a Lambda-based floor so that surfaces with
    symmetric cancellations in both terms still read as flexible).
    """
    fr1, fr2 = _pair_frames(surface3)
    return chi_from_frames(fr1, fr2, surface3.dx, surface3.b - surface3.a)


@dataclass(frozen=True)
class PhiVariation:
    """Flexion rates of the two ruling inner products of a 3-ribbon surface:
    dphi1 = D<d0, d1> and dphi2 = D<d1, d2>, per node, under the canonical
    gauge of the first pair."""

    a: float
    b: float
    dphi1: np.ndarray
    dphi2: np.ndarray


def phi_variation(surface3):
    """DPhi fields of a 3-ribbon surface under the canonical first-pair gauge.

    dphi1 comes out of the pair-flexion solution directly (the sum of its
    two mixed-block scalars); dphi2 follows by the discrete shift.  At the
    start node dphi1 equals the frame mixed product (the canonical seed).
    """
    from . import system_a

    pair1 = surface3.subsurface(0, 2)
    frames = geometry.frame_field(pair1, 1)
    c = system_a.canonical_initial(frames.at(0))
    g = system_a.solve_system_a(pair1, c)
    dphi1 = g.values[:, 5] + g.values[:, 7]
    return PhiVariation(
        a=surface3.a,
        b=surface3.b,
        dphi1=dphi1,
        dphi2=lambda_field(surface3) * dphi1,
    )


def monodromy_check(surface3, node1, node2):
    """Residual of the two-point flexibility condition between two nodes.

    Returns |log Lambda(t2) - log Lambda(t1) + int_{t1}^{t2} (H_1 - H_2) dt|
    when Lambda stays positive; otherwise falls back to the multiplicative
    residual |Lambda(t2) e^{int H1} - Lambda(t1) e^{int H2}| / scale.
    """
    lam = lambda_field(surface3)
    h1 = h_field(surface3, 1)
    h2 = h_field(surface3, 2)
    dx = surface3.dx
    int_h1 = _segment_integral(h1, dx, node1, node2)
    int_h2 = _segment_integral(h2, dx, node1, node2)
    if np.all(lam > 0.0):
        return abs(
            float(np.log(lam[node2]) - np.log(lam[node1]) + int_h1 - int_h2)
        )
    lhs = lam[node2] * np.exp(int_h1)
    rhs = lam[node1] * np.exp(int_h2)
    scale = max(abs(lhs), abs(rhs), _CHI_FLOOR)
    return abs(float(lhs - rhs)) / scale


@dataclass(frozen=True)
class NormalizedSurface:
    """The 3-ribbon surface rescaled so both frame mixed products are 1."""

    surface: geometry.SampledSurface

    def simplified_lambda(self):
        """Lambda on the normalized surface, (w1', w1'', dw0) / (w2', w2'', dw2)."""
        fr1, fr2 = _pair_frames(self.surface)
        return _mixed(fr1.f1dot, fr1.f1ddot, fr1.df0) / _mixed(
            fr2.f1dot, fr2.f1ddot, fr2.df1)

    def simplified_h(self, i):
        """H_i on the normalized surface, -(w_i'', dw_{i-1}, dw_i)."""
        fr = geometry.frame_field(self.surface, i)
        return -_mixed(fr.f1ddot, fr.df0, fr.df1)

    def mixed_products(self):
        fr1, fr2 = _pair_frames(self.surface)
        return fr1.triple(), fr2.triple()


def normalize_w(surface3):
    """Move the outer curves along their rulings so that the two frame mixed
    products become identically 1:

      w0 = f1 - d0 / (f1', d0, d1),  w1 = f1,  w2 = f2,
      w3 = f2 + d2 / (f2', d1, d2).
    """
    fr1, fr2 = _pair_frames(surface3)
    s1 = fr1.triple()
    s2 = fr2.triple()
    for name, vals in (("(f1', d0, d1)", s1), ("(f2', d1, d2)", s2)):
        if np.any(vals == 0.0):
            j = int(np.argmin(np.abs(vals)))
            raise DegeneracyError(f"mixed product {name} vanished at node {j}",
                                  node=j)
    f1 = surface3.curves[1].samples
    f2 = surface3.curves[2].samples
    w0 = f1 - fr1.df0 / s1[:, None]
    w3 = f2 + fr2.df1 / s2[:, None]
    normalized = geometry.SampledSurface.from_arrays(
        surface3.a, surface3.b, [w0, f1, f2, w3])
    result = NormalizedSurface(normalized)
    p1, p2 = result.mixed_products()
    worst = max(float(np.max(np.abs(p1 - 1.0))), float(np.max(np.abs(p2 - 1.0))))
    if worst > 1e-8:
        raise DegeneracyError(
            f"normalization failed: frame mixed product deviates by {worst:.2e}")
    return result


def higher_order_chi(surface3, trajectory, m):
    """Normalized max of the m-th lambda-derivative of chi along a flexion
    trajectory, by central finite differences over the frames.

    A flexible surface must keep every derivative of chi at zero along its
    flexion; this is the numerical form of that necessity chain.  chi is
    evaluated from the trajectory's reduced states when available (fewer
    compounded stencils, so less amplified rounding noise in the
    differences).
    """
    if not 1 <= m <= 3:
        raise ValueError("m must be 1, 2 or 3")
    frames = trajectory.surfaces
    if frames and frames[0].ribbons != 3:
        raise TrajectoryError("higher-order chi needs a 3-ribbon trajectory")
    width = {1: 1, 2: 1, 3: 2}[m]
    if len(frames) < 2 * width + 1:
        raise TrajectoryError(
            f"trajectory has {len(frames)} frames; the order-{m} stencil "
            f"needs at least {2 * width + 1}")
    dlam = trajectory.lambdas[1] - trajectory.lambdas[0]
    if getattr(trajectory, "states", None):
        from .flexion import _window_frames

        results = [
            chi_from_frames(_window_frames(s, 1), _window_frames(s, 2),
                            s.dx, s.b - s.a)
            for s in trajectory.states
        ]
    else:
        results = [chi(f) for f in frames]
    chis = np.stack([r.values for r in results])
    scale = max(r.scale for r in results)
    if m == 1:
        diffs = (chis[2:] - chis[:-2]) / (2.0 * dlam)
    elif m == 2:
        diffs = (chis[2:] - 2.0 * chis[1:-1] + chis[:-2]) / dlam**2
    else:
        diffs = (chis[4:] - 2.0 * chis[3:-1] + 2.0 * chis[1:-3] - chis[:-4]) / (
            2.0 * dlam**3)
    return float(np.max(np.abs(diffs)) / scale)


@dataclass(frozen=True)
class FlexReport:
    """Flexibility verdict for one 3-ribbon window."""

    first_curve: int
    lambda_values: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    chi_values: np.ndarray
    chi_normalized_max: float
    monodromy_residual: float
    tol_chi: float
    verdict: str  # flexible | rigid | indeterminate
    note: str = ""


@dataclass(frozen=True)
class NRibbonReport:
    """Per-window reports plus the AND-aggregated verdict."""

    triples: list
    verdict: str

    def worst_chi(self):
        vals = [t.chi_normalized_max for t in self.triples
                if t.verdict != "indeterminate"]
        return max(vals) if vals else float("nan")


def window_report(surface3, first_curve=0, tol_chi=None):
    """chi + monodromy verdict for one 3-ribbon surface."""
    tol = default_tol_chi() if tol_chi is None else tol_chi
    try:
        geometry.require_margin(surface3, MARGIN_THRESHOLD)
        result = chi(surface3)
        residual = monodromy_check(surface3, 0, surface3.n_nodes - 1)
    except DegeneracyError as err:
        n = surface3.n_nodes
        return FlexReport(
            first_curve=first_curve,
            lambda_values=np.full(n, np.nan),
            h1=np.full(n, np.nan),
            h2=np.full(n, np.nan),
            chi_values=np.full(n, np.nan),
            chi_normalized_max=float("nan"),
            monodromy_residual=float("nan"),
            tol_chi=tol,
            verdict="indeterminate",
            note=str(err),
        )
    verdict = "flexible" if result.normalized_max <= tol else "rigid"
    return FlexReport(
        first_curve=first_curve,
        lambda_values=result.lambda_values,
        h1=result.h1,
        h2=result.h2,
        chi_values=result.values,
        chi_normalized_max=result.normalized_max,
        monodromy_residual=residual,
        tol_chi=tol,
        verdict=verdict,
    )


def nribbon_infinitesimal_report(surface, tol_chi=None):
    """Run the 3-ribbon criteria on every consecutive window of an n-ribbon
    surface and AND the verdicts."""
    if surface.ribbons < 3:
        raise ValueError("the reduction needs at least 3 ribbons")
    reports = []
    for first in range(surface.ribbons - 2):
        window = surface.subsurface(first, first + 3)
        reports.append(window_report(window, first_curve=first, tol_chi=tol_chi))
    if any(r.verdict == "indeterminate" for r in reports):
        overall = "indeterminate"
    elif all(r.verdict == "flexible" for r in reports):
        overall = "flexible"
    else:
        overall = "rigid"
    return NRibbonReport(triples=reports, verdict=overall)
