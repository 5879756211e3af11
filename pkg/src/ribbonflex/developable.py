"""Developable ribbons: detection, ruling coefficients, and the angle law.

A ribbon is developable when its ruling lies in the span of the two adjacent
tangents.  The ruling coefficients then turn the transport rate H_i into the
closed form 1/b_i - 1/a_{i-1}, and along a flexion of a developable 2-ribbon
surface the cosine of the angle between the rulings changes affinely in a
suitably normalized deformation parameter.
"""

from dataclasses import dataclass

import numpy as np

from . import geometry, numerics
from .errors import DegeneracyError, DegenerateAnchorError, ParallelTangentsError

#: scale-free determinant bound under which a ribbon counts as developable
TOL_DEV = 1e-7

_mixed = numerics.mixed


def _ribbon_tangents(surface, i):
    if not 0 <= i < surface.ribbons:
        raise ValueError(f"ribbon {i} out of range")
    ti = surface.curves[i].derivative_samples(1)
    tj = surface.curves[i + 1].derivative_samples(1)
    return ti, tj


def dependency_residual(surface, i):
    """Per-node scale-free |det(f_i', delta_i, f_{i+1}')|."""
    ti, tj = _ribbon_tangents(surface, i)
    ruling = surface.ruling(i)
    norms = (
        np.linalg.norm(ti, axis=1)
        * np.linalg.norm(ruling, axis=1)
        * np.linalg.norm(tj, axis=1)
    )
    if np.any(norms == 0.0):
        j = int(np.argmin(norms))
        raise DegeneracyError(f"zero-length vector on ribbon {i} at node {j}",
                              curve=i, node=j)
    return np.abs(_mixed(ti, ruling, tj)) / norms


def is_developable(surface, i, tol=TOL_DEV):
    """Verdict plus the max scale-free dependency residual of ribbon i."""
    residual = float(np.max(dependency_residual(surface, i)))
    return residual <= tol, residual


@dataclass(frozen=True)
class RulingCoefficients:
    """Per-node decomposition delta_i = a f_i' + b f_{i+1}' with the
    least-squares residual of the fit."""

    ribbon: int
    a: np.ndarray
    b: np.ndarray
    residual: np.ndarray

    def max_residual(self):
        return float(np.max(self.residual))


def ruling_coefficients(surface, i, parallel_tol=1e-9):
    """Least-squares fit of each ruling in the adjacent-tangent span.

    Parallel tangents make the decomposition non-unique and are rejected
    (the cylinder case).  A non-developable ribbon is not an error; it just
    reports a large residual.
    """
    ti, tj = _ribbon_tangents(surface, i)
    ruling = surface.ruling(i)
    cross = np.cross(ti, tj)
    sin_angle = np.linalg.norm(cross, axis=1) / (
        np.linalg.norm(ti, axis=1) * np.linalg.norm(tj, axis=1)
    )
    if np.any(sin_angle < parallel_tol):
        j = int(np.argmin(sin_angle))
        raise ParallelTangentsError(
            f"tangents of curves {i} and {i + 1} are parallel at node {j}; "
            "the ruling decomposition is not unique",
            curve=i, node=j,
        )
    # normal equations of the per-node 3x2 system [ti tj] @ (a, b) = ruling
    g11 = numerics.dot(ti, ti)
    g12 = numerics.dot(ti, tj)
    g22 = numerics.dot(tj, tj)
    r1 = numerics.dot(ti, ruling)
    r2 = numerics.dot(tj, ruling)
    det = g11 * g22 - g12 * g12
    a = (g22 * r1 - g12 * r2) / det
    b = (g11 * r2 - g12 * r1) / det
    fitted = a[:, None] * ti + b[:, None] * tj
    residual = np.linalg.norm(fitted - ruling, axis=1)
    return RulingCoefficients(ribbon=i, a=a, b=b, residual=residual)


def h_developable(surface, i, node):
    """Transport rate H_i from the ruling coefficients of the two adjacent
    developable ribbons: H_i = 1/b_i - 1/a_{i-1}."""
    if not 1 <= i <= surface.ribbons - 1:
        raise ValueError(f"curve {i} is not interior")
    prev = ruling_coefficients(surface, i - 1)
    here = ruling_coefficients(surface, i)
    a_prev = prev.a[node]
    b_here = here.b[node]
    if a_prev == 0.0 or b_here == 0.0:
        raise DegeneracyError(
            f"ruling coefficient vanished at node {node} "
            f"(a_{i - 1} = {a_prev:.3e}, b_{i} = {b_here:.3e})",
            node=node,
        )
    return float(1.0 / b_here - 1.0 / a_prev)


def unit_normalize(ribbon2):
    """Rescale both rulings to unit length, keeping the middle curve:
    the inner product of the new rulings is exactly cos(angle)."""
    if ribbon2.ribbons != 2:
        raise ValueError("unit_normalize expects a 2-ribbon surface")
    f1 = ribbon2.curves[1].samples
    d0 = ribbon2.ruling(0)
    d1 = ribbon2.ruling(1)
    n0 = np.linalg.norm(d0, axis=1)
    n1 = np.linalg.norm(d1, axis=1)
    if np.any(n0 == 0.0) or np.any(n1 == 0.0):
        raise DegeneracyError("zero-length ruling")
    d0u = d0 / n0[:, None]
    d1u = d1 / n1[:, None]
    return geometry.SampledSurface.from_arrays(
        ribbon2.a, ribbon2.b, [f1 - d0u, f1, f1 + d1u])


def cos_alpha(surface):
    """cos of the angle between the two rulings of a 2-ribbon surface."""
    d0 = surface.ruling(0)
    d1 = surface.ruling(1)
    return numerics.dot(d0, d1) / (
        np.linalg.norm(d0, axis=1) * np.linalg.norm(d1, axis=1))


@dataclass(frozen=True)
class AngleTrace:
    """cos(angle) over nodes x frames, the reparameterized flexion parameter,
    the per-node affine fits, and the worst normalized fit residual."""

    gammas: np.ndarray  # (K,)
    cos_alpha: np.ndarray  # (K, N)
    intercept: np.ndarray  # (N,)
    slope: np.ndarray  # (N,)
    affinity_defect: float


def cos_alpha_linearity(trajectory, anchor_node=0):
    """Fit cos(angle(t)) affinely in the flexion parameter normalized at one
    anchor node, over all frames of a developable 2-ribbon flexion.

    The parameter gamma is chosen so that cos(angle(anchor)) is exactly
    affine in it; the reported defect is the max over nodes of the fit
    residual relative to the local range of cos(angle).
    """
    frames = trajectory.surfaces
    if len(frames) < 3:
        raise ValueError("need at least 3 frames to test affinity")
    cos_all = np.stack([cos_alpha(s) for s in frames])  # (K, N)
    anchor = cos_all[:, anchor_node]
    swing = anchor[-1] - anchor[0]
    if abs(swing) < 1e-12:
        raise DegenerateAnchorError(
            f"cos(angle) does not vary at anchor node {anchor_node}; "
            "cannot normalize the flexion parameter")
    steps = np.diff(anchor)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise DegenerateAnchorError(
            f"cos(angle) is not monotone at anchor node {anchor_node}")
    gammas = (anchor - anchor[0]) / swing
    # per-node affine least squares against gamma
    k = len(gammas)
    gmean = gammas.mean()
    gvar = float(np.sum((gammas - gmean) ** 2))
    slope = (gammas - gmean) @ (cos_all - cos_all.mean(axis=0)) / gvar
    intercept = cos_all.mean(axis=0) - slope * gmean
    fitted = intercept[None, :] + np.outer(gammas, slope)
    residual = np.max(np.abs(fitted - cos_all), axis=0)
    local_range = np.maximum(
        cos_all.max(axis=0) - cos_all.min(axis=0), 1e-12)
    defect = float(np.max(residual / local_range))
    return AngleTrace(
        gammas=gammas,
        cos_alpha=cos_all,
        intercept=intercept,
        slope=slope,
        affinity_defect=defect,
    )
