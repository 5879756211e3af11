"""Finite isometric flexions: trajectory integration and propagation.

The flexion flow advances the reduced surface state (middle-curve tangent
plus all rulings) by a classical 4th-order one-step method in the deformation
parameter.  Each rate evaluation solves the infinitesimal-flexion system on
every consecutive ribbon pair; pairs beyond the first inherit their initial
data through the junction conditions (ruling length, tangent-ruling angle,
and the discrete-shift relation for the variation of <d_{k-1}, d_k>).
"""

import os
from dataclasses import dataclass, replace

import numpy as np

from . import geometry, numerics, system_a
from .errors import DegeneracyError, RigidityError, TrajectoryError
from .geometry import MARGIN_THRESHOLD

_mixed = numerics.mixed


def default_tol_flex():
    """Target invariant drift for accepted trajectories; env-overridable."""
    return float(os.environ.get("RIBBONFLEX_TOL_FLEX", "1e-5"))


#: trajectories whose drift exceeds this multiple of tol_flex abort early
RIGIDITY_DRIFT_FACTOR = 100.0


@dataclass(frozen=True)
class FlexState:
    """Reduced coordinates of an n-ribbon surface with f1(a) pinned.

    data[0] holds the middle-curve tangent samples f1'; data[1 + k] holds
    ruling k.  Together with the anchor f1(a) they determine the surface.
    """

    a: float
    b: float
    anchor: np.ndarray  # (3,)
    data: np.ndarray  # (n + 1, N, 3)

    @classmethod
    def from_surface(cls, surface):
        rows = [surface.curves[1].derivative_samples(1)]
        rows.extend(surface.ruling(k) for k in range(surface.ribbons))
        return cls(
            a=surface.a,
            b=surface.b,
            anchor=surface.curves[1].samples[0].copy(),
            data=np.stack(rows),
        )

    @property
    def ribbons(self):
        return self.data.shape[0] - 1

    @property
    def n_nodes(self):
        return self.data.shape[1]

    @property
    def dx(self):
        return (self.b - self.a) / (self.n_nodes - 1)

    def f1dot(self):
        return self.data[0]

    def delta(self, k):
        return self.data[1 + k]

    def to_surface(self):
        """Rebuild curve positions: f1 by cumulative quadrature from the
        anchor, the rest by adding rulings."""
        f1 = self.anchor + numerics.cumulative_integral(self.data[0], self.dx)
        rows = [f1 - self.data[1], f1]
        for k in range(1, self.ribbons):
            rows.append(rows[-1] + self.data[k + 1])
        return geometry.SampledSurface.from_arrays(self.a, self.b, rows)

    def shifted(self, rate, step):
        return replace(self, data=self.data + step * rate)


def _window_frames(state, k):
    """FrameField of ribbon pair (k-1, k), middle curve k, from the state."""
    dx = state.dx
    f1dot = state.f1dot().copy()
    for j in range(1, k):
        f1dot += numerics.derivative_samples(state.delta(j), dx, 1)
    df0 = state.delta(k - 1)
    df1 = state.delta(k)
    return geometry.FrameField(
        a=state.a,
        b=state.b,
        f1dot=f1dot,
        f1ddot=numerics.derivative_samples(f1dot, dx, 1),
        df0=df0,
        df1=df1,
        df0dot=numerics.derivative_samples(df0, dx, 1),
        df1dot=numerics.derivative_samples(df1, dx, 1),
        i=k,
    )


def _junction_initial(prev_frames, frames, prev_tangent, dx):
    """Initial variation of ruling k at the start node, from the three junction
    conditions: preserved ruling length, preserved tangent-ruling product,
    and the discrete-shift relation for D<d_{k-1}, d_k>."""
    v1 = prev_tangent.d_f1dot[0] + numerics.derivative_samples(
        prev_tangent.d_df1, dx, 1)[0]
    v2 = prev_tangent.d_df1[0]

    lam = _window_lambda_at_start(prev_frames, frames)
    dphi_prev = float(
        prev_tangent.d_df0[0] @ prev_frames.df1[0]
        + prev_frames.df0[0] @ prev_tangent.d_df1[0]
    )
    m = np.stack([frames.df1[0], frames.f1dot[0], frames.df0[0]])
    rhs = np.array([
        0.0,
        -float(v1 @ frames.df1[0]),
        lam * dphi_prev - float(v2 @ frames.df1[0]),
    ])
    v3 = np.linalg.solve(m, rhs)
    return v1, v2, v3


def _window_lambda_at_start(prev_frames, frames):
    """Lambda of the 3-ribbon window (curves k-2 .. k+1) at the first node."""
    num1 = _mixed(prev_frames.f1dot[0], prev_frames.f1ddot[0], prev_frames.df0[0])
    den1 = _mixed(frames.f1dot[0], frames.f1ddot[0], frames.df1[0])
    num2 = _mixed(frames.f1dot[0], frames.df0[0], frames.df1[0])
    den2 = _mixed(prev_frames.f1dot[0], prev_frames.df0[0], prev_frames.df1[0])
    if den1 == 0.0 or den2 == 0.0:
        raise DegeneracyError("degenerate junction frame", node=0)
    return (num1 / den1) * (num2 * num2) / (den2 * den2)


def _state_rate(state, threshold=MARGIN_THRESHOLD):
    """The flexion vector field on the reduced state.

    Pair (0, 1) is solved with canonical-gauge initial data; each further
    pair inherits its initial data across the junction.  Returns an array
    shaped like state.data.
    """
    rate = np.empty_like(state.data)
    prev_frames = None
    prev_tangent = None
    for k in range(1, state.ribbons):
        frames = _window_frames(state, k)
        if k == 1:
            c = system_a.canonical_initial(frames.at(0))
        else:
            v1, v2, v3 = _junction_initial(prev_frames, frames, prev_tangent,
                                           state.dx)
            c = system_a.initial_g_from_vectors(v1, v2, v3, frames.at(0))
        values = system_a._solve_on_frames(frames, c, threshold)
        g = system_a.GField(a=state.a, b=state.b, values=values)
        tangent = system_a.variational_field(frames, g)
        if k == 1:
            rate[0] = tangent.d_f1dot
            rate[1] = tangent.d_df0
        rate[k + 1] = tangent.d_df1
        prev_frames, prev_tangent = frames, tangent
    return rate


@dataclass(frozen=True)
class FrameDrift:
    """Inner-geometry deviation of one frame from the start of a trajectory."""

    raw: dict
    normalized: dict

    def max_normalized(self):
        return max(self.normalized.values())

    @classmethod
    def zero(cls, reference):
        names = reference.families().keys()
        return cls(raw={n: 0.0 for n in names}, normalized={n: 0.0 for n in names})


def _frame_drift(reference, invariants, scale):
    degrees = geometry.InvariantField.FAMILY_DEGREE
    raw = reference.max_abs_difference(invariants)
    normalized = {
        name: value / max(scale, 1e-30) ** degrees[name]
        for name, value in raw.items()
    }
    return FrameDrift(raw=raw, normalized=normalized)


@dataclass(frozen=True)
class DriftSummary:
    """Per-family maxima of the drift over a whole trajectory."""

    raw: dict
    normalized: dict
    scale: float

    def max_normalized(self):
        return max(self.normalized.values())


@dataclass(frozen=True)
class FlexionTrajectory:
    """Surfaces along the deformation parameter, with drift diagnostics.

    Also keeps the reduced states the surfaces were rebuilt from; diagnostic
    quantities differentiated in lambda are less noisy when evaluated on the
    states directly.
    """

    lambdas: np.ndarray
    surfaces: list
    drift: list  # FrameDrift per frame; drift[0] is identically zero
    states: list = None
    truncated: bool = False
    truncation_reason: str = ""

    @property
    def last_valid_lambda(self):
        return float(self.lambdas[-1])

    def __len__(self):
        return len(self.surfaces)


def invariant_drift(trajectory):
    """Aggregate the per-frame drift records of a trajectory."""
    if not trajectory.surfaces:
        raise TrajectoryError("empty trajectory")
    scale = trajectory.surfaces[0].diameter()
    names = trajectory.drift[0].raw.keys()
    raw = {n: max(fr.raw[n] for fr in trajectory.drift) for n in names}
    normalized = {n: max(fr.normalized[n] for fr in trajectory.drift)
                  for n in names}
    return DriftSummary(raw=raw, normalized=normalized, scale=scale)


def _integrate(state, lambda_max, steps, drift_abort=None,
               threshold=MARGIN_THRESHOLD, input_surface=None):
    """RK4 flow of the flexion field with per-step drift monitoring.

    Degeneracy (or drift beyond drift_abort) mid-flight truncates the
    trajectory instead of raising; the initial frame must be sound.
    """
    surface0 = state.to_surface() if input_surface is None else input_surface
    reference = geometry.inner_geometry(surface0)
    scale = surface0.diameter()
    lambdas = [0.0]
    surfaces = [surface0]
    states = [state]
    drift = [FrameDrift.zero(reference)]
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if steps == 0 or lambda_max == 0.0:
        return FlexionTrajectory(np.array(lambdas), surfaces, drift, states)

    h = lambda_max / steps
    truncated = False
    reason = ""
    for step in range(steps):
        try:
            k1 = _state_rate(state, threshold)
            k2 = _state_rate(state.shifted(k1, 0.5 * h), threshold)
            k3 = _state_rate(state.shifted(k2, 0.5 * h), threshold)
            k4 = _state_rate(state.shifted(k3, h), threshold)
        except DegeneracyError as err:
            truncated, reason = True, f"degeneracy: {err}"
            break
        state = state.shifted(k1 + 2.0 * k2 + 2.0 * k3 + k4, h / 6.0)
        surface = state.to_surface()
        frame_drift = _frame_drift(reference, geometry.inner_geometry(surface),
                                   scale)
        if drift_abort is not None and frame_drift.max_normalized() > drift_abort:
            truncated = True
            reason = (f"drift {frame_drift.max_normalized():.3e} exceeded "
                      f"{drift_abort:.3e}: surface behaves rigidly")
            break
        lambdas.append((step + 1) * h)
        surfaces.append(surface)
        states.append(state)
        drift.append(frame_drift)
    return FlexionTrajectory(np.array(lambdas), surfaces, drift, states,
                             truncated=truncated, truncation_reason=reason)


def flex_2ribbon(surface, lambda_max, steps, threshold=MARGIN_THRESHOLD):
    """One-parameter finite flexion of a 2-ribbon surface.

    lambda_max may be negative to run the flow backwards (the flexion space
    is one-dimensional, so this is the full set of deformations up to
    isometry).
    """
    if surface.ribbons != 2:
        raise ValueError("flex_2ribbon expects a 2-ribbon surface")
    geometry.require_margin(surface, threshold)
    return _integrate(FlexState.from_surface(surface), lambda_max, steps,
                      threshold=threshold, input_surface=surface)


def junction_alpha(surface3, node=0):
    """Scaling of the canonical cross-product seed for the second ribbon pair:

      alpha = [(f1', f1'', d0) / (f2', f2'', d2)] *
              [(f2', d2, d1) / (f1', d0, d1)]   at the given node.
    """
    if surface3.ribbons != 3:
        raise ValueError("junction_alpha expects a 3-ribbon surface")
    fr1 = geometry.frame_field(surface3, 1)
    fr2 = geometry.frame_field(surface3, 2)
    j = node
    den1 = _mixed(fr2.f1dot[j], fr2.f1ddot[j], fr2.df1[j])
    den2 = _mixed(fr1.f1dot[j], fr1.df0[j], fr1.df1[j])
    if den1 == 0.0 or den2 == 0.0:
        raise DegeneracyError("vanishing junction denominator", node=j)
    num1 = _mixed(fr1.f1dot[j], fr1.f1ddot[j], fr1.df0[j])
    num2 = _mixed(fr2.f1dot[j], fr2.df1[j], fr2.df0[j])
    return float((num1 / den1) * (num2 / den2))


@dataclass(frozen=True)
class JunctionData:
    """Seed scalings for every interior ribbon-pair boundary of a surface.

    alphas[k] scales the cross-product seed of the pair starting at curve
    k + 1; finite and nonzero on generic flexible surfaces.
    """

    node: int
    alphas: np.ndarray


def junction_data(surface, node=0):
    """junction_alpha of every consecutive 3-ribbon window."""
    if surface.ribbons < 3:
        raise ValueError("junction data needs at least 3 ribbons")
    alphas = [
        junction_alpha(surface.subsurface(first, first + 3), node)
        for first in range(surface.ribbons - 2)
    ]
    return JunctionData(node=node, alphas=np.array(alphas))


def propagate_flexion(surface, lambda_max, steps, tol_chi=None, tol_flex=None,
                      threshold=MARGIN_THRESHOLD):
    """Flex an n-ribbon surface by propagating the pair flexion across all
    junctions.

    Every consecutive 3-ribbon window must first pass the infinitesimal
    flexibility test; rigid windows are rejected by name.  Because passing
    the infinitesimal test does not certify finite flexibility, the flow
    also aborts (with a truncation flag) if the invariant drift blows up.
    """
    from . import flexibility

    geometry.require_margin(surface, threshold)
    if surface.ribbons >= 3:
        tol = flexibility.default_tol_chi() if tol_chi is None else tol_chi
        for first in range(surface.ribbons - 2):
            window = surface.subsurface(first, first + 3)
            residual = flexibility.chi(window).normalized_max
            if residual > tol:
                raise RigidityError(
                    f"3-ribbon window at curves {first}..{first + 3} is not "
                    f"infinitesimally flexible: normalized max |chi| = "
                    f"{residual:.3e} > {tol:.1e}",
                    first_curve=first,
                    residual=residual,
                )
    abort = RIGIDITY_DRIFT_FACTOR * (default_tol_flex() if tol_flex is None
                                     else tol_flex)
    return _integrate(FlexState.from_surface(surface), lambda_max, steps,
                      drift_abort=abort, threshold=threshold,
                      input_surface=surface)
