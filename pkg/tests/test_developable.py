"""Developable detection, ruling coefficients, the H shortcut, angle law."""

import numpy as np
import pytest

from conftest import transform
from ribbonflex import generate
from ribbonflex.developable import (
    cos_alpha,
    cos_alpha_linearity,
    dependency_residual,
    h_developable,
    is_developable,
    ruling_coefficients,
    unit_normalize,
)
from ribbonflex.errors import DegenerateAnchorError, ParallelTangentsError
from ribbonflex.flexibility import h_field
from ribbonflex.flexion import flex_2ribbon, invariant_drift
from ribbonflex.geometry import SampledSurface, inner_geometry


def cylinder(n_curves=3, n_nodes=51):
    t = np.linspace(0, 1, n_nodes)
    base = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    rows = [base + [0, 0, float(i)] for i in range(n_curves)]
    return SampledSurface.from_arrays(0.0, 1.0, rows)


class TestIsDevelopable:
    def test_cylinder_is_developable(self):
        verdict, residual = is_developable(cylinder(), 0)
        assert verdict
        assert residual < 1e-12

    def test_dev_generator_both_ribbons(self, dev2):
        for i in (0, 1):
            verdict, residual = is_developable(dev2, i)
            assert verdict
            assert residual <= 1e-8

    def test_random_surface_is_not(self, rand2):
        verdict, residual = is_developable(rand2, 0)
        assert not verdict
        assert residual > 1e-3


class TestRulingCoefficients:
    def test_tangent_aligned_ruling(self):
        # ruling identically equal to the lower tangent: a = 1, b = 0
        # (a curved lower curve keeps the two tangents independent)
        t = np.linspace(0, 1, 21)
        base = np.stack([t, t**2, 0.3 * t**3], axis=1)
        tangent = np.stack([np.ones_like(t), 2 * t, 0.9 * t**2], axis=1)
        upper = base + tangent
        far = upper + np.array([3.0, 0.1, 1.0])
        surf = SampledSurface.from_arrays(0.0, 1.0, [base, upper, far])
        coeffs = ruling_coefficients(surf, 0)
        assert np.allclose(coeffs.a, 1.0, atol=1e-6)
        assert np.allclose(coeffs.b, 0.0, atol=1e-6)

    def test_generator_constants_recovered(self, dev2):
        c0 = ruling_coefficients(dev2, 0)
        c1 = ruling_coefficients(dev2, 1)
        assert np.allclose(c0.a, 2.0, atol=1e-6)
        assert np.allclose(c0.b, -1.0, atol=1e-6)
        assert np.allclose(c1.a, 3.0, atol=1e-6)
        assert np.allclose(c1.b, -2.0, atol=1e-6)
        assert c0.max_residual() < 1e-8

    def test_scale_invariant(self, dev2):
        scaled = transform(dev2, scale=2.5)
        c = ruling_coefficients(scaled, 0)
        assert np.allclose(c.a, 2.0, atol=1e-6)
        assert np.allclose(c.b, -1.0, atol=1e-6)

    def test_cylinder_rejected(self):
        with pytest.raises(ParallelTangentsError) as err:
            ruling_coefficients(cylinder(), 0)
        assert err.value.node is not None


class TestHShortcut:
    def test_default_generator_has_constant_rate(self, dev2):
        # the default ruling ODE constants are a0 = 2 and b1 = -2, so the
        # transport rate is 1/(-2) - 1/2 = -1 at every node
        for j in (0, 50, 137, 200):
            assert h_developable(dev2, 1, j) == pytest.approx(-1.0, abs=1e-8)

    def test_equal_coefficients_cancel(self, dev2):
        # 1/b - 1/a vanishes iff the two coefficients agree
        from ribbonflex import generate

        surf = generate("DEV", ribbons=2, params={"a0": 1.7, "b1": 1.7})
        assert h_developable(surf, 1, 100) == pytest.approx(0.0, abs=1e-8)

    def test_matches_general_formula_on_dev(self, dev2):
        general = h_field(dev2, 1)
        errors = [abs(h_developable(dev2, 1, j) - general[j])
                  for j in range(dev2.n_nodes)]
        assert max(errors) <= 1e-6

    def test_developable_rev_has_parallel_tangent_node(self, rev2):
        # the revolution generator is developable by construction (equal
        # z-rates make tangent differences parallel to the rulings), but at
        # the node where the profile slope vanishes all tangents align, so
        # the coefficient decomposition is rejected as non-unique
        assert is_developable(rev2, 0)[0]
        with pytest.raises(ParallelTangentsError) as err:
            h_developable(rev2, 1, 50)
        assert err.value.node == 0


class TestUnitNormalize:
    def test_unit_rulings(self, dev2):
        unit = unit_normalize(dev2)
        assert np.allclose(np.linalg.norm(unit.ruling(0), axis=1), 1.0,
                           atol=1e-12)
        assert np.allclose(np.linalg.norm(unit.ruling(1), axis=1), 1.0,
                           atol=1e-12)

    def test_identity_on_unit_rulings(self, dev2):
        unit = unit_normalize(dev2)
        again = unit_normalize(unit)
        assert np.allclose(again.positions(), unit.positions(), atol=1e-15)

    def test_scaling_divides(self):
        t = np.linspace(0, 1, 21)
        mid = np.stack([t, t**2, 0 * t], axis=1)
        surf = SampledSurface.from_arrays(
            0.0, 1.0, [mid - [0, 3.0, 0], mid, mid + [0, 0, 3.0]])
        unit = unit_normalize(surf)
        assert np.allclose(unit.ruling(0), surf.ruling(0) / 3.0, atol=1e-15)

    def test_ruling_product_is_cos_alpha(self, dev2):
        unit = unit_normalize(dev2)
        phi = np.einsum("ij,ij->i", unit.ruling(0), unit.ruling(1))
        assert np.allclose(phi, cos_alpha(dev2), atol=1e-14)


@pytest.fixture(scope="module")
def dev_trajectory(dev2):
    return flex_2ribbon(dev2, 0.3, 30)


class TestCosAlphaLinearity:
    def test_affinity_defect_small(self, dev_trajectory):
        trace = cos_alpha_linearity(dev_trajectory)
        assert trace.affinity_defect <= 1e-4
        assert np.all(np.abs(trace.cos_alpha) <= 1.0 + 1e-12)

    def test_anchor_choice_insensitive(self, dev_trajectory):
        at_a = cos_alpha_linearity(dev_trajectory, anchor_node=0)
        at_b = cos_alpha_linearity(dev_trajectory,
                                   anchor_node=len(at_a.cos_alpha[0]) - 1)
        floor = 1e-9
        ratio = (max(at_b.affinity_defect, floor)
                 / max(at_a.affinity_defect, floor))
        assert 0.5 <= ratio <= 2.0

    def test_rigid_motion_trajectory_rejected_at_anchor(self, dev2):
        from conftest import rotation_matrix
        from ribbonflex.flexion import FlexionTrajectory, FrameDrift
        from ribbonflex.geometry import inner_geometry as ig

        ref = ig(dev2)
        frames = [dev2]
        for angle in (0.1, 0.2):
            rot = rotation_matrix([0, 0, 1], angle)
            frames.append(transform(dev2, rotation=rot))
        trajectory = FlexionTrajectory(
            np.array([0.0, 0.1, 0.2]), frames,
            [FrameDrift.zero(ref)] * 3)
        # isometries keep every angle fixed, so the anchor cannot move
        with pytest.raises(DegenerateAnchorError):
            cos_alpha_linearity(trajectory)

    def test_normalized_surface_flexes_with_same_drift_bound(self, dev2):
        trajectory = flex_2ribbon(dev2, 0.3, 30)
        bound = 10 * max(invariant_drift(trajectory).max_normalized(), 1e-12)
        ref = inner_geometry(unit_normalize(dev2))
        scale = dev2.diameter() ** 2
        worst = 0.0
        for frame in trajectory.surfaces[1:]:
            diff = ref.max_abs_difference(inner_geometry(unit_normalize(frame)))
            worst = max(worst, max(diff.values()) / scale)
        assert worst <= bound
