"""Geometry layer: curves, frames, invariants, genericity."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import rotation_matrix, transform
from ribbonflex import (
    DegeneracyError,
    SampledCurve,
    SampledSurface,
    derivative,
    frame_at,
    generate,
    genericity_margin,
    inner_geometry,
)
from ribbonflex.geometry import frame_field, require_margin


def line_surface(offsets, a=0.0, b=1.0, n=21):
    t = np.linspace(a, b, n)
    curves = []
    for off in offsets:
        samples = np.stack([t, np.zeros_like(t), np.zeros_like(t)], axis=1)
        curves.append(SampledCurve(a, b, samples + np.asarray(off)))
    return SampledSurface(tuple(curves))


class TestSampledCurve:
    def test_rejects_short_grid(self):
        with pytest.raises(ValueError):
            SampledCurve(0.0, 1.0, np.zeros((5, 3)))

    def test_rejects_reversed_grid(self):
        with pytest.raises(ValueError):
            SampledCurve(1.0, 0.0, np.zeros((12, 3)))

    def test_rejects_nonfinite(self):
        samples = np.zeros((12, 3))
        samples[3, 1] = np.nan
        with pytest.raises(ValueError):
            SampledCurve(0.0, 1.0, samples)

    def test_grid_nodes(self):
        c = SampledCurve(0.0, 2.0, np.zeros((11, 3)))
        assert c.dx == pytest.approx(0.2)
        assert np.allclose(c.grid, np.linspace(0, 2, 11))


class TestSampledSurface:
    def test_requires_shared_grid(self):
        c1 = SampledCurve(0.0, 1.0, np.zeros((11, 3)))
        c2 = SampledCurve(0.0, 2.0, np.zeros((11, 3)))
        with pytest.raises(ValueError):
            SampledSurface((c1, c2))

    def test_subsurface(self, rev4):
        sub = rev4.subsurface(1, 3)
        assert sub.ribbons == 2
        assert np.array_equal(sub.curves[0].samples, rev4.curves[1].samples)


class TestDerivative:
    def test_constant_curve(self):
        t = np.linspace(0, 1, 11)
        c = SampledCurve(0.0, 1.0, np.tile([1.0, 2.0, 3.0], (11, 1)))
        d = derivative(c, 1)
        assert np.allclose(d.samples, 0.0, atol=1e-13)

    def test_polynomial_exact(self):
        t = np.linspace(0, 1, 21)
        c = SampledCurve(0.0, 1.0, np.stack([t, t**2, t**3], axis=1))
        d = derivative(c, 1)
        assert np.allclose(d.samples[10], [1.0, 1.0, 0.75], atol=1e-12)

    def test_second_derivative_of_sine(self):
        t = np.linspace(0, 1, 201)
        c = SampledCurve(0.0, 1.0,
                         np.stack([np.sin(t), np.cos(t), 0 * t], axis=1))
        d = derivative(c, 2)
        j = 100  # t = 0.5
        # independent oracle: analytic second derivative
        assert np.allclose(d.samples[j], [-np.sin(0.5), -np.cos(0.5), 0.0],
                           atol=1e-8)


class TestFrames:
    def test_translated_copies_have_constant_ruling(self):
        surf = line_surface([(0, 0, 0), (0, 1, 0), (0, 1.5, 1.0)])
        for j in (0, 7, 20):
            fr = frame_at(surf, 1, j)
            assert np.allclose(fr.df0, [0, 1, 0], atol=0)

    def test_delta_fields_bit_equal_raw_differences(self, rev2):
        fr = frame_field(rev2, 1)
        raw0 = rev2.curves[1].samples - rev2.curves[0].samples
        raw1 = rev2.curves[2].samples - rev2.curves[1].samples
        assert np.array_equal(fr.df0, raw0)
        assert np.array_equal(fr.df1, raw1)

    def test_rev_rulings_equal_norms(self, rev2):
        fr = frame_at(rev2, 1, 0)
        # rotational symmetry of the generator
        assert np.linalg.norm(fr.df0) == pytest.approx(
            np.linalg.norm(fr.df1), rel=1e-10)

    def test_straight_middle_curve_has_zero_curvature(self):
        surf = line_surface([(0, -1, 0.3), (0, 0, 0), (0.0, 1.1, 0.4)])
        fr = frame_at(surf, 1, 5)
        assert np.allclose(fr.f1ddot, 0.0, atol=1e-10)

    def test_interior_index_required(self, rev2):
        with pytest.raises(ValueError):
            frame_at(rev2, 0, 0)
        with pytest.raises(ValueError):
            frame_at(rev2, 2, 0)


class TestInnerGeometry:
    def test_unit_speed_line(self):
        surf = line_surface([(0, 0, 0), (0, 1, 0), (0, 2, 0.5)])
        inv = inner_geometry(surf)
        assert np.allclose(inv.curve_speed, 1.0, atol=1e-12)

    def test_orthogonal_configuration(self):
        surf = line_surface([(0, -1, 0), (0, 0, 0), (0, 0, 1)])
        inv = inner_geometry(surf)
        # tangent is x, rulings are y and z: all mixed products vanish
        assert np.allclose(inv.tangent_ruling_prev, 0.0, atol=1e-12)
        assert np.allclose(inv.tangent_ruling_next, 0.0, atol=1e-12)

    def test_rev_symmetry_of_tangent_products(self, rev2):
        inv = inner_geometry(rev2)
        assert np.allclose(inv.tangent_tangent[0], inv.tangent_tangent[1],
                           atol=1e-10)

    def test_invariant_under_isometry(self, rand2):
        rot = rotation_matrix([1, 2, 3], 0.83)
        moved = transform(rand2, rotation=rot, translation=[4, -1, 2])
        base = inner_geometry(rand2)
        other = inner_geometry(moved)
        scale = rand2.diameter() ** 2
        for name, diff in base.max_abs_difference(other).items():
            assert diff / scale < 1e-12, name

    @settings(max_examples=25, deadline=None)
    @given(
        axis=st.tuples(*([st.floats(-1, 1)] * 3)).filter(
            lambda v: sum(x * x for x in v) > 1e-4),
        angle=st.floats(-3.1, 3.1),
        shift=st.tuples(*([st.floats(-5, 5)] * 3)),
    )
    def test_invariance_property(self, axis, angle, shift):
        surface = generate("CONE", ribbons=2, grid=(0.0, 1.0, 21))
        moved = transform(surface, rotation=rotation_matrix(axis, angle),
                          translation=shift)
        base = inner_geometry(surface)
        other = inner_geometry(moved)
        scale = surface.diameter() ** 2
        assert max(base.max_abs_difference(other).values()) / scale < 1e-12

    def test_eleven_functions_for_one_pair(self, rev2):
        inv = inner_geometry(rev2)
        rows = sum(arr.shape[0] for arr in inv.families().values())
        assert rows == 11


def test_reference_basis_is_standard_axes():
    from ribbonflex.geometry import REFERENCE_BASIS

    assert np.array_equal(REFERENCE_BASIS, np.eye(3))


class TestGenericityMargin:
    def test_orthonormal_triple_margin_one(self):
        surf = line_surface([(0, -1, 0), (0, 0, 0), (0, 0, 1)])
        assert genericity_margin(surf) == pytest.approx(1.0, abs=1e-12)

    def test_coplanar_margin_zero(self):
        surf = line_surface([(0, -1, 0), (0, 0, 0), (1, 1, 0)])
        assert genericity_margin(surf) == pytest.approx(0.0, abs=1e-12)

    def test_cone_margin_closed_form(self):
        surf = generate("CONE", ribbons=2, grid=(0.0, 1.0, 51))
        # oracle: the determinant reduces to -r1 (dr0 dz1 - dr1 dz0)
        r = [1.0, 1.3, 1.6]
        z = [0.0, 1.2, 2.8]
        det = -r[1] * ((r[1] - r[0]) * (z[2] - z[1]) - (r[2] - r[1]) * (z[1] - z[0]))
        fr = frame_at(surf, 1, 17)
        norms = (np.linalg.norm(fr.f1dot) * np.linalg.norm(fr.df0)
                 * np.linalg.norm(fr.df1))
        assert genericity_margin(surf) == pytest.approx(abs(det) / norms,
                                                        rel=1e-6)
        assert genericity_margin(surf) > 0

    def test_zero_length_vector_names_node(self):
        t = np.linspace(0, 1, 11)
        mid = np.stack([t, t**2, 0 * t], axis=1)
        surf = SampledSurface((
            SampledCurve(0, 1, mid - [0, 1, 0]),
            SampledCurve(0, 1, mid),
            SampledCurve(0, 1, mid.copy()),  # zero ruling everywhere
        ))
        with pytest.raises(DegeneracyError) as err:
            genericity_margin(surf)
        assert err.value.node is not None

    def test_invariance_under_isometry_and_scale(self, rand2):
        rot = rotation_matrix([0.3, -1, 0.5], 1.2)
        moved = transform(rand2, rotation=rot, translation=[1, 2, 3], scale=3.7)
        assert genericity_margin(moved) == pytest.approx(
            genericity_margin(rand2), rel=1e-12)

    def test_require_margin_names_first_node(self):
        surf = generate("TRANSLATE", ribbons=2)
        with pytest.raises(DegeneracyError) as err:
            require_margin(surf)
        assert err.value.node == 0
