"""Tangent fields, extensions off the surface and divergence-free pairs."""

from __future__ import annotations

import math

import numpy as np
import pytest

from hypersurface_laplacians.errors import FieldError, NoDivFreeExtension, RestrictionMismatch
from hypersurface_laplacians.fields import (
    AmbientField,
    ExtensionStrategy,
    FrameVector,
    OneForm,
    TangentField,
    divergence,
    divergence_residuals,
    extend,
    find_divfree_extension,
    make_divfree_pair,
    musical,
    normal_component_off_surface,
    pair,
    project_tangent,
    pullback,
    restriction_residual,
)
from hypersurface_laplacians.jetcalc import value_of, values
from hypersurface_laplacians.specs import BUILTIN_FIELDS


class TestExtensions:
    def test_homogeneous_scaling(self, sphere):
        av = AmbientField(BUILTIN_FIELDS["mixed"], ExtensionStrategy.homogeneous(2))
        pt = {"t": 1.0, "theta": 0.5}
        on = [value_of(c) for c in av.frame_components(sphere.geometry(pt, rho=1.0))]
        off = [value_of(c) for c in av.frame_components(sphere.geometry(pt, rho=1.5))]
        assert off == pytest.approx([2.25 * c for c in on])
        assert off[-1] == 0.0

    def test_restriction_matches_field(self, oval):
        av = extend(BUILTIN_FIELDS["mixed"], ExtensionStrategy.homogeneous(3), oval, samples=6)
        assert restriction_residual(av, oval, samples=6) <= 1e-12

    def test_custom_restriction_checked(self, sphere):
        bad = ExtensionStrategy.custom("cos(t) + (rho - 1)", "0.5*sin(theta) + 0.1", "0")
        with pytest.raises(RestrictionMismatch):
            extend(BUILTIN_FIELDS["mixed"], bad, sphere, samples=4)

    def test_custom_extension_with_normal_part(self, sphere):
        st = ExtensionStrategy.custom("cos(t)*rho^2", "0.5*sin(theta)", "(rho - 1)*sin(t)", name="collar")
        av = extend(BUILTIN_FIELDS["mixed"], st, sphere, samples=4)
        assert av.label == "mixed/custom:collar"
        pt = {"t": 1.2, "theta": 0.1}
        assert normal_component_off_surface(av, sphere, pt, rho=1.1) == pytest.approx(0.1 * math.sin(1.2))

    def test_labels(self):
        assert ExtensionStrategy.homogeneous(1).label == "homogeneous:1"
        assert ExtensionStrategy.homogeneous(0.5).label == "homogeneous:0.5"

    def test_frame_field_needs_chart(self, nsphere3):
        av = AmbientField(BUILTIN_FIELDS["mixed"], ExtensionStrategy.homogeneous(0))
        geom = nsphere3.geometry(nsphere3.sample_points(1, 0)[0])
        with pytest.raises(FieldError):
            av.frame_components(geom)

    def test_cartesian_dimension_checked(self, nsphere3):
        av = AmbientField(BUILTIN_FIELDS["rotation"], ExtensionStrategy.homogeneous(0))
        geom = nsphere3.geometry(nsphere3.sample_points(1, 0)[0])
        with pytest.raises(FieldError):
            av.frame_components(geom)


class TestDivergence:
    def test_rotation_on_sphere(self, sphere):
        av = AmbientField(BUILTIN_FIELDS["rotation"], ExtensionStrategy.homogeneous(1))
        for pt in sphere.sample_points(4, seed=0):
            amb, surf = divergence_residuals(av, sphere.geometry(pt, order=1))
            assert abs(amb) < 1e-12
            assert abs(surf) < 1e-12

    def test_rotation_is_tangent(self, sphere):
        geom = sphere.geometry({"t": 0.9, "theta": 0.2})
        V = values(BUILTIN_FIELDS["rotation"].at(geom))
        x = values(geom.position)
        np.testing.assert_allclose(V, [-x[1], x[0], 0.0], atol=1e-14)

    def test_latitude_field_has_divergence(self, sphere):
        av = AmbientField(TangentField.frame("lat", "1", "0"), ExtensionStrategy.homogeneous(0))
        t = 0.7
        # div of E1 on the unit sphere is cot(t)
        surf = divergence(av, sphere.geometry({"t": t, "theta": 0.0}, order=1), "surface")
        assert surf == pytest.approx(math.cos(t) / math.sin(t), rel=1e-12)

    def test_unknown_location(self, sphere, azimuthal):
        with pytest.raises(FieldError):
            divergence(azimuthal, sphere.geometry({"t": 1.0, "theta": 0.0}, order=1), "volume")

    def test_tilt_on_three_sphere(self, nsphere3):
        av = AmbientField(BUILTIN_FIELDS["rotation4"], ExtensionStrategy.homogeneous(1))
        geom = nsphere3.geometry(nsphere3.sample_points(1, 3)[0], order=1)
        amb, surf = divergence_residuals(av, geom)
        assert abs(amb) < 1e-12
        assert abs(surf) < 1e-12


class TestDivFreePairs:
    def test_azimuthal_pair(self, ellipsoid):
        pair_ = make_divfree_pair(ellipsoid, "sin(t)", k_guess=1.0)
        assert pair_.k == 1.0
        assert pair_.ambient_div < 1e-10
        assert pair_.surface_div < 1e-10
        assert pair_.collar_divfree

    def test_no_extension_for_latitude_field(self, sphere):
        with pytest.raises(NoDivFreeExtension):
            find_divfree_extension(sphere, TangentField.frame("lat", "1", "0"), samples=3)


class TestForms:
    def test_musical_isomorphisms(self):
        v = FrameVector((1.0, 2.0, 0.0))
        w = musical(v, "flat")
        assert isinstance(w, OneForm)
        assert musical(w, "sharp") == v
        assert pair(w, v) == 5.0
        with pytest.raises(FieldError):
            musical(v, "sharp")

    def test_pullback_drops_normal(self):
        assert pullback(OneForm((1.0, 2.0, 3.0))).components == (1.0, 2.0, 0.0)

    def test_project_tangent(self, sphere):
        geom = sphere.geometry({"t": 1.0, "theta": 0.3})
        x = values(geom.position)
        proj = values(project_tangent(geom, x + np.array([0.0, 0.0, 1.0])))
        assert float(np.dot(proj, values(geom.normal))) == pytest.approx(0.0, abs=1e-14)
