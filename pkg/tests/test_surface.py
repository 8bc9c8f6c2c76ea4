"""Frames, curvatures and structure constants of the builtin surfaces."""

from __future__ import annotations

import math

import numpy as np
import pytest

from hypersurface_laplacians.errors import PoleDegeneracy, SurfaceError
from hypersurface_laplacians.jetcalc import value_of, values
from hypersurface_laplacians.surface import (
    NSphere,
    christoffel_at,
    curvature_scalars,
    frame_at,
    gram_residual,
    intrinsic_gauss_curvature,
    metric_blocks,
    principal_curvatures_from_shape,
    ricci_apply,
    shape_operator,
    structure_constants_at,
)


def raw_point(surface, phi, theta=0.3):
    return {"t": surface.curve.arc_length_at(phi), "theta": theta, "raw_t": phi}


class TestSphere:
    def test_curvatures(self, sphere):
        geom = sphere.at(1.0, 1.1, 0.4)
        assert [value_of(k) for k in geom.kappa] == pytest.approx([-1.0, -1.0])
        H, K = curvature_scalars(geom)
        assert H == pytest.approx(-1.0)
        assert K == pytest.approx(1.0)
        assert intrinsic_gauss_curvature(sphere, 1.1) == pytest.approx(1.0)

    def test_structure_constants(self, sphere):
        t = 0.8
        sc = structure_constants_at(sphere, 1.0, t)
        assert sc.c113 == pytest.approx(1.0)
        assert sc.c313 == pytest.approx(0.0, abs=1e-15)
        assert sc.c223 == pytest.approx(1.0)
        assert sc.c212 == pytest.approx(-math.cos(t) / math.sin(t))

    def test_christoffels_from_structure(self, sphere):
        t = 0.8
        gamma = christoffel_at(structure_constants_at(sphere, 1.0, t))
        # D_{E2} E2 = cot(t) (-E1) - N on the unit sphere
        assert gamma(1, 2, 2) == pytest.approx(-math.cos(t) / math.sin(t))
        assert gamma(3, 2, 2) == pytest.approx(-1.0)
        assert gamma(3, 1, 1) == pytest.approx(-1.0)

    def test_ricci_is_identity(self, sphere):
        geom = sphere.at(1.0, 2.0, -1.0)
        ric = ricci_apply(geom, [0.3, -1.7])
        assert [value_of(c) for c in ric] == pytest.approx([0.3, -1.7])

    def test_frame_is_orthonormal(self, sphere):
        assert gram_residual(sphere.at(1.0, 0.5, 2.0)) < 1e-14

    def test_pole(self, sphere):
        with pytest.raises(PoleDegeneracy):
            sphere.at(1.0, 1e-9, 0.0)

    def test_rho_must_be_positive(self, sphere):
        with pytest.raises(SurfaceError):
            sphere.at(0.0, 1.0, 0.0)

    def test_invert_chart(self, sphere):
        x = sphere.chart(1.2, 0.7, -2.0)
        back = sphere.invert_chart(x)
        assert back["rho"] == pytest.approx(1.2, abs=1e-12)
        assert back["t"] == pytest.approx(0.7, abs=1e-12)
        assert back["theta"] == pytest.approx(-2.0, abs=1e-12)


class TestEllipsoid:
    PHI = math.pi / 3

    def test_principal_curvatures(self, ellipsoid):
        geom = ellipsoid.geometry(raw_point(ellipsoid, self.PHI))
        k1, k2 = (value_of(k) for k in geom.kappa)
        assert k1 == pytest.approx(-2.0 / 1.75**1.5, rel=1e-9)
        assert k2 == pytest.approx(-1.0 / (2.0 * math.sqrt(1.75)), rel=1e-9)

    def test_shape_operator_matches_formulas(self, ellipsoid):
        geom = ellipsoid.geometry(raw_point(ellipsoid, self.PHI), order=1)
        s = shape_operator(geom)
        assert abs(s[0, 1]) < 1e-12
        assert principal_curvatures_from_shape(s) == pytest.approx([value_of(k) for k in geom.kappa], rel=1e-10)

    def test_inverse_metric(self, ellipsoid):
        t = ellipsoid.curve.arc_length_at(self.PHI)
        _, inv = metric_blocks(ellipsoid, 1.0, t)
        assert inv[0, 0] == pytest.approx(0.4375, rel=1e-10)

    def test_transversality_function(self, ellipsoid):
        geom = ellipsoid.geometry(raw_point(ellipsoid, self.PHI))
        assert geom.f.value == pytest.approx(2.0 / math.sqrt(1.75), rel=1e-12)

    def test_gradient_of_rho(self, ellipsoid):
        # grad rho = N / f and |grad rho|^2 = g^{rho rho}
        geom = ellipsoid.geometry(raw_point(ellipsoid, self.PHI))
        grad = values(geom.grad_rho)
        assert float(grad @ grad) == pytest.approx(0.4375, rel=1e-10)

    def test_sample_points_stay_off_the_poles(self, ellipsoid):
        lo, hi = ellipsoid.curve.sample_interval()
        pts = ellipsoid.sample_points(16, seed=4)
        assert len(pts) == 16
        assert all(lo <= p["t"] <= hi and -math.pi <= p["theta"] <= math.pi for p in pts)
        assert pts == ellipsoid.sample_points(16, seed=4)
        assert pts != ellipsoid.sample_points(16, seed=5)


class TestOval:
    def test_level_set_frame(self, oval):
        pt = oval.sample_points(3, seed=1)[2]
        for rho in (0.9, 1.0, 1.1):
            geom = oval.geometry(pt, rho=rho)
            assert gram_residual(geom) < 1e-12
            N = values(geom.normal)
            radial = values(geom.radial)
            # the radial field splits as f N + (a a' + b b') E1
            split = geom.f.value * N + geom.gdot.value * values(geom.frame[0])
            np.testing.assert_allclose(radial, split, atol=1e-12)

    def test_curvatures_scale_with_level(self, oval):
        pt = oval.sample_points(2, seed=0)[1]
        on = [value_of(k) for k in oval.geometry(pt, rho=1.0).kappa]
        off = [value_of(k) for k in oval.geometry(pt, rho=2.0).kappa]
        assert off == pytest.approx([k / 2.0 for k in on], rel=1e-12)


class TestNSphere:
    def test_points_on_sphere(self, nsphere3):
        pts = nsphere3.sample_points(8, seed=0)
        assert all(len(p["x"]) == 4 for p in pts)
        assert all(math.isclose(float(np.linalg.norm(p["x"])), 1.0, rel_tol=1e-14) for p in pts)

    def test_frame_and_curvatures(self, nsphere3):
        geom = nsphere3.geometry(nsphere3.sample_points(1, seed=2)[0])
        assert len(geom.frame) == 3
        assert gram_residual(geom) < 1e-13
        assert [value_of(k) for k in geom.kappa] == pytest.approx([-1.0, -1.0, -1.0])
        H, K = curvature_scalars(geom)
        assert H == pytest.approx(-1.0)
        assert K is None

    def test_weingarten_by_differentiation(self, nsphere3):
        geom = nsphere3.geometry({"x": [0.5, 0.5, 0.5, 0.5]}, order=1)
        s = shape_operator(geom)
        np.testing.assert_allclose(s, -np.eye(3), atol=1e-13)

    def test_dimension_limits(self):
        with pytest.raises(SurfaceError):
            NSphere(n=4)
        with pytest.raises(SurfaceError):
            NSphere(n=2, radius=-1.0)


def test_frame_record_on_sphere(sphere):
    t, theta = 1.2, 0.5
    fp = frame_at(sphere, 1.0, t, theta)
    p = [math.sin(t) * math.cos(theta), math.sin(t) * math.sin(theta), math.cos(t)]
    np.testing.assert_allclose(fp.p, p, atol=1e-14)
    np.testing.assert_allclose(fp.N, p, atol=1e-14)
    np.testing.assert_allclose(fp.drho, fp.drho_split, atol=1e-14)
    assert fp.chart == (1.0, t, theta)
