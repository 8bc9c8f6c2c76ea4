"""Generating curves: unit-speed certification and arc-length reparametrization."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from hypersurface_laplacians.curve import (
    ArcLengthCurve,
    DirectCurve,
    GeneratingCurve,
    arc_length_reparam,
    as_unit_speed,
    circle_curve,
    curve_jet3,
    principal_curvatures_rev,
    scan_curve,
    transversality_f,
    unit_speed_relation_bound,
    unit_speed_residuals,
)
from hypersurface_laplacians.errors import DegenerateSpeed, OutOfDomain, TransversalityViolation, UnitSpeedViolation
from hypersurface_laplacians.specs import ellipsoid_curve


@pytest.fixture(scope="module")
def ellipse():
    return as_unit_speed(ellipsoid_curve(2.0), "ellipsoid")


class TestCircle:
    def test_used_directly(self):
        curve = as_unit_speed(circle_curve(), "sphere")
        assert isinstance(curve, DirectCurve)
        assert curve.certified_tolerance < 1e-12

    def test_jets_at_equator(self):
        a, b = as_unit_speed(circle_curve()).jets(math.pi / 2, 2)
        assert a.value == pytest.approx(1.0)
        assert a.derivative("t", "t") == pytest.approx(-1.0)
        assert b.derivative("t") == pytest.approx(-1.0)

    def test_transversality_and_curvatures(self):
        curve = as_unit_speed(circle_curve())
        assert transversality_f(curve, 1.1) == pytest.approx(1.0)
        k1, k2 = principal_curvatures_rev(curve, 1.1)
        assert k1 == pytest.approx(-1.0)
        assert k2 == pytest.approx(-1.0)

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomain):
            as_unit_speed(circle_curve()).jets(4.0)


class TestArcLength:
    def test_reparametrized(self, ellipse):
        assert isinstance(ellipse, ArcLengthCurve)
        assert ellipse.certified_tolerance < 1e-9

    def test_length_is_elliptic_integral(self, ellipse):
        # int_0^pi sqrt(4 - 3 sin^2) = 4 E(3/4)
        assert ellipse.length == pytest.approx(4.0 * special.ellipe(0.75), rel=1e-11)

    def test_inverse_parameter(self, ellipse):
        for phi in (0.3, 1.0, 2.5):
            s = ellipse.arc_length_at(phi)
            assert ellipse.raw_param(s) == pytest.approx(phi, abs=1e-11)

    @pytest.mark.parametrize("phi", [0.4, math.pi / 3, 2.2])
    def test_unit_speed_relations(self, ellipse, phi):
        s = ellipse.arc_length_at(phi)
        first, second = unit_speed_residuals(ellipse, s)
        assert first < 1e-9
        assert second < 1e-8

    def test_relations_within_certificate_across_the_curve(self, ellipse):
        bound = unit_speed_relation_bound(ellipse)
        assert bound == pytest.approx(10.0 * max(ellipse.certified_tolerance, 1e-12))
        lo, hi = ellipse.sample_interval()
        for s in np.linspace(lo, hi, 25):
            first, second = unit_speed_residuals(ellipse, float(s))
            assert first <= bound
            assert second <= bound

    def test_jets_follow_raw_curve(self, ellipse):
        phi = math.pi / 3
        a, b = ellipse.jets(ellipse.arc_length_at(phi), 1)
        sigma = math.sqrt(1.75)
        assert a.value == pytest.approx(2.0 * math.sin(phi), rel=1e-12)
        assert a.derivative("t") == pytest.approx(2.0 * math.cos(phi) / sigma, rel=1e-10)
        assert b.derivative("t") == pytest.approx(-math.sin(phi) / sigma, rel=1e-10)

    def test_declared_unit_speed_is_checked(self):
        raw = GeneratingCurve.from_text("2*sin(t)", "cos(t)", 0.0, math.pi, unit_speed=True, name="liar")
        assert isinstance(as_unit_speed(raw), ArcLengthCurve)


class TestDegenerateCurves:
    def test_zero_speed(self):
        raw = GeneratingCurve.from_text("1", "1", 0.0, 1.0, name="point")
        with pytest.raises(DegenerateSpeed):
            as_unit_speed(raw)

    def test_wrong_orientation(self):
        curve = as_unit_speed(GeneratingCurve.from_text("sin(t)", "-cos(t)", 0.0, math.pi, unit_speed=True))
        with pytest.raises(TransversalityViolation):
            transversality_f(curve, 1.0)


def test_third_order_jets():
    a, b = curve_jet3(as_unit_speed(circle_curve()), 0.7)
    assert a.derivative("t", "t", "t") == pytest.approx(-math.cos(0.7))
    assert b.derivative("t", "t", "t") == pytest.approx(math.sin(0.7))


def test_forced_reparametrization_of_circle():
    curve = arc_length_reparam(circle_curve(), "sphere")
    assert curve.length == pytest.approx(math.pi, rel=1e-12)
    assert curve.raw_param(1.0) == pytest.approx(1.0, abs=1e-11)


def test_scan_rejects_a_curve_that_is_not_unit_speed():
    # declared unit speed but never certified: the relations fail by O(1)
    curve = DirectCurve(GeneratingCurve.from_text("2*sin(t)", "cos(t)", 0.0, math.pi, name="stretched"), "revolution")
    curve.certified_tolerance = 0.0
    with pytest.raises(UnitSpeedViolation):
        scan_curve(curve)
