"""Identity catalog, residual rows and the suite runner."""

from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest

from hypersurface_laplacians.errors import ConfigError, ContextViolation
from hypersurface_laplacians.fields import AmbientField, ExtensionStrategy, TangentField
from hypersurface_laplacians.specs import BUILTIN_FIELDS, RunConfig
from hypersurface_laplacians.verify import (
    CATALOG,
    CATALOG_BY_ID,
    CERTIFICATE_FACTOR,
    TOLERANCE_POLICY,
    ResidualReport,
    collar_report,
    compare_extensions,
    get_check,
    identities_for,
    run_check,
    run_suite,
    tolerance_for,
)


def field(name, k=1):
    return AmbientField(BUILTIN_FIELDS[name], ExtensionStrategy.homogeneous(k))


class TestCatalog:
    def test_size_and_ids(self):
        assert len(CATALOG) == 22
        assert len(CATALOG_BY_ID) == 22

    def test_filter_by_surface_kind(self):
        assert len(identities_for("nsphere")) == 8
        assert len(identities_for("sphere")) == 19
        assert len(identities_for("ellipsoid")) == 20
        assert {c.id for c in identities_for("revolution")} == {
            c.id for c in CATALOG if "revolution" in c.kinds
        }

    def test_lookup_is_case_insensitive(self):
        assert get_check("thm1") is CATALOG_BY_ID["THM1"]

    def test_unknown_identity(self):
        with pytest.raises(ConfigError):
            get_check("NOPE")


class TestTolerance:
    def test_relative_to_lhs(self, sphere):
        check = CATALOG_BY_ID["GAUSS"]
        assert tolerance_for(check, 3.0, sphere) == pytest.approx(4.0 * TOLERANCE_POLICY["jets"])

    def test_exact_ignores_override(self, sphere):
        assert tolerance_for(CATALOG_BY_ID["MAIN1"], 5.0, sphere, tol=1e-3) == 0.0

    def test_certificate_term(self, ellipsoid):
        check = CATALOG_BY_ID["THM2"]
        base = TOLERANCE_POLICY["thm2"] * 2.0
        expected = base + CERTIFICATE_FACTOR * ellipsoid.certified_tolerance
        assert tolerance_for(check, 1.0, ellipsoid) == pytest.approx(expected)

    def test_fd_route_and_overrides(self, sphere):
        check = CATALOG_BY_ID["GAUSS"]
        assert tolerance_for(check, 0.0, sphere, route="fd") == pytest.approx(TOLERANCE_POLICY["fd"])
        assert tolerance_for(check, 0.0, sphere, tolerances={"jets": 1e-6}) == pytest.approx(1e-6)


class TestRunCheck:
    @pytest.mark.parametrize("surface_name", ["sphere", "ellipsoid", "oval", "nsphere3"])
    def test_weingarten_everywhere(self, request, surface_name):
        surface = request.getfixturevalue(surface_name)
        report = run_check("WEINGARTEN", surface, points=4)
        assert len(report.results) == 4
        assert report.passed

    def test_main1_is_exact(self, ellipsoid):
        report = run_check("MAIN1", ellipsoid, points=5, seed=2)
        assert all(r.residual == 0.0 for r in report.results)
        assert report.passed

    def test_gauss_with_both_engines(self, ellipsoid, mixed):
        report = run_check("GAUSS", ellipsoid, mixed, points=3, engine="both")
        assert [r.route for r in report.results] == ["jets", "fd"] * 3
        assert report.passed

    def test_fd_engine_falls_back_to_jets_without_oracle(self, sphere):
        report = run_check("WEINGARTEN", sphere, points=2, engine="fd")
        assert [r.route for r in report.results] == ["jets", "jets"]

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_sphere_homogeneous(self, sphere, k):
        report = run_check("SPHERE_THM1", sphere, field("mixed", k), points=4)
        assert report.passed
        assert report.results[0].terms == {"k": float(k)}

    def test_tangential_laplacian_on_oval(self, oval):
        assert run_check("THM1", oval, field("mixed", 2), points=4).passed

    def test_hodge_form_on_ellipsoid(self, ellipsoid):
        report = run_check("THM2", ellipsoid, field("azimuthal_sin", 1), points=4)
        assert report.passed
        assert set(report.results[0].terms) >= {"hodge_S", "minus_LN_LN", "Y_term"}

    def test_ellipsoid_closed_forms(self, ellipsoid):
        assert run_check("ELLIPSOID_FORMS", ellipsoid, points=6).passed

    def test_ellipsoid_e1_term_with_meridional_component(self, ellipsoid, mixed):
        report = run_check("ELLIPSOID_E2", ellipsoid, mixed, points=6, seed=2)
        assert report.passed
        # the mixed field has an E1 component, so the reduction is not 0 = 0
        assert max(abs(r.terms["lg1"]) for r in report.results) > 1e-3

    def test_scalar_curve_identities_within_certificate(self, ellipsoid):
        for identity in ("MAIN2_I1", "MAIN2_I2"):
            report = run_check(identity, ellipsoid, points=4)
            assert report.passed
            for r in report.results:
                expected = TOLERANCE_POLICY["curve"] * (1.0 + np.linalg.norm(r.lhs))
                assert r.tol == pytest.approx(expected + CERTIFICATE_FACTOR * ellipsoid.certified_tolerance)

    def test_three_routes_on_oval(self, oval):
        report = run_check("BW", oval, points=4, seed=11)
        assert report.passed
        assert report.results[0].terms["form"] != report.results[1].terms["form"]

    def test_row_shape(self, sphere, azimuthal):
        row = run_check("GAUSS", sphere, azimuthal, points=1).results[0].to_dict()
        assert list(row) == ["id", "surface", "field", "extension", "point", "terms", "lhs", "rhs",
                             "residual", "tol", "pass", "route"]
        assert set(row["point"]) == {"t", "theta"}
        assert row["field"] == "azimuthal"
        assert row["extension"] == "homogeneous:1"

    def test_deterministic_json(self, sphere, mixed):
        a = run_check("LIE_PAIRING", sphere, mixed, points=4, seed=3).to_json()
        b = run_check("LIE_PAIRING", sphere, mixed, points=4, seed=3, workers=2).to_json()
        assert a == b
        assert json.loads(a)["meta"]["seed"] == 3


class TestContext:
    def test_sphere_only_identity(self, ellipsoid, azimuthal):
        with pytest.raises(ContextViolation):
            run_check("SPHERE_THM1", ellipsoid, azimuthal, points=1)

    def test_divergence_required(self, sphere, mixed):
        with pytest.raises(ContextViolation):
            run_check("LIE3", sphere, mixed, points=2)

    def test_homogeneous_required(self, sphere):
        custom = AmbientField(
            BUILTIN_FIELDS["mixed"], ExtensionStrategy.custom("cos(t)*rho", "0.5*sin(theta)", "0")
        )
        with pytest.raises(ContextViolation):
            run_check("SPHERE_THM1", sphere, custom, points=1)

    def test_field_required(self, sphere):
        with pytest.raises(ContextViolation):
            run_check("GAUSS", sphere, None, points=1)

    def test_revolution_only(self, nsphere3):
        with pytest.raises(ContextViolation):
            run_check("MAIN1", nsphere3, points=1)

    def test_leaving_extension_is_flagged_not_rejected(self, sphere):
        leaky = AmbientField(
            TangentField.frame("az", "0", "1"),
            ExtensionStrategy.custom("0", "1", "(rho - 1)^2*sin(t)", name="leaky"),
        )
        report = run_check("THM2", sphere, leaky, points=2)
        assert len(report.results) == 2
        for row in report.results:
            assert row.terms["tangential_off_surface"] is False
            assert row.terms["collar_divfree"] is False
        summary = report.summary()
        assert not summary.iloc[0]["tangential_off_surface"]

    def test_homogeneous_pair_holds_in_the_collar(self, ellipsoid, tmp_path):
        report = run_check("COR2", ellipsoid, field("azimuthal_sin", 1), points=2)
        assert report.passed
        assert all(r.terms["collar_divfree"] and r.terms["tangential_off_surface"] for r in report.results)
        report.write_csv(tmp_path / "summary.csv")
        summary = pd.read_csv(tmp_path / "summary.csv")
        assert bool(summary.iloc[0]["collar_divfree"])
        assert bool(summary.iloc[0]["tangential_off_surface"])
        reloaded = json.loads(report.to_json())["results"][0]["terms"]
        assert reloaded["collar_divfree"] is True


class TestSuite:
    def test_skips_are_counted(self):
        cfg = RunConfig(
            surfaces=["sphere"],
            fields=["azimuthal", "mixed"],
            extensions=["homogeneous:1"],
            identities=["GAUSS", "LIE3"],
            points=3,
        )
        report = run_suite(cfg)
        assert report.meta["skipped"] == 1
        assert len(report.results) == 9
        assert report.passed

    def test_empty_selection_runs_nothing(self):
        report = run_suite(RunConfig(surfaces=["sphere"], identities=[], points=2))
        assert report.results == []
        assert report.summary().empty

    def test_inadmissible_identities_skipped_silently(self):
        cfg = RunConfig(surfaces=["nsphere:2"], fields=["rotation"], extensions=["homogeneous:1"],
                        identities=["MAIN1", "WEINGARTEN"], points=2)
        report = run_suite(cfg)
        assert {r.id for r in report.results} == {"WEINGARTEN"}
        assert report.meta["skipped"] == 0

    @pytest.mark.slow
    def test_default_matrix_passes(self):
        report = run_suite(RunConfig(points=4))
        assert report.results
        assert report.passed, report.summary().to_string()


class TestReport:
    @pytest.fixture
    def report(self, sphere, mixed):
        return run_check("THM1", sphere, mixed, points=3)

    def test_summary(self, report):
        summary = report.summary()
        assert list(summary.columns) == [
            "identity", "surface", "rows", "max_residual", "tol_at_max", "failures",
            "collar_divfree", "tangential_off_surface",
        ]
        assert summary.iloc[0]["collar_divfree"] is None
        assert summary.iloc[0]["rows"] == 3
        assert summary.iloc[0]["failures"] == 0

    def test_csv_outputs(self, report, tmp_path):
        report.write_csv(tmp_path / "summary.csv")
        report.write_plot_csv(tmp_path / "plot" / "residuals.csv")
        plot = pd.read_csv(tmp_path / "plot" / "residuals.csv")
        assert list(plot.columns) == ["identity", "surface", "t", "residual"]
        assert len(plot) == 3

    def test_reload(self, report, tmp_path):
        path = tmp_path / "report.json"
        report.write_json(path)
        again = ResidualReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
        assert again.to_json() == report.to_json()

    def test_failures_listed(self, report):
        report.results[0].passed = False
        assert not report.passed
        assert report.failures == [report.results[0]]


class TestDiagnostics:
    def test_extension_dependence(self, sphere):
        report = compare_extensions(
            sphere,
            BUILTIN_FIELDS["mixed"],
            ExtensionStrategy.homogeneous(0),
            ExtensionStrategy.homogeneous(2),
            points=4,
        )
        assert report.passed
        assert max(r.terms["lhs_difference_norm"] for r in report.results) >= 1e-3
        assert report.results[0].extension == "homogeneous:0 vs homogeneous:2"

    def test_collar(self, sphere):
        frame = collar_report(sphere, field("azimuthal"), points=4)
        assert list(frame["rho"]) == [0.9, 0.95, 1.0, 1.05, 1.1]
        assert np.all(frame["max_ambient_div"] < 1e-12)
        assert np.all(frame["max_normal_component"] == 0.0)
