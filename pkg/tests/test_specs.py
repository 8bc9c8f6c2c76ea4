"""geometry_specs/ loaders, builtin names and run configuration."""

from __future__ import annotations

import math

import pytest

from hypersurface_laplacians.errors import ConfigError
from hypersurface_laplacians.fields import ExtensionStrategy
from hypersurface_laplacians.specs import (
    BUILTIN_FIELDS,
    DEFAULT_SURFACES,
    SPEC_ROOT,
    RunConfig,
    builtin_surface,
    curve_from_mapping,
    load_curve,
    load_field,
    load_run_config,
    load_surface,
    load_yaml,
    resolve_extension,
    resolve_field,
    resolve_surface,
    run_config_from_mapping,
)
from hypersurface_laplacians.verify import CATALOG_BY_ID


class TestShippedFiles:
    @pytest.mark.parametrize("path", sorted((SPEC_ROOT / "curves").glob("*.yaml")), ids=lambda p: p.stem)
    def test_curves_load(self, path):
        curve = load_curve(path)
        assert curve.t_min == 0.0
        assert curve.t_max == pytest.approx(math.pi)

    @pytest.mark.parametrize("path", sorted((SPEC_ROOT / "surfaces").glob("*.yaml")), ids=lambda p: p.stem)
    def test_surfaces_load(self, path):
        surface = load_surface(path)
        assert surface.name == load_yaml(path)["id"]

    @pytest.mark.parametrize("path", sorted((SPEC_ROOT / "fields").glob("*.yaml")), ids=lambda p: p.stem)
    def test_fields_load(self, path):
        tf, _ = load_field(path)
        assert tf.name == path.stem

    def test_field_extensions(self):
        _, ext = load_field(SPEC_ROOT / "fields" / "azimuthal.yaml")
        assert ext == ExtensionStrategy.homogeneous(1)
        _, ext = load_field(SPEC_ROOT / "fields" / "mixed_custom.yaml")
        assert ext.kind == "custom"
        _, ext = load_field(SPEC_ROOT / "fields" / "mixed.yaml")
        assert ext is None

    def test_default_suite(self):
        cfg = load_run_config(SPEC_ROOT / "suites" / "default.yaml")
        assert cfg.identities is None
        assert cfg.points == 16
        assert cfg.surfaces == DEFAULT_SURFACES
        cfg.validate(list(CATALOG_BY_ID))

    def test_suite_paths_are_relative_to_the_file(self):
        cfg = load_run_config(SPEC_ROOT / "suites" / "acceptance.yaml")
        assert cfg.out == SPEC_ROOT / "suites" / "../../out/acceptance_report.json"
        resolved = load_run_config(SPEC_ROOT / "suites" / "custom_extension.yaml").resolved()
        ext = resolve_extension(resolved.extensions[0])
        assert ext.kind == "custom"

    def test_suites_validate(self):
        for path in sorted((SPEC_ROOT / "suites").glob("*.yaml")):
            load_run_config(path).validate(list(CATALOG_BY_ID))


class TestCurveMappings:
    BASE = {"schema_version": "0.1", "id": "c", "a_expr": "sin(t)", "b_expr": "cos(t)", "t_min": 0}

    def test_constant_bound(self):
        curve = curve_from_mapping({**self.BASE, "t_max": "pi/2"}, "c.yaml")
        assert curve.t_max == pytest.approx(math.pi / 2)

    def test_bound_must_be_constant(self):
        with pytest.raises(ConfigError, match="must be constant"):
            curve_from_mapping({**self.BASE, "t_max": "t + 1"}, "c.yaml")

    def test_expression_errors_carry_location(self):
        with pytest.raises(ConfigError) as info:
            curve_from_mapping({**self.BASE, "a_expr": "sin(t", "t_max": 3}, "c.yaml")
        assert info.value.location == "c.yaml"

    def test_missing_key(self):
        data = dict(self.BASE)
        del data["b_expr"]
        with pytest.raises(ConfigError, match="missing key 'b_expr'"):
            curve_from_mapping({**data, "t_max": 3}, "c.yaml")

    def test_schema_version(self):
        with pytest.raises(ConfigError, match="schema_version"):
            curve_from_mapping({**self.BASE, "t_max": 3, "schema_version": "9"}, "c.yaml")


class TestYamlFiles:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="file not found"):
            load_yaml(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("a: [1, 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_yaml(path)

    def test_top_level_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_yaml(path)

    def test_inline_curve_in_surface(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text(
            'schema_version: "0.1"\nid: inline\nkind: revolution\n'
            'curve:\n  schema_version: "0.1"\n  a_expr: "sin(t)"\n  b_expr: "cos(t)"\n'
            "  t_min: 0\n  t_max: pi\n  unit_speed: true\n",
            encoding="utf-8",
        )
        surface = load_surface(path)
        assert surface.kind == "revolution"
        assert surface.name == "inline"

    def test_unknown_surface_kind(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text('schema_version: "0.1"\nkind: torus\n', encoding="utf-8")
        with pytest.raises(ConfigError, match="unknown surface kind"):
            load_surface(path)


class TestBuiltins:
    def test_surfaces(self):
        assert builtin_surface("sphere").kind == "sphere"
        assert builtin_surface("ellipsoid:0.5").params == {"a": 0.5}
        assert builtin_surface("nsphere:3").dim == 3
        assert resolve_surface("oval") is builtin_surface("oval")

    @pytest.mark.parametrize("name", ["torus", "ellipsoid:0", "ellipsoid:abc", "sphere:2"])
    def test_bad_surface_names(self, name):
        with pytest.raises(ConfigError):
            builtin_surface(name)

    def test_fields(self):
        assert resolve_field("rotation") is BUILTIN_FIELDS["rotation"]
        with pytest.raises(ConfigError, match="unknown field"):
            resolve_field("vortex")

    def test_extensions(self):
        assert resolve_extension("homogeneous:2").k == 2.0
        assert resolve_extension("homogeneous").k == 0.0
        custom = resolve_extension("custom:fields/mixed_custom.yaml", SPEC_ROOT)
        assert custom.label == "custom:mixed_custom"
        with pytest.raises(ConfigError):
            resolve_extension("radial:1")


class TestRunConfig:
    def test_all_identities(self):
        assert run_config_from_mapping({"identities": "all"}).identities is None
        assert run_config_from_mapping({"identities": "GAUSS"}).identities == ["GAUSS"]
        assert run_config_from_mapping({"identities": []}).identities == []

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key 'pointz'"):
            run_config_from_mapping({"pointz": 3})

    def test_bad_values(self):
        with pytest.raises(ConfigError, match="bad value"):
            run_config_from_mapping({"points": "many"})
        with pytest.raises(ConfigError, match="must be a list"):
            run_config_from_mapping({"surfaces": {"a": 1}})

    @pytest.mark.parametrize(
        "kwargs, location",
        [
            ({"points": 0}, "points"),
            ({"engine": "symbolic"}, "engine"),
            ({"format": "xml"}, "format"),
            ({"workers": 0}, "workers"),
            ({"tol": -1.0}, "tol"),
            ({"identities": ["GAUSS", "NOPE"]}, "identities"),
        ],
    )
    def test_validate(self, kwargs, location):
        with pytest.raises(ConfigError) as info:
            RunConfig(**kwargs).validate(list(CATALOG_BY_ID))
        assert info.value.location == location

    def test_resolved_uppercases_identities(self, tmp_path):
        cfg = RunConfig(identities=["thm1"], surfaces=["s.yaml"], base=tmp_path).resolved()
        assert cfg.identities == ["THM1"]
        assert cfg.surfaces == [str(tmp_path / "s.yaml")]
