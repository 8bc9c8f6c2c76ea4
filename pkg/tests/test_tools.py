"""tools/ scripts: spec-tree validation and residual metrics."""

from __future__ import annotations

import importlib.util
from pathlib import Path

import pandas as pd
import pytest

from hypersurface_laplacians.specs import SPEC_ROOT, RunConfig
from hypersurface_laplacians.verify import run_suite

TOOLS = Path(__file__).resolve().parents[1] / "tools"


def load_tool(relative: str):
    path = TOOLS / relative
    spec = importlib.util.spec_from_file_location(path.stem, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.fixture(scope="module")
def validator():
    return load_tool("validate/validate_geometry_specs.py")


@pytest.fixture(scope="module")
def metrics():
    return load_tool("metrics/build_residual_metrics.py")


@pytest.fixture(scope="module")
def report_path(tmp_path_factory):
    report = run_suite(RunConfig(surfaces=["sphere"], fields=["azimuthal"], extensions=["homogeneous:1"],
                                 identities=["GAUSS", "WEINGARTEN"], points=2, engine="both"))
    path = tmp_path_factory.mktemp("metrics") / "report.json"
    report.write_json(path)
    return path


class TestValidateGeometrySpecs:
    def test_shipped_tree(self, validator, capsys):
        assert validator.main(["--root", str(SPEC_ROOT)]) == 0
        out = capsys.readouterr().out
        assert "Validation summary:" in out
        assert "Errors   : 0" in out

    def test_missing_root(self, validator, tmp_path):
        assert validator.main(["--root", str(tmp_path / "none")]) == 2

    def test_empty_tree_warns(self, validator, tmp_path, capsys):
        assert validator.main(["--root", str(tmp_path)]) == 0
        assert "WARN" in capsys.readouterr().out

    def test_broken_suite(self, validator, tmp_path, capsys):
        suites = tmp_path / "suites"
        suites.mkdir()
        (suites / "bad.yaml").write_text(
            'schema_version: "0.1"\nsurfaces: [torus]\nidentities: [GAUSS, NOPE]\n', encoding="utf-8"
        )
        assert validator.main(["--root", str(tmp_path)]) == 1
        out = capsys.readouterr().out
        assert "'NOPE' is not a catalog id" in out
        assert "surfaces -> 'torus'" in out

    def test_broken_curve(self, validator, tmp_path):
        curves = tmp_path / "curves"
        curves.mkdir()
        (curves / "c.yaml").write_text('schema_version: "0.1"\na_expr: "sin(t"\n', encoding="utf-8")
        assert validator.main(["--root", str(tmp_path)]) == 1


class TestResidualMetrics:
    def test_by_route(self, metrics, report_path):
        routes = metrics.by_route(metrics.load_report(report_path))
        assert list(routes["route"]) == ["fd", "jets"]
        # WEINGARTEN has no difference route, so both identities report jets rows
        assert list(routes["rows"]) == [2, 4]

    def test_outputs(self, metrics, report_path, tmp_path):
        out_csv = tmp_path / "m" / "summary.csv"
        out_md = tmp_path / "m" / "summary.md"
        code = metrics.main(["--report", str(report_path), "--out-csv", str(out_csv), "--out-md", str(out_md)])
        assert code == 0
        assert set(pd.read_csv(out_csv)["identity"]) == {"GAUSS", "WEINGARTEN"}
        text = out_md.read_text(encoding="utf-8")
        assert text.startswith("Seed 0, engine both, 2 points")
        assert "| GAUSS | sphere |" in text

    def test_missing_report(self, metrics, tmp_path):
        assert metrics.main(["--report", str(tmp_path / "none.json")]) == 2

    def test_unreadable_report(self, metrics, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        assert metrics.main(["--report", str(path)]) == 2
