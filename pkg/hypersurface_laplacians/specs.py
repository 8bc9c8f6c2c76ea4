"""
YAML loaders for geometry_specs/ and the builtin catalog of surfaces,
fields and extensions.

File kinds (see docs/yaml/SCHEMA.md):
  - curves/*.yaml    {schema_version, id, a_expr, b_expr, t_min, t_max, unit_speed, description}
  - surfaces/*.yaml  {schema_version, id, kind, curve | n, radius | a}
  - fields/*.yaml    {schema_version, id, kind, v1_expr, v2_expr | components, extension}
  - suites/*.yaml    RunConfig mapping (keys = CLI flag names)

References inside files are either builtin names or paths relative to the
referring file.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from .curve import GeneratingCurve, as_unit_speed, circle_curve
from .diffops import ENGINES
from .errors import ConfigError, ExprError, HypersurfaceError
from .fields import ExtensionStrategy, TangentField
from .jetcalc import as_expr
from .surface import NSphere, SurfaceOfRevolution

log = logging.getLogger("hypersurface_laplacians.specs")

SCHEMA_VERSION = "0.1"
SPEC_ROOT = Path(__file__).resolve().parents[1] / "geometry_specs"
SURFACE_KINDS = ("revolution", "sphere", "nsphere", "ellipsoid")
FIELD_KINDS = ("frame", "cartesian")
FORMATS = ("json", "csv")

DEFAULT_SURFACES = ["sphere", "ellipsoid:2", "oval"]
DEFAULT_FIELDS = ["azimuthal", "azimuthal_sin", "mixed"]
DEFAULT_EXTENSIONS = ["homogeneous:0", "homogeneous:1", "homogeneous:2"]

OVAL_A = "sin(t)*(1 + 0.2*cos(t)^2)"

BUILTIN_FIELDS: Dict[str, TangentField] = {
    "azimuthal": TangentField.frame("azimuthal", "0", "1"),
    "azimuthal_sin": TangentField.frame("azimuthal_sin", "0", "sin(t)"),
    "mixed": TangentField.frame("mixed", "cos(t)", "0.5*sin(theta)"),
    "rotation": TangentField.cartesian("rotation", ["-x2", "x1", "0"]),
    "tilt": TangentField.cartesian("tilt", ["0", "-x3", "x2"]),
    "rotation4": TangentField.cartesian("rotation4", ["-x2", "x1", "-x4", "x3"]),
}


# -----------------------------------------------------------------------------
# YAML helpers
# -----------------------------------------------------------------------------
def load_yaml(path: Path) -> Dict[str, Any]:
    """Read one YAML mapping; every failure becomes a ConfigError naming the file."""
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("file not found", str(path)) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML ({exc})", str(path)) from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", str(path))
    return data


def _require(data: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in data:
        raise ConfigError(f"missing key '{key}'", where)
    return data[key]


def _check_version(data: Mapping[str, Any], where: str) -> None:
    version = str(data.get("schema_version", SCHEMA_VERSION))
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})", where)


def _resolve_path(ref: str, base: Optional[Path]) -> Path:
    p = Path(ref)
    if not p.is_absolute() and base is not None:
        p = base / p
    return p


def _number(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got '{text}'", where) from None
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got '{text}'", where)
    return value


# -----------------------------------------------------------------------------
# Curves and surfaces
# -----------------------------------------------------------------------------
def curve_from_mapping(data: Mapping[str, Any], where: str) -> GeneratingCurve:
    _check_version(data, where)
    try:
        return GeneratingCurve.from_text(
            str(_require(data, "a_expr", where)),
            str(_require(data, "b_expr", where)),
            _bound(_require(data, "t_min", where), where),
            _bound(_require(data, "t_max", where), where),
            unit_speed=bool(data.get("unit_speed", False)),
            name=str(data.get("id", where)),
        )
    except ExprError as exc:
        raise ConfigError(str(exc), where) from None


def _bound(value: Any, where: str) -> float:
    """Interval ends may be numbers or constant expressions such as `pi`."""
    if isinstance(value, (int, float)):
        return float(value)
    tree = as_expr(str(value))
    if tree.free_variables():
        raise ConfigError(f"interval end '{value}' must be constant", where)
    return float(tree.evaluate({}))


def load_curve(path: Path) -> GeneratingCurve:
    return curve_from_mapping(load_yaml(path), str(path))


def ellipsoid_curve(a: float) -> GeneratingCurve:
    """(a sin(phi), cos(phi)) on (0, pi): the ellipsoid (x^2 + y^2)/a^2 + z^2 = 1."""
    return GeneratingCurve.from_text(f"{a!r}*sin(t)", "cos(t)", 0.0, math.pi, name=f"ellipsoid:{a:g}")


def oval_curve() -> GeneratingCurve:
    return GeneratingCurve.from_text(OVAL_A, "cos(t)", 0.0, math.pi, name="oval")


@functools.lru_cache(maxsize=None)
def builtin_surface(name: str) -> Any:
    kind, _, arg = name.partition(":")
    if kind == "sphere" and not arg:
        return SurfaceOfRevolution(as_unit_speed(circle_curve(), "sphere"), name="sphere", kind="sphere")
    if kind == "nsphere":
        n = int(_number(arg or "2", name))
        return NSphere(n=n, name=f"nsphere:{n}")
    if kind == "ellipsoid":
        a = _number(arg or "2", name)
        if a <= 0:
            raise ConfigError("ellipsoid semi-axis must be positive", name)
        curve = as_unit_speed(ellipsoid_curve(a), "ellipsoid")
        return SurfaceOfRevolution(curve, name=f"ellipsoid:{a:g}", kind="ellipsoid", params={"a": a})
    if kind == "oval" and not arg:
        return SurfaceOfRevolution(as_unit_speed(oval_curve()), name="oval", kind="revolution")
    raise ConfigError(f"unknown surface '{name}'", "surfaces")


def surface_from_mapping(data: Mapping[str, Any], where: str, base: Optional[Path] = None) -> Any:
    _check_version(data, where)
    kind = str(_require(data, "kind", where))
    name = str(data.get("id", where))
    if kind not in SURFACE_KINDS:
        raise ConfigError(f"unknown surface kind '{kind}' (expected one of {', '.join(SURFACE_KINDS)})", where)
    if kind == "sphere":
        return SurfaceOfRevolution(as_unit_speed(circle_curve(), "sphere"), name=name, kind="sphere")
    if kind == "nsphere":
        return NSphere(n=int(data.get("n", 2)), radius=float(data.get("radius", 1.0)), name=name)
    if kind == "ellipsoid":
        a = float(_require(data, "a", where))
        raw = ellipsoid_curve(a)
        return SurfaceOfRevolution(as_unit_speed(raw, "ellipsoid"), name=name, kind="ellipsoid", params={"a": a})
    ref = _require(data, "curve", where)
    if isinstance(ref, Mapping):
        raw = curve_from_mapping(ref, f"{where}:curve")
    else:
        raw = load_curve(_resolve_path(str(ref), base))
    return SurfaceOfRevolution(as_unit_speed(raw), name=name, kind="revolution")


def load_surface(path: Path) -> Any:
    try:
        return surface_from_mapping(load_yaml(path), str(path), path.parent)
    except ConfigError:
        raise
    except HypersurfaceError as exc:
        raise ConfigError(str(exc), str(path)) from None


def resolve_surface(ref: Union[str, Any], base: Optional[Path] = None) -> Any:
    """Builtin name, YAML path, or an already built surface."""
    if not isinstance(ref, str):
        return ref
    if ref.endswith((".yaml", ".yml")):
        return load_surface(_resolve_path(ref, base))
    return builtin_surface(ref)


# -----------------------------------------------------------------------------
# Fields and extensions
# -----------------------------------------------------------------------------
def extension_from_mapping(data: Mapping[str, Any], where: str) -> ExtensionStrategy:
    kind = str(data.get("kind", "homogeneous"))
    try:
        if kind == "homogeneous":
            return ExtensionStrategy.homogeneous(float(data.get("k", 0.0)))
        if kind == "custom":
            return ExtensionStrategy.custom(
                str(_require(data, "v1", where)),
                str(_require(data, "v2", where)),
                str(data.get("v3", "0")),
                name=str(data.get("id", Path(where).stem)),
            )
    except ExprError as exc:
        raise ConfigError(str(exc), where) from None
    raise ConfigError(f"unknown extension kind '{kind}'", where)


def field_from_mapping(data: Mapping[str, Any], where: str) -> Tuple[TangentField, Optional[ExtensionStrategy]]:
    _check_version(data, where)
    kind = str(data.get("kind", "frame"))
    name = str(data.get("id", where))
    try:
        if kind == "frame":
            tf = TangentField.frame(name, str(_require(data, "v1_expr", where)), str(_require(data, "v2_expr", where)))
        elif kind == "cartesian":
            comps = _require(data, "components", where)
            if not isinstance(comps, list) or not comps:
                raise ConfigError("components must be a non-empty list", where)
            tf = TangentField.cartesian(name, [str(c) for c in comps])
        else:
            raise ConfigError(f"unknown field kind '{kind}' (expected one of {', '.join(FIELD_KINDS)})", where)
    except ExprError as exc:
        raise ConfigError(str(exc), where) from None
    ext = data.get("extension")
    strategy = extension_from_mapping(ext, f"{where}:extension") if isinstance(ext, Mapping) else None
    return tf, strategy


def load_field(path: Path) -> Tuple[TangentField, Optional[ExtensionStrategy]]:
    return field_from_mapping(load_yaml(path), str(path))


def resolve_field(ref: Union[str, TangentField], base: Optional[Path] = None) -> TangentField:
    if isinstance(ref, TangentField):
        return ref
    if ref.endswith((".yaml", ".yml")):
        return load_field(_resolve_path(ref, base))[0]
    try:
        return BUILTIN_FIELDS[ref]
    except KeyError:
        raise ConfigError(f"unknown field '{ref}'", "fields") from None


def resolve_extension(ref: Union[str, ExtensionStrategy], base: Optional[Path] = None) -> ExtensionStrategy:
    """`homogeneous:<k>` or `custom:<file>`."""
    if isinstance(ref, ExtensionStrategy):
        return ref
    kind, _, arg = ref.partition(":")
    if kind == "homogeneous":
        return ExtensionStrategy.homogeneous(_number(arg or "0", ref))
    if kind == "custom" and arg:
        path = _resolve_path(arg, base)
        data = load_yaml(path)
        return extension_from_mapping(data.get("extension", data), str(path))
    raise ConfigError(f"unknown extension '{ref}' (expected homogeneous:<k> or custom:<file>)", "extensions")


# -----------------------------------------------------------------------------
# Run configuration
# -----------------------------------------------------------------------------
@dataclass
class RunConfig:
    """
    Everything a suite run needs. `identities` is None for the whole catalog;
    an empty list runs nothing.
    """

    surfaces: List[Any] = field(default_factory=lambda: list(DEFAULT_SURFACES))
    fields: List[Any] = field(default_factory=lambda: list(DEFAULT_FIELDS))
    extensions: List[Any] = field(default_factory=lambda: list(DEFAULT_EXTENSIONS))
    identities: Optional[List[str]] = None
    points: int = 16
    seed: int = 0
    engine: str = "jets"
    tol: Optional[float] = None
    tolerances: Dict[str, float] = field(default_factory=dict)
    out: Optional[Path] = None
    format: str = "json"
    csv: Optional[Path] = None
    workers: int = 1
    base: Optional[Path] = None

    def validate(self, catalog_ids: Optional[List[str]] = None) -> None:
        if self.points < 1:
            raise ConfigError(f"points must be >= 1, got {self.points}", "points")
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine '{self.engine}' (expected one of {', '.join(ENGINES)})", "engine")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format '{self.format}' (expected json or csv)", "format")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}", "workers")
        if self.tol is not None and self.tol <= 0:
            raise ConfigError("tol must be positive", "tol")
        if catalog_ids is not None and self.identities:
            unknown = [i for i in self.identities if i.upper() not in catalog_ids]
            if unknown:
                raise ConfigError(f"unknown identity '{unknown[0]}'", "identities")

    def resolved(self) -> "RunConfig":
        """Copy with file references made absolute against the config's directory."""

        def fix(ref: Any) -> Any:
            if isinstance(ref, str) and ref.startswith("custom:"):
                return "custom:" + str(_resolve_path(ref[len("custom:"):], self.base))
            if isinstance(ref, str) and ref.endswith((".yaml", ".yml")):
                return str(_resolve_path(ref, self.base))
            return ref

        return RunConfig(
            surfaces=[fix(s) for s in self.surfaces],
            fields=[fix(f) for f in self.fields],
            extensions=[fix(e) for e in self.extensions],
            identities=None if self.identities is None else [i.upper() for i in self.identities],
            points=self.points,
            seed=self.seed,
            engine=self.engine,
            tol=self.tol,
            tolerances=dict(self.tolerances),
            out=self.out,
            format=self.format,
            csv=self.csv,
            workers=self.workers,
            base=self.base,
        )


CONFIG_KEYS = (
    "surfaces", "fields", "extensions", "identities", "points", "seed", "engine",
    "tol", "tolerances", "out", "format", "csv", "workers",
)


def _as_list(value: Any, key: str, where: str) -> List[str]:
    if isinstance(value, str):
        return [value]
    if not isinstance(value, list):
        raise ConfigError(f"'{key}' must be a list", where)
    return [str(v) for v in value]


def run_config_from_mapping(data: Mapping[str, Any], where: str = "config", base: Optional[Path] = None) -> RunConfig:
    unknown = sorted(set(data) - set(CONFIG_KEYS) - {"schema_version", "id", "description"})
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'", where)
    cfg = RunConfig(base=base)
    for key in ("surfaces", "fields", "extensions"):
        if key in data:
            setattr(cfg, key, _as_list(data[key], key, where))
    if "identities" in data:
        ids = data["identities"]
        cfg.identities = None if ids == "all" or ids is None else _as_list(ids, "identities", where)
    try:
        if "points" in data:
            cfg.points = int(data["points"])
        if "seed" in data:
            cfg.seed = int(data["seed"])
        if "workers" in data:
            cfg.workers = int(data["workers"])
        if data.get("tol") is not None:
            cfg.tol = float(data["tol"])
        if "tolerances" in data:
            if not isinstance(data["tolerances"], Mapping):
                raise ConfigError("'tolerances' must be a mapping", where)
            cfg.tolerances = {str(k): float(v) for k, v in data["tolerances"].items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value ({exc})", where) from None
    if "engine" in data:
        cfg.engine = str(data["engine"])
    if "format" in data:
        cfg.format = str(data["format"])
    for key in ("out", "csv"):
        if data.get(key):
            setattr(cfg, key, _resolve_path(str(data[key]), base))
    return cfg


def load_run_config(path: Path) -> RunConfig:
    cfg = run_config_from_mapping(load_yaml(path), str(path), path.parent)
    log.info("Loaded run config %s", path)
    return cfg
