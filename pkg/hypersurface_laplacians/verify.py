"""
Identity catalog and residual harness.

Every catalog entry evaluates a left-hand side and a right-hand side by
independent routes at seeded sample points and reports

    residual = ||LHS - RHS||,   pass  <=>  residual <= tol

where tol = base * (1 + ||LHS||), plus a multiple of the surface's
unit-speed certificate for identities that need third derivatives of the
generating curve. Base tolerances live in TOLERANCE_POLICY; configs may
override them per key.

Outputs:
  - ResidualReport.to_json(): {meta, results[]} (byte-stable for a fixed seed)
  - ResidualReport.write_csv(): worst residual per (identity, surface)
  - ResidualReport.write_plot_csv(): (identity, surface, t, residual)
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .curve import unit_speed_residuals
from .diffops import (
    OperatorContext,
    bochner_frame,
    bochner_intrinsic,
    bw_routes,
    chart_cov_deriv,
    fd_cartan_pairing,
    fd_cov_deriv,
    fd_rough_laplacian,
    hodge_surface,
    lie_bracket,
    lie_component_relate,
    lie_deriv_oneform,
    lie_pairing_lemma,
    ricci_vector,
    thm1_normal_terms,
)
from .errors import ConfigError, ContextViolation, FieldError, HypersurfaceError
from .fields import (
    COLLAR,
    AmbientField,
    ExtensionStrategy,
    TangentField,
    divergence,
    divergence_residuals,
    normal_component_off_surface,
)
from .jetcalc import CHART_VARIABLES, jet_lift, jet_vector, value_of, values
from .surface import ChartPoint, LocalGeometry, dot

log = logging.getLogger("hypersurface_laplacians.verify")

# -----------------------------------------------------------------------------
# Policy
# -----------------------------------------------------------------------------
TOLERANCE_POLICY: Dict[str, float] = {
    "jets": 1e-8,
    "fd": 1e-5,
    "closed_form": 1e-9,
    "ellipsoid_e2": 1e-12,
    "sphere_thm1": 1e-9,
    "sphere_thm2": 1e-10,
    "thm2": 1e-7,
    "curve": 1e-11,
    "exact": 0.0,
}
CERTIFICATE_FACTOR = 100.0
CONTEXT_DIV_TOL = 1e-7
OFF_SURFACE_RHO = (0.9, 1.1)
OFF_SURFACE_NORMAL_TOL = 1e-12
CONTEXT_FLAGS = ("collar_divfree", "tangential_off_surface")
SUMMARY_COLUMNS = ["identity", "surface", "rows", "max_residual", "tol_at_max", "failures", *CONTEXT_FLAGS]
DEFAULT_POINTS = 16

REVOLUTION_KINDS = ("sphere", "ellipsoid", "revolution")
ALL_KINDS = REVOLUTION_KINDS + ("nsphere",)


# -----------------------------------------------------------------------------
# Data models
# -----------------------------------------------------------------------------
@dataclass
class Sample:
    """One evaluation site: geometry on the surface plus the field under test."""

    ctx: OperatorContext
    geom: LocalGeometry
    av: Optional[AmbientField]
    point: Dict[str, Any]
    index: int = 0
    seed: int = 0

    @cached_property
    def V(self) -> np.ndarray:
        return self.av.at(self.geom)  # type: ignore[union-attr]

    @cached_property
    def comps(self) -> List[Any]:
        return self.av.frame_components(self.geom)  # type: ignore[union-attr]

    @property
    def v(self) -> List[Any]:
        """Tangent frame components of the extension."""
        return self.comps[: self.geom.dim]

    @cached_property
    def v_surface(self) -> np.ndarray:
        """The tangent field itself (Cartesian floats)."""
        return values(self.av.tangent.at(self.geom))  # type: ignore[union-attr]

    def T(self, vec: Sequence[Any]) -> np.ndarray:
        """Tangential part of a float or jet vector, as floats."""
        return values(self.geom.tangent(jet_vector([value_of(x) for x in vec])))

    def E(self, i: int) -> np.ndarray:
        return values(self.geom.frame[i])

    def frame_sum(self, comps: Sequence[Any]) -> np.ndarray:
        """sum_i c^i E_i over the tangent frame, floats."""
        out = np.zeros(self.geom.ambient_dim)
        for c, E in zip(comps, self.geom.frame):
            out = out + value_of(c) * values(E)
        return out


@dataclass
class Evaluation:
    lhs: np.ndarray
    rhs: np.ndarray
    terms: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class IdentityCheck:
    id: str
    title: str
    kinds: Tuple[str, ...]
    evaluate: Callable[[Sample], Evaluation]
    needs_field: bool = True
    needs_divfree: bool = False
    needs_homogeneous: bool = False
    tolerance_key: str = "jets"
    certificate: bool = False
    fd: Optional[Callable[[Sample, Evaluation], Evaluation]] = None

    def admits(self, surface: Any) -> bool:
        return surface.kind in self.kinds


@dataclass
class ResidualRow:
    id: str
    surface: str
    field: str
    extension: str
    point: Dict[str, Any]
    terms: Dict[str, Any]
    lhs: List[float]
    rhs: List[float]
    residual: float
    tol: float
    passed: bool
    route: str = "jets"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "surface": self.surface,
            "field": self.field,
            "extension": self.extension,
            "point": self.point,
            "terms": self.terms,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "tol": self.tol,
            "pass": self.passed,
            "route": self.route,
        }


@dataclass
class ResidualReport:
    meta: Dict[str, Any]
    results: List[ResidualRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[ResidualRow]:
        return [r for r in self.results if not r.passed]

    def extend(self, rows: Iterable[ResidualRow]) -> None:
        self.results.extend(rows)

    def to_dict(self) -> Dict[str, Any]:
        return {"meta": self.meta, "results": [r.to_dict() for r in self.results]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def write_json(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")

    def frame(self) -> pd.DataFrame:
        rows = [
            {
                "identity": r.id,
                "surface": r.surface,
                "field": r.field,
                "extension": r.extension,
                "route": r.route,
                "t": r.point.get("t", math.nan),
                "residual": r.residual,
                "tol": r.tol,
                "pass": r.passed,
                **{flag: r.terms.get(flag) for flag in CONTEXT_FLAGS},
            }
            for r in self.results
        ]
        return pd.DataFrame(
            rows,
            columns=["identity", "surface", "field", "extension", "route", "t", "residual", "tol", "pass", *CONTEXT_FLAGS],
        )

    def summary(self) -> pd.DataFrame:
        """Worst-case residual per (identity, surface); context flags hold only if they hold on every row."""
        df = self.frame()
        if df.empty:
            return pd.DataFrame(columns=SUMMARY_COLUMNS)
        df["failed"] = ~df["pass"].astype(bool)
        keys = ["identity", "surface"]
        worst = df.loc[df.groupby(keys, sort=False)["residual"].idxmax()]
        counts = df.groupby(keys, sort=False).agg(rows=("residual", "size"), failures=("failed", "sum"))
        out = worst.set_index(keys)[["residual", "tol"]].rename(
            columns={"residual": "max_residual", "tol": "tol_at_max"}
        )
        out = counts.join(out)
        flagged = df.dropna(subset=list(CONTEXT_FLAGS))
        if not flagged.empty:
            flags = flagged.astype({flag: bool for flag in CONTEXT_FLAGS}).groupby(keys, sort=False)
            out = out.join(flags[list(CONTEXT_FLAGS)].all())
        for flag in CONTEXT_FLAGS:
            column = out[flag] if flag in out else pd.Series(None, index=out.index, dtype=object)
            out[flag] = column.astype(object).where(column.notna(), None)
        return out.reset_index()[SUMMARY_COLUMNS]

    def write_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        self.summary().to_csv(path, index=False)

    def write_plot_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame()[["identity", "surface", "t", "residual"]].to_csv(path, index=False)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ResidualReport":
        rows = [
            ResidualRow(
                id=r["id"],
                surface=r["surface"],
                field=r["field"],
                extension=r["extension"],
                point=dict(r["point"]),
                terms=dict(r.get("terms", {})),
                lhs=list(r["lhs"]),
                rhs=list(r["rhs"]),
                residual=float(r["residual"]),
                tol=float(r["tol"]),
                passed=bool(r["pass"]),
                route=r.get("route", "jets"),
            )
            for r in data.get("results", [])
        ]
        return cls(dict(data.get("meta", {})), rows)


# -----------------------------------------------------------------------------
# Shared pieces of the recipes
# -----------------------------------------------------------------------------
def _floats(x: Any) -> List[float]:
    return [float(v) for v in np.ravel(np.asarray(x, dtype=float))]


def _lap_ambient(s: Sample) -> np.ndarray:
    return bochner_frame(s.geom, s.V, ambient=True)


def _shape_floats(s: Sample, comps: Sequence[Any]) -> np.ndarray:
    return values(s.geom.shape_apply([value_of(c) for c in comps]))


def _tangent_comps(s: Sample, vec: Sequence[Any]) -> List[float]:
    return [float(np.dot(values(vec), s.E(i))) for i in range(s.geom.dim)]


def _divfree_context(s: Sample) -> Dict[str, bool]:
    """
    Require div V = 0 and div v = 0 at the point; report how far the
    hypotheses extend off the surface.

    collar_divfree: the ambient divergence also vanishes on the level sets
    rho in COLLAR. tangential_off_surface: the extension has no normal
    component at rho in OFF_SURFACE_RHO.
    """
    amb, surf = divergence_residuals(s.av, s.geom)  # type: ignore[arg-type]
    if abs(amb) > CONTEXT_DIV_TOL or abs(surf) > CONTEXT_DIV_TOL:
        raise ContextViolation(
            f"{s.av.label}: needs div V = 0 and div v = 0 on the surface, got {amb:.2e} / {surf:.2e}"  # type: ignore[union-attr]
        )
    if not isinstance(s.geom, ChartPoint):
        return {}
    surface = s.ctx.surface
    collar = max(
        abs(divergence(s.av, surface.geometry(s.point, order=1, rho=rho), "ambient"))  # type: ignore[arg-type]
        for rho in COLLAR
    )
    normal = max(normal_component_off_surface(s.av, surface, s.point, rho) for rho in OFF_SURFACE_RHO)  # type: ignore[arg-type]
    if normal > OFF_SURFACE_NORMAL_TOL:
        log.debug("%s: extension leaves the level sets (|v^N|=%.2e)", s.av.label, normal)  # type: ignore[union-attr]
    return {
        "collar_divfree": bool(collar <= CONTEXT_DIV_TOL),
        "tangential_off_surface": bool(normal <= OFF_SURFACE_NORMAL_TOL),
    }


def _chart(s: Sample) -> ChartPoint:
    if not isinstance(s.geom, ChartPoint):
        raise ContextViolation("identity needs a surface of revolution")
    return s.geom


# -- field-level pieces shared by the Laplacian identities --
def _normal_pieces(s: Sample) -> Dict[str, np.ndarray]:
    return thm1_normal_terms(s.geom, s.V)


def _bochner_S(s: Sample) -> np.ndarray:
    return bochner_intrinsic(s.geom, s.av)  # type: ignore[arg-type]


def _L(s: Sample, X: Sequence[Any], omega: Sequence[Any]) -> np.ndarray:
    return lie_deriv_oneform(s.geom, X, omega)


# -----------------------------------------------------------------------------
# Recipes: first-order identities
# -----------------------------------------------------------------------------
def eval_gauss(s: Sample) -> Evaluation:
    """D_{E_i} V = nabla_{E_i} v + kappa^i v^i N at rho = 1."""
    geom = s.geom
    N = values(geom.normal)
    if isinstance(geom, ChartPoint):
        nabla = chart_cov_deriv(geom, s.av.tangent.frame_jets(geom))  # type: ignore[union-attr]
    else:
        nabla = [s.T(geom.directional(E, s.V)) for E in geom.frame]
    lhs, rhs = [], []
    for i, E in enumerate(geom.frame):
        lhs.append(values(geom.directional(E, s.V)))
        rhs.append(nabla[i] + value_of(geom.kappa[i]) * value_of(s.v[i]) * N)
    return Evaluation(np.concatenate(lhs), np.concatenate(rhs))


def fd_gauss(s: Sample, ev: Evaluation) -> Evaluation:
    x = values(s.geom.position)
    V = s.ctx.cartesian_field(s.av)  # type: ignore[arg-type]
    lhs = [np.asarray(fd_cov_deriv(V, x, s.E(i)).value) for i in range(s.geom.dim)]
    return Evaluation(np.concatenate(lhs), ev.rhs)


def eval_weingarten(s: Sample) -> Evaluation:
    """D_{E_i} N = -kappa^i E_i."""
    geom = s.geom
    lhs = [values(geom.directional(E, geom.normal)) for E in geom.frame]
    rhs = [-value_of(k) * values(E) for k, E in zip(geom.kappa, geom.frame)]
    return Evaluation(np.concatenate(lhs), np.concatenate(rhs))


def eval_lemma_key(s: Sample) -> Evaluation:
    """Frame formulas of the rough Laplacians against coordinate routes."""
    geom = s.geom
    ambient = bochner_frame(geom, s.V, ambient=True)
    rough = []
    for comp in s.V:
        g = geom.grad(comp)
        rough.append(-sum(value_of(geom.grad(g[k])[k]) for k in range(geom.ambient_dim)))
    lhs, rhs = [ambient], [np.array(rough)]
    if isinstance(geom, ChartPoint):
        lhs.append(bochner_frame(geom, s.av.tangent.at(geom), ambient=False))  # type: ignore[union-attr]
        rhs.append(_bochner_S(s))
    return Evaluation(np.concatenate(lhs), np.concatenate(rhs))


def _lie_vectors(s: Sample) -> List[Tuple[str, np.ndarray]]:
    return [("N", s.geom.normal), ("E1", s.geom.frame[0])]


def eval_lie_pairing(s: Sample) -> Evaluation:
    """<L_X w, Y>: Cartesian Lie derivative against the lemma-form."""
    geom = s.geom
    lhs, rhs = [], []
    for _, X in _lie_vectors(s):
        LX = _L(s, X, s.V)
        for Y in geom.full_frame:
            lhs.append(value_of(dot(LX, Y)))
            rhs.append(value_of(lie_pairing_lemma(geom, X, s.V, Y)))
    return Evaluation(np.array(lhs), np.array(rhs))


def fd_lie_pairing(s: Sample, ev: Evaluation) -> Evaluation:
    geom = s.geom
    x = values(geom.position)
    V = s.ctx.cartesian_field(s.av)  # type: ignore[arg-type]
    surface = s.ctx.surface

    def normal(y: np.ndarray) -> np.ndarray:
        return values(surface.geometry_at_cartesian(y, order=0).normal)

    def e1(y: np.ndarray) -> np.ndarray:
        return values(surface.geometry_at_cartesian(y, order=0).frame[0])

    lhs = []
    for X in (normal, e1):
        for Y in geom.full_frame:
            lhs.append(fd_cartan_pairing(V, X, x, values(Y))[0])
    return Evaluation(np.array(lhs), ev.rhs)


def eval_lie_relate(s: Sample) -> Evaluation:
    """(L_X w)_a against the component-form [X, w#]_a + g(D_{w#} X, E_a) + g(w#, D_{E_a} X)."""
    geom = s.geom
    lhs, rhs = [], []
    for _, X in _lie_vectors(s):
        LX = _L(s, X, s.V)
        for E in geom.full_frame:
            lhs.append(value_of(dot(LX, E)))
            rhs.append(value_of(lie_component_relate(geom, X, s.V, E)))
    return Evaluation(np.array(lhs), np.array(rhs))


def eval_lie_shape(s: Sample) -> Evaluation:
    """T(L_N w) = T[N, v] - 2 s v."""
    geom = s.geom
    lhs = s.T(_L(s, geom.normal, s.V))
    bracket = s.T(lie_bracket(geom, geom.normal, s.V))
    sv = _shape_floats(s, s.v)
    return Evaluation(lhs, bracket - 2.0 * sv, {"T_bracket": _floats(bracket), "shape_v": _floats(sv)})


def eval_lie3(s: Sample) -> Evaluation:
    """(L_N w)(N) = c^3_13 v^1 for divergence-free pairs."""
    geom = _chart(s)
    lhs = value_of(dot(_L(s, geom.normal, s.V), geom.normal))
    rhs = value_of(geom.structure.c313) * value_of(s.v[0])
    return Evaluation(np.array([lhs]), np.array([rhs]))


def eval_liey(s: Sample) -> Evaluation:
    """f^2 L_{(c313/f^2) E1} w against its component expansion."""
    geom = _chart(s)
    c = geom.structure
    f2 = geom.f * geom.f
    weight = c.c313 / f2
    X = geom.frame[0] * weight
    LX = _L(s, X, s.V)
    E1 = geom.frame[0]
    lhs = [value_of(f2 * dot(LX, E)) for E in geom.frame]
    c313 = value_of(c.c313)
    c221 = -value_of(c.c212)
    dv = [value_of(geom.directional(E1, vi)) for vi in s.v]
    rhs = [
        c313 * dv[0] + value_of(f2) * value_of(geom.directional(E1, weight)) * value_of(s.v[0]),
        c313 * dv[1] + c313 * c221 * value_of(s.v[1]),
    ]
    return Evaluation(np.array(lhs), np.array(rhs))


# -----------------------------------------------------------------------------
# Recipes: Laplacian identities
# -----------------------------------------------------------------------------
def eval_thm1(s: Sample) -> Evaluation:
    """Tangential part of the ambient rough Laplacian on a hypersurface."""
    geom = s.geom
    lhs = s.T(_lap_ambient(s))
    pieces = _normal_pieces(s)
    terms = {
        "bochner_S": _bochner_S(s),
        "minus_ricci": -ricci_vector(geom, s.v),
        "nH_bracket": s.T(pieces["nH_bracket"]),
        "minus_DN_DN_v": -s.T(pieces["DN_DN_v"]),
        "D_DNN_v": s.T(pieces["D_DNN_v"]),
    }
    rhs = sum(terms.values())
    return Evaluation(lhs, rhs, {k: _floats(v) for k, v in terms.items()})


def _fd_lap(s: Sample) -> np.ndarray:
    x = values(s.geom.position)
    lap, _ = fd_rough_laplacian(s.ctx.cartesian_field(s.av), x)  # type: ignore[arg-type]
    return lap


def fd_tangential_lap(s: Sample, ev: Evaluation) -> Evaluation:
    n = s.geom.ambient_dim
    return Evaluation(s.T(_fd_lap(s)), ev.rhs[:n], ev.terms)


def fd_full_lap(s: Sample, ev: Evaluation) -> Evaluation:
    return Evaluation(_fd_lap(s), ev.rhs, ev.terms)


def eval_cor1(s: Sample) -> Evaluation:
    """Full ambient rough Laplacian, normal part included."""
    geom = s.geom
    lhs = _lap_ambient(s)
    pieces = _normal_pieces(s)
    N = values(geom.normal)
    normal_coef = 0.0
    for i, Ei in enumerate(geom.frame):
        ki = geom.kappa[i]
        DV = geom.directional(Ei, s.V)
        normal_coef += value_of(ki) * value_of(dot(DV, Ei))
        normal_coef += value_of(geom.directional(Ei, ki * s.v[i]))
        DEE = geom.directional(Ei, Ei)
        for j, Ej in enumerate(geom.frame):
            normal_coef -= value_of(geom.kappa[j]) * value_of(dot(DEE, Ej)) * value_of(s.v[j])
    terms = {
        "bochner_S": _bochner_S(s),
        "minus_ricci": -ricci_vector(geom, s.v),
        "nH_bracket": pieces["nH_bracket"],
        "minus_DN_DN_v": -pieces["DN_DN_v"],
        "D_DNN_v": pieces["D_DNN_v"],
        "normal": -normal_coef * N,
    }
    rhs = sum(terms.values())
    return Evaluation(lhs, rhs, {k: _floats(v) for k, v in terms.items()})


def eval_sphere_thm1(s: Sample) -> Evaluation:
    """Unit sphere, rho^k extension: nabla* nabla v + v - 2k v - k(k-1) v."""
    k = s.av.strategy.k  # type: ignore[union-attr]
    lhs = s.T(_lap_ambient(s))
    v = s.v_surface
    rhs = _bochner_S(s) + (1.0 - 2.0 * k - k * (k - 1.0)) * v
    return Evaluation(lhs, rhs, {"k": k})


def _Y(geom: ChartPoint) -> np.ndarray:
    """|grad rho| E1(|grad rho|) E1 with |grad rho| = 1/f."""
    g = 1.0 / geom.f
    return geom.frame[0] * (g * geom.directional(geom.frame[0], g))


def _thm2_terms(s: Sample) -> Tuple[np.ndarray, Dict[str, np.ndarray], np.ndarray]:
    geom = _chart(s)
    N = geom.normal
    LN = _L(s, N, s.V)
    LNLN = _L(s, N, LN)
    k1, k2 = (value_of(k) for k in geom.kappa)
    c313 = value_of(geom.structure.c313)
    E1 = s.E(0)
    terms = {
        "hodge_S": hodge_surface(geom, s.av.tangent.frame_jets(geom)),  # type: ignore[union-attr]
        "minus_LN_LN": -s.T(LNLN),
        "kappa_diff_LN": (k1 - k2) * s.T(LN),
        "Y_term": value_of(geom.f) ** 2 * s.T(_L(s, _Y(geom), s.V)),
        "E1_term": 2.0 * (k2 - k1) * value_of(dot(LN, geom.frame[0])) * E1,
        "c313_term": -2.0 * c313 ** 2 * value_of(s.v[0]) * E1,
    }
    return s.T(_lap_ambient(s)), terms, LNLN


def eval_thm2(s: Sample) -> Evaluation:
    lhs, terms, _ = _thm2_terms(s)
    return Evaluation(lhs, sum(terms.values()), {k: _floats(v) for k, v in terms.items()})


def eval_cor2(s: Sample) -> Evaluation:
    """Gradient-field form plus the component relations it rests on."""
    geom = _chart(s)
    G = geom.grad_rho
    f = geom.f
    fv = value_of(f)
    k1, k2 = (value_of(k) for k in geom.kappa)
    c313 = value_of(geom.structure.c313)
    N_inv_f = value_of(geom.directional(geom.normal, 1.0 / f))
    LG = _L(s, G, s.V)
    LG2 = _L(s, G, jet_vector(list((f * f) * LG)))
    E1 = s.E(0)
    terms = {
        "hodge_S": hodge_surface(geom, s.av.tangent.frame_jets(geom)),  # type: ignore[union-attr]
        "minus_LG_f2_LG": -s.T(LG2),
        "gradient_coef": ((k1 - k2) * fv - fv * fv * N_inv_f) * s.T(LG),
        "Y_term": fv ** 2 * s.T(_L(s, _Y(geom), s.V)),
        "E1_term": 2.0 * fv * (k2 - k1) * value_of(dot(LG, geom.frame[0])) * E1,
    }
    lhs = s.T(_lap_ambient(s))
    rhs = sum(terms.values())

    LN = _L(s, geom.normal, s.V)
    LNLN = _L(s, geom.normal, LN)
    ln = _tangent_comps(s, LN)
    lg = _tangent_comps(s, LG)
    lnln = _tangent_comps(s, LNLN)
    lg2 = _tangent_comps(s, LG2)
    v1 = value_of(s.v[0])
    rel_lhs = ln + lnln
    rel_rhs = [fv * x for x in lg] + [
        lg2[i] + fv * N_inv_f * ln[i] - (2.0 * c313 ** 2 * v1 if i == 0 else 0.0) for i in range(2)
    ]
    out_terms = {k: _floats(v) for k, v in terms.items()}
    out_terms["relations"] = {"lhs": rel_lhs, "rhs": rel_rhs}
    return Evaluation(np.concatenate([lhs, rel_lhs]), np.concatenate([rhs, rel_rhs]), out_terms)


def eval_sphere_thm2(s: Sample) -> Evaluation:
    """Unit sphere: Hodge_S v - T L_{d rho} L_{d rho} w; the other terms vanish."""
    geom = _chart(s)
    lhs, terms, _ = _thm2_terms(s)
    R = geom.radial
    LR = _L(s, R, s.V)
    LRLR = _L(s, R, LR)
    rhs = terms["hodge_S"] - s.T(LRLR)
    vanishing = [float(np.linalg.norm(terms[k])) for k in ("kappa_diff_LN", "Y_term", "E1_term", "c313_term")]
    return Evaluation(
        np.concatenate([lhs, vanishing]),
        np.concatenate([rhs, np.zeros(len(vanishing))]),
        {"vanishing": dict(zip(("kappa_diff_LN", "Y_term", "E1_term", "c313_term"), vanishing))},
    )


def eval_double_lie(s: Sample) -> Evaluation:
    """T(L_N L_N w) in its ambient-connection form and its structure-constant form."""
    geom = _chart(s)
    N = geom.normal
    LN = _L(s, N, s.V)
    lhs = s.T(_L(s, N, LN))
    DN_DN_V = s.T(geom.directional(N, geom.directional(N, s.V)))
    s_LN = _shape_floats(s, _tangent_comps(s, LN))
    k = [value_of(x) for x in geom.kappa]
    v = [value_of(x) for x in s.v]
    s2v = s.frame_sum([k[i] ** 2 * v[i] for i in range(2)])
    common = DN_DN_V - 2.0 * s_LN - s2v
    E1 = s.E(0)

    DNN = values(geom.directional(N, N))
    form_a = common + (float(np.dot(DNN, DNN)) * v[0]) * E1
    Vf = values(s.V)
    for i, Ei in enumerate(geom.frame):
        inner = geom.directional(N, geom.directional(Ei, N))
        form_a = form_a + float(np.dot(Vf, values(inner))) * s.E(i)

    c = geom.structure
    c_ii3 = (c.c113, c.c223)
    form_b = common + (value_of(c.c313) ** 2 * v[0]) * E1
    for i in range(2):
        form_b = form_b + v[i] * value_of(geom.directional(N, c_ii3[i])) * s.E(i)
    return Evaluation(np.concatenate([lhs, lhs]), np.concatenate([form_a, form_b]))


# -----------------------------------------------------------------------------
# Recipes: scalar identities on surfaces of revolution
# -----------------------------------------------------------------------------
def eval_main1(s: Sample) -> Evaluation:
    """2 kappa^i - kappa^2 + 2 delta_i1 (kappa^2 - kappa^1) = kappa^2, in exact arithmetic."""
    geom = _chart(s)
    k1, k2 = (Fraction(value_of(k)) for k in geom.kappa)
    kap = (k1, k2)
    lhs = [2 * kap[i] - k2 + (2 * (k2 - k1) if i == 0 else 0) for i in range(2)]
    return Evaluation(np.array([float(x) for x in lhs]), np.array([float(k2), float(k2)]))


def eval_main2_i2(s: Sample) -> Evaluation:
    """-N(c^2_23) + c^3_13 c^2_21 = (kappa^2)^2."""
    geom = _chart(s)
    c = geom.structure
    lhs = -value_of(geom.directional(geom.normal, c.c223)) + value_of(c.c313) * (-value_of(c.c212))
    return Evaluation(np.array([lhs]), np.array([value_of(geom.kappa[1]) ** 2]))


def eval_main2_i1(s: Sample) -> Evaluation:
    """
    -N(c^1_13) - 3 (c^3_13)^2 + E1(c^3_13) - 2 (c^3_13 / f) E1(f) = (kappa^1)^2,
    with the curve-level identity it reduces to as a second component.
    """
    geom = _chart(s)
    c = geom.structure
    N, E1 = geom.normal, geom.frame[0]
    c313 = value_of(c.c313)
    f = value_of(geom.f)
    lhs1 = (
        -value_of(geom.directional(N, c.c113))
        - 3.0 * c313 ** 2
        + value_of(geom.directional(E1, c.c313))
        - 2.0 * (c313 / f) * value_of(geom.directional(E1, geom.f))
    )
    rhs1 = value_of(geom.kappa[0]) ** 2

    a, b = geom.a, geom.b
    d = [[x.derivative(*("t",) * k) for k in range(4)] for x in (a, b)]
    acc = d[0][2] * d[0][0] + d[1][2] * d[1][0]
    vel = d[0][1] * d[0][0] + d[1][1] * d[1][0]
    jerk = d[0][3] * d[0][0] + d[1][3] * d[1][0]
    fd1 = geom.f.derivative("t")
    fd2 = geom.f.derivative("t", "t")
    lhs2 = acc * (1.0 - vel * fd1 / f) + vel * jerk + fd2 * f
    rhs2 = -acc ** 2
    speed = unit_speed_residuals(s.ctx.surface.curve, geom.coords[1])
    return Evaluation(
        np.array([lhs1, lhs2]),
        np.array([rhs1, rhs2]),
        {"unit_speed_residuals": list(speed)},
    )


def eval_bw(s: Sample) -> Evaluation:
    """Three routes to the same surface operator on a seeded random 1-form."""
    geom = _chart(s)
    rng = np.random.default_rng([s.seed, s.index])
    c = rng.uniform(-1.0, 1.0, 8)
    exprs = (
        f"{c[0]:.17g}*sin({1 + abs(c[1]):.17g}*t + {c[2]:.17g})*cos(theta - {c[3]:.17g}) + {c[4]:.17g}*cos(t)",
        f"{c[5]:.17g}*cos(t)*sin(theta) + {c[6]:.17g}*sin(2*t) + {c[7]:.17g}",
    )
    _, t, theta = geom.coords
    w = [jet_lift(e, {"t": t, "theta": theta}, 2, ("t", "theta")).embed(CHART_VARIABLES) for e in exprs]
    routes = bw_routes(geom, w)
    A, B, C = routes["divdef"], routes["bochner"], routes["hodge"]
    return Evaluation(
        np.concatenate([A, B, A]),
        np.concatenate([B, C, C]),
        {"form": list(exprs), "divdef": _floats(A), "bochner": _floats(B), "hodge": _floats(C)},
    )


# -- ellipsoids: rotation of (a sin phi, cos phi) about the z-axis --
def _ellipsoid(s: Sample) -> Tuple[ChartPoint, float, float]:
    geom = _chart(s)
    a = float(s.ctx.surface.params["a"])
    phi = s.point.get("raw_t")
    if phi is None:
        phi = s.ctx.surface.curve.raw_param(geom.coords[1])
    lam = math.sqrt(a * a * math.cos(phi) ** 2 + math.sin(phi) ** 2)
    return geom, a, lam


def eval_ellipsoid_forms(s: Sample) -> Evaluation:
    geom, a, lam = _ellipsoid(s)
    f = value_of(geom.f)
    k1, k2 = (value_of(k) for k in geom.kappa)
    lhs = [1.0 / f ** 2, k1 * k2, k1, k2]
    rhs = [lam ** 2 / a ** 2, 1.0 / lam ** 4, -a / lam ** 3, -1.0 / (a * lam)]
    return Evaluation(np.array(lhs), np.array(rhs), {"lambda": lam})


def eval_ellipsoid_e1(s: Sample) -> Evaluation:
    geom, _, lam = _ellipsoid(s)
    root_K = 1.0 / lam ** 2
    f = value_of(geom.f)
    k1, k2 = (value_of(k) for k in geom.kappa)
    LG = s.T(_L(s, geom.grad_rho, s.V))
    LP = s.T(_L(s, geom.position, s.V))
    LY = s.T(_L(s, _Y(geom), s.V))
    N_inv_f = value_of(geom.directional(geom.normal, 1.0 / geom.f))
    lhs = (1.0 - f * f) * LG + root_K * f * f * LG - root_K * LP
    rhs = ((k1 - k2) * f - f * f * N_inv_f) * LG + f * f * LY
    return Evaluation(lhs, rhs, {"sqrt_K": root_K})


def eval_ellipsoid_e2(s: Sample) -> Evaluation:
    geom, a, lam = _ellipsoid(s)
    root_K = 1.0 / lam ** 2
    f = value_of(geom.f)
    k1, k2 = (value_of(k) for k in geom.kappa)
    lg1 = value_of(dot(_L(s, geom.grad_rho, s.V), geom.frame[0]))
    lhs = -root_K * (1.0 - f * f) * lg1
    rhs = f * (k2 - k1) * lg1
    closed = (a * a - lam ** 2) / lam ** 4 * lg1
    return Evaluation(np.array([lhs, lhs]), np.array([rhs, closed]), {"lg1": lg1})


# -----------------------------------------------------------------------------
# Catalog
# -----------------------------------------------------------------------------
CATALOG: Tuple[IdentityCheck, ...] = (
    IdentityCheck("GAUSS", "Gauss formula D_{E_i} V = nabla_{E_i} v + kappa^i v^i N", ALL_KINDS, eval_gauss, fd=fd_gauss),
    IdentityCheck("WEINGARTEN", "Weingarten equation D_{E_i} N = -kappa^i E_i", ALL_KINDS, eval_weingarten, needs_field=False),
    IdentityCheck("LEMMA_KEY", "frame formula of the rough Laplacian", ALL_KINDS, eval_lemma_key),
    IdentityCheck("THM1", "tangential rough Laplacian decomposition", ALL_KINDS, eval_thm1, fd=fd_tangential_lap),
    IdentityCheck("COR1", "full rough Laplacian with normal part", ALL_KINDS, eval_cor1, fd=fd_full_lap),
    IdentityCheck("SPHERE_THM1", "unit sphere, homogeneous extension", ("sphere",), eval_sphere_thm1,
                  needs_homogeneous=True, tolerance_key="sphere_thm1"),
    IdentityCheck("LIE_PAIRING", "Lie derivative pairing, lemma form", ALL_KINDS, eval_lie_pairing, fd=fd_lie_pairing),
    IdentityCheck("LIE_RELATE", "Lie derivative components vs brackets", ALL_KINDS, eval_lie_relate),
    IdentityCheck("LIE_SHAPE", "T(L_N w) = T[N, v] - 2 s v", ALL_KINDS, eval_lie_shape),
    IdentityCheck("LIE3", "(L_N w)(N) = c^3_13 v^1", REVOLUTION_KINDS, eval_lie3, needs_divfree=True),
    IdentityCheck("LIEY", "expansion of L along (c^3_13 / f^2) E1", REVOLUTION_KINDS, eval_liey),
    IdentityCheck("DOUBLE_LIE", "T(L_N L_N w), two forms", REVOLUTION_KINDS, eval_double_lie, needs_divfree=True),
    IdentityCheck("THM2", "Laplacian via Hodge and Lie derivatives", REVOLUTION_KINDS, eval_thm2,
                  needs_divfree=True, tolerance_key="thm2", certificate=True, fd=fd_tangential_lap),
    IdentityCheck("COR2", "gradient-field form of the Hodge decomposition", REVOLUTION_KINDS, eval_cor2,
                  needs_divfree=True, tolerance_key="thm2", certificate=True, fd=fd_tangential_lap),
    IdentityCheck("SPHERE_THM2", "unit sphere, Hodge form", ("sphere",), eval_sphere_thm2,
                  needs_divfree=True, tolerance_key="sphere_thm2"),
    IdentityCheck("MAIN1", "principal curvature combination", REVOLUTION_KINDS, eval_main1,
                  needs_field=False, tolerance_key="exact"),
    IdentityCheck("MAIN2_I2", "second principal curvature squared", REVOLUTION_KINDS, eval_main2_i2,
                  needs_field=False, certificate=True, tolerance_key="curve"),
    IdentityCheck("MAIN2_I1", "first principal curvature squared", REVOLUTION_KINDS, eval_main2_i1,
                  needs_field=False, certificate=True, tolerance_key="curve"),
    IdentityCheck("BW", "three routes to the surface operator on 1-forms", REVOLUTION_KINDS, eval_bw, needs_field=False),
    IdentityCheck("ELLIPSOID_FORMS", "closed forms on the ellipsoid", ("ellipsoid",), eval_ellipsoid_forms,
                  needs_field=False, tolerance_key="closed_form"),
    IdentityCheck("ELLIPSOID_E1", "ellipsoid gradient-term reduction", ("ellipsoid",), eval_ellipsoid_e1),
    IdentityCheck("ELLIPSOID_E2", "ellipsoid E1-term reduction", ("ellipsoid",), eval_ellipsoid_e2,
                  tolerance_key="ellipsoid_e2"),
)
CATALOG_BY_ID: Dict[str, IdentityCheck] = {c.id: c for c in CATALOG}


def get_check(identity: str) -> IdentityCheck:
    try:
        return CATALOG_BY_ID[identity.upper()]
    except KeyError:
        raise ConfigError(f"unknown identity '{identity}'", "identities") from None


def identities_for(surface_kind: Optional[str] = None) -> List[IdentityCheck]:
    if surface_kind is None:
        return list(CATALOG)
    return [c for c in CATALOG if surface_kind in c.kinds]


# -----------------------------------------------------------------------------
# Running
# -----------------------------------------------------------------------------
def tolerance_for(
    check: IdentityCheck,
    lhs_norm: float,
    surface: Any,
    route: str = "jets",
    tolerances: Optional[Mapping[str, float]] = None,
    tol: Optional[float] = None,
) -> float:
    policy = dict(TOLERANCE_POLICY)
    policy.update(tolerances or {})
    key = "fd" if route == "fd" else check.tolerance_key
    base = policy[key]
    if tol is not None and key != "exact":
        base = float(tol)
    out = base * (1.0 + lhs_norm)
    if check.certificate or route == "fd":
        out += CERTIFICATE_FACTOR * float(surface.certified_tolerance)
    return out


def versions() -> Dict[str, str]:
    import scipy

    return {"hypersurface_laplacians": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _check_context(check: IdentityCheck, surface: Any, av: Optional[AmbientField]) -> None:
    if not check.admits(surface):
        raise ContextViolation(f"{check.id} is not defined on {surface.kind} surfaces ({surface.name})")
    if check.needs_field and av is None:
        raise ContextViolation(f"{check.id} needs a field")
    if check.needs_homogeneous and (av is None or av.strategy.kind != "homogeneous"):
        raise ContextViolation(f"{check.id} needs a homogeneous rho^k extension")


def _row(
    check: IdentityCheck,
    sample: Sample,
    ev: Evaluation,
    route: str,
    tolerances: Optional[Mapping[str, float]],
    tol: Optional[float],
    context: Optional[Mapping[str, bool]] = None,
) -> ResidualRow:
    lhs = _floats(ev.lhs)
    rhs = _floats(ev.rhs)
    if len(lhs) != len(rhs):
        raise HypersurfaceError(f"{check.id}: LHS has {len(lhs)} components, RHS {len(rhs)}")
    residual = float(np.linalg.norm(np.array(lhs) - np.array(rhs)))
    surface = sample.ctx.surface
    bound = tolerance_for(check, float(np.linalg.norm(lhs)), surface, route, tolerances, tol)
    point = {k: v for k, v in sample.geom.record().items() if k != "rho"}
    av = sample.av
    return ResidualRow(
        id=check.id,
        surface=surface.name,
        field=av.tangent.name if av is not None else "-",
        extension=av.strategy.label if av is not None else "-",
        point=point,
        terms={**ev.terms, **(context or {})},
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        tol=bound,
        passed=residual <= bound,
        route=route,
    )


def evaluate_point(
    check: IdentityCheck,
    ctx: OperatorContext,
    av: Optional[AmbientField],
    point: Dict[str, Any],
    index: int = 0,
    seed: int = 0,
    tolerances: Optional[Mapping[str, float]] = None,
    tol: Optional[float] = None,
) -> List[ResidualRow]:
    geom = ctx.geometry(point, rho=1.0)
    sample = Sample(ctx, geom, av if check.needs_field else None, point, index, seed)
    context = _divfree_context(sample) if check.needs_divfree else {}
    ev = check.evaluate(sample)
    rows = []
    if ctx.uses_jets or check.fd is None:
        rows.append(_row(check, sample, ev, "jets", tolerances, tol, context))
    if ctx.uses_fd and check.fd is not None:
        rows.append(_row(check, sample, check.fd(sample, ev), "fd", tolerances, tol, context))
    for r in rows:
        log.debug("%s %s [%s] %s residual=%.3e tol=%.2e", r.id, r.surface, r.route, r.point, r.residual, r.tol)
    return rows


def _points(surface: Any, points: Any, seed: int) -> List[Dict[str, Any]]:
    if isinstance(points, int):
        return surface.sample_points(points, seed)
    return [dict(p) for p in points]


def run_check(
    identity: str,
    surface: Any,
    field: Optional[AmbientField] = None,
    points: Any = DEFAULT_POINTS,
    seed: int = 0,
    engine: str = "jets",
    tol: Optional[float] = None,
    tolerances: Optional[Mapping[str, float]] = None,
    workers: int = 1,
) -> ResidualReport:
    """
    One identity on one surface (and field) at seeded points.

    Raises ContextViolation when the identity's hypotheses do not hold for
    the given surface or field.
    """
    check = get_check(identity)
    _check_context(check, surface, field if check.needs_field else None)
    pts = _points(surface, points, seed)

    def job(item: Tuple[int, Dict[str, Any]]) -> List[ResidualRow]:
        index, pt = item
        ctx = OperatorContext(surface, engine)
        return evaluate_point(check, ctx, field, pt, index, seed, tolerances, tol)

    items = list(enumerate(pts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(job, items))
    else:
        chunks = [job(item) for item in items]
    report = ResidualReport(_meta(seed, engine, len(pts)))
    for rows in chunks:
        report.extend(rows)
    worst = max((r.residual for r in report.results), default=0.0)
    log.info(
        "%s on %s (%s): %d rows, max residual %.3e, %d failed",
        check.id,
        surface.name,
        field.label if field is not None and check.needs_field else "-",
        len(report.results),
        worst,
        len(report.failures),
    )
    return report


def _meta(seed: int, engine: str, points: int) -> Dict[str, Any]:
    return {"seed": seed, "engine": engine, "points": points, "versions": versions()}


def run_suite(config: Any) -> ResidualReport:
    """
    Every configured identity over surfaces x fields x extensions.

    Combinations an identity is not defined for are skipped with a warning;
    field-free identities run once per surface. Row order is fixed by the
    configuration order, so a fixed seed reproduces the report exactly.
    """
    from .specs import resolve_extension, resolve_field, resolve_surface

    config = config.resolved()
    surfaces = [resolve_surface(s) for s in config.surfaces]
    fields = [resolve_field(f) for f in config.fields]
    strategies = [resolve_extension(e) for e in config.extensions]
    checks = list(CATALOG) if config.identities is None else [get_check(i) for i in config.identities]

    report = ResidualReport(_meta(config.seed, config.engine, config.points))
    skipped = 0
    for surface in surfaces:
        for check in checks:
            if not check.admits(surface):
                log.debug("Skip %s on %s (%s)", check.id, surface.name, surface.kind)
                continue
            combos: List[Optional[AmbientField]]
            if check.needs_field:
                combos = [AmbientField(tf, st) for tf in fields for st in strategies]
            else:
                combos = [None]
            for av in combos:
                try:
                    part = run_check(
                        check.id,
                        surface,
                        av,
                        points=config.points,
                        seed=config.seed,
                        engine=config.engine,
                        tol=config.tol,
                        tolerances=config.tolerances,
                        workers=config.workers,
                    )
                except (ContextViolation, FieldError) as exc:
                    skipped += 1
                    log.warning("Skip %s on %s%s: %s", check.id, surface.name, f" with {av.label}" if av else "", exc)
                    continue
                report.extend(part.results)
    report.meta["skipped"] = skipped
    log.info("Suite: %d rows, %d failed, %d combinations skipped", len(report.results), len(report.failures), skipped)
    return report


# -----------------------------------------------------------------------------
# Extension dependence and collar diagnostics
# -----------------------------------------------------------------------------
def compare_extensions(
    surface: Any,
    tf: TangentField,
    first: ExtensionStrategy,
    second: ExtensionStrategy,
    points: Any = DEFAULT_POINTS,
    seed: int = 0,
) -> ResidualReport:
    """
    The tangential Laplacian of two extensions of the same field differs
    exactly by the difference of the extension-dependent terms
    nH [N, v] - D_N D_N V + D_{D_N N} V.
    """
    report = ResidualReport(_meta(seed, "jets", points if isinstance(points, int) else len(points)))
    check = CATALOG_BY_ID["THM1"]
    pts = _points(surface, points, seed)
    for index, pt in enumerate(pts):
        ctx = OperatorContext(surface, "jets")
        geom = ctx.geometry(pt)
        diffs_lhs, diffs_rhs = [], []
        for st in (first, second):
            s = Sample(ctx, geom, AmbientField(tf, st), pt, index, seed)
            pieces = _normal_pieces(s)
            diffs_lhs.append(s.T(_lap_ambient(s)))
            diffs_rhs.append(s.T(pieces["nH_bracket"] - pieces["DN_DN_v"] + pieces["D_DNN_v"]))
        lhs = diffs_lhs[0] - diffs_lhs[1]
        rhs = diffs_rhs[0] - diffs_rhs[1]
        residual = float(np.linalg.norm(lhs - rhs))
        bound = tolerance_for(check, float(max(np.linalg.norm(d) for d in diffs_lhs)), surface)
        report.results.append(
            ResidualRow(
                id="EXTENSION_DEPENDENCE",
                surface=surface.name,
                field=tf.name,
                extension=f"{first.label} vs {second.label}",
                point={k: v for k, v in geom.record().items() if k != "rho"},
                terms={"lhs_difference_norm": float(np.linalg.norm(lhs))},
                lhs=_floats(lhs),
                rhs=_floats(rhs),
                residual=residual,
                tol=bound,
                passed=residual <= bound,
            )
        )
    return report


def collar_report(
    surface: Any,
    av: AmbientField,
    rhos: Sequence[float] = (0.9, 0.95, 1.0, 1.05, 1.1),
    points: int = 8,
    seed: int = 0,
) -> pd.DataFrame:
    """Ambient divergence and normal component of an extension on level sets near the surface."""
    pts = surface.sample_points(points, seed)
    rows = []
    for rho in rhos:
        div_max, normal_max = 0.0, 0.0
        for pt in pts:
            geom = surface.geometry(pt, order=1, rho=rho)
            div_max = max(div_max, abs(divergence(av, geom, "ambient")))
            normal_max = max(normal_max, abs(value_of(av.frame_components(geom)[-1])))
        rows.append({"rho": rho, "max_ambient_div": div_max, "max_normal_component": normal_max})
    return pd.DataFrame(rows, columns=["rho", "max_ambient_div", "max_normal_component"])
