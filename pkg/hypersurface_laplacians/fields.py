"""
Vector fields on the surface, their ambient extensions, and 1-forms.

Frame-kind fields are authored as components (v1, v2) in the chart frame
(E1, E2) of a surface of revolution, as expressions in t and theta.
Cartesian-kind fields are authored as an ambient expression W(x1, ..);
the tangent field is the projection of W at the foot point on the surface.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from .errors import FieldError, NoDivFreeExtension, RestrictionMismatch
from .jetcalc import CHART_VARIABLES, ExprTree, as_expr, jet_lift, jet_vector, value_of
from .surface import ChartPoint, LocalGeometry, christoffel_at, dot, zero_vector

log = logging.getLogger("hypersurface_laplacians.fields")

DIVFREE_TOL = 1e-8
RESTRICTION_TOL = 1e-12
COLLAR = (0.9, 0.95, 1.05, 1.1)
K_SEARCH_GRID = np.linspace(-4.0, 4.0, 17)


# -----------------------------------------------------------------------------
# Data models
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class TangentField:
    name: str
    kind: str = "frame"  # frame | cartesian
    v1: Optional[ExprTree] = None
    v2: Optional[ExprTree] = None
    components: Tuple[ExprTree, ...] = ()

    @classmethod
    def frame(cls, name: str, v1: Union[str, ExprTree], v2: Union[str, ExprTree]) -> "TangentField":
        return cls(name, "frame", as_expr(v1), as_expr(v2))

    @classmethod
    def cartesian(cls, name: str, components: Sequence[Union[str, ExprTree]]) -> "TangentField":
        return cls(name, "cartesian", components=tuple(as_expr(c) for c in components))

    def frame_jets(self, geom: LocalGeometry) -> List[Any]:
        """Tangent frame components of the rho-independent lift."""
        if self.kind == "frame":
            if not isinstance(geom, ChartPoint):
                raise FieldError(f"field '{self.name}' is given in chart-frame components; it needs a surface of revolution")
            rho, t, theta = geom.coords
            point = {"rho": rho, "t": t, "theta": theta}
            return [jet_lift(e, point, geom.order, CHART_VARIABLES) for e in (self.v1, self.v2)]
        if len(self.components) != geom.ambient_dim:
            raise FieldError(
                f"field '{self.name}' has {len(self.components)} components, ambient dimension is {geom.ambient_dim}"
            )
        foot = geom.foot
        env = {f"x{k + 1}": foot[k] for k in range(geom.ambient_dim)}
        W = jet_vector([c.evaluate(env) for c in self.components])
        return [dot(W, E) for E in geom.frame]

    def at(self, geom: LocalGeometry) -> np.ndarray:
        comps = self.frame_jets(geom)
        return geom.combine(list(comps) + [0.0])


@dataclass(frozen=True)
class ExtensionStrategy:
    kind: str = "homogeneous"  # homogeneous | custom
    k: float = 0.0
    v1: Optional[ExprTree] = None
    v2: Optional[ExprTree] = None
    v3: Optional[ExprTree] = None
    name: str = ""

    @classmethod
    def homogeneous(cls, k: float) -> "ExtensionStrategy":
        return cls("homogeneous", float(k))

    @classmethod
    def custom(cls, v1: Any, v2: Any, v3: Any, name: str = "custom") -> "ExtensionStrategy":
        return cls("custom", 0.0, as_expr(v1), as_expr(v2), as_expr(v3), name)

    @property
    def label(self) -> str:
        if self.kind == "homogeneous":
            k = int(self.k) if float(self.k).is_integer() else self.k
            return f"homogeneous:{k}"
        return f"custom:{self.name}"


@dataclass(frozen=True)
class AmbientField:
    tangent: TangentField
    strategy: ExtensionStrategy

    @property
    def label(self) -> str:
        return f"{self.tangent.name}/{self.strategy.label}"

    def frame_components(self, geom: LocalGeometry) -> List[Any]:
        """(v^1, .., v^n, v^N) of the extension near the geometry's point."""
        if self.strategy.kind == "homogeneous":
            scale = geom.rho ** self.strategy.k
            return [scale * c for c in self.tangent.frame_jets(geom)] + [0.0]
        if not isinstance(geom, ChartPoint):
            raise FieldError("custom extensions are written in (rho, t, theta) chart variables")
        rho, t, theta = geom.coords
        point = {"rho": rho, "t": t, "theta": theta}
        exprs = (self.strategy.v1, self.strategy.v2, self.strategy.v3)
        return [jet_lift(e, point, geom.order, CHART_VARIABLES) for e in exprs]

    def at(self, geom: LocalGeometry) -> np.ndarray:
        """Cartesian components of the extension."""
        return geom.combine(self.frame_components(geom))


@dataclass(frozen=True)
class FrameVector:
    components: Tuple[Any, ...]


@dataclass(frozen=True)
class OneForm:
    """Components in the dual frame (E^1, .., E^n, E^N)."""

    components: Tuple[Any, ...]


@dataclass
class DivFreePair:
    tangent: TangentField
    ambient: AmbientField
    k: float
    surface_div: float
    ambient_div: float
    collar_divfree: bool = False
    tangential_off_surface: bool = True


# -----------------------------------------------------------------------------
# Operations
# -----------------------------------------------------------------------------
def extend(
    tf: TangentField,
    strategy: ExtensionStrategy,
    surface: Any = None,
    samples: int = 20,
    seed: int = 0,
) -> AmbientField:
    """Build the extension; with a surface, check its restriction at random points."""
    av = AmbientField(tf, strategy)
    if surface is None or samples <= 0:
        return av
    worst = restriction_residual(av, surface, samples, seed)
    if worst > RESTRICTION_TOL:
        raise RestrictionMismatch(f"{av.label}: restriction to the surface differs by {worst:.3e}")
    return av


def restriction_residual(av: AmbientField, surface: Any, samples: int = 20, seed: int = 0) -> float:
    worst = 0.0
    for pt in surface.sample_points(samples, seed):
        geom = surface.geometry(pt, order=1, rho=1.0)
        ext = [value_of(c) for c in av.frame_components(geom)]
        tan = [value_of(c) for c in av.tangent.frame_jets(geom)] + [0.0]
        worst = max(worst, max(abs(x - y) for x, y in zip(ext, tan)))
    return worst


def project_tangent(geom: LocalGeometry, av: Sequence[Any]) -> np.ndarray:
    """sum_i g(av, E_i) E_i."""
    out = zero_vector(geom.ambient_dim)
    for E in geom.frame:
        out = out + dot(av, E) * E
    return out


def musical(obj: Union[FrameVector, OneForm], direction: str) -> Union[FrameVector, OneForm]:
    """Sharp/flat in an orthonormal frame: components carry over unchanged."""
    if direction == "flat":
        if not isinstance(obj, FrameVector):
            raise FieldError("flat expects a vector")
        return OneForm(tuple(obj.components))
    if direction == "sharp":
        if not isinstance(obj, OneForm):
            raise FieldError("sharp expects a 1-form")
        return FrameVector(tuple(obj.components))
    raise FieldError(f"unknown musical direction '{direction}'")


def pair(omega: OneForm, X: FrameVector) -> Any:
    return dot(omega.components, X.components)


def pullback(omega: OneForm) -> OneForm:
    """Restriction of an ambient 1-form to the surface (drops the E^N part)."""
    return OneForm(tuple(omega.components[:-1]) + (0.0,))


def divergence(av: AmbientField, geom: LocalGeometry, where: str = "ambient") -> float:
    if where == "ambient":
        V = av.at(geom)
        grads = geom.jacobian(V)
        return float(sum(value_of(g[k]) for k, g in enumerate(grads)))
    if where != "surface":
        raise FieldError(f"divergence location must be 'ambient' or 'surface', got '{where}'")
    comps = av.frame_components(geom)[: geom.dim]
    if isinstance(geom, ChartPoint):
        gamma = christoffel_at(geom.structure)
        total = 0.0
        for i, Ei in enumerate(geom.frame):
            total += value_of(geom.directional(Ei, comps[i]))
            for beta in range(geom.dim):
                total += gamma.gamma[i, i, beta] * value_of(comps[beta])
        return float(total)
    T = geom.combine(list(comps) + [0.0])
    return float(sum(value_of(dot(geom.directional(E, T), E)) for E in geom.frame))


def _ambient_div_at(av: AmbientField, surface: Any, points: Sequence[Mapping[str, Any]], rho: float = 1.0) -> List[float]:
    return [divergence(av, surface.geometry(pt, order=1, rho=rho), "ambient") for pt in points]


def find_divfree_extension(
    surface: Any,
    tf: TangentField,
    k_guess: float = 0.0,
    samples: int = 5,
    seed: int = 0,
) -> DivFreePair:
    """
    Homogeneous extension rho^k v with vanishing ambient divergence on the surface.

    k_guess is accepted when it already works; otherwise k is searched by
    root finding on the divergence at the first sample point.
    """
    points = surface.sample_points(samples, seed)
    if not points:
        raise NoDivFreeExtension("no sample points to test the extension on")

    def worst(k: float) -> float:
        av = AmbientField(tf, ExtensionStrategy.homogeneous(k))
        return max(abs(d) for d in _ambient_div_at(av, surface, points))

    k = float(k_guess)
    if worst(k) > DIVFREE_TOL:
        def signed(kk: float) -> float:
            av = AmbientField(tf, ExtensionStrategy.homogeneous(kk))
            return _ambient_div_at(av, surface, points[:1])[0]

        vals = [signed(float(kk)) for kk in K_SEARCH_GRID]
        found = None
        for lo, hi, vlo, vhi in zip(K_SEARCH_GRID[:-1], K_SEARCH_GRID[1:], vals[:-1], vals[1:]):
            if vlo == 0.0 or vlo * vhi < 0.0:
                cand = float(lo) if vlo == 0.0 else float(optimize.brentq(signed, lo, hi, xtol=1e-14))
                if worst(cand) <= DIVFREE_TOL:
                    found = cand
                    break
        if found is None:
            raise NoDivFreeExtension(f"{tf.name}: no homogeneous degree makes the ambient divergence vanish")
        k = found

    av = AmbientField(tf, ExtensionStrategy.homogeneous(k))
    amb = max(abs(d) for d in _ambient_div_at(av, surface, points))
    surf = max(abs(divergence(av, surface.geometry(pt, order=1, rho=1.0), "surface")) for pt in points)
    if surf > DIVFREE_TOL:
        raise NoDivFreeExtension(f"{tf.name}: surface divergence {surf:.3e} exceeds {DIVFREE_TOL:.0e}")
    collar = all(
        max(abs(d) for d in _ambient_div_at(av, surface, points, rho)) <= DIVFREE_TOL for rho in COLLAR
    )
    log.info("Div-free extension for %s: k=%g ambient=%.2e surface=%.2e collar=%s", tf.name, k, amb, surf, collar)
    return DivFreePair(tf, av, k, surf, amb, collar_divfree=collar)


def make_divfree_pair(surface: Any, g: Union[str, ExprTree], k_guess: float = 0.0, seed: int = 0) -> DivFreePair:
    """Azimuthal field g(t) E2 with a divergence-free ambient extension."""
    tf = TangentField.frame(f"azimuthal[{g}]", "0", g)
    return find_divfree_extension(surface, tf, k_guess, seed=seed)


def divergence_residuals(av: AmbientField, geom: LocalGeometry) -> Tuple[float, float]:
    """(ambient, surface) divergence at one point."""
    return divergence(av, geom, "ambient"), divergence(av, geom, "surface")


def normal_component_off_surface(av: AmbientField, surface: Any, point: Mapping[str, Any], rho: float = 1.1) -> float:
    geom = surface.geometry(point, order=0, rho=rho)
    return abs(value_of(av.frame_components(geom)[-1]))
