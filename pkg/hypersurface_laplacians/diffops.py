"""
Differential operators on a LocalGeometry.

Vector fields are Cartesian object arrays of jets; directional derivatives
of those are Euclidean covariant derivatives. 1-forms share the Cartesian
components of their dual vectors. Two second-derivative routes exist and
must stay independent:

  - frame route: the ambient (or tangential) frame formula
      -sum_a (D_{E_a} D_{E_a} V - D_{D_{E_a} E_a} V)
  - chart route: coordinate formulas in (t, theta) with the induced metric
      dt^2 + a(t)^2 dtheta^2 (surfaces of revolution only)

Laplacian conventions: the Bochner Laplacian nabla* nabla = -trace nabla^2
and the Hodge Laplacian d delta + delta d are both non-negative, so
Hodge = Bochner + Ric on 1-forms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import ConfigError, SurfaceError
from .fields import AmbientField, project_tangent
from .jetcalc import FDEstimate, Jet, fd_directional, jet_vector, value_of, values
from .surface import ChartPoint, LocalGeometry, christoffel_at, dot, ricci_apply, zero_vector

log = logging.getLogger("hypersurface_laplacians.diffops")

ENGINES = ("jets", "fd", "both")
COORDS = ("t", "theta")


# -----------------------------------------------------------------------------
# Context
# -----------------------------------------------------------------------------
@dataclass
class OperatorContext:
    """Surface plus engine selection; caches geometries per sample point."""

    surface: Any
    engine: str = "jets"
    order: int = 2
    _cache: Dict[Tuple, LocalGeometry] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine '{self.engine}' (expected one of {', '.join(ENGINES)})", "--engine")

    @property
    def uses_jets(self) -> bool:
        return self.engine in ("jets", "both")

    @property
    def uses_fd(self) -> bool:
        return self.engine in ("fd", "both")

    def geometry(self, point: Mapping[str, Any], rho: float = 1.0) -> LocalGeometry:
        key = (rho,) + tuple((k, tuple(v) if isinstance(v, list) else v) for k, v in sorted(point.items()))
        if key not in self._cache:
            self._cache[key] = self.surface.geometry(point, self.order, rho=rho)
        return self._cache[key]

    def cartesian_field(self, av: AmbientField) -> Callable[[np.ndarray], np.ndarray]:
        """Float evaluation V(x) at arbitrary Cartesian points (finite-difference oracles)."""

        def evaluate(x: np.ndarray) -> np.ndarray:
            return values(av.at(self.surface.geometry_at_cartesian(x, order=0)))

        return evaluate

    def normal_field(self) -> Callable[[np.ndarray], np.ndarray]:
        def evaluate(x: np.ndarray) -> np.ndarray:
            return values(self.surface.geometry_at_cartesian(x, order=0).normal)

        return evaluate


# -----------------------------------------------------------------------------
# First-order operators (jet valued)
# -----------------------------------------------------------------------------
def ambient_cov_deriv(geom: LocalGeometry, V: Sequence[Any], X: Sequence[Any]) -> np.ndarray:
    """D_X V of the Euclidean connection."""
    return geom.directional(X, jet_vector(list(V)))


def ambient_cov_deriv_frame(geom: ChartPoint, v: Sequence[Any], x: Sequence[float]) -> np.ndarray:
    """
    D_X v from frame components and the Christoffel table:
    X(v^a) E_a + X^b v^c Gamma^a_bc E_a, with X = x^b E_b.
    """
    gamma = christoffel_at(geom.structure).gamma
    X = geom.combine(list(x))
    out = []
    for alpha in range(3):
        total = value_of(geom.directional(X, v[alpha]))
        for beta in range(3):
            for c in range(3):
                total += x[beta] * value_of(v[c]) * gamma[alpha, beta, c]
        out.append(total)
    return sum(o * values(E) for o, E in zip(out, geom.full_frame))


def intrinsic_cov_deriv(geom: LocalGeometry, V: Sequence[Any], X: Sequence[Any]) -> np.ndarray:
    """nabla_X v = tangential part of D_X V."""
    return project_tangent(geom, ambient_cov_deriv(geom, V, X))


def lie_bracket(geom: LocalGeometry, X: Sequence[Any], Y: Sequence[Any]) -> np.ndarray:
    return ambient_cov_deriv(geom, Y, X) - ambient_cov_deriv(geom, X, Y)


def lie_deriv_oneform(geom: LocalGeometry, X: Sequence[Any], omega: Sequence[Any]) -> np.ndarray:
    """(L_X w)_k = X^j d_j w_k + w_j d_k X^j in Cartesian components."""
    d_omega = geom.jacobian(omega)
    d_X = geom.jacobian(X)
    out = []
    for k in range(geom.ambient_dim):
        term = dot(X, d_omega[k]) if isinstance(omega[k], Jet) else 0.0
        for j in range(geom.ambient_dim):
            if isinstance(X[j], Jet):
                term = term + omega[j] * d_X[j][k]
        out.append(term)
    return jet_vector(out)


def lie_deriv_vector(geom: LocalGeometry, X: Sequence[Any], V: Sequence[Any]) -> np.ndarray:
    """L_X V = [X, V]; differs from (L_X V-flat)-sharp unless X is Killing."""
    return lie_bracket(geom, X, V)


def lie_pairing_lemma(geom: LocalGeometry, X: Sequence[Any], omega: Sequence[Any], Y: Sequence[Any]) -> Any:
    """<L_X w, Y> = g(D_X w#, Y) + g(w#, D_Y X)."""
    return dot(ambient_cov_deriv(geom, omega, X), Y) + dot(omega, ambient_cov_deriv(geom, X, Y))


def lie_component_relate(geom: LocalGeometry, X: Sequence[Any], omega: Sequence[Any], E: Sequence[Any]) -> Any:
    """(L_X w)_a = [X, w#]_a + g(D_{w#} X, E_a) + g(w#, D_{E_a} X)."""
    return (
        dot(lie_bracket(geom, X, omega), E)
        + dot(ambient_cov_deriv(geom, X, omega), E)
        + dot(omega, ambient_cov_deriv(geom, X, E))
    )


# -----------------------------------------------------------------------------
# Second-order operators
# -----------------------------------------------------------------------------
def bochner_frame(geom: LocalGeometry, V: Sequence[Any], ambient: bool = True) -> np.ndarray:
    """
    -sum_a (D_{F_a} D_{F_a} V - D_{D_{F_a} F_a} V) over the frame F.

    ambient=True uses (E_1, .., E_n, N) and the Euclidean connection;
    ambient=False uses the tangent frame with the projected connection,
    which on the surface is the intrinsic Bochner Laplacian.
    """
    V = jet_vector(list(V))
    total = zero_vector(geom.ambient_dim)
    if ambient:
        for F in geom.full_frame:
            inner = geom.directional(F, V)
            total = total - geom.directional(F, inner) + geom.directional(geom.directional(F, F), V)
        return values(total)
    for F in geom.frame:
        inner = geom.tangent(geom.directional(F, V))
        nabla_FF = geom.tangent(geom.directional(F, F))
        total = total - geom.tangent(geom.directional(F, inner)) + geom.tangent(geom.directional(nabla_FF, V))
    return values(total)


def _d(x: Any, var: str) -> Any:
    return x.d(var) if isinstance(x, Jet) else 0.0


def _coord_christoffels(a: Jet) -> List[List[List[Any]]]:
    """G[k][i][j] for dt^2 + a^2 dtheta^2 (index 0 = t, 1 = theta)."""
    ad = a.d("t")
    G: List[List[List[Any]]] = [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
    G[0][1][1] = -(a * ad)
    G[1][0][1] = ad / a
    G[1][1][0] = ad / a
    return G


def _require_chart(geom: LocalGeometry) -> ChartPoint:
    if not isinstance(geom, ChartPoint):
        raise SurfaceError("the chart route needs a surface of revolution")
    if abs(geom.coords[0] - 1.0) > 0.0:
        raise SurfaceError("the chart route is evaluated on the surface (rho = 1)")
    return geom


def bochner_chart(geom: LocalGeometry, v: Sequence[Any]) -> np.ndarray:
    """Coordinate Bochner Laplacian of v = v1 E1 + v2 E2; Cartesian result."""
    geom = _require_chart(geom)
    a = geom.a
    G = _coord_christoffels(a)
    u = [v[0], v[1] / a]
    ginv = [1.0, 1.0 / (a * a)]
    T = [
        [_d(u[k], COORDS[j]) + sum(G[k][j][l] * u[l] for l in range(2)) for j in range(2)]
        for k in range(2)
    ]
    lap = []
    for k in range(2):
        total: Any = 0.0
        for i in range(2):
            S = _d(T[k][i], COORDS[i])
            for l in range(2):
                S = S + G[k][i][l] * T[l][i] - G[l][i][i] * T[k][l]
            total = total - ginv[i] * S
        lap.append(total)
    frame_comps = [value_of(lap[0]), value_of(lap[1] * a)]
    return sum(c * values(E) for c, E in zip(frame_comps, geom.frame))


def chart_cov_deriv(geom: LocalGeometry, v: Sequence[Any]) -> List[np.ndarray]:
    """[nabla_{E_1} v, nabla_{E_2} v] from coordinate Christoffels; Cartesian results."""
    geom = _require_chart(geom)
    a = geom.a
    G = _coord_christoffels(a)
    u = [v[0], v[1] / a]
    E = [values(F) for F in geom.frame]
    out = []
    for j, scale in ((0, 1.0), (1, 1.0 / a.value)):
        w = [value_of(_d(u[k], COORDS[j]) + sum(G[k][j][l] * u[l] for l in range(2))) for k in range(2)]
        out.append(scale * (w[0] * E[0] + a.value * w[1] * E[1]))
    return out


def bochner_intrinsic(geom: LocalGeometry, av: AmbientField) -> np.ndarray:
    """nabla* nabla v on the surface: chart route when available, else tangent-frame route."""
    if isinstance(geom, ChartPoint):
        return bochner_chart(geom, av.tangent.frame_jets(geom))
    return bochner_frame(geom, av.tangent.at(geom), ambient=False)


# -- 1-forms on surfaces of revolution (coordinate components w_t, w_theta) --
def _cov1(G: Any, w: Sequence[Any]) -> List[List[Any]]:
    return [
        [_d(w[j], COORDS[i]) - sum(G[k][i][j] * w[k] for k in range(2)) for j in range(2)]
        for i in range(2)
    ]


def _cov2(G: Any, D1: List[List[Any]]) -> List[List[List[Any]]]:
    """D2[k][i][j] = nabla_k nabla_i w_j."""
    out = []
    for k in range(2):
        rows = []
        for i in range(2):
            row = []
            for j in range(2):
                term = _d(D1[i][j], COORDS[k])
                for l in range(2):
                    term = term - G[l][k][i] * D1[l][j] - G[l][k][j] * D1[i][l]
                row.append(term)
            rows.append(row)
        out.append(rows)
    return out


def oneform_from_frame(geom: ChartPoint, w: Sequence[Any]) -> List[Any]:
    """Frame components (w_1, w_2) to coordinate components (w_t, w_theta)."""
    return [w[0], w[1] * geom.a]


def _to_frame(geom: ChartPoint, w: Sequence[Any]) -> np.ndarray:
    return np.array([value_of(w[0]), value_of(w[1]) / geom.a.value])


def _rough_coords(geom: ChartPoint, D2: Sequence[Any]) -> List[Any]:
    """nabla* nabla w in coordinate components."""
    ginv = [1.0, 1.0 / (geom.a * geom.a)]
    return [-sum(ginv[i] * D2[i][i][j] for i in range(2)) for j in range(2)]


def _gauss_curvature(geom: ChartPoint) -> float:
    return -geom.add.value / geom.a.value


def bw_routes(geom: LocalGeometry, w: Sequence[Any]) -> Dict[str, np.ndarray]:
    """
    Three evaluations of the same operator on a 1-form (frame components out):

      divdef:  -2 div Def w + grad div w
      bochner: nabla* nabla w - K w
      hodge:   (d delta + delta d) w - 2 K w
    """
    geom = _require_chart(geom)
    a = geom.a
    G = _coord_christoffels(a)
    ginv = [1.0, 1.0 / (a * a)]
    K = _gauss_curvature(geom)
    D1 = _cov1(G, w)
    D2 = _cov2(G, D1)

    div_w = sum(ginv[i] * D1[i][i] for i in range(2))
    div_def = [0.5 * sum(ginv[k] * (D2[k][k][j] + D2[k][j][k]) for k in range(2)) for j in range(2)]
    route_a = [-2.0 * div_def[j] + _d(div_w, COORDS[j]) for j in range(2)]

    rough = _rough_coords(geom, D2)
    route_b = [rough[j] - K * value_of(w[j]) for j in range(2)]

    hodge = hodge_laplacian_coords(geom, w)
    route_c = [hodge[j] - 2.0 * K * value_of(w[j]) for j in range(2)]
    return {
        "divdef": _to_frame(geom, route_a),
        "bochner": _to_frame(geom, route_b),
        "hodge": _to_frame(geom, route_c),
    }


def hodge_laplacian_coords(geom: ChartPoint, w: Sequence[Any]) -> List[float]:
    """(d delta + delta d) w with delta w = -(1/a) d_i(a g^ij w_j); the codifferential route used as a cross-check."""
    a = geom.a
    delta = -(_d(a * w[0], "t") + _d(w[1] / a, "theta")) / a
    star_dw = (_d(w[1], "t") - _d(w[0], "theta")) / a
    d_delta = [_d(delta, "t"), _d(delta, "theta")]
    delta_d = [_d(star_dw, "theta") / a, -(a * _d(star_dw, "t"))]
    return [value_of(d_delta[j] + delta_d[j]) for j in range(2)]


def hodge_surface(geom: LocalGeometry, w_frame: Sequence[Any]) -> np.ndarray:
    """
    Hodge Laplacian of a surface 1-form given in frame components, through
    the Weitzenboeck formula nabla* nabla w + K w; Cartesian result.
    """
    geom = _require_chart(geom)
    coords = oneform_from_frame(geom, w_frame)
    G = _coord_christoffels(geom.a)
    rough = _rough_coords(geom, _cov2(G, _cov1(G, coords)))
    K = _gauss_curvature(geom)
    comps = _to_frame(geom, [value_of(rough[j]) + K * value_of(coords[j]) for j in range(2)])
    return sum(c * values(E) for c, E in zip(comps, geom.frame))


def ricci_vector(geom: LocalGeometry, v: Sequence[Any]) -> np.ndarray:
    comps = ricci_apply(geom, v)
    return sum(value_of(c) * values(E) for c, E in zip(comps, geom.frame))


def thm1_normal_terms(geom: LocalGeometry, V: Sequence[Any]) -> Dict[str, np.ndarray]:
    """The extension-dependent normal terms: D_N D_N V, D_{D_N N} V and nH [N, v]."""
    V = jet_vector(list(V))
    N = geom.normal
    DN_V = geom.directional(N, V)
    DN_N = geom.directional(N, N)
    nH = value_of(geom.mean_curvature_n)
    return {
        "DN_DN_v": values(geom.directional(N, DN_V)),
        "D_DNN_v": values(geom.directional(DN_N, V)),
        "nH_bracket": nH * values(lie_bracket(geom, N, V)),
    }


# -----------------------------------------------------------------------------
# Finite-difference oracles (Cartesian, float valued)
# -----------------------------------------------------------------------------
def _unit(k: int, n: int) -> np.ndarray:
    e = np.zeros(n)
    e[k] = 1.0
    return e


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], x: Sequence[float]) -> Tuple[np.ndarray, float]:
    """J[k, j] = d_j f_k."""
    x = np.asarray(x, dtype=float)
    cols: List[np.ndarray] = []
    err = 0.0
    for j in range(len(x)):
        est = fd_directional(f, x, _unit(j, len(x)), 1)
        cols.append(np.asarray(est.value))
        err = max(err, est.error)
    return np.column_stack(cols), err


def fd_cov_deriv(f: Callable[[np.ndarray], np.ndarray], x: Sequence[float], X: Sequence[float]) -> FDEstimate:
    return fd_directional(f, x, X, 1)


def fd_rough_laplacian(f: Callable[[np.ndarray], np.ndarray], x: Sequence[float]) -> Tuple[np.ndarray, float]:
    """-sum_k d_k d_k f componentwise (the ambient Bochner Laplacian in R^m)."""
    x = np.asarray(x, dtype=float)
    total = None
    err = 0.0
    for k in range(len(x)):
        est = fd_directional(f, x, _unit(k, len(x)), 2)
        total = -np.asarray(est.value) if total is None else total - np.asarray(est.value)
        err += est.error
    return np.asarray(total), err


def fd_cartan_pairing(
    omega: Callable[[np.ndarray], np.ndarray],
    X: Callable[[np.ndarray], np.ndarray],
    x: Sequence[float],
    Y: Sequence[float],
) -> Tuple[float, float]:
    """<L_X w, Y> = dw(X, Y) + Y(w(X)) by finite differences."""
    x = np.asarray(x, dtype=float)
    Y = np.asarray(Y, dtype=float)
    J, err = fd_jacobian(omega, x)
    Xv = np.asarray(X(x))
    d_omega = float(Y @ (J - J.T) @ Xv)  # sum_jk (d_j w_k - d_k w_j) X^j Y^k
    along = fd_directional(lambda y: float(np.dot(omega(y), X(y))), x, Y, 1)
    return d_omega + float(along.value), err + along.error
