"""
Hypersurface geometry.

Two surface types share one local interface (LocalGeometry):

  - SurfaceOfRevolution: chart Phi(rho, t, theta) = rho*(a cos theta, a sin theta, b)
    around a unit-speed generating curve; point data are jets in (rho, t, theta).
  - NSphere: the round n-sphere of radius r in R^(n+1); point data are jets in
    Cartesian x1..x_{n+1}.

Sign conventions: N is the outward normal (f * grad rho on surfaces of
revolution), the shape operator s satisfies D_X N = -s X, so the unit sphere
has kappa = -1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from .curve import F_MIN, UnitSpeedCurve, scan_curve
from .errors import PoleDegeneracy, SurfaceError, TransversalityViolation
from .jetcalc import CARTESIAN_VARIABLES, CHART_VARIABLES, Jet, jet_vector, value_of, values

log = logging.getLogger("hypersurface_laplacians.surface")

POLE_CUTOFF = 1e-8
FIELD_ORDER = 2


def dot(u: Sequence[Any], v: Sequence[Any]) -> Any:
    total: Any = 0.0
    for a, b in zip(u, v):
        total = total + a * b
    return total


def zero_vector(n: int) -> np.ndarray:
    return jet_vector([0.0] * n)


# -----------------------------------------------------------------------------
# Local geometry (shared interface)
# -----------------------------------------------------------------------------
class LocalGeometry:
    """Jet-valued geometric data in a neighbourhood of one sample point."""

    dim: int
    ambient_dim: int
    variables: Tuple[str, ...]
    rho: Jet
    position: np.ndarray
    normal: np.ndarray
    frame: List[np.ndarray]
    kappa: List[Jet]
    surface: Any

    # -- derivatives ----------------------------------------------------------
    def grad(self, w: Any) -> np.ndarray:
        raise NotImplementedError

    def directional(self, X: Sequence[Any], W: Any) -> Any:
        """D_X W for a scalar jet or a vector (object array) of jets."""
        if isinstance(W, np.ndarray):
            return jet_vector([self.directional(X, w) for w in W])
        if not isinstance(W, Jet):
            return 0.0
        return dot(X, self.grad(W))

    def jacobian(self, W: Sequence[Any]) -> List[np.ndarray]:
        """Rows dW_k as Cartesian gradients."""
        return [self.grad(w) for w in W]

    # -- frame algebra --------------------------------------------------------
    @property
    def full_frame(self) -> List[np.ndarray]:
        return list(self.frame) + [self.normal]

    def components(self, V: Sequence[Any]) -> List[Any]:
        """Frame components (V.E_1, ..., V.E_n, V.N)."""
        return [dot(V, E) for E in self.full_frame]

    def combine(self, comps: Sequence[Any]) -> np.ndarray:
        out = zero_vector(self.ambient_dim)
        for c, E in zip(comps, self.full_frame):
            out = out + c * E
        return out

    def tangent(self, V: Sequence[Any]) -> np.ndarray:
        """V - (V.N) N."""
        return jet_vector(list(V)) - dot(V, self.normal) * self.normal

    @property
    def foot(self) -> np.ndarray:
        """Radial projection of the point onto the surface (rho = 1)."""
        return self.position / self.rho

    @property
    def radial(self) -> np.ndarray:
        """The coordinate field d/d rho."""
        raise NotImplementedError

    @property
    def mean_curvature_n(self) -> Jet:
        """nH = sum of the principal curvatures."""
        out = self.kappa[0]
        for k in self.kappa[1:]:
            out = out + k
        return out

    def shape_apply(self, comps: Sequence[Any]) -> np.ndarray:
        """s v = sum_i kappa^i v^i E_i for tangent frame components v^i."""
        out = zero_vector(self.ambient_dim)
        for k, c, E in zip(self.kappa, comps, self.frame):
            out = out + (k * c) * E
        return out

    def record(self) -> Dict[str, Any]:
        raise NotImplementedError


# -----------------------------------------------------------------------------
# Data models
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class StructureConstants:
    """[E_a, E_b] = c^g_ab E_g; only the independent nonzero entries are stored."""

    c113: Any
    c313: Any
    c223: Any
    c212: Any

    def values(self) -> "StructureConstants":
        return StructureConstants(*(value_of(x) for x in (self.c113, self.c313, self.c223, self.c212)))

    def table(self) -> np.ndarray:
        """Full c[g][a][b] (0-based: 0 = E1, 1 = E2, 2 = N) as floats."""
        v = self.values()
        c = np.zeros((3, 3, 3))
        c[0, 0, 2], c[0, 2, 0] = v.c113, -v.c113
        c[2, 0, 2], c[2, 2, 0] = v.c313, -v.c313
        c[1, 1, 2], c[1, 2, 1] = v.c223, -v.c223
        c[1, 0, 1], c[1, 1, 0] = v.c212, -v.c212
        return c


@dataclass(frozen=True)
class ChristoffelTable:
    """gamma[g][a][b] = Gamma^g_ab with D_{E_a} E_b = Gamma^g_ab E_g."""

    gamma: np.ndarray

    def __call__(self, g: int, a: int, b: int) -> float:
        return float(self.gamma[g - 1, a - 1, b - 1])


@dataclass(frozen=True)
class FramePoint:
    p: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    N: np.ndarray
    chart: Tuple[float, float, float]
    drho: np.ndarray
    drho_split: np.ndarray  # f N + (a a' + b b') E1


# -----------------------------------------------------------------------------
# Surfaces of revolution
# -----------------------------------------------------------------------------
class ChartPoint(LocalGeometry):
    dim = 2
    ambient_dim = 3
    variables = CHART_VARIABLES

    def __init__(
        self,
        surface: "SurfaceOfRevolution",
        rho: float,
        t: float,
        theta: float,
        order: int = FIELD_ORDER,
        raw_t: Optional[float] = None,
    ):
        if rho <= 0.0:
            raise SurfaceError(f"rho must be positive, got {rho}")
        self.surface = surface
        self.coords = (float(rho), float(t), float(theta))
        self.order = order
        curve = surface.curve
        corder = min(3, max(2, order + 1))
        if raw_t is None:
            a1, b1 = curve.jets(t, corder)
        else:
            a1, b1 = curve.jets_at_raw(raw_t, t, corder)  # type: ignore[attr-defined]
        V = CHART_VARIABLES
        self.a, self.b = a1.embed(V), b1.embed(V)
        if self.a.value <= POLE_CUTOFF:
            raise PoleDegeneracy(f"{surface.name}: a(t)={self.a.value:.3e} at t={t:.6g}")
        self.rho = Jet.variable("rho", rho, V, corder)
        th = Jet.variable("theta", theta, V, corder)
        cos, sin = th.cos(), th.sin()
        a, b = self.a, self.b
        self.ad, self.bd = a.d("t"), b.d("t")
        self.add, self.bdd = self.ad.d("t"), self.bd.d("t")
        ad, bd = self.ad, self.bd

        self.f = b * ad - a * bd
        if self.f.value <= F_MIN:
            raise TransversalityViolation(f"{surface.name}: f={self.f.value:.3e} at t={t:.6g}")
        self.gdot = a * ad + b * bd  # g_rho_t / rho
        self.P = self.gdot / self.f

        E1 = jet_vector([ad * cos, ad * sin, bd])
        E2 = jet_vector([-sin, cos, 0.0])
        N = jet_vector([-bd * cos, -bd * sin, ad])
        self.frame = [E1, E2]
        self.normal = N
        self.position = jet_vector([self.rho * a * cos, self.rho * a * sin, self.rho * b])
        self._radial = jet_vector([a * cos, a * sin, b])

        rho_j = self.rho
        self._grad_rho = N * (1.0 / self.f)
        self._grad_t = (E1 - self.P * N) * (1.0 / rho_j)
        self._grad_theta = E2 * (1.0 / (rho_j * a))

        rf = rho_j * self.f
        self.kappa = [(self.add * a + self.bdd * b) / rf, bd / (rho_j * a)]
        self.structure = StructureConstants(
            c113=-(self.add * a + self.bdd * b) / rf,
            c313=(a * self.bdd - b * self.add) / rf,
            c223=-bd / (a * rho_j),
            c212=-ad / (a * rho_j),
        )

    def grad(self, w: Any) -> np.ndarray:
        if not isinstance(w, Jet):
            return zero_vector(3)
        return (
            w.d("rho") * self._grad_rho
            + w.d("t") * self._grad_t
            + w.d("theta") * self._grad_theta
        )

    @property
    def radial(self) -> np.ndarray:
        return self._radial

    @property
    def grad_rho(self) -> np.ndarray:
        return self._grad_rho

    def record(self) -> Dict[str, Any]:
        return {"rho": self.coords[0], "t": self.coords[1], "theta": self.coords[2]}


@dataclass
class SurfaceOfRevolution:
    curve: UnitSpeedCurve
    name: str = "revolution"
    kind: str = "revolution"
    params: Dict[str, float] = field(default_factory=dict)

    dim = 2
    ambient_dim = 3

    def __post_init__(self) -> None:
        scan_curve(self.curve)

    @property
    def certified_tolerance(self) -> float:
        return self.curve.certified_tolerance

    def at(self, rho: float, t: float, theta: float, order: int = FIELD_ORDER, raw_t: Optional[float] = None) -> ChartPoint:
        return ChartPoint(self, rho, t, theta, order, raw_t)

    def geometry(self, point: Mapping[str, Any], order: int = FIELD_ORDER, rho: Optional[float] = None) -> ChartPoint:
        r = point.get("rho", 1.0) if rho is None else rho
        return ChartPoint(self, r, point["t"], point["theta"], order, point.get("raw_t"))

    def chart(self, rho: float, t: float, theta: float) -> np.ndarray:
        a, b = self.curve.point(t)
        return np.array([rho * a * math.cos(theta), rho * a * math.sin(theta), rho * b])

    def invert_chart(self, x: Sequence[float]) -> Dict[str, float]:
        """Chart coordinates of a Cartesian point near the surface."""
        x1, x2, z = (float(v) for v in x)
        r = math.hypot(x1, x2)
        theta = math.atan2(x2, x1)
        raw = self.curve.raw

        def ray(phi: float) -> float:
            A, B = raw.point(phi)
            return r * B - z * A

        pad = 1e-9 * (raw.t_max - raw.t_min)
        phi = float(optimize.brentq(ray, raw.t_min + pad, raw.t_max - pad, xtol=1e-15))
        A, B = raw.point(phi)
        rho = (r * A + z * B) / (A * A + B * B)
        return {"rho": rho, "t": self.curve.arc_length_at(phi), "theta": theta, "raw_t": phi}

    def geometry_at_cartesian(self, x: Sequence[float], order: int = 0) -> ChartPoint:
        return self.geometry(self.invert_chart(x), order)

    def sample_points(self, count: int, seed: int) -> List[Dict[str, float]]:
        """Seeded Sobol points in (t, theta) inside the pole cutoff."""
        lo, hi = self.curve.sample_interval()
        unit = _sobol(2, count, seed)
        pts = []
        for u, w in unit:
            t = lo + (hi - lo) * float(u)
            pts.append({"t": t, "theta": -math.pi + 2 * math.pi * float(w), "raw_t": self.curve.raw_param(t)})
        return pts


# -----------------------------------------------------------------------------
# n-spheres (closed form)
# -----------------------------------------------------------------------------
class SpherePoint(LocalGeometry):
    def __init__(self, sphere: "NSphere", x: Sequence[float], order: int = FIELD_ORDER):
        self.surface = sphere
        self.dim = sphere.n
        self.ambient_dim = sphere.n + 1
        self.variables = CARTESIAN_VARIABLES[: self.ambient_dim]
        self.order = order
        self.x = [float(v) for v in x]
        V = self.variables
        X = [Jet.variable(name, xv, V, order) for name, xv in zip(V, self.x)]
        self.position = jet_vector(X)
        norm = dot(X, X).sqrt()
        self.rho = norm / sphere.radius
        N = jet_vector([xk / norm for xk in X])
        self.normal = N

        skip = int(np.argmax(np.abs(values(N))))
        frame: List[np.ndarray] = []
        for j in range(self.ambient_dim):
            if j == skip:
                continue
            e = zero_vector(self.ambient_dim)
            e[j] = 1.0
            w = e - N[j] * N
            for E in frame:
                w = w - dot(w, E) * E
            frame.append(w * (1.0 / dot(w, w).sqrt()))
        self.frame = frame
        self.kappa = [-1.0 / norm for _ in frame]

    def grad(self, w: Any) -> np.ndarray:
        if not isinstance(w, Jet):
            return zero_vector(self.ambient_dim)
        return jet_vector([w.d(name) for name in self.variables])

    @property
    def radial(self) -> np.ndarray:
        return self.normal * self.surface.radius

    @property
    def grad_rho(self) -> np.ndarray:
        return self.normal * (1.0 / self.surface.radius)

    def record(self) -> Dict[str, Any]:
        return {"x": list(self.x)}


@dataclass
class NSphere:
    n: int = 2
    radius: float = 1.0
    name: str = "nsphere"
    kind: str = "nsphere"
    params: Dict[str, float] = field(default_factory=dict)
    certified_tolerance: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 2 or self.n + 1 > len(CARTESIAN_VARIABLES):
            raise SurfaceError(f"n-sphere dimension must be 2..{len(CARTESIAN_VARIABLES) - 1}, got {self.n}")
        if self.radius <= 0:
            raise SurfaceError(f"radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def ambient_dim(self) -> int:
        return self.n + 1

    def geometry(self, point: Mapping[str, Any], order: int = FIELD_ORDER, rho: Optional[float] = None) -> SpherePoint:
        x = np.asarray(point["x"], dtype=float)
        if rho is not None:
            x = x * (rho * self.radius / float(np.linalg.norm(x)))
        return SpherePoint(self, x, order)

    def geometry_at_cartesian(self, x: Sequence[float], order: int = 0) -> SpherePoint:
        return SpherePoint(self, x, order)

    def sample_points(self, count: int, seed: int) -> List[Dict[str, Any]]:
        unit = np.clip(_sobol(self.ambient_dim, count, seed), 1e-12, 1 - 1e-12)
        gauss = stats.norm.ppf(unit)
        pts = []
        for g in gauss:
            x = self.radius * g / np.linalg.norm(g)
            pts.append({"x": [float(v) for v in x]})
        return pts


def _sobol(dim: int, count: int, seed: int) -> np.ndarray:
    if count <= 0:
        return np.zeros((0, dim))
    m = max(0, math.ceil(math.log2(count)))
    sampler = stats.qmc.Sobol(d=dim, scramble=True, seed=seed)
    return sampler.random_base2(m)[:count]


# -----------------------------------------------------------------------------
# Operations
# -----------------------------------------------------------------------------
def metric_blocks(surface: SurfaceOfRevolution, rho: float, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Chart metric in (rho, t, theta) and its inverse."""
    a_j, b_j = surface.curve.jets(t, 1)
    a, b = a_j.value, b_j.value
    ad, bd = a_j.derivative("t"), b_j.derivative("t")
    g_rr = a * a + b * b
    g_rt = rho * (a * ad + b * bd)
    g_tt = rho * rho * (ad * ad + bd * bd)
    g = np.array([[g_rr, g_rt, 0.0], [g_rt, g_tt, 0.0], [0.0, 0.0, rho * rho * a * a]])
    det = g_rr * g_tt - g_rt * g_rt
    if det <= (F_MIN * rho) ** 2:
        raise TransversalityViolation(f"{surface.name}: singular chart metric at t={t:.6g}")
    inv = np.array(
        [[g_tt / det, -g_rt / det, 0.0], [-g_rt / det, g_rr / det, 0.0], [0.0, 0.0, 1.0 / (rho * rho * a * a)]]
    )
    return g, inv


def frame_at(surface: SurfaceOfRevolution, rho: float, t: float, theta: float) -> FramePoint:
    geom = surface.at(rho, t, theta, order=1)
    E1, E2 = (values(E) for E in geom.frame)
    N = values(geom.normal)
    split = geom.f.value * N + geom.gdot.value * E1
    return FramePoint(
        p=values(geom.position),
        E1=E1,
        E2=E2,
        N=N,
        chart=(float(rho), float(t), float(theta)),
        drho=values(geom.radial),
        drho_split=split,
    )


def structure_constants_at(surface: SurfaceOfRevolution, rho: float, t: float) -> StructureConstants:
    return surface.at(rho, t, 0.0, order=1).structure.values()


def christoffel_at(sc: StructureConstants) -> ChristoffelTable:
    """Gamma^g_ab = (c^g_ab - c^b_ag - c^a_bg) / 2 in the orthonormal frame."""
    c = sc.table()
    gamma = np.zeros((3, 3, 3))
    for g in range(3):
        for a in range(3):
            for b in range(3):
                gamma[g, a, b] = 0.5 * (c[g, a, b] - c[b, a, g] - c[a, b, g])
    return ChristoffelTable(gamma)


def shape_operator(geom: LocalGeometry) -> np.ndarray:
    """s[j, i] = -<D_{E_i} N, E_j>, computed by differentiating the normal field."""
    n = geom.dim
    s = np.zeros((n, n))
    for i, Ei in enumerate(geom.frame):
        dN = geom.directional(Ei, geom.normal)
        for j, Ej in enumerate(geom.frame):
            s[j, i] = -value_of(dot(dN, Ej))
    return s


def principal_curvatures_from_shape(s: np.ndarray) -> List[float]:
    """Eigenvalues of s, ordered by the E_1.. alignment of their eigenvectors."""
    w, vecs = np.linalg.eigh(0.5 * (s + s.T))
    order = sorted(range(len(w)), key=lambda k: (-round(abs(vecs[0, k]), 12), k))
    return [float(w[k]) for k in order]


def curvature_scalars(geom: LocalGeometry) -> Tuple[float, Optional[float]]:
    """(H, K); K is reported for n = 2 only."""
    kappa = [value_of(k) for k in geom.kappa]
    H = sum(kappa) / geom.dim
    K = kappa[0] * kappa[1] if geom.dim == 2 else None
    return H, K


def ricci_apply(geom: LocalGeometry, v: Sequence[Any]) -> List[Any]:
    """Ric v in frame components: (nH kappa^j - (kappa^j)^2) v^j."""
    nH = geom.mean_curvature_n
    return [(nH * k - k * k) * vj for k, vj in zip(geom.kappa, v)]


def second_fund_form(geom: LocalGeometry, X: Sequence[Any], Y: Sequence[Any]) -> Any:
    """h(X, Y) = sum_i kappa^i X^i Y^i for tangent frame components."""
    total: Any = 0.0
    for k, x, y in zip(geom.kappa, X, Y):
        total = total + k * x * y
    return total


def intrinsic_gauss_curvature(surface: SurfaceOfRevolution, t: float) -> float:
    """K = -a''/a of the metric dt^2 + a^2 dtheta^2."""
    a, _ = surface.curve.jets(t, 2)
    return -a.derivative("t", "t") / a.value


def gram_residual(geom: LocalGeometry) -> float:
    F = np.array([values(E) for E in geom.full_frame])
    return float(np.max(np.abs(F @ F.T - np.eye(len(F)))))
