"""
Generating curves t -> (a(t), b(t)) of surfaces of revolution.

Every downstream computation works with a UnitSpeedCurve. A raw curve that
is declared unit speed is used directly (after its certificate is
measured); any other raw curve is reparametrized by arc length. Jets of the
reparametrized curve come from series reversion of s(phi), so no numerical
differentiation is involved.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateSpeed, OutOfDomain, TransversalityViolation, UnitSpeedViolation
from .jetcalc import BinOp, Call, ExprTree, Jet, Pow, as_expr, jet_lift

log = logging.getLogger("hypersurface_laplacians.curve")

CURVE_VARS = ("t",)
POLE_FRACTION = 0.05
CERTIFICATE_SAMPLES = 1000
UNIT_SPEED_LIMIT = 1e-9
F_MIN = 1e-12
SPEED_MIN = 1e-10
QUAD_SEGMENTS = 256
RELATION_FACTOR = 10.0
# rounding floor for curves whose certificate is exactly zero
RELATION_FLOOR = 1e-12
RELATION_STRIDE = 10


# -----------------------------------------------------------------------------
# Raw curves
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class GeneratingCurve:
    """Plane curve (a(t), b(t)) on the open interval (t_min, t_max)."""

    a: ExprTree
    b: ExprTree
    t_min: float
    t_max: float
    unit_speed: bool = False
    name: str = "curve"

    @classmethod
    def from_text(
        cls, a_expr: str, b_expr: str, t_min: float, t_max: float, unit_speed: bool = False, name: str = "curve"
    ) -> "GeneratingCurve":
        return cls(as_expr(a_expr), as_expr(b_expr), float(t_min), float(t_max), bool(unit_speed), name)

    def check_domain(self, t: float) -> None:
        if not self.t_min < t < self.t_max:
            raise OutOfDomain(f"{self.name}: t={t!r} outside ({self.t_min}, {self.t_max})")

    def jets(self, t: float, order: int = 3) -> Tuple[Jet, Jet]:
        self.check_domain(t)
        point = {"t": float(t)}
        return jet_lift(self.a, point, order, CURVE_VARS), jet_lift(self.b, point, order, CURVE_VARS)

    def point(self, t: float) -> Tuple[float, float]:
        env = {"t": float(t)}
        return float(self.a.evaluate(env)), float(self.b.evaluate(env))

    def velocity_exprs(self) -> Tuple[ExprTree, ExprTree]:
        return self.a.derivative("t"), self.b.derivative("t")


# -----------------------------------------------------------------------------
# Unit-speed curves
# -----------------------------------------------------------------------------
class UnitSpeedCurve:
    """Common interface; `t` always denotes the unit-speed parameter here."""

    raw: GeneratingCurve
    kind: str = "revolution"
    certified_tolerance: float = 0.0

    @property
    def name(self) -> str:
        return self.raw.name

    @property
    def domain(self) -> Tuple[float, float]:
        raise NotImplementedError

    def jets(self, t: float, order: int = 3) -> Tuple[Jet, Jet]:
        raise NotImplementedError

    def jets_at_raw(self, raw_t: float, t: float, order: int = 3) -> Tuple[Jet, Jet]:
        return self.jets(t, order)

    def raw_param(self, t: float) -> float:
        raise NotImplementedError

    def arc_length_at(self, raw_t: float) -> float:
        raise NotImplementedError

    def check_domain(self, t: float) -> None:
        lo, hi = self.domain
        if not lo < t < hi:
            raise OutOfDomain(f"{self.name}: t={t!r} outside ({lo}, {hi})")

    def point(self, t: float) -> Tuple[float, float]:
        a, b = self.jets(t, order=0)
        return a.value, b.value

    def sample_interval(self) -> Tuple[float, float]:
        """Domain shrunk by the pole cutoff at both ends."""
        lo, hi = self.domain
        pad = POLE_FRACTION * (hi - lo)
        return lo + pad, hi - pad


@dataclass
class DirectCurve(UnitSpeedCurve):
    """A raw curve that is already parametrized by arc length."""

    raw: GeneratingCurve
    kind: str = "revolution"
    certified_tolerance: float = field(default=0.0)

    def __post_init__(self) -> None:
        self.certified_tolerance = _certify(self)

    @property
    def domain(self) -> Tuple[float, float]:
        return self.raw.t_min, self.raw.t_max

    def jets(self, t: float, order: int = 3) -> Tuple[Jet, Jet]:
        return self.raw.jets(t, order)

    def raw_param(self, t: float) -> float:
        self.check_domain(t)
        return float(t)

    def arc_length_at(self, raw_t: float) -> float:
        return float(raw_t)


class ArcLengthCurve(UnitSpeedCurve):
    """Arc-length reparametrization of a raw curve; s = 0 at raw t_min."""

    def __init__(self, raw: GeneratingCurve, kind: str = "revolution"):
        self.raw = raw
        self.kind = kind
        da, db = raw.velocity_exprs()
        self._speed = Call("sqrt", BinOp("+", Pow(da, 2), Pow(db, 2)))
        self._knots = np.linspace(raw.t_min, raw.t_max, QUAD_SEGMENTS + 1)

        probe = np.linspace(raw.t_min, raw.t_max, 4 * QUAD_SEGMENTS + 1)[1:-1]
        speeds = np.asarray(self._speed.evaluate({"t": probe}), dtype=float)
        if float(np.min(speeds)) < SPEED_MIN:
            bad = float(probe[int(np.argmin(speeds))])
            raise DegenerateSpeed(f"{raw.name}: speed {float(np.min(speeds)):.3e} at t={bad:.6g}")

        pieces = [self._quad(lo, hi) for lo, hi in zip(self._knots[:-1], self._knots[1:])]
        self._cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
        self.length = float(self._cumulative[-1])
        self.certified_tolerance = _certify(self)
        log.info(
            "Reparametrized %s by arc length: L=%.12g certificate=%.3e",
            raw.name,
            self.length,
            self.certified_tolerance,
        )

    def _speed_at(self, x: float) -> float:
        return float(self._speed.evaluate({"t": float(x)}))

    def _quad(self, lo: float, hi: float) -> float:
        value, _ = integrate.quad(self._speed_at, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
        return float(value)

    @property
    def domain(self) -> Tuple[float, float]:
        return 0.0, self.length

    def arc_length_at(self, raw_t: float) -> float:
        if not self.raw.t_min <= raw_t <= self.raw.t_max:
            raise OutOfDomain(f"{self.raw.name}: raw t={raw_t!r} outside [{self.raw.t_min}, {self.raw.t_max}]")
        k = int(np.clip(np.searchsorted(self._knots, raw_t) - 1, 0, QUAD_SEGMENTS - 1))
        return float(self._cumulative[k]) + self._quad(float(self._knots[k]), float(raw_t))

    def raw_param(self, t: float) -> float:
        self.check_domain(t)
        k = int(np.clip(np.searchsorted(self._cumulative, t) - 1, 0, QUAD_SEGMENTS - 1))
        lo, hi = float(self._knots[k]), float(self._knots[k + 1])
        return float(optimize.brentq(lambda x: self.arc_length_at(x) - t, lo, hi, xtol=1e-15, maxiter=200))

    def jets_at_raw(self, phi: float, s: float, order: int = 3) -> Tuple[Jet, Jet]:
        """Unit-speed jets at arc length s, given its raw parameter phi."""
        big_a, big_b = self.raw.jets(phi, 3)
        da, db = big_a.d("t"), big_b.d("t")
        sigma = (da * da + db * db).sqrt()
        s0, s1, s2 = (float(c) for c in sigma.coeffs)
        # arc length offset e = s0*d + (s1/2)*d^2 + (s2/3)*d^3, reverted to d(e)
        a1, a2, a3 = s0, s1 / 2.0, s2 / 3.0
        shift = Jet.variable("t", s, CURVE_VARS, 3) - s
        delta = Jet.series(
            [0.0, 1.0 / a1, -a2 / a1**3, (2.0 * a2 * a2 - a1 * a3) / a1**5],
            shift,
        )
        a = Jet.series(list(big_a.coeffs), delta)
        b = Jet.series(list(big_b.coeffs), delta)
        return a.truncate(order), b.truncate(order)

    def jets(self, t: float, order: int = 3) -> Tuple[Jet, Jet]:
        return self.jets_at_raw(self.raw_param(t), t, order)


def _certify(curve: UnitSpeedCurve) -> float:
    """Max |a'^2 + b'^2 - 1| over a sample grid (plus inversion checks)."""
    worst = 0.0
    if isinstance(curve, ArcLengthCurve):
        raw = curve.raw
        grid = raw.t_min + (raw.t_max - raw.t_min) * (np.arange(CERTIFICATE_SAMPLES) + 0.5) / CERTIFICATE_SAMPLES
        for phi in grid:
            a, b = curve.jets_at_raw(float(phi), 0.5 * curve.length, order=1)
            worst = max(worst, abs(a.derivative("t") ** 2 + b.derivative("t") ** 2 - 1.0))
        for s in np.linspace(0.0, curve.length, 22)[1:-1]:
            phi = curve.raw_param(float(s))
            worst = max(worst, abs(curve.arc_length_at(phi) - float(s)))
        return float(worst)
    lo, hi = curve.domain
    da, db = curve.raw.velocity_exprs()
    grid = lo + (hi - lo) * (np.arange(CERTIFICATE_SAMPLES) + 0.5) / CERTIFICATE_SAMPLES
    env = {"t": grid}
    sq = np.asarray(da.evaluate(env), dtype=float) ** 2 + np.asarray(db.evaluate(env), dtype=float) ** 2
    return float(np.max(np.abs(np.broadcast_to(sq, grid.shape) - 1.0)))


# -----------------------------------------------------------------------------
# Operations
# -----------------------------------------------------------------------------
def arc_length_reparam(raw: GeneratingCurve, kind: str = "revolution") -> UnitSpeedCurve:
    return ArcLengthCurve(raw, kind)


def as_unit_speed(raw: GeneratingCurve, kind: str = "revolution") -> UnitSpeedCurve:
    """Use `raw` directly when it is certified unit speed, else reparametrize."""
    if raw.unit_speed:
        direct = DirectCurve(raw, kind)
        if direct.certified_tolerance <= UNIT_SPEED_LIMIT:
            log.info("Curve %s certified unit speed (%.3e)", raw.name, direct.certified_tolerance)
            return direct
        log.warning(
            "Curve %s is declared unit speed but deviates by %.3e; reparametrizing",
            raw.name,
            direct.certified_tolerance,
        )
    return arc_length_reparam(raw, kind)


def curve_jet3(curve: UnitSpeedCurve, t: float) -> Tuple[Jet, Jet]:
    return curve.jets(t, 3)


def transversality_f(curve: UnitSpeedCurve, t: float) -> float:
    a, b = curve.jets(t, 1)
    f = b.value * a.derivative("t") - a.value * b.derivative("t")
    if f <= F_MIN:
        raise TransversalityViolation(f"{curve.name}: f={f:.3e} at t={t:.6g}")
    return float(f)


def principal_curvatures_rev(curve: UnitSpeedCurve, t: float) -> Tuple[float, float]:
    """kappa1 = (a'' a + b'' b)/f, kappa2 = b'/a."""
    f = transversality_f(curve, t)
    a, b = curve.jets(t, 2)
    k1 = (a.derivative("t", "t") * a.value + b.derivative("t", "t") * b.value) / f
    k2 = b.derivative("t") / a.value
    return float(k1), float(k2)


def unit_speed_residuals(curve: UnitSpeedCurve, t: float) -> Tuple[float, float]:
    """Residuals of a'a'' + b'b'' = 0 and a'a''' + b'b''' = -(a''^2 + b''^2)."""
    a, b = curve.jets(t, 3)
    d = [[j.derivative(*("t",) * k) for k in range(4)] for j in (a, b)]
    first = d[0][1] * d[0][2] + d[1][1] * d[1][2]
    second = d[0][1] * d[0][3] + d[1][1] * d[1][3] + d[0][2] ** 2 + d[1][2] ** 2
    return abs(first), abs(second)


def unit_speed_relation_bound(curve: UnitSpeedCurve) -> float:
    return RELATION_FACTOR * max(float(curve.certified_tolerance), RELATION_FLOOR)


def scan_curve(curve: UnitSpeedCurve, samples: int = 200) -> None:
    """
    Check a > 0 and f > 0 across the sample interval, and the unit-speed
    relations at every RELATION_STRIDE-th sample.
    """
    lo, hi = curve.sample_interval()
    bound = unit_speed_relation_bound(curve)
    for i, t in enumerate(np.linspace(lo, hi, samples)):
        a, _ = curve.jets(float(t), 0)
        if a.value <= 0.0:
            raise OutOfDomain(f"{curve.name}: a={a.value:.3e} <= 0 at t={float(t):.6g}")
        transversality_f(curve, float(t))
        if i % RELATION_STRIDE == 0:
            first, second = unit_speed_residuals(curve, float(t))
            if max(first, second) > bound:
                raise UnitSpeedViolation(
                    f"{curve.name}: unit-speed relations off by {first:.3e} / {second:.3e} at t={float(t):.6g} "
                    f"(bound {bound:.1e})"
                )


def circle_curve() -> GeneratingCurve:
    return GeneratingCurve.from_text("sin(t)", "cos(t)", 0.0, math.pi, unit_speed=True, name="sphere")
