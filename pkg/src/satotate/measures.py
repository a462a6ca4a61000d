"""Coordinate charts for conjugacy-class data and the joint Haar densities.

A class is carried in one of five charts:

  angle   (theta1, theta2) in [0, pi]^2
  trace   (t1, t2) = (2 cos theta1, 2 cos theta2) in [-2, 2]^2
  sym     (s1, s2) = (t1 + t2, t1 t2)
  delta   (s1, delta0) with delta0 = sqrt(s1^2 - 4 s2) >= 0
  lambda  (eps, lam) with (s1, delta0) = (eps - 4, eps*lam), left half only

together with the two discriminants

  D0 = (t1 - t2)^2 = s1^2 - 4 s2
  D1 = (4 - t1^2)(4 - t2^2) = (4 + s2)^2 - 4 s1^2.

Joint densities are (group, chart) functions; chart points carry no group
tag.  The diagonal SU(2) type is one-dimensional and only has the trace
marginal mu_delta_density.  All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "GroupKind", "Chart", "ChartMismatchError", "SingularDensityError",
    "AnglePoint", "TracePoint", "SymPoint", "DeltaPoint", "LambdaPoint",
    "angles_to_traces", "traces_to_sym", "sym_to_delta", "delta_to_lambda",
    "disc_D0", "disc_D1", "weyl_density_angles", "joint_density",
    "mu_delta_density", "measure_ratio_G_over_H",
]

_PI_SQ = math.pi * math.pi
# slack for floating-point membership checks on chart boundaries
_MEMBER_TOL = 1e-9


class GroupKind(Enum):
    """Which symmetry type a density or sampler refers to."""

    G_USP4 = "G"
    H_SU2XSU2 = "H"
    DELTA_SU2 = "Delta"


class Chart(Enum):
    ANGLE = "angle"
    TRACE = "trace"
    SYM = "sym"
    DELTA = "delta"
    LAMBDA = "lambda"


class ChartMismatchError(TypeError):
    """Point type does not match the requested chart (or the group has no
    density in that chart)."""


class SingularDensityError(ArithmeticError):
    """Density evaluation requested on a singular locus of the chart."""


@dataclass(frozen=True)
class AnglePoint:
    theta1: float
    theta2: float

    def __post_init__(self):
        for th in (self.theta1, self.theta2):
            if not 0.0 <= th <= math.pi:
                raise ValueError(f"angle {th} outside [0, pi]")


@dataclass(frozen=True)
class TracePoint:
    t1: float
    t2: float

    def __post_init__(self):
        for t in (self.t1, self.t2):
            if not -2.0 - _MEMBER_TOL <= t <= 2.0 + _MEMBER_TOL:
                raise ValueError(f"trace {t} outside [-2, 2]")


@dataclass(frozen=True)
class SymPoint:
    s1: float
    s2: float

    def __post_init__(self):
        if not -4.0 - _MEMBER_TOL <= self.s1 <= 4.0 + _MEMBER_TOL:
            raise ValueError(f"s1={self.s1} outside [-4, 4]")
        if 2.0 * abs(self.s1) > self.s2 + 4.0 + _MEMBER_TOL:
            raise ValueError(f"({self.s1}, {self.s2}) violates 2|s1| <= s2 + 4")
        if 4.0 * self.s2 > self.s1 * self.s1 + _MEMBER_TOL:
            raise ValueError(f"({self.s1}, {self.s2}) violates 4 s2 <= s1^2")


@dataclass(frozen=True)
class DeltaPoint:
    s1: float
    delta0: float

    def __post_init__(self):
        if not -4.0 - _MEMBER_TOL <= self.s1 <= 4.0 + _MEMBER_TOL:
            raise ValueError(f"s1={self.s1} outside [-4, 4]")
        if not -_MEMBER_TOL <= self.delta0 <= 4.0 + _MEMBER_TOL:
            raise ValueError(f"delta0={self.delta0} outside [0, 4]")
        if self.delta0 + abs(self.s1) > 4.0 + _MEMBER_TOL:
            raise ValueError(f"({self.s1}, {self.delta0}) violates delta0 +- s1 <= 4")


@dataclass(frozen=True)
class LambdaPoint:
    eps: float
    lam: float

    def __post_init__(self):
        if not -_MEMBER_TOL <= self.eps <= 4.0 + _MEMBER_TOL:
            raise ValueError(f"eps={self.eps} outside [0, 4]")
        if not -_MEMBER_TOL <= self.lam <= 1.0 + _MEMBER_TOL:
            raise ValueError(f"lambda={self.lam} outside [0, 1]")

    @property
    def rho(self) -> float:
        return self.eps / (8.0 - self.eps)


def angles_to_traces(p: AnglePoint) -> TracePoint:
    """t_i = 2 cos(theta_i)."""
    return TracePoint(2.0 * math.cos(p.theta1), 2.0 * math.cos(p.theta2))


def traces_to_sym(p: TracePoint) -> SymPoint:
    """(s1, s2) = (t1 + t2, t1 t2)."""
    return SymPoint(p.t1 + p.t2, p.t1 * p.t2)


def sym_to_delta(p: SymPoint) -> DeltaPoint:
    """(s1, s2) -> (s1, delta0) with delta0 = +sqrt(s1^2 - 4 s2).

    The positive branch makes the trace square a double cover of the
    delta chart.
    """
    d0 = p.s1 * p.s1 - 4.0 * p.s2
    if d0 < -_MEMBER_TOL:
        raise ValueError(f"sym_to_delta: s1^2 - 4 s2 = {d0} is negative")
    return DeltaPoint(p.s1, math.sqrt(max(d0, 0.0)))


def delta_to_lambda(p: DeltaPoint) -> LambdaPoint:
    """(s1, delta0) -> (eps, lam) = (s1 + 4, delta0/eps), left half s1 <= 0.

    At the corner eps = 0 the fiber collapses; lam is defined as 0 there
    (a measure-zero convention that cannot affect any integral).
    """
    if p.s1 > _MEMBER_TOL:
        raise ValueError(f"delta_to_lambda: s1={p.s1} is not in the left half s1 <= 0")
    eps = p.s1 + 4.0
    if eps <= 0.0:
        if p.delta0 > _MEMBER_TOL:
            raise ValueError(
                f"delta_to_lambda: degenerate corner eps=0 with delta0={p.delta0} > 0")
        return LambdaPoint(0.0, 0.0)
    return LambdaPoint(eps, p.delta0 / eps)


ChartPoint = AnglePoint | TracePoint | SymPoint | DeltaPoint | LambdaPoint


def _as_traces(p: ChartPoint) -> tuple[float, float] | None:
    if isinstance(p, AnglePoint):
        q = angles_to_traces(p)
        return q.t1, q.t2
    if isinstance(p, TracePoint):
        return p.t1, p.t2
    return None


def disc_D0(p: ChartPoint) -> float:
    """Discriminant D0 of the degree-2 real trace polynomial, any chart."""
    ts = _as_traces(p)
    if ts is not None:
        t1, t2 = ts
        return (t1 - t2) ** 2
    if isinstance(p, SymPoint):
        return p.s1 * p.s1 - 4.0 * p.s2
    if isinstance(p, DeltaPoint):
        return p.delta0 * p.delta0
    if isinstance(p, LambdaPoint):
        return (p.eps * p.lam) ** 2
    raise ChartMismatchError(f"disc_D0: unsupported point type {type(p).__name__}")


def disc_D1(p: ChartPoint) -> float:
    """Norm discriminant D1 = (4 - t1^2)(4 - t2^2), any chart."""
    ts = _as_traces(p)
    if ts is not None:
        t1, t2 = ts
        return (4.0 - t1 * t1) * (4.0 - t2 * t2)
    if isinstance(p, SymPoint):
        return (4.0 + p.s2) ** 2 - 4.0 * p.s1 * p.s1
    if isinstance(p, DeltaPoint):
        d2 = p.delta0 * p.delta0
        return ((4.0 + p.s1) ** 2 - d2) * ((4.0 - p.s1) ** 2 - d2) / 16.0
    if isinstance(p, LambdaPoint):
        e, lam = p.eps, p.lam
        return e * e * (1.0 - lam * lam) * ((8.0 - e) ** 2 - (e * lam) ** 2) / 16.0
    raise ChartMismatchError(f"disc_D1: unsupported point type {type(p).__name__}")


def weyl_density_angles(g: int, thetas) -> float:
    """Angle density of USp(2g):

        2^{g^2} / (g! pi^g) prod_{i<j} (cos th_i - cos th_j)^2 prod_i sin^2 th_i.

    g = 1 reduces to (2/pi) sin^2 theta, g = 2 to the degree-4 formula.
    """
    thetas = list(thetas)
    if g < 1 or len(thetas) != g:
        raise ValueError(f"weyl_density_angles: need exactly g={g} angles")
    for th in thetas:
        if not 0.0 <= th <= math.pi:
            raise ValueError(f"angle {th} outside [0, pi]")
    cosines = [math.cos(th) for th in thetas]
    const = 2.0 ** (g * g) / (math.factorial(g) * math.pi ** g)
    prod = 1.0
    for i in range(g):
        for j in range(i + 1, g):
            prod *= (cosines[i] - cosines[j]) ** 2
    for th in thetas:
        prod *= math.sin(th) ** 2
    return const * prod


_CHART_TYPES = {
    Chart.ANGLE: AnglePoint,
    Chart.TRACE: TracePoint,
    Chart.SYM: SymPoint,
    Chart.DELTA: DeltaPoint,
    Chart.LAMBDA: LambdaPoint,
}


def joint_density(group: GroupKind, p: ChartPoint, chart: Chart) -> float:
    """Density of the named joint Haar measure w.r.t. the chart volume element.

    Valid for the two rank-2 types; the diagonal SU(2) measure lives on the
    one-dimensional locus delta0 = 0 and is served by mu_delta_density
    instead.  mu_H in the sym chart carries a 1/sqrt(D0) factor and is
    singular on the locus D0 = 0.
    """
    expected = _CHART_TYPES[chart]
    if not isinstance(p, expected):
        raise ChartMismatchError(
            f"joint_density: point of type {type(p).__name__} does not match chart {chart.value}")
    if group is GroupKind.DELTA_SU2:
        raise ChartMismatchError(
            "joint_density: the diagonal type is one-dimensional; use mu_delta_density")
    is_g = group is GroupKind.G_USP4

    if chart is Chart.ANGLE:
        s2 = math.sin(p.theta1) ** 2 * math.sin(p.theta2) ** 2
        if is_g:
            return 8.0 / _PI_SQ * (math.cos(p.theta1) - math.cos(p.theta2)) ** 2 * s2
        return 4.0 / _PI_SQ * s2

    d1 = max(disc_D1(p), 0.0)
    if chart is Chart.TRACE:
        if is_g:
            return disc_D0(p) * math.sqrt(d1) / (8.0 * _PI_SQ)
        return math.sqrt(d1) / (4.0 * _PI_SQ)

    if chart is Chart.SYM:
        d0 = max(disc_D0(p), 0.0)
        if is_g:
            return math.sqrt(d0 * d1) / (4.0 * _PI_SQ)
        if d0 == 0.0:
            raise SingularDensityError(
                "mu_H in the sym chart is singular on D0 = 0; integrate in the "
                "delta or lambda chart instead")
        return math.sqrt(d1 / d0) / (2.0 * _PI_SQ)

    if chart is Chart.DELTA:
        if is_g:
            return p.delta0 ** 2 * math.sqrt(d1) / (8.0 * _PI_SQ)
        return math.sqrt(d1) / (4.0 * _PI_SQ)

    # lambda chart
    e, lam = p.eps, p.lam
    rho = p.rho
    rad = math.sqrt(max((1.0 - lam * lam) * (1.0 - (rho * lam) ** 2), 0.0))
    if is_g:
        return e ** 4 * (8.0 - e) * lam * lam * rad / (32.0 * _PI_SQ)
    return e * e * (8.0 - e) * rad / (16.0 * _PI_SQ)


def mu_delta_density(s1: float) -> float:
    """Trace density of the diagonal SU(2) type: sqrt(16 - s1^2) / (8 pi)."""
    if not -4.0 - _MEMBER_TOL <= s1 <= 4.0 + _MEMBER_TOL:
        raise ValueError(f"mu_delta_density: s1={s1} outside [-4, 4]")
    return math.sqrt(max(16.0 - s1 * s1, 0.0)) / (8.0 * math.pi)


def measure_ratio_G_over_H(p: ChartPoint) -> float:
    """The chart-independent density ratio mu_G / mu_H = D0 / 2.

    Signals division by zero on the locus D0 = 0 where mu_H has no
    finite quotient against mu_G.
    """
    d0 = disc_D0(p)
    if d0 == 0.0:
        raise ZeroDivisionError("measure_ratio_G_over_H undefined at D0 = 0")
    return 0.5 * d0
