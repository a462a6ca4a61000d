"""Scalar special functions feeding every density route.

Catalan-number helpers and the square-root Taylor series; the moment
integrals

    int_0^1 l^{2n} sqrt(1 - l^2) dl = (pi/4) * C_n / 4^n,

complete elliptic integrals K(m), E(m) in the parameter-m convention
(integrand 1 - m sin^2 phi) evaluated by the arithmetic-geometric mean;
the Gauss hypergeometric value 2F1(1/2, 3/2; 3; m); and the associated
Legendre function P^2_{1/2} on [1, inf) via its single-integral
representation.  Everything here is a pure function of its arguments and
safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConvergenceError",
    "SeriesControl",
    "EllipticParam",
    "MAX_EXACT_CATALAN",
    "catalan",
    "catalan_ratio",
    "sqrt_one_minus_series",
    "moment_integral",
    "elliptic_K",
    "elliptic_E",
    "elliptic_series_check",
    "hyp2f1_half_threehalf_three",
    "legendre_P2_half",
]


class ConvergenceError(RuntimeError):
    """A truncated series failed to meet its tail bound."""


@dataclass(frozen=True)
class SeriesControl:
    """Truncation contract for series evaluators.

    Summation stops once the applicable tail bound drops below ``tol``
    (an absolute bound on the remainder); if that does not happen within
    ``max_terms`` terms, a ConvergenceError is raised.
    """

    max_terms: int = 1_000_000
    tol: float = 1e-12

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class EllipticParam:
    """Parameter m of the complete elliptic integrals, 0 <= m <= 1.

    For trace work m = 1 - x^2/16 with x in [-4, 4].
    """

    m: float

    def __post_init__(self):
        if not 0.0 <= self.m <= 1.0:
            raise ValueError(f"elliptic parameter m={self.m} outside [0, 1]")


def _param(m) -> float:
    if isinstance(m, EllipticParam):
        return m.m
    return EllipticParam(float(m)).m


# Largest index served as an exact integer; beyond this only the ratio
# C_n/4^n is available (every downstream formula consumes ratios).
MAX_EXACT_CATALAN = 40


def catalan(n: int) -> int:
    """Exact Catalan number C_n = binom(2n, n)/(n+1), for 0 <= n <= 40."""
    if n < 0:
        raise ValueError("catalan: n must be nonnegative")
    if n > MAX_EXACT_CATALAN:
        raise OverflowError(
            f"catalan: n={n} exceeds the exact-integer contract (n <= {MAX_EXACT_CATALAN}); "
            "use catalan_ratio for large n")
    return math.comb(2 * n, n) // (n + 1)


def catalan_ratio(n: int) -> float:
    """C_n / 4^n by the overflow-free recurrence r_{n+1} = r_n (2n+1)/(2n+4).

    Monotone decreasing in n, asymptotically 1/(sqrt(pi) n^{3/2}).
    """
    if n < 0:
        raise ValueError("catalan_ratio: n must be nonnegative")
    r = 1.0
    for k in range(n):
        r *= (2 * k + 1) / (2 * k + 4)
    return r


def moment_integral(n: int) -> float:
    """int_0^1 l^{2n} sqrt(1 - l^2) dl = (pi/4) C_n / 4^n."""
    return 0.25 * math.pi * catalan_ratio(n)


def sqrt_one_minus_series(x: float, ctrl: SeriesControl = SeriesControl()) -> float:
    """sqrt(1 - x) on [0, 1] from its Catalan-coefficient Taylor series.

    Evaluates 1 - (x/2) sum_{n>=0} (C_n/4^n) x^n.  For x < 1 the tail is
    bounded by the next term divided by (1 - x); at x = 1 the terms decay
    only like n^{-3/2}, so the integral tail estimate 1/(sqrt(pi n)) * x/2
    is used instead and convergence is much slower.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"sqrt_one_minus_series: x={x} outside [0, 1]")
    if x == 0.0:
        return 1.0
    half_x = 0.5 * x
    ratio = 1.0          # C_n / 4^n
    power = 1.0          # x^n
    total = 0.0
    inv_sqrt_pi = 1.0 / math.sqrt(math.pi)
    for n in range(ctrl.max_terms):
        total += ratio * power
        ratio *= (2 * n + 1) / (2 * n + 4)
        power *= x
        next_term = half_x * ratio * power
        if x < 1.0:
            tail = next_term / (1.0 - x)
        else:
            # sum_{k>n} C_k/4^k <= 2/(sqrt(pi) sqrt(n)) for the n^{-3/2} decay
            tail = inv_sqrt_pi / math.sqrt(max(n, 1))
        if tail < ctrl.tol:
            return 1.0 - half_x * total
    raise ConvergenceError(
        f"sqrt_one_minus_series: tail bound not below {ctrl.tol} after {ctrl.max_terms} terms")


def elliptic_K(m) -> float:
    """Complete elliptic integral of the first kind, K(m), for 0 <= m < 1.

    K(m) = int_0^{pi/2} dphi / sqrt(1 - m sin^2 phi) = pi / (2 agm(1, sqrt(1-m))).
    The AGM iteration converges quadratically; relative accuracy is a few ulp.
    """
    m = _param(m)
    if m == 1.0:
        raise ValueError("elliptic_K diverges at m = 1")
    a, b = 1.0, math.sqrt(1.0 - m)
    while abs(a - b) > 1e-16 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


def elliptic_E(m) -> float:
    """Complete elliptic integral of the second kind, E(m), for 0 <= m <= 1.

    Tracks the AGM defect terms: E = K (1 - sum_{n>=0} 2^{n-1} c_n^2) with
    c_0 = sqrt(m), c_{n+1} = (a_n - b_n)/2.  E(1) = 1 exactly.
    """
    m = _param(m)
    if m == 0.0:
        return 0.5 * math.pi
    if m == 1.0:
        return 1.0
    a, b = 1.0, math.sqrt(1.0 - m)
    csum = 0.5 * m  # 2^{-1} c_0^2
    scale = 1.0
    while abs(a - b) > 1e-16 * a:
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        csum += scale * c * c
        scale *= 2.0
    k = math.pi / (a + b)
    return k * (1.0 - csum)


def elliptic_series_check(m: float) -> tuple[float, float]:
    """(K(m), E(m)) from their power series in m, for the regime m <= 0.5.

    K(m) = (pi/2) sum a_n m^n and E(m) = (pi/2) sum a_n m^n/(1-2n) with
    a_n = (binom(2n,n)/4^n)^2.  Retained as a slowly-converging cross-check
    of the AGM route (tail bound 1e-12); agreement is asserted in the tests.
    """
    if not 0.0 <= m < 1.0:
        raise ValueError(f"elliptic_series_check: m={m} outside [0, 1)")
    if m > 0.5:
        raise ConvergenceError(
            f"elliptic_series_check: m={m} outside the series regime (m <= 0.5)")
    a_n = 1.0       # (binom(2n,n)/4^n)^2
    power = 1.0
    k_sum = 0.0
    e_sum = 0.0
    n = 0
    while True:
        term = a_n * power
        k_sum += term
        e_sum += term / (1.0 - 2.0 * n)
        a_n *= ((2 * n + 1) / (2 * n + 2)) ** 2
        power *= m
        next_term = a_n * power
        if next_term / max(1.0 - m, 0.5) < 1e-12:
            break
        n += 1
        if n > 10_000:
            raise ConvergenceError("elliptic_series_check: series did not converge")
    return 0.5 * math.pi * k_sum, 0.5 * math.pi * e_sum


def hyp2f1_half_threehalf_three(m: float) -> float:
    """Gauss hypergeometric 2F1(1/2, 3/2; 3; m) on [0, 1].

    For m <= 0.75 the defining series is summed with the geometric tail
    bound next_term/(1-m) < 1e-12.  Beyond that the series slows down
    (terms decay like n^-2 at m = 1), so the exact reduction

        2F1(1/2, 3/2; 3; m) = 16 (2(m-1) K(m) + (2-m) E(m)) / (3 pi m^2),

    obtained from the Euler integral of the function, is used instead; the
    AGM evaluation makes it accurate to ~1e-14 relative on (0.75, 1].  At
    m = 1 the value is 16/(3 pi).
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"hyp2f1_half_threehalf_three: m={m} outside [0, 1]")
    if m <= 0.75:
        term = 1.0
        total = 0.0
        n = 0
        while True:
            total += term
            term *= m * (n + 0.5) * (n + 1.5) / ((n + 3.0) * (n + 1.0))
            if term / max(1.0 - m, 0.25) < 1e-12:
                return total + term  # fold in the bounded next term
            n += 1
            if n > 200_000:
                raise ConvergenceError("hyp2f1 series did not converge")
    if m == 1.0:
        return 16.0 / (3.0 * math.pi)
    k = elliptic_K(m)
    e = elliptic_E(m)
    return 16.0 * (2.0 * (m - 1.0) * k + (2.0 - m) * e) / (3.0 * math.pi * m * m)


def legendre_P2_half(z: float) -> float:
    """Associated Legendre function P^2_{1/2}(z) for z >= 1.

    Evaluated from the integral representation

        P^2_{1/2}(z) = 15/(8 pi) int_0^{2pi} (z + sqrt(z^2-1) cos phi)^{1/2}
                                   cos(2 phi) dphi,

    with prefactor Gamma(7/2) / (2 pi Gamma(3/2)) = 15/(8 pi).  The
    integrand is smooth and 2pi-periodic so the trapezoid rule converges
    spectrally; the node count is doubled until two successive estimates
    agree to 1e-12.  P^2_{1/2}(1) = 0.
    """
    if z < 1.0:
        raise ValueError(f"legendre_P2_half: z={z} below the domain [1, inf)")
    w = math.sqrt(max(z * z - 1.0, 0.0))
    prev = _trapezoid_cos2(z, w, 32)
    n = 64
    while n <= (1 << 22):
        cur = _trapezoid_cos2(z, w, n)
        if abs(cur - prev) < 1e-12:
            return 15.0 / (8.0 * math.pi) * cur
        prev = cur
        n *= 2
    raise ConvergenceError("legendre_P2_half: trapezoid refinement did not converge")


def _trapezoid_cos2(z: float, w: float, n: int) -> float:
    phi = np.arange(n) * (2.0 * math.pi / n)
    vals = np.sqrt(z + w * np.cos(phi)) * np.cos(2.0 * phi)
    return float(vals.sum()) * (2.0 * math.pi / n)
