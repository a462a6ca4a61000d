"""Genus-2 curve census over small prime fields.

Enumerates hyperelliptic models y^2 = f(x) (monic quintic f, optionally
degree-6 f with leading coefficient 1 or a fixed non-residue), extracts
Frobenius data (a1, a2) from point counts over F_q and F_{q^2}, and groups
the classes into real-multiplication discriminant bands

    delta0 = m0 sqrt(D / q),  Delta_real = m0^2 D,

where Delta_real = a1^2 - 4 a2 + 8 q is the discriminant of the integral
real Weil polynomial x^2 - a1 x + (a2 - 2q) and D is its fundamental
discriminant label (1 for positive perfect squares, 0 for Delta_real = 0).

The census is a sampling device for the vertical trace distribution, not a
complete isomorphism-class census: moduli weights (automorphisms, twists)
are not corrected, and stratum labels are inferred from Weil data only, so
the label is a divisor-bound for the endomorphism-ring discriminant rather
than the ring discriminant itself.  Both caveats are recorded in report
metadata.

All band/bound verifications run in exact integer arithmetic (integer
square comparisons with explicit sign cases); no floating point decides a
class.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConsistencyError", "PrimeFieldCtx", "CurveModel", "FrobeniusClass",
    "StratumRecord", "CensusReport", "ScatterPoint",
    "build_field", "count_points", "frobenius_class", "decompose_real_disc",
    "verify_band_constraints", "band_violations", "run_census",
    "weil_class_scatter", "extremal_report",
    "write_census_csv", "read_census_csv", "write_scatter_csv", "read_scatter_csv",
    "CENSUS_FORMAT_VERSION",
]

CENSUS_FORMAT_VERSION = "satotate-census v1"
FULL_ENUMERATION_BUDGET_Q = 31


class ConsistencyError(RuntimeError):
    """An exact integer identity failed; signals a counting bug."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# ---------------------------------------------------------------------------
# Field context.

@dataclass(frozen=True)
class PrimeFieldCtx:
    """Tables for F_q and F_{q^2} = F_q[u]/(u^2 - n), n a non-residue.

    chi is the quadratic character of F_q (chi[0] = 0); chi2 is the
    quadratic character of F_{q^2} on elements encoded as a + q*b, obtained
    through the norm: chi2(a + b u) = chi(a^2 - n b^2).
    """

    q: int
    chi: np.ndarray
    non_residue: int
    chi2: np.ndarray

    def chi_q(self, x: int) -> int:
        return int(self.chi[x % self.q])

    def chi_q2(self, a: int, b: int) -> int:
        return int(self.chi2[(a % self.q) + self.q * (b % self.q)])

    def f2_mul(self, x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
        q, n = self.q, self.non_residue
        return ((x[0] * y[0] + n * x[1] * y[1]) % q, (x[0] * y[1] + x[1] * y[0]) % q)

    def f2_add(self, x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
        return ((x[0] + y[0]) % self.q, (x[1] + y[1]) % self.q)


def build_field(q: int) -> PrimeFieldCtx:
    """Character tables and F_{q^2} arithmetic for an odd prime q <= 2^16."""
    if q % 2 == 0:
        raise ValueError(f"build_field: q={q} is even")
    if q > 1 << 16:
        raise ValueError(f"build_field: q={q} exceeds the 2^16 table budget")
    if not _is_prime(q):
        raise ValueError(f"build_field: q={q} is not prime")
    chi = -np.ones(q, dtype=np.int8)
    chi[0] = 0
    squares = np.unique(np.arange(1, q, dtype=np.int64) ** 2 % q)
    chi[squares] = 1
    non_residue = int(np.nonzero(chi == -1)[0][0])
    a = np.arange(q * q, dtype=np.int64) % q
    b = np.arange(q * q, dtype=np.int64) // q
    norm = (a * a - non_residue * b * b) % q
    chi2 = chi[norm]
    return PrimeFieldCtx(q, chi, non_residue, chi2)


# ---------------------------------------------------------------------------
# Curve models and point counts.

def _poly_gcd_is_one(f: list[int], g: list[int], q: int) -> bool:
    """gcd(f, g) constant in F_q[x]?  Coefficients low-to-high."""
    def trim(p):
        while p and p[-1] % q == 0:
            p.pop()
        return p
    f = trim([c % q for c in f])
    g = trim([c % q for c in g])
    while g:
        inv = pow(g[-1], q - 2, q)
        while len(f) >= len(g):
            factor = f[-1] * inv % q
            shift = len(f) - len(g)
            for i, c in enumerate(g):
                f[i + shift] = (f[i + shift] - factor * c) % q
            f = trim(f)
        f, g = g, f
    return len(f) == 1


@dataclass(frozen=True)
class CurveModel:
    """Monic quintic model y^2 = x^5 + c4 x^4 + ... + c0 over F_q.

    Squarefree f (gcd(f, f') = 1) is enforced, which guarantees a smooth
    genus-2 curve with a single rational point at infinity.
    """

    q: int
    coefficients: tuple[int, int, int, int, int]  # (c0, c1, c2, c3, c4)

    def __post_init__(self):
        if len(self.coefficients) != 5:
            raise ValueError("CurveModel needs exactly the coefficients c0..c4")
        if any(not 0 <= c < self.q for c in self.coefficients):
            raise ValueError("coefficients must be reduced mod q")
        f = list(self.coefficients) + [1]
        df = [(i * f[i]) % self.q for i in range(1, 6)]
        if not _poly_gcd_is_one(f, df, self.q):
            raise ValueError(f"f = {f} is not squarefree over F_{self.q}")


def _affine_char_sum_fq(ctx: PrimeFieldCtx, coeffs_low_to_high: list[int]) -> int:
    """sum_{x in F_q} chi(f(x)) for arbitrary f (no smoothness assumed)."""
    q = ctx.q
    x = np.arange(q, dtype=np.int64)
    acc = np.zeros(q, dtype=np.int64)
    for c in reversed(coeffs_low_to_high):
        acc = (acc * x + c) % q
    return int(ctx.chi[acc].sum())


def _affine_char_sum_fq2(ctx: PrimeFieldCtx, coeffs_low_to_high: list[int]) -> int:
    """sum over F_{q^2} of chi2(f(x)), componentwise Horner."""
    q, n = ctx.q, ctx.non_residue
    a = np.arange(q * q, dtype=np.int64) % q
    b = np.arange(q * q, dtype=np.int64) // q
    acc_a = np.zeros(q * q, dtype=np.int64)
    acc_b = np.zeros(q * q, dtype=np.int64)
    for c in reversed(coeffs_low_to_high):
        acc_a, acc_b = (acc_a * a + n * acc_b * b + c) % q, (acc_a * b + acc_b * a) % q
    return int(ctx.chi2[acc_a + q * acc_b].sum())


def count_points(ctx: PrimeFieldCtx, curve: CurveModel) -> tuple[int, int]:
    """(N1, N2) of the smooth model: affine character sums plus the single
    point at infinity (rational over every extension for a monic quintic).

    N1 = 1 + sum_x (1 + chi(f(x))) over F_q, and likewise N2 over F_{q^2}.
    """
    if curve.q != ctx.q:
        raise ValueError("curve and field context disagree on q")
    coeffs = list(curve.coefficients) + [1]
    q = ctx.q
    n1 = 1 + q + _affine_char_sum_fq(ctx, coeffs)
    n2 = 1 + q * q + _affine_char_sum_fq2(ctx, coeffs)
    return n1, n2


# ---------------------------------------------------------------------------
# Frobenius classes, exact integer checks.

def _sqrt_plus_le(delta: int, a: int, bound_sq: int) -> bool:
    """Exact test of sqrt(delta) + a <= sqrt(bound_sq) for integers >= 0."""
    if a * a > bound_sq:
        return False
    # sqrt(delta) <= sqrt(bound_sq) - a with both sides >= 0; squaring twice
    # with the sign guard on the mixed term keeps the comparison exact
    mixed = bound_sq + a * a - delta
    if mixed < 0:
        return False
    return 4 * a * a * bound_sq <= mixed * mixed


def _sigma2_member(q: int, a1: int, a2: int) -> bool:
    """Exact membership of the normalized pair in the trace region:
    a1^2 <= 16 q, Delta_real >= 0 and 2|a1| sqrt(q) <= a2 + 2q."""
    if a1 * a1 > 16 * q:
        return False
    if a1 * a1 - 4 * a2 + 8 * q < 0:
        return False
    rhs = a2 + 2 * q
    if rhs < 0:
        return False
    return 4 * a1 * a1 * q <= rhs * rhs


@dataclass(frozen=True)
class FrobeniusClass:
    """One isogeny-invariant Frobenius datum (q, a1, a2) with its derived
    normalized invariants."""

    q: int
    a1: int
    a2: int

    def __post_init__(self):
        if self.q < 3:
            raise ValueError("q must be an odd prime >= 3")
        if not _sigma2_member(self.q, self.a1, self.a2):
            raise ValueError(
                f"(a1, a2) = ({self.a1}, {self.a2}) violates the Weil region at q = {self.q}")

    @property
    def delta_real(self) -> int:
        return self.a1 * self.a1 - 4 * self.a2 + 8 * self.q

    @property
    def s1(self) -> float:
        return self.a1 / math.sqrt(self.q)

    @property
    def s2(self) -> float:
        return (self.a2 - 2 * self.q) / self.q

    @property
    def delta0(self) -> float:
        return math.sqrt(self.delta_real / self.q)

    @property
    def eps(self) -> float:
        return 4.0 - abs(self.s1)

    @property
    def defect(self) -> float:
        return 4.0 * math.sqrt(self.q) - abs(self.a1)


def frobenius_class(ctx: PrimeFieldCtx, n1: int, n2: int) -> FrobeniusClass:
    """Frobenius datum from the two point counts via the power sums
    a1 = q + 1 - N1 and a1^2 - 2 a2 = q^2 + 1 - N2.  A non-integral a2
    signals a counting bug."""
    q = ctx.q
    a1 = q + 1 - n1
    t = a1 * a1 - (q * q + 1 - n2)
    if t % 2:
        raise ConsistencyError(
            f"a2 not integral for (N1, N2) = ({n1}, {n2}) at q = {q}")
    return FrobeniusClass(q, a1, t // 2)


def _squarefree_kernel(n: int) -> tuple[int, int]:
    """n = kernel * root^2 with kernel squarefree, by trial division."""
    kernel = 1
    root = 1
    f = 2
    while f * f <= n:
        e = 0
        while n % f == 0:
            n //= f
            e += 1
        if e:
            root *= f ** (e // 2)
            if e % 2:
                kernel *= f
        f += 1 if f == 2 else 2
    return kernel * n, root


def decompose_real_disc(delta_real: int) -> tuple[int, int]:
    """(m0, D): Delta_real = m0^2 D with D the fundamental-discriminant
    label (1 for positive perfect squares, 0 for Delta_real = 0).

    Raises for Delta_real not congruent to 0 or 1 mod 4, which cannot be a
    quadratic-order discriminant."""
    if delta_real < 0:
        raise ValueError("delta_real must be >= 0")
    if delta_real == 0:
        return 0, 0
    if delta_real % 4 not in (0, 1):
        raise ValueError(f"{delta_real} is not a quadratic-order discriminant")
    kernel, root = _squarefree_kernel(delta_real)
    if kernel == 1:
        return root, 1
    if kernel % 4 == 1:
        return root, kernel
    if root % 2:
        raise ValueError(f"{delta_real} is not a quadratic-order discriminant")
    return root // 2, 4 * kernel


def band_violations(fc: FrobeniusClass) -> list[str]:
    """Exact-arithmetic diagnostics of the discriminant-band constraints.

    Checks (i) q delta0^2 = Delta_real, (ii) delta0 <= eps via the squared
    comparison sqrt(Delta_real) + |a1| <= 4 sqrt(q), (iii) the defect bound
    q D <= q d^2 i.e. sqrt(D) <= d, and (iv) the zone of exclusion
    delta0 != 0 => delta0^2 >= D/q."""
    q, a1 = fc.q, abs(fc.a1)
    delta = fc.delta_real
    out = []
    m0, d_label = decompose_real_disc(delta)
    if d_label == 0:
        if delta != 0 or m0 != 0:
            out.append(f"zero stratum label with Delta_real = {delta}, m0 = {m0}")
    elif m0 * m0 * d_label != delta:
        out.append(f"decomposition m0^2 D = {m0 * m0 * d_label} != Delta_real = {delta}")
    if not _sqrt_plus_le(delta, a1, 16 * q):
        out.append(f"delta0 > eps: Delta_real = {delta}, |a1| = {a1}, q = {q}")
    if not _sqrt_plus_le(q * d_label, a1, 16 * q):
        out.append(f"sqrt(D) > defect: D = {d_label}, |a1| = {a1}, q = {q}")
    if delta > 0 and delta < d_label:
        out.append(f"zone of exclusion violated: Delta_real = {delta} < D = {d_label}")
    return out


def verify_band_constraints(fc: FrobeniusClass) -> bool:
    """True iff every discriminant-band constraint holds for the class."""
    return not band_violations(fc)


# ---------------------------------------------------------------------------
# Report containers.

@dataclass
class StratumRecord:
    D: int
    bands: dict[int, list[tuple[FrobeniusClass, int]]] = field(default_factory=dict)

    def total_count(self) -> int:
        return sum(c for members in self.bands.values() for _, c in members)


@dataclass
class CensusReport:
    q: int
    model_count: int
    counts: dict[tuple[int, int], int]
    strata: list[StratumRecord]
    metadata: dict

    def classes(self):
        for (a1, a2), count in self.counts.items():
            yield FrobeniusClass(self.q, a1, a2), count


def _build_strata(q: int, counts: dict[tuple[int, int], int]) -> list[StratumRecord]:
    strata: dict[int, StratumRecord] = {}
    for (a1, a2) in sorted(counts):
        fc = FrobeniusClass(q, a1, a2)
        m0, d_label = decompose_real_disc(fc.delta_real)
        rec = strata.setdefault(d_label, StratumRecord(d_label))
        rec.bands.setdefault(m0, []).append((fc, counts[(a1, a2)]))
    return [strata[d] for d in sorted(strata)]


# ---------------------------------------------------------------------------
# Enumeration kernel.
#
# The coefficient space of f = x^5 + c4 x^4 + ... + c0 is scanned in blocks:
# the outer loop fixes (c4, c3, c2) and evaluates the quintic head g(x) once
# for every x in F_{q^2}; the inner (c1, c0) plane is then fully vectorized,
# since c1 only adds c1*x and c0 is an additive shift handled by the
# pre-shifted character tables chiT[c0][v] = chi(v + c0).  Costs q^2 table
# gathers per model, ~q^7 total, all inside numpy.
#
# Squarefree detection rides along: a repeated root of a quintic generates
# an extension of degree <= 2, so f is non-squarefree iff f and f' share a
# zero in F_{q^2}; with f = h + c0 and f' = g' + c1 the bad (c1, c0) pairs
# are read off from the zeros of (h_B, g'_A + c1, g'_B).  Degree-6 models
# additionally admit repeated irreducible cubic factors (roots in F_{q^3}),
# i.e. exactly the models c6 * u(x)^2 with u an irreducible monic cubic;
# these are enumerated directly and subtracted.

def _kernel_tables(q: int, degree6: bool):
    ctx = build_field(q)
    n = ctx.non_residue
    x1 = np.arange(q, dtype=np.int64)
    a = np.arange(q * q, dtype=np.int64) % q
    b = np.arange(q * q, dtype=np.int64) // q
    top = 7 if degree6 else 6
    p1 = [np.ones(q, dtype=np.int64)]
    pa = [np.ones(q * q, dtype=np.int64)]
    pb = [np.zeros(q * q, dtype=np.int64)]
    for _ in range(1, top):
        p1.append(p1[-1] * x1 % q)
        pa_new = (pa[-1] * a + n * pb[-1] * b) % q
        pb_new = (pa[-1] * b + pb[-1] * a) % q
        pa.append(pa_new)
        pb.append(pb_new)
    chi1T = np.stack([np.roll(ctx.chi, -c0) for c0 in range(q)])
    chi2T = np.stack([np.roll(ctx.chi2.reshape(q, q), -c0, axis=1).reshape(-1)
                      for c0 in range(q)])
    return ctx, p1, pa, pb, chi1T, chi2T


def _hist_shape(q: int, degree6: bool) -> tuple[int, int, int]:
    # genuine classes satisfy |a1| <= 4 sqrt(q) and a2 in [-2q, 6q]; the
    # degenerate degree-6 models c6 u^2 land at (|a1|, a2) = (q+1, q^2+q+1)
    # before subtraction and need room in the histogram
    a1_max = math.isqrt(16 * q)
    a2_hi = 6 * q
    if degree6:
        a1_max = max(a1_max, q + 1)
        a2_hi = max(a2_hi, q * q + q + 1)
    n_a1 = 2 * a1_max + 1
    n_a2 = a2_hi + 2 * q + 1
    return a1_max, n_a1, n_a2


def _census_worker(args) -> tuple[np.ndarray, int, int]:
    """Scan the quintic blocks with c4 in c4_range (or, with deg6_head =
    (c6, c5), the corresponding degree-6 blocks).  Returns (flat histogram
    over squarefree models, squarefree count, sum of N1 over all scanned
    models including non-squarefree ones).  hist_deg6 fixes the histogram
    shape for the whole run so partial histograms merge by addition."""
    q, c4_range, deg6_head, hist_deg6 = args
    degree6 = deg6_head is not None
    ctx, p1, pa, pb, chi1T, chi2T = _kernel_tables(q, degree6)
    a1_max, _, n_a2 = _hist_shape(q, hist_deg6)
    hist = np.zeros((2 * a1_max + 1) * n_a2, dtype=np.int64)
    sf_total = 0
    n1_total = 0
    c1s = np.arange(q, dtype=np.int64)[:, None]
    x_fq = p1[1][None, :]
    xa = pa[1][None, :]
    xb = pb[1][None, :]

    if degree6:
        c6, c5 = deg6_head
        head1 = (c6 * p1[6] + c5 * p1[5]) % q
        head_a = (c6 * pa[6] + c5 * pa[5]) % q
        head_b = (c6 * pb[6] + c5 * pb[5]) % q
        dhead_a = (6 * c6 * pa[5] + 5 * c5 * pa[4]) % q
        dhead_b = (6 * c6 * pb[5] + 5 * c5 * pb[4]) % q
        inf1 = 1 + int(ctx.chi[c6 % q])   # points at infinity over F_q
        a1_shift = -int(ctx.chi[c6 % q])  # a1 = -chi(c6) - S1
        s2_shift = 1                      # 2 a2 = a1^2 + S2 + 1
    else:
        head1 = p1[5]
        head_a = pa[5]
        head_b = pb[5]
        dhead_a = 5 * pa[4] % q
        dhead_b = 5 * pb[4] % q
        inf1 = 1
        a1_shift = 0
        s2_shift = 0

    for c4 in c4_range:
        for c3 in range(q):
            base1_c3 = (head1 + c4 * p1[4] + c3 * p1[3]) % q
            base_a_c3 = (head_a + c4 * pa[4] + c3 * pa[3]) % q
            base_b_c3 = (head_b + c4 * pb[4] + c3 * pb[3]) % q
            dbase_a_c3 = (dhead_a + 4 * c4 * pa[3] + 3 * c3 * pa[2]) % q
            dbase_b_c3 = (dhead_b + 4 * c4 * pb[3] + 3 * c3 * pb[2]) % q
            for c2 in range(q):
                g1 = (base1_c3 + c2 * p1[2]) % q
                ga = (base_a_c3 + c2 * pa[2]) % q
                gb = (base_b_c3 + c2 * pb[2]) % q
                dg_a = (dbase_a_c3 + 2 * c2 * pa[1]) % q
                dg_b = (dbase_b_c3 + 2 * c2 * pb[1]) % q

                h1 = (g1[None, :] + c1s * x_fq) % q            # (c1, x in F_q)
                ha = (ga[None, :] + c1s * xa) % q              # (c1, x in F_q2)
                hb = (gb[None, :] + c1s * xb) % q
                s1_sums = chi1T[:, h1].sum(axis=2, dtype=np.int64).T   # (c1, c0)
                s2_sums = chi2T[:, ha + q * hb].sum(axis=2, dtype=np.int64).T

                # non-squarefree (c1, c0): common zero of f, f' in F_{q^2}
                da = (dg_a[None, :] + c1s) % q
                zero_mask = (hb == 0) & (da == 0) & (dg_b[None, :] == 0)
                sf = np.ones((q, q), dtype=bool)
                i1, ix = np.nonzero(zero_mask)
                if i1.size:
                    sf[i1, (-ha[i1, ix]) % q] = False

                a1 = a1_shift - s1_sums
                two_a2 = a1 * a1 + s2_sums + s2_shift
                if np.any(two_a2 & 1):
                    raise ConsistencyError("a2 integrality failed inside the kernel")
                a2 = two_a2 // 2
                keys = (a1 + a1_max) * n_a2 + (a2 + 2 * q)
                hist += np.bincount(keys[sf].ravel(), minlength=hist.size)
                sf_total += int(sf.sum())
                n1_total += (inf1 + q) * q * q + int(s1_sums.sum())
    return hist, sf_total, n1_total


def _degree6_degenerate_classes(q: int, non_residue: int) -> list[tuple[int, int, int]]:
    """(a1, a2, model count) of the degenerate models c6 * u(x)^2 with u a
    monic irreducible cubic.  Their repeated roots live in F_{q^3}, so they
    pass the F_{q^2} common-zero filter and must be subtracted.

    Since u has no zeros in F_q or F_{q^2}, the character sums collapse:
    S1 = chi(c6) q and S2 = q^2, giving a1 = -chi(c6)(q + 1) and
    a2 = q^2 + q + 1 for all (q^3 - q)/3 choices of u.
    """
    n_irreducible_cubics = (q ** 3 - q) // 3
    out = []
    for chi_c6 in (1, -1):
        a1 = -chi_c6 * (q + 1)
        a2 = q * q + q + 1
        out.append((a1, a2, n_irreducible_cubics))
    return out



def run_census(q: int, include_degree6: bool = False, threads: int = 1) -> CensusReport:
    """Full model enumeration at odd prime q, aggregated by Frobenius class.

    Scans every squarefree monic quintic (q^5 - q^4 of them) and, with
    include_degree6, every squarefree degree-6 model with leading
    coefficient 1 or the fixed non-residue.  Verifies the squarefree count
    and a2 integrality exactly, builds discriminant strata, and checks the
    band constraints on every class.  The coefficient space is partitioned
    over worker processes when threads > 1; partial histograms merge by
    addition, so results are independent of the partition.
    """
    start = time.perf_counter()
    ctx = build_field(q)
    if q > FULL_ENUMERATION_BUDGET_Q:
        warnings.warn(
            f"run_census: q={q} exceeds the full-enumeration budget "
            f"(q <= {FULL_ENUMERATION_BUDGET_Q}); expect a long run",
            RuntimeWarning, stacklevel=2)
    if threads < 1:
        raise ValueError("threads must be >= 1")

    tasks = [(q, range(c4, c4 + 1), None, include_degree6) for c4 in range(q)]
    if include_degree6:
        tasks += [(q, range(q), (c6, c5), True)
                  for c6 in (1, ctx.non_residue) for c5 in range(q)]

    a1_max, _, n_a2 = _hist_shape(q, include_degree6)
    hist = np.zeros((2 * a1_max + 1) * n_a2, dtype=np.int64)
    sf_total = 0
    n1_total = 0
    if threads == 1:
        parts = map(_census_worker, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=threads)
        parts = pool.map(_census_worker, tasks, chunksize=max(1, len(tasks) // (4 * threads)))
    for part_hist, part_sf, part_n1 in parts:
        hist += part_hist
        sf_total += part_sf
        n1_total += part_n1
    if threads > 1:
        pool.shutdown()

    if include_degree6:
        for a1, a2, count in _degree6_degenerate_classes(q, ctx.non_residue):
            key = (a1 + a1_max) * n_a2 + (a2 + 2 * q)
            if hist[key] < count:
                raise ConsistencyError("degenerate degree-6 correction exceeds the census cell")
            hist[key] -= count
            sf_total -= count

    expected = q ** 5 - q ** 4
    if include_degree6:
        expected += 2 * (q ** 6 - q ** 5)
    if sf_total != expected:
        raise ConsistencyError(
            f"squarefree model count {sf_total} != expected {expected} at q={q}")

    counts: dict[tuple[int, int], int] = {}
    for key in np.nonzero(hist)[0]:
        a1 = int(key) // n_a2 - a1_max
        a2 = int(key) % n_a2 - 2 * q
        counts[(a1, a2)] = int(hist[key])
    counts = dict(sorted(counts.items()))
    if sum(counts.values()) != expected:
        raise ConsistencyError("class multiplicities do not add up to the model count")

    strata = _build_strata(q, counts)
    violations = []
    for (a1, a2) in counts:
        bad = band_violations(FrobeniusClass(q, a1, a2))
        if bad:
            violations.append(((a1, a2), bad))

    metadata = {
        "format_version": CENSUS_FORMAT_VERSION,
        "threads": threads,
        "include_degree6": include_degree6,
        "runtime_seconds": time.perf_counter() - start,
        "n1_sum_all_models": n1_total,
        "band_checks_ok": not violations,
        "band_violations": violations,
        "model_family": "monic quintics"
                        + (" plus degree-6 with leading coefficient in {1, non-residue}"
                           if include_degree6 else ""),
        "caveats": "sampling device for the vertical distribution: moduli weights "
                   "(automorphisms, twists) are not corrected, and stratum labels use "
                   "the fundamental discriminant of the Weil data, a lower bound for "
                   "the endomorphism-ring discriminant",
    }
    return CensusReport(q, sf_total, counts, strata, metadata)


# ---------------------------------------------------------------------------
# Lattice scatter and extremal counts.

@dataclass(frozen=True)
class ScatterPoint:
    D: int
    m0: int
    s1: float
    delta0: float
    count: int


def weil_class_scatter(q: int, d_list) -> dict[int, list[ScatterPoint]]:
    """All integer pairs (a1, a2) in the Weil region whose real discriminant
    decomposes into a requested stratum D: the discrete band picture
    delta0 = m0 sqrt(D/q).

    Enumerates lattice points, not curves, so any odd prime q is cheap.
    Membership is by Weil data only, without endomorphism-ring
    verification.
    """
    if not _is_prime(q) or q % 2 == 0:
        raise ValueError(f"weil_class_scatter: q={q} must be an odd prime")
    wanted = set(int(d) for d in d_list)
    out: dict[int, list[ScatterPoint]] = {d: [] for d in sorted(wanted)}
    a1_max = math.isqrt(16 * q)
    for a1 in range(-a1_max, a1_max + 1):
        # 2|a1| sqrt(q) <= a2 + 2q: smallest admissible a2
        s = math.isqrt(4 * a1 * a1 * q)
        if s * s < 4 * a1 * a1 * q:
            s += 1
        a2_lo = s - 2 * q
        a2_hi = (a1 * a1 + 8 * q) // 4  # Delta_real >= 0
        for a2 in range(a2_lo, a2_hi + 1):
            fc = FrobeniusClass(q, a1, a2)
            m0, d_label = decompose_real_disc(fc.delta_real)
            if d_label in wanted:
                out[d_label].append(
                    ScatterPoint(d_label, m0, fc.s1, m0 * math.sqrt(d_label / q), 1))
    return out


def extremal_report(report: CensusReport, d_max: float) -> dict[int, int]:
    """Curve counts per stratum D over classes with defect d <= d_max.

    Every contributing class must satisfy D <= d_max^2 (the defect bounds
    the stratum discriminant); a violation raises ConsistencyError.
    """
    if not d_max > 0:
        raise ValueError("d_max must be positive")
    out: dict[int, int] = {}
    for fc, count in report.classes():
        if fc.defect <= d_max + 1e-12:
            _, d_label = decompose_real_disc(fc.delta_real)
            if d_label > d_max * d_max + 1e-9:
                raise ConsistencyError(
                    f"class {(fc.a1, fc.a2)} with defect {fc.defect:.6f} lies in "
                    f"stratum D={d_label} > d_max^2")
            out[d_label] = out.get(d_label, 0) + count
    return dict(sorted(out.items()))


# ---------------------------------------------------------------------------
# CSV cache formats.

def write_census_csv(path, report: CensusReport) -> None:
    """Census cache: version line, header, one row per class sorted by
    (a1, a2).  Deterministic bytes for a given (q, options)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CENSUS_FORMAT_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(["q", "a1", "a2", "count", "delta_real", "m0", "D"])
        for (a1, a2), count in sorted(report.counts.items()):
            fc = FrobeniusClass(report.q, a1, a2)
            m0, d_label = decompose_real_disc(fc.delta_real)
            writer.writerow([report.q, a1, a2, count, fc.delta_real, m0, d_label])


def read_census_csv(path) -> tuple[int, dict[tuple[int, int], int]]:
    """Parse a census cache back into (q, class counts), re-deriving and
    checking the stored discriminant columns."""
    with open(path, newline="") as fh:
        version = fh.readline().strip()
        if version != f"# {CENSUS_FORMAT_VERSION}":
            raise ValueError(f"unrecognized census cache version line: {version!r}")
        reader = csv.DictReader(fh)
        counts: dict[tuple[int, int], int] = {}
        q = None
        for row in reader:
            q = int(row["q"]) if q is None else q
            if int(row["q"]) != q:
                raise ValueError("census cache mixes different q values")
            a1, a2 = int(row["a1"]), int(row["a2"])
            fc = FrobeniusClass(q, a1, a2)
            m0, d_label = decompose_real_disc(fc.delta_real)
            if (int(row["delta_real"]), int(row["m0"]), int(row["D"])) != (fc.delta_real, m0, d_label):
                raise ValueError(f"inconsistent discriminant columns in row {row}")
            counts[(a1, a2)] = int(row["count"])
    if q is None:
        raise ValueError("empty census cache")
    return q, counts


def write_scatter_csv(path, scatter: dict[int, list[ScatterPoint]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["D", "m0", "s1", "delta0", "count"])
        for d_label in sorted(scatter):
            for p in scatter[d_label]:
                writer.writerow([p.D, p.m0, f"{p.s1:.12g}", f"{p.delta0:.12g}", p.count])


def read_scatter_csv(path) -> list[ScatterPoint]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [ScatterPoint(int(r["D"]), int(r["m0"]), float(r["s1"]),
                             float(r["delta0"]), int(r["count"])) for r in reader]
