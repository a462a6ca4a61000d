"""Seeded Monte Carlo draws from the trace measures, with a KS check.

Rejection sampling throughout: the densities are cheap and the bounds are
provable, so inverse-CDF machinery is never needed.

  semicircle  propose t uniform on [-2, 2], accept with probability
              sqrt(4 - t^2)/2 (acceptance rate pi/4);
  product     sum of two independent semicircle draws;
  diagonal    twice one semicircle draw;
  generic     propose (theta1, theta2) uniform on [0, pi]^2 and accept
              with probability f(theta)/B against the crude sup bound
              B = 32/pi^2 of the angle density.  The expected acceptance
              rate is int f / (pi^2 B) = 1/32.

Streams come from PCG64 (period 2^128) with jump-ahead substreams: worker
w starts 2^127 w steps into the stream, so substreams cannot overlap for
any practical draw count.  Identical configuration gives bit-identical
sequences.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import tracedist
from .measures import GroupKind

__all__ = [
    "N_BINS", "SamplerConfig", "EmpiricalSummary", "substream",
    "sample_semicircle", "sample_trace", "sample_summary",
    "merge_summaries", "ks_distance", "write_samples_csv",
]

N_BINS = 512
_BIN_EDGES = np.linspace(-4.0, 4.0, N_BINS + 1)


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    n_samples: int
    group: GroupKind

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass
class EmpiricalSummary:
    sorted_traces: np.ndarray
    bin_counts: np.ndarray
    n: int

    def __post_init__(self):
        if self.n != self.sorted_traces.size or int(self.bin_counts.sum()) != self.n:
            raise ValueError("inconsistent summary")


def substream(seed: int, worker: int = 0) -> np.random.Generator:
    """Independent generator for (seed, worker): PCG64 jumped ahead
    worker * 2^127 steps."""
    return np.random.Generator(np.random.PCG64(seed).jumped(worker))


def sample_semicircle(rng: np.random.Generator, size: int,
                      with_stats: bool = False):
    """Draws from the semicircle density sqrt(4 - t^2) / (2 pi) on [-2, 2].

    With with_stats=True also returns the number of proposals consumed.
    """
    out = np.empty(size)
    filled = 0
    proposals = 0
    while filled < size:
        m = max(int((size - filled) * 1.35) + 16, 64)
        t = rng.uniform(-2.0, 2.0, m)
        u = rng.uniform(0.0, 1.0, m)
        acc = t[2.0 * u <= np.sqrt(4.0 - t * t)]
        take = min(acc.size, size - filled)
        out[filled:filled + take] = acc[:take]
        filled += take
        proposals += m
    if with_stats:
        return out, proposals
    return out


def _sample_generic_angles(rng: np.random.Generator, size: int):
    """Rejection draws of s1 = 2 cos(theta1) + 2 cos(theta2) from the
    generic angle density, uniform proposals on [0, pi]^2.

    Acceptance probability at a proposal is density/B with B = 32/pi^2,
    i.e. (cos t1 - cos t2)^2 sin^2 t1 sin^2 t2 / 4.
    """
    out = np.empty(size)
    filled = 0
    proposals = 0
    while filled < size:
        m = max(int((size - filled) * 34.0) + 64, 4096)
        m = min(m, 4_000_000)
        th = rng.uniform(0.0, math.pi, (m, 2))
        u = rng.uniform(0.0, 1.0, m)
        c = np.cos(th)
        s = np.sin(th)
        ratio = 0.25 * (c[:, 0] - c[:, 1]) ** 2 * (s[:, 0] * s[:, 1]) ** 2
        sel = u <= ratio
        acc = 2.0 * (c[sel, 0] + c[sel, 1])
        take = min(acc.size, size - filled)
        out[filled:filled + take] = acc[:take]
        filled += take
        proposals += m
    return out, proposals


def sample_trace(group: GroupKind, rng: np.random.Generator, size: int,
                 with_stats: bool = False):
    """Draws of the trace s1 in [-4, 4] under the named type's measure."""
    if group is GroupKind.H_SU2XSU2:
        d = sample_semicircle(rng, 2 * size, with_stats)
        if with_stats:
            d, proposals = d
            return d[0::2] + d[1::2], proposals
        return d[0::2] + d[1::2]
    if group is GroupKind.DELTA_SU2:
        d = sample_semicircle(rng, size, with_stats)
        if with_stats:
            return 2.0 * d[0], d[1]
        return 2.0 * d
    traces, proposals = _sample_generic_angles(rng, size)
    if with_stats:
        return traces, proposals
    return traces


def _summarize(traces: np.ndarray) -> EmpiricalSummary:
    counts, _ = np.histogram(traces, bins=_BIN_EDGES)
    return EmpiricalSummary(np.sort(traces), counts, traces.size)


def sample_summary(config: SamplerConfig, workers: int = 1) -> EmpiricalSummary:
    """Draw config.n_samples traces, optionally split over jump-ahead
    substreams (worker w handles a fixed share, so the merged summary is
    deterministic for a given worker count)."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    shares = [config.n_samples // workers] * workers
    for w in range(config.n_samples % workers):
        shares[w] += 1
    parts = [sample_trace(config.group, substream(config.seed, w), share)
             for w, share in enumerate(shares) if share]
    return _summarize(np.concatenate(parts))


def merge_summaries(a: EmpiricalSummary, b: EmpiricalSummary) -> EmpiricalSummary:
    traces = np.concatenate([a.sorted_traces, b.sorted_traces])
    traces.sort()
    return EmpiricalSummary(traces, a.bin_counts + b.bin_counts, a.n + b.n)


def ks_distance(emp: EmpiricalSummary, group: GroupKind) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and the
    analytic distribution of the named type (quadrature-route table)."""
    if emp.n < 100:
        raise ValueError("ks_distance needs at least 100 samples")
    f = tracedist.cdf_function(group)(emp.sorted_traces)
    i = np.arange(1, emp.n + 1, dtype=float)
    return float(max(np.max(i / emp.n - f), np.max(f - (i - 1.0) / emp.n)))


def write_samples_csv(path, traces: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "s1"])
        for i, t in enumerate(traces):
            writer.writerow([i, f"{t:.17g}"])
