"""Adaptive panel integration built on Gauss-Legendre rules.

Deliberately plain machinery: a panel is accepted once the two-half
refinement agrees with the single-panel estimate within the error budget
assigned to that panel (budgets are allocated proportionally to width, so
the accepted total stays within the requested absolute tolerance).
Integrands must accept 1-D numpy arrays of abscissae.
"""

from __future__ import annotations

import numpy as np

__all__ = ["QuadratureError", "gauss_legendre", "fixed_quad", "adaptive_quad"]


class QuadratureError(RuntimeError):
    """Raised when the error budget cannot be met within the panel limit."""


_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], cached."""
    rule = _RULES.get(n)
    if rule is None:
        rule = np.polynomial.legendre.leggauss(n)
        _RULES[n] = rule
    return rule


def fixed_quad(f, a: float, b: float, n: int = 64) -> float:
    """Non-adaptive n-point Gauss-Legendre estimate of the integral of f over [a, b]."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(a + half * (x + 1.0))))


def adaptive_quad(f, a: float, b: float, abs_tol: float = 1e-12,
                  max_subdivisions: int = 4096, n_nodes: int = 10) -> tuple[float, float]:
    """Integrate f over [a, b] to absolute tolerance abs_tol.

    Returns (value, error_estimate).  The estimate is the sum of the
    per-panel |whole - halves| differences, which is conservative for
    smooth integrands.  Raises QuadratureError if more than
    max_subdivisions panels would be needed.
    """
    if b == a:
        return 0.0, 0.0
    if b < a:
        v, e = adaptive_quad(f, b, a, abs_tol, max_subdivisions, n_nodes)
        return -v, e
    x, w = gauss_legendre(n_nodes)
    xs = 0.5 * (x + 1.0)  # nodes on [0, 1]
    total_width = b - a
    pending = np.array([[a, b]])
    value = 0.0
    err = 0.0
    n_panels = 1
    while pending.size:
        lo = pending[:, 0]
        hi = pending[:, 1]
        mid = 0.5 * (lo + hi)
        starts = np.stack([lo, lo, mid], axis=1)
        ends = np.stack([hi, mid, hi], axis=1)
        widths = ends - starts
        nodes = starts[:, :, None] + widths[:, :, None] * xs[None, None, :]
        vals = f(nodes.reshape(-1)).reshape(nodes.shape)
        ints = 0.5 * widths * (vals @ w)
        whole = ints[:, 0]
        halves = ints[:, 1] + ints[:, 2]
        perr = np.abs(whole - halves)
        # a panel narrower than float resolution cannot be refined further
        exhausted = (hi - lo) <= 64.0 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi))
        ok = (perr <= abs_tol * (hi - lo) / total_width) | exhausted
        value += float(halves[ok].sum())
        err += float(perr[ok].sum())
        bad = ~ok
        n_panels += int(bad.sum())
        if n_panels > max_subdivisions:
            raise QuadratureError(
                f"adaptive_quad: needed more than {max_subdivisions} panels on [{a}, {b}]")
        pending = np.concatenate([
            np.stack([lo[bad], mid[bad]], axis=1),
            np.stack([mid[bad], hi[bad]], axis=1),
        ])
    return value, err
