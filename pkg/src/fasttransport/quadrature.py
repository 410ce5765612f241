"""Composite Gauss-Legendre quadrature used for every time integral."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def _nodes(order: int):
    return np.polynomial.legendre.leggauss(order)


def integrate(f, a: float, b: float, breakpoints=(), rtol: float = 1e-10,
              order: int = 64, max_panels: int = 4096) -> float:
    """Integrate a vectorised ``f`` over ``[a, b]``.

    The interval is cut at ``breakpoints`` (where the integrand may have a
    kink), each piece is split into panels of ``order`` nodes, and the panel
    count is doubled until two successive estimates agree to ``rtol``.
    """
    if b == a:
        return 0.0
    cuts = sorted({a, b, *[c for c in breakpoints if a < c < b]})
    x, w = _nodes(order)
    panels = 1
    previous = None
    while True:
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            edges = np.linspace(lo, hi, panels + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
            vals = np.asarray(f(pts), dtype=float).reshape(panels, order)
            total += float(np.sum(half[:, None] * vals * w[None, :]))
        if previous is not None:
            scale = max(abs(total), abs(previous))
            if abs(total - previous) <= rtol * scale or scale == 0.0:
                return total
        if panels >= max_panels:
            return total
        previous = total
        panels *= 2


def time_average(f, duration: float, breakpoints=(), rtol: float = 1e-10) -> float:
    return integrate(f, 0.0, duration, breakpoints, rtol) / duration
