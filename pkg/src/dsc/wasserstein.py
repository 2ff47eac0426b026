"""2-Wasserstein distances between one-dimensional distributions.

Anything with a vectorised ``quantile(q)`` method can be compared:
:class:`~dsc.quantiles.EmpiricalQuantile`, :class:`~dsc.distributions.Normal`
and :class:`~dsc.distributions.ChiSquare`.
"""
from __future__ import annotations

import numpy as np

from .distributions import UniformDraws

DEFAULT_GRID = 10_000


def midpoint_grid(G: int) -> np.ndarray:
    """Levels ``(i - 0.5) / G`` for ``i = 1..G``; never touches 0 or 1."""
    if G < 1:
        raise ValueError(f"grid size must be >= 1, got {G}")
    return (np.arange(G, dtype=float) + 0.5) / G


def w2_grid(a, b, G: int = DEFAULT_GRID) -> float:
    q = midpoint_grid(G)
    d = np.asarray(a.quantile(q)) - np.asarray(b.quantile(q))
    return float(np.sqrt(np.mean(d * d)))


def w2_empirical_equal_n(x, y) -> float:
    """Exact W2 between two equal-size empirical measures (sorted pairing)."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size == 0:
        raise ValueError("empty samples")
    d = x - y
    return float(np.sqrt(np.mean(d * d)))


def w2_sq_mc(a, b, draws) -> float:
    """Monte Carlo squared distance ``mean((a(V) - b(V))**2)`` over the draws."""
    v = draws.values if isinstance(draws, UniformDraws) else np.asarray(draws, dtype=float)
    d = np.asarray(a.quantile(v)) - np.asarray(b.quantile(v))
    return float(np.mean(d * d))
