"""Order-statistic quantile functions and artificial samples."""
from __future__ import annotations

import numpy as np

from .distributions import UniformDraws


class EmpiricalQuantile:
    """Left-continuous empirical quantile function of a sample.

    The level ``q`` maps to the ``k``-th order statistic with ``k = ceil(q n)``,
    so levels on the boundary ``q = k/n`` resolve to index ``k``.
    """

    __slots__ = ("sorted_sample",)

    def __init__(self, sample):
        x = np.array(sample, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("empty sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("sample contains non-finite values")
        x.sort(kind="stable")
        x.setflags(write=False)
        self.sorted_sample = x

    @property
    def n(self) -> int:
        return self.sorted_sample.size

    def index(self, q):
        q = np.asarray(q, dtype=float)
        if np.any(~(q > 0) | ~(q < 1)):
            raise ValueError("quantile levels must lie strictly inside (0, 1)")
        n = self.n
        p = q * n
        r = np.rint(p)
        # decimal levels such as 0.7 with n=10 land a few ulps past k/n
        on_boundary = np.abs(p - r) <= 4.0 * np.finfo(float).eps * np.maximum(p, 1.0)
        k = np.where(on_boundary, r, np.ceil(p)).astype(np.int64)
        return np.clip(k, 1, n) - 1

    def quantile(self, q):
        out = self.sorted_sample[self.index(q)]
        return float(out) if np.ndim(q) == 0 else out

    __call__ = quantile

    def __repr__(self):
        return f"EmpiricalQuantile(n={self.n})"


def fit_empirical_quantile(sample) -> EmpiricalQuantile:
    return EmpiricalQuantile(sample)


def eval_empirical_quantile(fn: EmpiricalQuantile, q):
    return fn.quantile(q)


def build_artificial_sample(fn: EmpiricalQuantile, draws) -> np.ndarray:
    v = draws.values if isinstance(draws, UniformDraws) else np.asarray(draws, dtype=float)
    return fn.sorted_sample[fn.index(v)]
