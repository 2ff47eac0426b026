"""Analytic quantile functions and seeded uniform draw sequences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal, special

from .panel import DrawMode

# open-interval guard for uniforms mapped through the normal CDF
_U_EPS = 2.0**-53


def _check_levels(q):
    q = np.asarray(q, dtype=float)
    if np.any(~(q > 0) | ~(q < 1)):
        raise ValueError("quantile levels must lie strictly inside (0, 1)")
    return q


def _scalar_or_array(q, out):
    return float(out) if np.ndim(q) == 0 else out


def normal_quantile(q):
    """Standard normal inverse CDF, elementwise."""
    qa = _check_levels(q)
    return _scalar_or_array(q, special.ndtri(qa))


def chi_square_quantile(q, df):
    """Chi-square inverse CDF with ``df`` degrees of freedom, elementwise."""
    if not df > 0:
        raise ValueError(f"df must be positive, got {df}")
    qa = _check_levels(q)
    return _scalar_or_array(q, 2.0 * special.gammaincinv(0.5 * df, qa))


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def quantile(self, q):
        return self.mu + self.sigma * normal_quantile(q)

    @property
    def mean(self):
        return self.mu

    @property
    def std(self):
        return self.sigma


@dataclass(frozen=True)
class ChiSquare:
    df: float

    def __post_init__(self):
        if not self.df > 0:
            raise ValueError(f"df must be positive, got {self.df}")

    def quantile(self, q):
        return chi_square_quantile(q, self.df)

    @property
    def mean(self):
        return float(self.df)

    @property
    def std(self):
        return float(np.sqrt(2.0 * self.df))


AnalyticDistribution = Normal | ChiSquare


def analytic_quantile(dist: AnalyticDistribution, q):
    return dist.quantile(q)


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative integer keys."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


@dataclass(frozen=True)
class UniformDraws:
    values: np.ndarray
    mode: DrawMode
    seed: int

    def __len__(self):
        return self.values.size


def draw_uniforms(M: int, mode: DrawMode | str = "iid", seed: int = 0) -> UniformDraws:
    """Draw ``M`` values in (0, 1).

    In ``ar1`` mode a stationary unit-variance Gaussian AR(1) path is pushed
    through the normal CDF, so the marginals stay uniform while neighbouring
    draws are dependent.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if isinstance(mode, str):
        mode = DrawMode.parse(mode)
    rng = make_rng(seed)
    if mode.kind == "iid":
        # 53-bit grid shifted by half a step: never 0 or 1
        k = rng.integers(0, 2**53, size=M, dtype=np.int64)
        values = (k.astype(float) + 0.5) * 2.0**-53
    else:
        rho = mode.rho
        eps = rng.standard_normal(M)
        innov = np.sqrt(1.0 - rho * rho) * eps
        innov[0] = eps[0]
        z = signal.lfilter([1.0], [1.0, -rho], innov)
        values = np.clip(special.ndtr(z), _U_EPS, 1.0 - _U_EPS)
    values.setflags(write=False)
    return UniformDraws(values, mode, int(seed))
