"""Post-treatment risk, oracle-optimal weights and convergence diagnostics.

The oracle carries the true (or large-sample) quantile functions of every unit
in every post-treatment period, pre-evaluated on a midpoint grid. Risk and the
optimal weights are computed on that same grid, so the reported minimum is the
minimum of the reported risk.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimator import DscFit, period_design
from .quantiles import EmpiricalQuantile
from .simplex import DEFAULT_MAX_ITER, DEFAULT_TOL, solve_simplex_ls
from .wasserstein import DEFAULT_GRID, midpoint_grid

PERFECT_FIT_TOL = 1e-12


class DegenerateOracleError(ArithmeticError):
    """The optimal post-treatment risk is zero, so the ratio is undefined."""


@dataclass(frozen=True)
class OracleSpec:
    controls: np.ndarray  # (T1, G, J)
    treated: np.ndarray  # (T1, G)

    def __post_init__(self):
        c = np.asarray(self.controls, dtype=float)
        tr = np.asarray(self.treated, dtype=float)
        if c.ndim != 3 or tr.shape != c.shape[:2]:
            raise ValueError(f"shape mismatch: controls {c.shape}, treated {tr.shape}")
        object.__setattr__(self, "controls", c)
        object.__setattr__(self, "treated", tr)

    @property
    def T1(self) -> int:
        return self.controls.shape[0]

    @property
    def G(self) -> int:
        return self.controls.shape[1]

    @property
    def J(self) -> int:
        return self.controls.shape[2]

    def stacked(self):
        return self.controls.reshape(-1, self.J), self.treated.reshape(-1)

    @classmethod
    def from_quantile_fns(cls, controls: Sequence[Sequence], treated: Sequence, G: int = DEFAULT_GRID):
        """``controls[t][j]`` and ``treated[t]`` are objects with ``quantile(q)``."""
        if len(controls) != len(treated) or not treated:
            raise ValueError("need one treated quantile function per post period")
        q = midpoint_grid(G)
        C = np.stack([np.column_stack([fn.quantile(q) for fn in fns]) for fns in controls])
        Tr = np.stack([fn.quantile(q) for fn in treated])
        return cls(C, Tr)

    @classmethod
    def from_samples(cls, samples: Sequence[Sequence[np.ndarray]], G: int = DEFAULT_GRID):
        """Empirical oracle; ``samples[t]`` lists the treated sample first."""
        fns = [[EmpiricalQuantile(s) for s in per_t] for per_t in samples]
        return cls.from_quantile_fns([f[1:] for f in fns], [f[0] for f in fns], G)


def post_treatment_risk(w, oracle: OracleSpec) -> float:
    """Average over post periods of the squared W2 distance of the w-mixture."""
    X, y = oracle.stacked()
    r = X @ np.asarray(w, dtype=float) - y
    return float(np.mean(r * r))


def optimal_weights(oracle: OracleSpec, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> np.ndarray:
    X, y = oracle.stacked()
    return solve_simplex_ls(X, y, tol=tol, max_iter=max_iter).weights


def _weights(fit_or_w):
    return fit_or_w.weights if isinstance(fit_or_w, DscFit) else np.asarray(fit_or_w, dtype=float)


def _risk_floor(oracle):
    return 1e-14 * max(1.0, float(np.mean(oracle.treated**2)))


def optimality_ratio(fit, oracle: OracleSpec, w_opt=None) -> float:
    """Risk at the fitted weights over the smallest achievable risk.

    Raises :class:`DegenerateOracleError` when the optimal risk is zero but the
    fitted weights do not also attain it. If both are zero the synthesis is
    exact and 1.0 is returned.
    """
    if w_opt is None:
        w_opt = optimal_weights(oracle)
    risk_opt = post_treatment_risk(w_opt, oracle)
    risk_fit = post_treatment_risk(_weights(fit), oracle)
    floor = _risk_floor(oracle)
    if risk_opt <= floor:
        if risk_fit <= floor:
            return 1.0
        raise DegenerateOracleError(
            f"optimal post-treatment risk is {risk_opt:.3e}; ratio undefined"
        )
    return risk_fit / risk_opt


def weight_distance(fit, w_opt) -> float:
    return float(np.linalg.norm(_weights(fit) - np.asarray(w_opt, dtype=float)))


@dataclass(frozen=True)
class FitDiagnostics:
    xi_hat: dict
    xi_bar_hat: float
    perfect_fit: dict


def pretreatment_fit_diagnostics(fit: DscFit) -> FitDiagnostics:
    xi = {t: float(fit.per_period_loss[t]) for t in fit.periods}
    xi_bar = float(np.dot(fit.lambdas, [xi[t] for t in fit.periods]))
    return FitDiagnostics(xi, xi_bar, {t: v < PERFECT_FIT_TOL for t, v in xi.items()})


def gram_eigen_extremes(X) -> tuple[float, float]:
    X = np.asarray(X, dtype=float)
    ev = np.linalg.eigvalsh(X.T @ X / X.shape[0])
    return float(ev[0]), float(ev[-1])


def design_eigen_diagnostic(panel, draws, t) -> tuple[float, float]:
    """Smallest and largest eigenvalue of ``X'X / M`` for period ``t``'s design."""
    if t not in panel.pre_periods:
        raise ValueError(f"period {t} is not a pre-treatment period")
    X, _ = period_design(panel, t, draws)
    return gram_eigen_extremes(X)


@dataclass(frozen=True)
class ConvergenceReport:
    ratio: float
    weight_distance: float
    risk_at_fit: float
    risk_at_opt: float
    xi_hat: dict
    xi_bar_hat: float
    eigen: dict  # period -> (min, max); empty when no panel is supplied


def convergence_report(fit: DscFit, oracle: OracleSpec, panel=None, draws=None) -> ConvergenceReport:
    w_opt = optimal_weights(oracle)
    diag = pretreatment_fit_diagnostics(fit)
    eigen = {}
    if panel is not None and draws is not None:
        eigen = {t: design_eigen_diagnostic(panel, draws, t) for t in panel.pre_periods}
    return ConvergenceReport(
        ratio=optimality_ratio(fit, oracle, w_opt),
        weight_distance=weight_distance(fit, w_opt),
        risk_at_fit=post_treatment_risk(fit.weights, oracle),
        risk_at_opt=post_treatment_risk(w_opt, oracle),
        xi_hat=diag.xi_hat,
        xi_bar_hat=diag.xi_bar_hat,
        eigen=eigen,
    )


def convergence_csv_row(J, M, rep, report: ConvergenceReport) -> list:
    return [J, M, rep, repr(report.ratio), repr(report.weight_distance),
            repr(report.risk_at_fit), repr(report.risk_at_opt), repr(report.xi_bar_hat)]


CONVERGENCE_CSV_HEADER = ["J", "M", "rep", "ratio", "weight_distance", "risk_fit", "risk_opt", "xi_bar"]
