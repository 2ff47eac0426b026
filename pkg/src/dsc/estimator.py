"""Distributional synthetic control fit, counterfactual quantiles and QTE."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .distributions import UniformDraws, draw_uniforms
from .panel import EstimationConfig, PanelDataset, check_lambdas, min_group_size, resolve_M
from .quantiles import EmpiricalQuantile
from .simplex import DEFAULT_MAX_ITER, DEFAULT_TOL, SolveReport, solve_simplex_ls


class ConvergenceError(RuntimeError):
    """A per-period solve stopped without an optimality certificate."""

    def __init__(self, period, report: SolveReport):
        super().__init__(
            f"simplex solve for period {period} did not converge "
            f"(kkt residual {report.kkt_residual:.3e} after {report.iterations} iterations)"
        )
        self.period = period
        self.report = report


@dataclass(frozen=True)
class DscFit:
    periods: tuple[int, ...]
    controls: tuple[int, ...]
    per_period_weights: Mapping[int, np.ndarray]
    lambdas: np.ndarray
    weights: np.ndarray
    per_period_loss: Mapping[int, float]
    M: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "controls": list(self.controls),
            "weights": [float(v) for v in self.weights],
            "per_period_weights": {
                str(t): [float(v) for v in self.per_period_weights[t]] for t in self.periods
            },
            "lambdas": {str(t): float(l) for t, l in zip(self.periods, self.lambdas)},
            "per_period_loss": {str(t): float(self.per_period_loss[t]) for t in self.periods},
            "M": int(self.M),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DscFit":
        periods = tuple(sorted(int(t) for t in d["per_period_weights"]))
        return cls(
            periods=periods,
            controls=tuple(d.get("controls", ())),
            per_period_weights={t: np.array(d["per_period_weights"][str(t)]) for t in periods},
            lambdas=np.array([d["lambdas"][str(t)] for t in periods]),
            weights=np.array(d["weights"]),
            per_period_loss={t: float(d["per_period_loss"][str(t)]) for t in periods},
            M=int(d["M"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True)
class QteCurve:
    period: int
    grid: np.ndarray
    values: np.ndarray


def quantile_fns(panel: PanelDataset, period: int) -> list[EmpiricalQuantile]:
    """Empirical quantile functions for every unit at ``period``, treated first."""
    return [EmpiricalQuantile(panel.cell(u, period)) for u in panel.units]


def period_design(panel: PanelDataset, period: int, draws) -> tuple[np.ndarray, np.ndarray]:
    """Artificial-sample design matrix (M x J) and treated target (M,)."""
    v = draws.values if isinstance(draws, UniformDraws) else np.asarray(draws, dtype=float)
    cols = [fn.sorted_sample[fn.index(v)] for fn in quantile_fns(panel, period)]
    return np.column_stack(cols[1:]), cols[0]


def fit_period_weights(panel, t, draws, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, strict=True):
    """Simplex weights for one pre-treatment period and the attained loss."""
    if t not in panel.pre_periods:
        raise ValueError(f"period {t} is not a pre-treatment period")
    X, y = period_design(panel, t, draws)
    rep = solve_simplex_ls(X, y, tol=tol, max_iter=max_iter)
    if strict and not rep.converged:
        raise ConvergenceError(t, rep)
    return rep.weights, rep.objective


def aggregate_weights(per_period: Mapping[int, np.ndarray], lambdas) -> np.ndarray:
    periods = sorted(per_period)
    lam = np.asarray(lambdas, dtype=float)
    if lam.size != len(periods):
        raise ValueError(f"{lam.size} lambdas for {len(periods)} periods")
    check_lambdas(lam)
    W = np.vstack([per_period[t] for t in periods])
    return lam @ W


def fit_dsc(panel: PanelDataset, config: EstimationConfig | None = None,
            tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, draws=None) -> DscFit:
    """Fit per-period weights on shared uniform draws and average them.

    One draw sequence is used for every unit and every period, so each
    period's loss approximates the same integral over quantile levels.
    """
    config = config or EstimationConfig()
    if draws is None:
        M = resolve_M(config, min_group_size(panel))
        draws = draw_uniforms(M, config.draw_mode, config.seed)
    lam = config.lambda_vector(panel.t0)
    weights, losses = {}, {}
    for t in panel.pre_periods:
        weights[t], losses[t] = fit_period_weights(panel, t, draws, tol, max_iter)
    return DscFit(
        periods=panel.pre_periods,
        controls=panel.controls,
        per_period_weights=weights,
        lambdas=lam,
        weights=aggregate_weights(weights, lam),
        per_period_loss=losses,
        M=len(draws),
        seed=int(config.seed),
    )


def _check_post(panel, t):
    if t not in panel.post_periods:
        raise ValueError(f"period {t} is not a post-treatment period")


def counterfactual_quantile(fit: DscFit, panel: PanelDataset, t: int, q):
    _check_post(panel, t)
    fns = quantile_fns(panel, t)[1:]
    out = sum(w * np.asarray(fn.quantile(q)) for w, fn in zip(fit.weights, fns))
    return float(out) if np.ndim(q) == 0 else out


def default_qte_grid(size: int = 99) -> np.ndarray:
    """``size`` evenly spaced levels strictly inside (0, 1), e.g. 0.01..0.99."""
    return np.arange(1, size + 1) / (size + 1)


def qte_curve(fit: DscFit, panel: PanelDataset, t: int, grid: Sequence[float] | None = None) -> QteCurve:
    _check_post(panel, t)
    grid = default_qte_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a non-empty strictly increasing vector")
    observed = EmpiricalQuantile(panel.cell(panel.treated, t)).quantile(grid)
    return QteCurve(t, grid, observed - counterfactual_quantile(fit, panel, t, grid))


def write_fit_json(fit: DscFit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fit.to_dict(), fh, indent=2)
        fh.write("\n")


def read_fit_json(path) -> DscFit:
    with open(path, encoding="utf-8") as fh:
        return DscFit.from_dict(json.load(fh))


def write_qte_csv(curves: Sequence[QteCurve], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "q", "qte"])
        for c in curves:
            for q, v in zip(c.grid, c.values):
                w.writerow([c.period, repr(float(q)), repr(float(v))])
