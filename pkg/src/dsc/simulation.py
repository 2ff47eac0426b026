"""Monte Carlo designs for checking optimality and weight convergence.

Two data-generating processes are provided:

* :class:`ModelFree` -- the treated unit draws from chi-square(2), control
  ``j`` from ``N(mu_j, sigma_j^2)`` with ``mu_j ~ U(3, 10)`` and
  ``sigma_j = 3`` for odd ``j``, 2.5 for even ``j`` (units are numbered from 1,
  the treated unit being unit 1).
* :class:`QuantileFactor` -- two-factor structure
  ``Y_itm = l1_im f1_tm + l2_im f2_tm`` with ``f_stm ~ N(mu_t, 9)``,
  ``mu_t ~ N(0, 1)``, loadings ``~ N(mu_i, sigma_i^2)``, ``mu_1 = 2``,
  ``mu_j ~ U(2, 10)`` for controls, ``sigma = 2.7`` (odd) or 3 (even).

Each replication's generated draws are treated as the micro-samples of a
panel and pushed through :func:`~dsc.estimator.fit_dsc` with ``M`` equal to
the per-cell sample size. Parameters and the oracle depend only on
``(master_seed, J, rep)`` so that cells with different ``M`` are compared on
common random numbers.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .asymptotics import (
    OracleSpec,
    optimal_weights,
    optimality_ratio,
    post_treatment_risk,
    pretreatment_fit_diagnostics,
    weight_distance,
)
from .distributions import ChiSquare, Normal, derive_seed, make_rng
from .estimator import fit_dsc
from .panel import EstimationConfig, PanelDataset
from .quantiles import EmpiricalQuantile
from .wasserstein import midpoint_grid

log = logging.getLogger(__name__)

# stream tags mixed into derived seeds
_PARAMS, _ORACLE, _DATA, _DRAWS = 11, 12, 13, 14


def _odd_even(n_units, odd, even):
    # unit numbers are 1-based
    return np.array([odd if (i + 1) % 2 else even for i in range(n_units)])


@dataclass(frozen=True)
class ModelFree:
    J: int
    treated_df: float = 2.0
    tag: str = field(default="model-free", init=False)

    def __post_init__(self):
        if self.J < 2:
            raise ValueError("J must be >= 2")

    @property
    def sigma(self):
        return _odd_even(self.J + 1, 3.0, 2.5)[1:]

    def draw_params(self, rng, T):
        return {"mu": rng.uniform(3.0, 10.0, self.J)}

    def distributions(self, params):
        return [ChiSquare(self.treated_df)] + [
            Normal(m, s) for m, s in zip(params["mu"], self.sigma)
        ]

    def draw_data(self, params, rng, M, T):
        out = np.empty((self.J + 1, T, M))
        out[0] = rng.chisquare(self.treated_df, (T, M))
        out[1:] = rng.normal(
            params["mu"][:, None, None], self.sigma[:, None, None], (self.J, T, M)
        )
        return out

    def oracle(self, params, rng, T0, T1, G, eval_size):
        q = midpoint_grid(G)
        dists = self.distributions(params)
        C = np.column_stack([d.quantile(q) for d in dists[1:]])
        tr = dists[0].quantile(q)
        # the distributions do not move over time
        return OracleSpec(np.broadcast_to(C, (T1,) + C.shape), np.broadcast_to(tr, (T1, G)))


@dataclass(frozen=True)
class QuantileFactor:
    J: int
    tag: str = field(default="factor", init=False)

    def __post_init__(self):
        if self.J < 2:
            raise ValueError("J must be >= 2")

    @property
    def sigma(self):
        return _odd_even(self.J + 1, 2.7, 3.0)

    def draw_params(self, rng, T):
        mu_units = np.concatenate([[2.0], rng.uniform(2.0, 10.0, self.J)])
        return {"mu_t": rng.normal(0.0, 1.0, T), "mu_units": mu_units}

    def _loadings(self, params, rng, size):
        mu = params["mu_units"][None, :, None]
        sd = self.sigma[None, :, None]
        return rng.normal(mu, sd, (2, self.J + 1, size))

    def draw_data(self, params, rng, M, T):
        lam = self._loadings(params, rng, M)  # (2, J+1, M), fixed over time
        f = rng.normal(params["mu_t"][None, :, None], 3.0, (2, T, M))
        return lam[0][:, None, :] * f[0][None] + lam[1][:, None, :] * f[1][None]

    def oracle(self, params, rng, T0, T1, G, eval_size):
        q = midpoint_grid(G)
        C = np.empty((T1, G, self.J))
        tr = np.empty((T1, G))
        for k, t in enumerate(range(T0, T0 + T1)):
            lam = self._loadings(params, rng, eval_size)
            f = rng.normal(params["mu_t"][t], 3.0, (2, eval_size))
            vals = lam[0] * f[0] + lam[1] * f[1]
            cols = [EmpiricalQuantile(v).quantile(q) for v in vals]
            tr[k] = cols[0]
            C[k] = np.column_stack(cols[1:])
        return OracleSpec(C, tr)


DgpSpec = ModelFree | QuantileFactor


def make_dgp(tag: str, J: int) -> DgpSpec:
    if tag == "model-free":
        return ModelFree(J)
    if tag == "factor":
        return QuantileFactor(J)
    raise ValueError(f"unknown dgp {tag!r}")


@dataclass
class Replication:
    data: np.ndarray  # (J+1, T, M), treated first
    oracle: OracleSpec
    params: dict


def replication_params(dgp, T0, T1, param_seed, grid_size=10_000, oracle_eval_size=100_000):
    """Per-replication parameters and the oracle built from them."""
    params = dgp.draw_params(make_rng(param_seed, _PARAMS), T0 + T1)
    oracle = dgp.oracle(params, make_rng(param_seed, _ORACLE), T0, T1, grid_size, oracle_eval_size)
    return params, oracle


def gen_replication(dgp, M, T0, T1, seed, param_seed=None, grid_size=10_000,
                    oracle_eval_size=100_000, prepared=None) -> Replication:
    if param_seed is None:
        param_seed = seed
    if prepared is None:
        prepared = replication_params(dgp, T0, T1, param_seed, grid_size, oracle_eval_size)
    params, oracle = prepared
    data = dgp.draw_data(params, make_rng(seed, _DATA), M, T0 + T1)
    return Replication(data, oracle, params)


@dataclass(frozen=True)
class ReplicationResult:
    ratio: float
    weight_distance: float
    xi_bar: float
    risk_fit: float
    risk_opt: float


def run_replication(dgp, M, T0, T1, seed, param_seed=None, grid_size=10_000,
                    oracle_eval_size=100_000, prepared=None, w_opt=None) -> ReplicationResult:
    """One replication: generate, fit with uniform lambdas, score against the oracle."""
    rep = gen_replication(dgp, M, T0, T1, seed, param_seed, grid_size, oracle_eval_size, prepared)
    panel = PanelDataset.from_array(rep.data, t0=T0)
    config = EstimationConfig(M=M, seed=derive_seed(seed, _DRAWS))
    fit = fit_dsc(panel, config)
    if w_opt is None:
        w_opt = optimal_weights(rep.oracle)
    return ReplicationResult(
        ratio=optimality_ratio(fit, rep.oracle, w_opt),
        weight_distance=weight_distance(fit, w_opt),
        xi_bar=pretreatment_fit_diagnostics(fit).xi_bar_hat,
        risk_fit=post_treatment_risk(fit.weights, rep.oracle),
        risk_opt=post_treatment_risk(w_opt, rep.oracle),
    )


@dataclass(frozen=True)
class SimulationGrid:
    dgp: str
    J_list: Sequence[int]
    M_list: Sequence[int]
    reps: int = 200
    T0: int = 10
    T1: int = 5
    master_seed: int = 0
    oracle_eval_size: int = 100_000
    grid_size: int = 10_000

    def __post_init__(self):
        if self.dgp not in ("model-free", "factor"):
            raise ValueError(f"unknown dgp {self.dgp!r}")
        for name in ("reps", "T0", "T1", "oracle_eval_size", "grid_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.J_list or not self.M_list:
            raise ValueError("J_list and M_list must be non-empty")
        if min(self.J_list) < 2 or min(self.M_list) < 1:
            raise ValueError("need J >= 2 and M >= 1")

    def param_seed(self, J, rep):
        return derive_seed(self.master_seed, J, rep)

    def data_seed(self, J, M, rep):
        return derive_seed(self.master_seed, J, M, rep)


@dataclass(frozen=True)
class CellSummary:
    dgp: str
    J: int
    M: int
    reps: int
    mean_ratio: float
    se_ratio: float
    mean_wdist: float
    se_wdist: float


@dataclass(frozen=True)
class RepRecord:
    dgp: str
    J: int
    M: int
    rep: int
    seed: int
    result: ReplicationResult


@dataclass
class SimulationReport:
    rows: list
    per_rep: list

    def cell(self, J, M) -> CellSummary:
        for r in self.rows:
            if r.J == J and r.M == M:
                return r
        raise KeyError((J, M))


class SimulationError(RuntimeError):
    def __init__(self, dgp, J, M, rep, seed, cause):
        super().__init__(
            f"replication failed: dgp={dgp} J={J} M={M} rep={rep} seed={seed}: {cause}"
        )
        self.seed = seed


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(np.mean(x)), se


def _run_unit(grid: SimulationGrid, J: int, rep: int):
    dgp = make_dgp(grid.dgp, J)
    pseed = grid.param_seed(J, rep)
    out = []
    try:
        prepared = replication_params(dgp, grid.T0, grid.T1, pseed, grid.grid_size,
                                      grid.oracle_eval_size)
        w_opt = optimal_weights(prepared[1])
    except Exception as exc:
        raise SimulationError(grid.dgp, J, "*", rep, pseed, exc) from exc
    for M in grid.M_list:
        seed = grid.data_seed(J, M, rep)
        try:
            res = run_replication(dgp, M, grid.T0, grid.T1, seed, pseed, grid.grid_size,
                                  grid.oracle_eval_size, prepared, w_opt)
        except Exception as exc:
            raise SimulationError(grid.dgp, J, M, rep, seed, exc) from exc
        out.append(RepRecord(grid.dgp, J, M, rep, seed, res))
    return out


def run_grid(grid: SimulationGrid, threads: int = 1, progress=None) -> SimulationReport:
    """Run every (J, M) cell; output does not depend on ``threads``."""
    units = [(J, rep) for J in grid.J_list for rep in range(grid.reps)]
    records = []
    if threads <= 1:
        for J, rep in units:
            records.extend(_run_unit(grid, J, rep))
            if progress:
                progress(J, rep)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(lambda u: _run_unit(grid, *u), units):
                records.extend(chunk)
    rows = []
    for J in grid.J_list:
        for M in grid.M_list:
            cell = [r.result for r in records if r.J == J and r.M == M]
            mr, sr = _mean_se([c.ratio for c in cell])
            mw, sw = _mean_se([c.weight_distance for c in cell])
            rows.append(CellSummary(grid.dgp, J, M, len(cell), mr, sr, mw, sw))
            log.info("%s J=%d M=%d mean_ratio=%.6f mean_wdist=%.6f", grid.dgp, J, M, mr, mw)
    per_rep = sorted(records, key=lambda r: (grid.J_list.index(r.J), grid.M_list.index(r.M), r.rep))
    return SimulationReport(rows, per_rep)


REPORT_HEADER = ["dgp", "J", "M", "reps", "mean_ratio", "se_ratio", "mean_wdist", "se_wdist"]
PER_REP_HEADER = ["dgp", "J", "M", "rep", "seed", "ratio", "wdist", "xi_bar"]


def write_report_csv(report: SimulationReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in report.rows:
            w.writerow([r.dgp, r.J, r.M, r.reps, repr(r.mean_ratio), repr(r.se_ratio),
                        repr(r.mean_wdist), repr(r.se_wdist)])


def write_per_rep_csv(report: SimulationReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PER_REP_HEADER)
        for r in report.per_rep:
            w.writerow([r.dgp, r.J, r.M, r.rep, r.seed, repr(r.result.ratio),
                        repr(r.result.weight_distance), repr(r.result.xi_bar)])
