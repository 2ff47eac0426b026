"""Micro-level panel data and estimation settings.

A panel holds individual outcome draws for every (unit, period) cell. Unit
ordering is significant: the first unit is the treated one and the rest form
the donor pool.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np


class PanelError(ValueError):
    """Raised when panel input violates the data contract."""


@dataclass(frozen=True)
class PanelDataset:
    """Outcome samples indexed by (unit, period).

    ``units[0]`` is the treated unit. Periods ``1..t0`` are pre-treatment and
    ``t0+1..T`` post-treatment.
    """

    units: tuple[int, ...]
    periods: tuple[int, ...]
    observations: Mapping[tuple[int, int], np.ndarray]
    t0: int

    def __post_init__(self):
        units = tuple(int(u) for u in self.units)
        periods = tuple(int(p) for p in self.periods)
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "periods", periods)
        if len(units) < 2:
            raise PanelError("need a treated unit and at least one control")
        if len(set(units)) != len(units) or len(set(periods)) != len(periods):
            raise PanelError("duplicate unit or period identifiers")
        if list(periods) != list(range(1, len(periods) + 1)):
            raise PanelError(f"periods must be 1..T without gaps, got {periods}")
        if not 1 <= self.t0 < len(periods):
            raise PanelError(f"t0 must satisfy 1 <= t0 < T={len(periods)}, got {self.t0}")
        obs = {}
        for u in units:
            sizes = set()
            for p in periods:
                if (u, p) not in self.observations:
                    raise PanelError(f"empty cell (unit={u}, period={p})")
                arr = np.array(self.observations[(u, p)], dtype=float)
                if arr.ndim != 1 or arr.size == 0:
                    raise PanelError(f"empty cell (unit={u}, period={p})")
                if not np.all(np.isfinite(arr)):
                    raise PanelError(f"non-finite value in cell (unit={u}, period={p})")
                arr.setflags(write=False)
                obs[(u, p)] = arr
                sizes.add(arr.size)
            if len(sizes) != 1:
                raise PanelError(
                    f"unit {u} has varying group sizes across periods: {sorted(sizes)}"
                )
        object.__setattr__(self, "observations", obs)

    @property
    def treated(self) -> int:
        return self.units[0]

    @property
    def controls(self) -> tuple[int, ...]:
        return self.units[1:]

    @property
    def J(self) -> int:
        return len(self.units) - 1

    @property
    def T(self) -> int:
        return len(self.periods)

    @property
    def pre_periods(self) -> tuple[int, ...]:
        return self.periods[: self.t0]

    @property
    def post_periods(self) -> tuple[int, ...]:
        return self.periods[self.t0 :]

    def group_size(self, unit: int) -> int:
        return self.observations[(unit, self.periods[0])].size

    def cell(self, unit: int, period: int) -> np.ndarray:
        return self.observations[(unit, period)]

    @classmethod
    def from_array(cls, values, t0: int, units: Sequence[int] | None = None):
        """Build a panel from an array shaped (units, periods, n)."""
        values = np.asarray(values, dtype=float)
        if values.ndim != 3:
            raise PanelError("expected an array shaped (units, periods, n)")
        if units is None:
            units = range(1, values.shape[0] + 1)
        units = tuple(units)
        obs = {
            (u, t + 1): values[i, t]
            for i, u in enumerate(units)
            for t in range(values.shape[1])
        }
        return cls(units, tuple(range(1, values.shape[1] + 1)), obs, t0)

    def __eq__(self, other):
        if not isinstance(other, PanelDataset):
            return NotImplemented
        return (
            self.units == other.units
            and self.periods == other.periods
            and self.t0 == other.t0
            and all(
                np.array_equal(self.observations[k], other.observations[k])
                for k in self.observations
            )
        )

    __hash__ = None


def load_panel_csv(path, t0: int, treated: int | None = None) -> PanelDataset:
    """Read a long-format ``unit,time,value`` file.

    Units are sorted ascending, so the treated unit is the smallest id unless
    ``treated`` names another one (it is then moved to the front).
    """
    path = Path(path)
    if not path.is_file():
        raise PanelError(f"no such file: {path}")
    cells: dict[tuple[int, int], list[float]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["unit", "time", "value"]:
            raise PanelError(f"line 1: expected header 'unit,time,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise PanelError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                unit, time, value = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise PanelError(f"line {lineno}: malformed row {row}") from None
            if unit < 1 or time < 1 or not math.isfinite(value):
                raise PanelError(f"line {lineno}: malformed row {row}")
            cells.setdefault((unit, time), []).append(value)
    if not cells:
        raise PanelError(f"{path}: no observations")
    units = sorted({u for u, _ in cells})
    periods = sorted({t for _, t in cells})
    if treated is not None:
        if treated not in units:
            raise PanelError(f"treated unit {treated} not present")
        units.remove(treated)
        units.insert(0, treated)
    return PanelDataset(tuple(units), tuple(periods), cells, t0)


def write_panel_csv(panel: PanelDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit", "time", "value"])
        for u in sorted(panel.units):
            for t in panel.periods:
                for v in panel.cell(u, t):
                    w.writerow([u, t, repr(float(v))])


def min_group_size(panel: PanelDataset) -> int:
    return min(panel.group_size(u) for u in panel.units)


@dataclass(frozen=True)
class DrawMode:
    """``iid`` uniforms, or an AR(1) Gaussian copula with coefficient ``rho``."""

    kind: str = "iid"
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in ("iid", "ar1"):
            raise ValueError(f"unknown draw mode {self.kind!r}")
        if self.kind == "ar1" and not abs(self.rho) < 1:
            raise ValueError(f"ar1 coefficient must satisfy |rho| < 1, got {self.rho}")

    @classmethod
    def parse(cls, text: str) -> "DrawMode":
        text = text.strip().lower()
        if text == "iid":
            return cls()
        if text.startswith("ar1(") and text.endswith(")"):
            return cls("ar1", float(text[4:-1]))
        raise ValueError(f"cannot parse draw mode {text!r}; use 'iid' or 'ar1(rho)'")

    def __str__(self):
        return "iid" if self.kind == "iid" else f"ar1({self.rho})"


@dataclass(frozen=True)
class EstimationConfig:
    M: int | None = None
    C: float | None = 1.0
    seed: int = 0
    lambdas: Union[str, Sequence[float]] = "uniform"
    draw_mode: DrawMode = field(default_factory=DrawMode)

    def __post_init__(self):
        if self.M is not None and self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.C is not None and not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if isinstance(self.lambdas, str):
            if self.lambdas != "uniform":
                raise ValueError(f"unknown lambda scheme {self.lambdas!r}")
        else:
            lam = np.asarray(self.lambdas, dtype=float)
            check_lambdas(lam)
            object.__setattr__(self, "lambdas", tuple(lam.tolist()))

    def lambda_vector(self, t0: int) -> np.ndarray:
        if isinstance(self.lambdas, str):
            return np.full(t0, 1.0 / t0)
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.size != t0:
            raise ValueError(f"got {lam.size} lambdas for {t0} pre-treatment periods")
        return lam


def check_lambdas(lam: np.ndarray) -> None:
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("lambdas must be a non-empty vector")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("lambdas must be finite and non-negative")
    if abs(lam.sum() - 1.0) > 1e-12:
        raise ValueError(f"lambdas must sum to 1, got {lam.sum()!r}")


def resolve_M(config: EstimationConfig, n: int) -> int:
    """Explicit ``M`` wins; otherwise ``ceil(C * n)``."""
    if config.M is not None:
        return int(config.M)
    if config.C is None:
        raise ValueError("either M or C must be given")
    # guard against 1.5 * 101 = 151.50000000000003 style round-up
    return max(1, math.ceil(round(config.C * n, 9)))
