"""Write the bundled example panel and its golden fit.

The panel comes from the model-free simulation design: six control units and
eight periods, with 120 observations per cell. Treatment starts after period
5 and adds a location shift of +1 to the treated unit. The golden fit uses
the library defaults with M = 120 and seed 0.

    python3 scripts/make_example_panel.py
"""
from pathlib import Path

from dsc.estimator import fit_dsc, write_fit_json
from dsc.panel import EstimationConfig, PanelDataset, load_panel_csv, write_panel_csv
from dsc.simulation import ModelFree, gen_replication

ROOT = Path(__file__).resolve().parent.parent
PANEL = ROOT / "data" / "example_panel.csv"
GOLDEN = ROOT / "tests" / "data" / "example_panel.fit.json"
T0, T1, N, SEED = 5, 3, 120, 2024


def build_panel() -> PanelDataset:
    rep = gen_replication(ModelFree(J=6), N, T0, T1, seed=SEED, grid_size=10)
    values = rep.data
    values[0, T0:] += 1.0
    return PanelDataset.from_array(values, t0=T0)


def main():
    PANEL.parent.mkdir(exist_ok=True)
    GOLDEN.parent.mkdir(exist_ok=True)
    write_panel_csv(build_panel(), PANEL)
    # the golden fit is computed from the panel as read back from disk
    fit = fit_dsc(load_panel_csv(PANEL, T0), EstimationConfig(M=N, seed=0))
    write_fit_json(fit, GOLDEN)
    print(f"wrote {PANEL} and {GOLDEN}")


if __name__ == "__main__":
    main()
