import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsc.panel import (
    DrawMode,
    EstimationConfig,
    PanelDataset,
    PanelError,
    load_panel_csv,
    min_group_size,
    resolve_M,
    write_panel_csv,
)

from conftest import random_panel, write_rows


def test_smallest_valid_panel(tmp_path):
    path = write_rows(tmp_path / "p.csv", [(1, 1, 0.5), (1, 2, 0.7), (2, 1, 0.4), (2, 2, 0.1)])
    panel = load_panel_csv(path, t0=1)
    assert panel.J == 1 and panel.T == 2
    assert panel.group_size(1) == panel.group_size(2) == 1
    assert panel.pre_periods == (1,) and panel.post_periods == (2,)


def test_three_rows_leave_an_empty_cell(tmp_path):
    # unit 2 has no period-2 observation
    path = write_rows(tmp_path / "p.csv", [(1, 1, 0.5), (1, 2, 0.7), (2, 1, 0.4)])
    with pytest.raises(PanelError, match="empty cell"):
        load_panel_csv(path, t0=1)


def test_malformed_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("unit,time,value\n1,1,abc\n")
    with pytest.raises(PanelError, match="line 2"):
        load_panel_csv(path, t0=1)


@pytest.mark.parametrize("row", ["0,1,1.0", "1,0,1.0", "1,1,nan", "1,1", "x,1,1.0", "1,1,inf"])
def test_other_malformed_rows(tmp_path, row):
    path = tmp_path / "bad.csv"
    path.write_text(f"unit,time,value\n1,1,1.0\n{row}\n")
    with pytest.raises(PanelError, match="line 3"):
        load_panel_csv(path, t0=1)


def test_missing_file(tmp_path):
    with pytest.raises(PanelError, match="no such file"):
        load_panel_csv(tmp_path / "nope.csv", t0=1)


def test_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("u,t,v\n1,1,1\n")
    with pytest.raises(PanelError, match="header"):
        load_panel_csv(path, t0=1)


def test_group_size_must_be_constant(tmp_path):
    rows = [(1, 1, 0.0), (1, 1, 1.0), (1, 2, 0.0), (2, 1, 1.0), (2, 2, 2.0)]
    with pytest.raises(PanelError, match="varying group sizes"):
        load_panel_csv(write_rows(tmp_path / "p.csv", rows), t0=1)


def test_t0_bounds(tmp_path):
    path = write_rows(tmp_path / "p.csv", [(1, 1, 0.5), (1, 2, 0.7), (2, 1, 0.4), (2, 2, 0.1)])
    for t0 in (0, 2):
        with pytest.raises(PanelError, match="t0"):
            load_panel_csv(path, t0=t0)


def test_programmatic_file_counts(tmp_path, rng):
    rows = [(u, t, float(v)) for u in (1, 2) for t in (1, 2) for v in rng.normal(size=100)]
    panel = load_panel_csv(write_rows(tmp_path / "p.csv", rows), t0=1)
    assert min_group_size(panel) == 100
    assert panel.J == 1
    # order within a cell is preserved
    expected = [v for u, t, v in rows if (u, t) == (2, 1)]
    np.testing.assert_array_equal(panel.cell(2, 1), expected)


def test_units_sorted_and_treated_override(tmp_path):
    rows = [(u, t, float(u)) for u in (3, 1, 2) for t in (1, 2)]
    path = write_rows(tmp_path / "p.csv", rows)
    assert load_panel_csv(path, t0=1).units == (1, 2, 3)
    assert load_panel_csv(path, t0=1, treated=3).units == (3, 1, 2)


def test_min_group_size_examples():
    obs = {}
    for u, n in zip((1, 2, 3), (100, 80, 120)):
        for t in (1, 2):
            obs[(u, t)] = np.zeros(n)
    assert min_group_size(PanelDataset((1, 2, 3), (1, 2), obs, 1)) == 80


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 40), min_size=2, max_size=6))
def test_min_group_size_brute_force(sizes):
    obs = {(u + 1, t): np.arange(n, dtype=float) for u, n in enumerate(sizes) for t in (1, 2)}
    panel = PanelDataset(tuple(range(1, len(sizes) + 1)), (1, 2), obs, 1)
    smallest = sizes[0]
    for s in sizes:
        if s < smallest:
            smallest = s
    assert min_group_size(panel) == smallest


def test_round_trip(tmp_path):
    panel = random_panel(J=3, T=5, t0=3, n=17, seed=3)
    path = tmp_path / "rt.csv"
    write_panel_csv(panel, path)
    assert load_panel_csv(path, t0=3) == panel


def test_resolve_m_examples():
    assert resolve_M(EstimationConfig(M=400), 100) == 400
    assert resolve_M(EstimationConfig(C=2), 100) == 200
    assert resolve_M(EstimationConfig(C=1.5), 101) == 152


def test_resolve_m_needs_m_or_c():
    with pytest.raises(ValueError):
        resolve_M(EstimationConfig(M=None, C=None), 10)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.integers(1, 1000), st.integers(1, 1000))
def test_resolve_m_monotone(c1, c2, n1, n2):
    lo_c, hi_c = sorted((c1, c2))
    lo_n, hi_n = sorted((n1, n2))
    assert resolve_M(EstimationConfig(C=lo_c), lo_n) <= resolve_M(EstimationConfig(C=hi_c), lo_n)
    assert resolve_M(EstimationConfig(C=lo_c), lo_n) <= resolve_M(EstimationConfig(C=lo_c), hi_n)


def test_lambda_validation():
    EstimationConfig(lambdas=[0.25, 0.75])
    with pytest.raises(ValueError):
        EstimationConfig(lambdas=[0.5, 0.6])
    with pytest.raises(ValueError):
        EstimationConfig(lambdas=[-0.5, 1.5])
    with pytest.raises(ValueError):
        EstimationConfig(M=0)
    assert EstimationConfig().lambda_vector(4).tolist() == [0.25] * 4


def test_draw_mode_parse():
    assert DrawMode.parse("iid") == DrawMode()
    assert DrawMode.parse("ar1(0.5)") == DrawMode("ar1", 0.5)
    with pytest.raises(ValueError):
        DrawMode.parse("ar1(1.0)")
    with pytest.raises(ValueError):
        DrawMode.parse("garch")
