"""Tests for figure tables and result flattening."""

import numpy as np
import pytest

from multicorr.helper.report import (
    fidelity_grid,
    figure_table,
    result_table,
    result_text,
)
from multicorr.pipeline_step import Domain_Exception, Pipeline_Exception


def test_fidelity_grids():
    """Test the open and closed fidelity axes."""
    grid = fidelity_grid("fig2", 9)
    assert len(grid) == 9
    assert grid[0] > 0.5 and grid[-1] < 1.0
    np.testing.assert_allclose(fidelity_grid("fig3", 5), [0, 0.25, 0.5, 0.75, 1])
    with pytest.raises(Pipeline_Exception):
        fidelity_grid("fig3", 1)


def test_success_probability_table():
    """Test the success-probability curves."""
    table = figure_table("fig2", [5, 3], points=9)
    assert list(table.columns) == ["n", "F", "q"]
    assert len(table) == 18
    assert list(table["n"].unique()) == [3, 5]
    row = table[(table["n"] == 3) & np.isclose(table["F"], 0.9)]
    assert row["q"].item() == pytest.approx(1 / 16.2, abs=1e-12)
    # filtering harder costs probability
    for _, curve in table.groupby("n"):
        assert (np.diff(curve["q"].to_numpy()) < 0).all()


def test_covariance_table():
    """Test the covariance curves."""
    table = figure_table("fig3", [3, 5], points=5)
    assert list(table.columns) == ["n", "F", "cov"]
    n3 = table[table["n"] == 3]
    assert n3["cov"].iloc[2] == pytest.approx(0.0, abs=1e-12)
    assert n3["cov"].iloc[-1] == pytest.approx(-16 / 27, abs=1e-12)


def test_figure_errors():
    """Test unknown figures and invalid party counts."""
    with pytest.raises(Pipeline_Exception, match="Unknown figure"):
        figure_table("fig4", [3])
    with pytest.raises(Domain_Exception):
        figure_table("fig3", [4])


def test_result_table():
    """Test flattening of row results and nested results."""
    rows = result_table({"figure": "fig2", "rows": [{"n": 3, "q": 0.5}]})
    assert list(rows.columns) == ["n", "q"]

    nested = result_table({"a": {"b": 1, "c": [2, 3]}, "d": [], "e": "x"})
    assert list(nested.columns) == ["field", "value"]
    assert nested["field"].tolist() == ["a.b", "a.c.0", "a.c.1", "d", "e"]
    assert nested["value"].tolist() == [1, 2, 3, "", "x"]


def test_result_text():
    """Test the text rendering of a nested result."""
    text = result_text({"degree": 4, "genuine": True})
    assert text.endswith("\n")
    lines = text.splitlines()
    assert [line.split() for line in lines] == [
        ["field", "value"],
        ["degree", "4"],
        ["genuine", "True"],
    ]
