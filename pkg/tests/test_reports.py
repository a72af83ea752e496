"""
test_reports.py

Tests for the text tables and descriptive summaries in reports.py
"""

from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest

from echoscope.reports import (
    TERM_LABELS,
    descriptive_table,
    format_descriptives,
    format_model_table,
    model_table,
    significance_mark,
    write_csv,
    write_json,
)
from echoscope.stats import fit_random_intercept


@pytest.mark.parametrize(
    "p, mark",
    [(None, ""), (0.0005, "***"), (0.004, "**"), (0.03, "*"), (0.07, "†"), (0.5, "")],
)
def test_significance_mark(p: float | None, mark: str) -> None:
    assert significance_mark(p) == mark


def _pairs() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "country": ["uk", "uk", "ie", "ie"],
            "variant": ["all", "all", "all", "mentions"],
            "f": [-0.4, 0.2, 0.0, 0.9],
            "ideological_distance": [1.0, 2.0, 3.0, 9.0],
            "extremism_sum": [2.0, 4.0, 6.0, 9.0],
            "size_difference": [5.0, 10.0, 15.0, 1.0],
            "tweet_ratio": [0.5, None, 1.0, 0.1],
            "nodes": [1200, 3400, 2000, 50],
            "edges": [5000, 9100, 4000, 60],
            "left_right_mismatch": [1, 0, 1, 1],
            "incumbency_io": [1, 0, 0, 0],
            "incumbency_oo": [0, 1, 0, 0],
        }
    )


def test_descriptive_table_uses_all_variant() -> None:
    table = descriptive_table(_pairs())
    rows = table.set_index("variable")

    assert rows.loc["Fragmentation F", "n"] == 3
    assert rows.loc["Fragmentation F", "mean"] == pytest.approx(-0.2 / 3)
    assert rows.loc["Tweet ratio", "n"] == 2
    assert rows.loc["Left-right mismatch", "count"] == 2
    assert rows.loc["Incumbency I-I", "count"] == 1
    assert pd.isna(rows.loc["Incumbency O-O", "mean"])


def test_format_descriptives_lists_every_row() -> None:
    text = format_descriptives(descriptive_table(_pairs()))

    assert text.splitlines()[1] == "[pair]"
    assert "Extremism (sum)" in text
    assert len(text.splitlines()) == 2 + len(descriptive_table(_pairs()))


def test_model_table_marks_and_footer() -> None:
    rng = np.random.default_rng(0)
    g = np.repeat(np.arange(6), 8)
    x = rng.normal(size=len(g))
    frame = pd.DataFrame({"f": 2 * x + rng.normal(size=6)[g] + rng.normal(size=len(g)), "x": x})
    frame["country"] = g
    fit = fit_random_intercept(frame, "f", ["x"], "country", name="2.1")
    fit.metadata["label"] = "Extremism"

    table = model_table([fit])
    text = format_model_table([fit])

    assert table.loc["x", "2.1"].endswith("***")
    assert table.loc["N", "2.1"] == "48"
    assert table.loc["Countries", "2.1"] == "6"
    assert "Extremism" in text.splitlines()[1]
    assert "Wald-z" in text
    assert format_model_table([]) == "No models fitted.\n"


def test_write_csv_uses_unix_newlines(tmp_path) -> None:
    path = write_csv(pd.DataFrame({"a": [1, 2]}), tmp_path / "nested" / "a.csv")

    assert path.read_bytes() == b"a\n1\n2\n"


def test_descriptives_report_observed_network_size() -> None:
    rows = descriptive_table(_pairs()).set_index("variable")

    assert rows.loc["Observed nodes", "n"] == 3
    assert rows.loc["Observed nodes", "min"] == 1200
    assert rows.loc["Observed nodes", "max"] == 3400
    assert rows.loc["Observed edges", "mean"] == pytest.approx(6033.333, abs=1e-3)
    assert "Observed nodes" not in TERM_LABELS.values()
    assert "nodes" not in TERM_LABELS


def test_write_json_turns_non_finite_into_null(tmp_path) -> None:
    path = write_json(
        [{"name": "2.1", "z": {"x": float("nan")}, "se": (1.5, float("inf"))}],
        tmp_path / "models.json",
    )
    text = path.read_text(encoding="utf-8")

    assert "NaN" not in text and "Infinity" not in text
    assert json.loads(text) == [{"name": "2.1", "se": [1.5, None], "z": {"x": None}}]
