"""
reports.py

Text tables and file writers for echoscope results.

Every CSV uses ``\\n`` line endings and every JSON file sorted keys, so two runs
with the same inputs and seed write byte-identical files. No timestamps are
recorded.

Bundle layout (under the run's output directory):

    pair_metrics.csv        country,party_a,party_b,f,b_e,i_e,nodes,edges,variant
    observations.csv        pair rows with E-I indices and covariates
    party_metrics.csv       two F_p rows per pair
    descriptives.csv/.txt   summaries of the ``all`` variant
    models.json/.txt        fitted model grid
    partitions/<variant>/<country>__<a>__<b>.csv
    figures/<country>__<a>__<b>.svg     (optional)
    metadata.json

Usage:
------
>>> from echoscope.reports import format_model_table, significance_mark
>>> significance_mark(0.004)
'**'
>>> print(format_model_table(fits))
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING

import pandas as pd

from .metrics import describe
from .models import ModelFit, Variant
from .partition import write_partition
from .viz import render

if TYPE_CHECKING:
    from .services import ReportBundle

logger = logging.getLogger(__name__)

PAIR_METRIC_COLUMNS = [
    "country",
    "party_a",
    "party_b",
    "f",
    "b_e",
    "i_e",
    "nodes",
    "edges",
    "variant",
]

PAIR_LABELS = {
    "f": "Fragmentation F",
    "ideological_distance": "Ideological distance",
    "extremism_sum": "Extremism (sum)",
    "size_difference": "Size difference",
    "tweet_ratio": "Tweet ratio",
}
# pair descriptives only; never model terms
OBSERVED_LABELS = {
    "nodes": "Observed nodes",
    "edges": "Observed edges",
}
PARTY_LABELS = {
    "fp": "Party fragmentation F_p",
    "extremism": "Extremism",
    "size": "Size",
}
TERM_LABELS = {
    "(Intercept)": "Intercept",
    **PAIR_LABELS,
    **PARTY_LABELS,
    "left_right_mismatch": "Left-right mismatch",
    "incumbency_io": "Incumbency I-O",
    "incumbency_oo": "Incumbency O-O",
    "right_wing": "Right wing",
    "incumbent": "Incumbent",
}
SIGNIFICANCE_NOTE = (
    "† p<0.1, * p<0.05, ** p<0.01, *** p<0.001; "
    "two-sided Wald-z p-values from the REML fit"
)


def significance_mark(p: float | None) -> str:
    if p is None:
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    if p < 0.1:
        return "†"
    return ""


# =========================================================================
# Descriptives
# =========================================================================
def descriptive_table(pairs: pd.DataFrame, parties: pd.DataFrame | None = None) -> pd.DataFrame:
    """
    Numeric summaries and categorical counts of the ``all`` variant.

    Returns:
        pd.DataFrame: columns ``level, variable, n, min, max, mean, sd, count``;
        numeric rows leave ``count`` empty, categorical rows the rest.
    """
    rows: list[dict[str, object]] = []

    def numeric(level: str, frame: pd.DataFrame, labels: dict[str, str]) -> None:
        for column, label in labels.items():
            values = frame[column].dropna()
            if values.empty:
                continue
            summary = describe(values.tolist())
            rows.append({"level": level, "variable": label, **summary.to_dict()})

    def categorical(level: str, label: str, count: int, n: int) -> None:
        rows.append({"level": level, "variable": label, "n": n, "count": count})

    pair_rows = pairs[pairs["variant"] == Variant.ALL.value]
    if len(pair_rows):
        numeric("pair", pair_rows, {**PAIR_LABELS, **OBSERVED_LABELS})
        n = len(pair_rows)
        categorical("pair", "Left-right mismatch", int(pair_rows["left_right_mismatch"].sum()), n)
        io = int(pair_rows["incumbency_io"].sum())
        oo = int(pair_rows["incumbency_oo"].sum())
        categorical("pair", "Incumbency I-I", n - io - oo, n)
        categorical("pair", "Incumbency I-O", io, n)
        categorical("pair", "Incumbency O-O", oo, n)

    if parties is not None:
        # each party appears once per pair; summarize distinct parties
        party_rows = parties[parties["variant"] == Variant.ALL.value]
        if len(party_rows):
            numeric("party", party_rows, {"fp": PARTY_LABELS["fp"]})
            distinct = party_rows.drop_duplicates(["country", "party"])
            numeric("party", distinct, {k: v for k, v in PARTY_LABELS.items() if k != "fp"})
            n = len(distinct)
            categorical("party", "Right wing", int(distinct["right_wing"].sum()), n)
            categorical("party", "Incumbent", int(distinct["incumbent"].sum()), n)

    columns = ["level", "variable", "n", "min", "max", "mean", "sd", "count"]
    return pd.DataFrame(rows, columns=columns)


def _num(value: object, digits: int = 3) -> str:
    if value is None or (isinstance(value, float) and pd.isna(value)):
        return ""
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _int(value: object) -> str:
    if value is None or pd.isna(value):  # type: ignore[arg-type]
        return ""
    return str(int(value))  # type: ignore[call-overload]


def format_descriptives(table: pd.DataFrame) -> str:
    """Aligned text rendering of ``descriptive_table``."""
    lines = [f"{'Variable':<28}{'N':>6}{'Min':>9}{'Max':>9}{'Mean':>9}{'SD':>9}{'Count':>7}"]
    for level, group in table.groupby("level", sort=False):
        lines.append(f"[{level}]")
        for row in group.to_dict("records"):
            lines.append(
                f"{row['variable']:<28}{_int(row['n']):>6}"
                f"{_num(row['min']):>9}{_num(row['max']):>9}"
                f"{_num(row['mean']):>9}{_num(row['sd']):>9}{_int(row['count']):>7}"
            )
    return "\n".join(lines) + "\n"


# =========================================================================
# Model tables
# =========================================================================
def model_table(fits: Sequence[ModelFit]) -> pd.DataFrame:
    """Terms as rows, one ``estimate (se) marks`` column per model."""
    terms: list[str] = []
    for fit in fits:
        terms.extend(t for t in fit.beta if t not in terms)
    table = pd.DataFrame(index=[TERM_LABELS.get(t, t) for t in terms])
    for fit in fits:
        cells = []
        for term in terms:
            if term not in fit.beta:
                cells.append("")
                continue
            mark = significance_mark(fit.p[term])
            cells.append(f"{fit.beta[term]:.3f} ({fit.se[term]:.3f}){mark}")
        table[fit.name] = cells
    footer = {
        "R2 marginal": [_num(f.r2_marginal) for f in fits],
        "R2 conditional": [_num(f.r2_conditional) for f in fits],
        "sigma2 country": [_num(f.sigma2_u) for f in fits],
        "sigma2 residual": [_num(f.sigma2_e) for f in fits],
        "N": [str(f.n_obs) for f in fits],
        "Countries": [str(f.n_groups) for f in fits],
    }
    for label, values in footer.items():
        table.loc[label] = values
    return table


def format_model_table(fits: Sequence[ModelFit]) -> str:
    if not fits:
        return "No models fitted.\n"
    table = model_table(fits)
    width = max(len(str(i)) for i in table.index) + 2
    cell = max(18, *(len(str(v)) + 2 for v in table.to_numpy().ravel()))
    lines = [
        f"{'':<{width}}" + "".join(f"{name:>{cell}}" for name in table.columns),
        f"{'':<{width}}"
        + "".join(f"{str(f.metadata.get('label', '')):>{cell}}" for f in fits),
    ]
    for label, row in table.iterrows():
        lines.append(f"{str(label):<{width}}" + "".join(f"{v:>{cell}}" for v in row))
    lines.append("")
    lines.append(SIGNIFICANCE_NOTE)
    unconverged = [f.name for f in fits if not f.converged]
    if unconverged:
        lines.append(f"Not converged: {', '.join(unconverged)}")
    return "\n".join(lines) + "\n"


# =========================================================================
# Writers
# =========================================================================
def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def _json_safe(data: object) -> object:
    """Copy of ``data`` with NaN and infinities replaced by None."""
    if isinstance(data, float) and not math.isfinite(data):
        return None
    if isinstance(data, dict):
        return {key: _json_safe(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [_json_safe(value) for value in data]
    return data


def write_json(data: object, path: str | Path) -> Path:
    """Strict JSON: non-finite numbers are written as null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_json_safe(data), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_text(text: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def pair_metrics_frame(bundle: ReportBundle) -> pd.DataFrame:
    return pd.DataFrame([o.to_dict() for o in bundle.observations], columns=PAIR_METRIC_COLUMNS)


def bundle_metadata(bundle: ReportBundle) -> dict[str, object]:
    """Run description: seed, config, eligibility, weights and fitted cells."""
    weights = bundle.network_weights
    check: dict[str, object] = {}
    if {"all", "mentions", "retweets"} <= set(weights):
        for country, total in weights["all"].items():
            split = weights["mentions"].get(country, 0) + weights["retweets"].get(country, 0)
            check[country] = {
                "all": total,
                "mentions_plus_retweets": split,
                "equal": split == total,
            }
    return {
        "rng_seed": bundle.config.rng_seed,
        "config": bundle.config.to_dict(),
        "eligible_parties": bundle.eligible,
        "pair_count": bundle.pair_count,
        "observations": len(bundle.results),
        "skipped_pairs": bundle.skipped,
        "network_weights": weights,
        "kind_weight_check": check,
        "models_fitted": [f.name for f in bundle.fits],
        "standardization": "within each model's filtered estimation sample",
        "p_value_method": "Wald-z",
    }


def write_bundle(bundle: ReportBundle, directory: str | Path) -> dict[str, Path]:
    """
    Write every report file of a run.

    Returns:
        dict[str, Path]: report role -> path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    paths["pair_metrics"] = write_csv(pair_metrics_frame(bundle), directory / "pair_metrics.csv")
    paths["observations"] = write_csv(bundle.pair_table, directory / "observations.csv")
    paths["party_metrics"] = write_csv(bundle.party_table, directory / "party_metrics.csv")

    descriptives = descriptive_table(bundle.pair_table, bundle.party_table)
    paths["descriptives"] = write_csv(descriptives, directory / "descriptives.csv")
    paths["descriptives_text"] = write_text(
        format_descriptives(descriptives), directory / "descriptives.txt"
    )

    paths["models"] = write_json([f.to_dict() for f in bundle.fits], directory / "models.json")
    paths["models_text"] = write_text(format_model_table(bundle.fits), directory / "models.txt")

    partitions = directory / "partitions"
    for result in bundle.results:
        target = partitions / result.observation.variant.value / f"{result.key}.csv"
        target.parent.mkdir(parents=True, exist_ok=True)
        write_partition(result.partition, target)
    paths["partitions"] = partitions

    with_layout = [r for r in bundle.results if r.layout is not None]
    if with_layout:
        figures = directory / "figures"
        figures.mkdir(parents=True, exist_ok=True)
        for result in with_layout:
            assert result.layout is not None
            render(
                result.pair,
                result.layout,
                figures / f"{result.key}.svg",
                partition=result.partition,
                title=f"{result.observation.party_a} vs {result.observation.party_b}",
            )
        paths["figures"] = figures

    paths["metadata"] = write_json(bundle_metadata(bundle), directory / "metadata.json")
    logger.info("wrote report bundle to %s", directory)
    return paths
