"""
test_stats.py

Tests for the REML random-intercept fit, R2 and the model grid in stats.py
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
import statsmodels.api as sm
import statsmodels.formula.api as smf
from scipy.stats import norm

from echoscope.errors import (
    ConfigurationError,
    ConvergenceError,
    GroupingError,
    RankError,
    UndefinedMetricError,
    ZeroVarianceError,
)
from echoscope.stats import (
    INTERCEPT,
    MODEL_SPECS,
    cube_transform,
    fit_random_intercept,
    model_suite,
    nakagawa_r2,
    prepare_dataset,
    r2_from_components,
    reml_criterion,
    resolve_models,
    standardize,
)


def _grouped(n_groups: int = 20, per_group: int = 10, seed: int = 1) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    g = np.repeat(np.arange(n_groups), per_group)
    x = rng.normal(size=len(g))
    u = rng.normal(0.0, 1.0, n_groups)[g]
    y = 0.5 + 1.5 * x + u + rng.normal(0.0, 0.5, len(g))
    return pd.DataFrame({"y": y, "x": x, "g": [f"c{i:02d}" for i in g]})


# =========================================================================
# Fitting
# =========================================================================
def test_matches_statsmodels_reml() -> None:
    frame = _grouped()
    fit = fit_random_intercept(frame, "y", ["x"], "g")
    ref = smf.mixedlm("y ~ x", frame, groups=frame["g"]).fit(reml=True)

    assert fit.beta[INTERCEPT] == pytest.approx(ref.fe_params["Intercept"], rel=1e-3)
    assert fit.beta["x"] == pytest.approx(ref.fe_params["x"], rel=1e-3)
    assert fit.sigma2_e == pytest.approx(ref.scale, rel=1e-2)
    assert fit.sigma2_u == pytest.approx(float(ref.cov_re.iloc[0, 0]), rel=1e-2)
    assert fit.n_obs == 200 and fit.n_groups == 20
    assert fit.converged


def test_balanced_anova_oracle() -> None:
    rng = np.random.default_rng(4)
    groups, per = 8, 5
    g = np.repeat(np.arange(groups), per)
    y = rng.normal(0.0, 2.0, groups)[g] + rng.normal(0.0, 1.0, groups * per)
    frame = pd.DataFrame({"y": y, "g": g})

    means = frame.groupby("g")["y"].transform("mean")
    msw = float(((frame["y"] - means) ** 2).sum()) / (groups * (per - 1))
    msb = per * float(((frame.groupby("g")["y"].mean() - y.mean()) ** 2).sum()) / (groups - 1)
    assert msb > msw

    fit = fit_random_intercept(frame, "y", [], "g")
    assert fit.sigma2_e == pytest.approx(msw, rel=1e-5)
    assert fit.sigma2_u == pytest.approx((msb - msw) / per, rel=1e-5)
    assert fit.beta[INTERCEPT] == pytest.approx(y.mean())


def test_no_group_variation_reduces_to_ols() -> None:
    rng = np.random.default_rng(8)
    x = rng.normal(size=6)
    y = 2.0 - 0.7 * x + rng.normal(0.0, 0.3, 6)
    frame = pd.DataFrame(
        {"y": np.tile(y, 5), "x": np.tile(x, 5), "g": np.repeat(list("abcde"), 6)}
    )
    fit = fit_random_intercept(frame, "y", ["x"], "g")
    ols = sm.OLS(frame["y"], sm.add_constant(frame[["x"]])).fit()

    assert fit.lambda_ratio == 0.0
    assert fit.sigma2_u == 0.0
    assert fit.beta["x"] == pytest.approx(ols.params["x"], rel=1e-9)
    assert fit.se["x"] == pytest.approx(ols.bse["x"], rel=1e-9)
    assert fit.sigma2_e == pytest.approx(ols.scale, rel=1e-9)


def test_fitted_ratio_beats_every_grid_point() -> None:
    frame = _grouped(n_groups=12, per_group=7, seed=3)
    fit = fit_random_intercept(frame, "y", ["x"], "g")

    for lam in [0.0, *np.logspace(-6, 4, 41)]:
        assert fit.reml_criterion <= reml_criterion(frame, "y", ["x"], "g", lam) + 1e-8


def test_wald_z_inference() -> None:
    fit = fit_random_intercept(_grouped(), "y", ["x"], "g")

    for term in fit.beta:
        assert fit.z[term] == pytest.approx(fit.beta[term] / fit.se[term])
        assert fit.p[term] == pytest.approx(2 * norm.sf(abs(fit.z[term])))
    assert fit.p["x"] < 0.001


def test_collinear_and_ungrouped_designs() -> None:
    frame = _grouped(n_groups=4, per_group=5)
    frame["x2"] = 2.0 * frame["x"]

    with pytest.raises(RankError) as info:
        fit_random_intercept(frame, "y", ["x", "x2"], "g")
    assert info.value.columns
    with pytest.raises(GroupingError):
        fit_random_intercept(frame.assign(g="one"), "y", ["x"], "g")
    with pytest.raises(GroupingError):
        fit_random_intercept(frame.head(3), "y", ["x"], "g")


# =========================================================================
# R2 and transforms
# =========================================================================
def test_r2_from_components() -> None:
    assert r2_from_components(1.0, 1.0, 2.0) == (0.25, 0.5)
    with pytest.raises(UndefinedMetricError):
        r2_from_components(0.0, 0.0, 0.0)


def test_nakagawa_r2_matches_fit() -> None:
    frame = _grouped()
    fit = fit_random_intercept(frame, "y", ["x"], "g")

    marginal, conditional = nakagawa_r2(fit, frame)
    assert marginal == pytest.approx(fit.r2_marginal)
    assert conditional == pytest.approx(fit.r2_conditional)
    assert 0.0 < marginal < conditional < 1.0


def test_nakagawa_r2_needs_converged_fit() -> None:
    frame = _grouped()
    fit = replace(fit_random_intercept(frame, "y", ["x"], "g"), converged=False)

    with pytest.raises(ConvergenceError, match="converged"):
        nakagawa_r2(fit, frame)


def test_standardize_and_cube() -> None:
    frame = pd.DataFrame({"a": [1.0, 2.0, 3.0, 4.0], "b": [5.0, 5.0, 5.0, 5.0]})
    scaled = standardize(frame, ["a"])

    assert scaled["a"].mean() == pytest.approx(0.0)
    assert scaled["a"].std(ddof=1) == pytest.approx(1.0)
    assert frame["a"].tolist() == [1.0, 2.0, 3.0, 4.0]
    with pytest.raises(ZeroVarianceError):
        standardize(frame, ["b"])
    assert cube_transform(frame, "a")["a"].tolist() == [1.0, 8.0, 27.0, 64.0]


# =========================================================================
# Model grid
# =========================================================================
def _pair_table(variants=("all",), countries: int = 6, per_country: int = 6) -> pd.DataFrame:
    rng = np.random.default_rng(21)
    rows = []
    for variant in variants:
        for c in range(countries):
            for k in range(per_country):
                rows.append(
                    {
                        "country": f"c{c}",
                        "party_a": f"p{k}a",
                        "party_b": f"p{k}b",
                        "variant": variant,
                        "f": float(rng.uniform(-0.9, 0.9)),
                        "nodes": int(rng.integers(500, 3000)),
                        "ideological_distance": float(rng.uniform(0, 10)),
                        "extremism_sum": float(rng.uniform(0, 10)),
                        "size_difference": float(rng.uniform(0, 40)),
                        "tweet_ratio": float(rng.uniform(0, 1)),
                        "left_right_mismatch": int(rng.integers(0, 2)),
                        "incumbency_io": k % 2,
                        "incumbency_oo": int(k % 3 == 0),
                    }
                )
    return pd.DataFrame(rows)


def test_resolve_models() -> None:
    assert resolve_models("all") == list(MODEL_SPECS)
    assert resolve_models("none") == []
    assert resolve_models("2.2, 1.1") == ["1.1", "2.2"]
    with pytest.raises(ConfigurationError):
        resolve_models(["9.9"])


def test_prepare_dataset_filters_then_standardizes() -> None:
    pairs = _pair_table()
    dataset = prepare_dataset(MODEL_SPECS["2.3"], pairs, min_pair_nodes=1000)

    assert (dataset.frame["nodes"] >= 1000).all()
    assert dataset.filters == {"variant": "all", "min_nodes": 1000}
    assert dataset.frame["extremism_sum"].std(ddof=1) == pytest.approx(1.0)
    assert dataset.frame["f"].mean() == pytest.approx(0.0)


def test_model_suite_fits_requested_cells() -> None:
    pairs = _pair_table(variants=("all", "mentions"))
    fits = model_suite(pairs, models=["4.1", "1.1", "2.2"], threads=2)

    assert [f.name for f in fits] == ["1.1", "2.2", "4.1"]
    assert fits[0].predictors == ["ideological_distance", "left_right_mismatch"]
    assert fits[2].metadata["label"] == "Mentions only"


def test_model_suite_needs_the_variant() -> None:
    with pytest.raises(ConfigurationError, match="retweets"):
        model_suite(_pair_table(), models=["4.2"])
