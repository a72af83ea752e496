"""
stats.py

Random-intercept linear models explaining fragmentation.

    y = X beta + u_country + e,   u ~ N(0, s2_u),  e ~ N(0, s2_e)

Fitted by REML profiled down to the variance ratio lambda = s2_u / s2_e. For a
given lambda, beta and s2_e have closed forms (generalized least squares with
H = I + lambda Z Z'); H is block diagonal with constant blocks, so every product
with H^-1 reduces to per-group sums and nothing n x n is ever built. lambda is
searched over log10(lambda) with scipy's bounded scalar minimizer after a
coarse grid, and lambda = 0 is always considered.

Inference is Wald-z (two-sided normal); R2 follows Nakagawa & Schielzeth
(variance of the fixed-effect predictions over the total).

Usage:
------
>>> from echoscope.stats import fit_random_intercept
>>> fit = fit_random_intercept(frame, "f", ["extremism_sum"], "country")
>>> fit.beta["extremism_sum"], fit.p["extremism_sum"]
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import TypeVar

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from .covariates import party_covariates
from .errors import (
    ConfigurationError,
    ConvergenceError,
    EchoscopeError,
    GroupingError,
    RankError,
    UndefinedMetricError,
    ZeroVarianceError,
)
from .models import IncumbencyPair, ModelFit, PairObservation, Party, Variant

logger = logging.getLogger(__name__)

INTERCEPT = "(Intercept)"
LOG10_LAMBDA_BOUNDS = (-10.0, 6.0)
# relative tolerance 1e-8 on lambda, expressed on the log10 scale
LOG10_LAMBDA_XATOL = 1e-8 / np.log(10)
MAX_EVALUATIONS = 200
RANK_TOLERANCE = 1e-10
_GRID_POINTS = 33


# =========================================================================
# Datasets
# =========================================================================
@dataclass(slots=True)
class ModelDataset:
    """Estimation sample of one model: numeric columns are standardized."""

    frame: pd.DataFrame
    response: str
    numeric: list[str]
    dummies: list[str] = field(default_factory=list)
    group: str = "country"
    filters: dict[str, object] = field(default_factory=dict)

    @property
    def predictors(self) -> list[str]:
        return [*self.numeric, *self.dummies]

    @property
    def n_groups(self) -> int:
        return int(self.frame[self.group].nunique())


D = TypeVar("D", pd.DataFrame, ModelDataset)


def _frame(data: pd.DataFrame | ModelDataset) -> pd.DataFrame:
    return data.frame if isinstance(data, ModelDataset) else data


def _rewrap(data: D, frame: pd.DataFrame) -> D:
    if isinstance(data, ModelDataset):
        return replace(data, frame=frame)
    return frame  # type: ignore[return-value]


def standardize(data: D, columns: Iterable[str]) -> D:
    """
    z-score ``columns`` with the sample mean and sample SD (n - 1).

    Returns a copy of the same kind as ``data``.

    Raises:
        ZeroVarianceError: a column is constant (or has a single value).
    """
    frame = _frame(data).copy()
    for column in columns:
        values = frame[column].astype("float64")
        mean = float(values.mean())
        sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        if not np.isfinite(sd) or sd <= 1e-12 * max(1.0, abs(mean)):
            raise ZeroVarianceError(column)
        frame[column] = (values - mean) / sd
    return _rewrap(data, frame)


def cube_transform(data: D, column: str) -> D:
    """x -> x**3 on one column; returns a copy of the same kind as ``data``."""
    frame = _frame(data).copy()
    frame[column] = frame[column].astype("float64") ** 3
    return _rewrap(data, frame)


# =========================================================================
# Fitting
# =========================================================================
@dataclass(slots=True)
class _GroupedDesign:
    """Design matrix and the per-group sums the profiled criterion needs."""

    X: np.ndarray
    y: np.ndarray
    codes: np.ndarray
    sizes: np.ndarray
    XtX: np.ndarray
    Xty: np.ndarray
    S: np.ndarray  # group sums of X rows, G x p
    t: np.ndarray  # group sums of y

    @classmethod
    def build(cls, X: np.ndarray, y: np.ndarray, codes: np.ndarray) -> _GroupedDesign:
        n_groups = int(codes.max()) + 1
        S = np.zeros((n_groups, X.shape[1]))
        np.add.at(S, codes, X)
        return cls(
            X=X,
            y=y,
            codes=codes,
            sizes=np.bincount(codes, minlength=n_groups).astype("float64"),
            XtX=X.T @ X,
            Xty=X.T @ y,
            S=S,
            t=np.bincount(codes, weights=y, minlength=n_groups),
        )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(slots=True)
class _Profile:
    criterion: float
    beta: np.ndarray
    sigma2: float
    chol: tuple[np.ndarray, bool]


def _profile(design: _GroupedDesign, lam: float) -> _Profile:
    """Profiled -2 REML log-likelihood and the GLS solution at ``lam``."""
    c = lam / (1.0 + lam * design.sizes)
    XtHiX = design.XtX - (design.S.T * c) @ design.S
    XtHiy = design.Xty - design.S.T @ (c * design.t)
    chol = linalg.cho_factor(XtHiX, lower=True)
    beta = linalg.cho_solve(chol, XtHiy)

    resid = design.y - design.X @ beta
    resid_sums = np.bincount(design.codes, weights=resid, minlength=len(design.sizes))
    quad = float(resid @ resid - np.sum(c * resid_sums**2))
    dof = design.n - design.p
    sigma2 = max(quad / dof, np.finfo(float).tiny)

    logdet_h = float(np.sum(np.log1p(lam * design.sizes)))
    logdet_xthix = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
    criterion = dof * np.log(sigma2) + logdet_h + logdet_xthix + dof * (1.0 + np.log(2 * np.pi))
    return _Profile(float(criterion), beta, sigma2, chol)


def reml_criterion(
    data: pd.DataFrame | ModelDataset,
    response: str,
    predictors: Sequence[str],
    group: str,
    lam: float,
) -> float:
    """Profiled -2 REML criterion at a fixed variance ratio ``lam``."""
    X, y, codes, _ = _design(_frame(data), response, predictors, group)
    return _profile(_GroupedDesign.build(X, y, codes), lam).criterion


def _design(
    frame: pd.DataFrame, response: str, predictors: Sequence[str], group: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    names = [INTERCEPT, *predictors]
    X = np.column_stack(
        [np.ones(len(frame))] + [frame[c].to_numpy(dtype="float64") for c in predictors]
    )
    y = frame[response].to_numpy(dtype="float64")
    codes, _ = pd.factorize(frame[group], sort=True)
    return X, y, codes.astype(np.int64), names


def check_rank(X: np.ndarray, names: Sequence[str]) -> None:
    """
    Raise ``RankError`` when ``X`` is rank deficient.

    Pivoted QR; a pivot below 1e-10 times the largest one marks its column as
    collinear with the columns before it.
    """
    _, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if not len(diag) or diag[0] == 0:
        raise RankError(list(names))
    rank = int(np.sum(diag > RANK_TOLERANCE * diag[0]))
    if rank < X.shape[1]:
        raise RankError([names[i] for i in sorted(piv[rank:])])


def fit_random_intercept(
    data: pd.DataFrame | ModelDataset,
    response: str | None = None,
    predictors: Sequence[str] | None = None,
    group: str | None = None,
    name: str = "model",
) -> ModelFit:
    """
    REML fit of a random-intercept model.

    Args:
        data: frame (or ModelDataset) without missing values in the used
            columns.
        response: response column; defaults to the dataset's.
        predictors: fixed-effect columns; an intercept is always added.
        group: grouping column (country).
        name: label carried into the fit.

    Returns:
        ModelFit: estimates, Wald-z inference, variance components and R2.

    Raises:
        GroupingError: fewer than 2 groups or n <= predictors + 2.
        RankError: collinear design columns.
    """
    frame = _frame(data)
    if isinstance(data, ModelDataset):
        response = response or data.response
        predictors = list(predictors) if predictors is not None else data.predictors
        group = group or data.group
    if response is None or predictors is None or group is None:
        raise ValueError("response, predictors and group are required")
    predictors = list(predictors)

    if frame[[response, *predictors, group]].isna().any().any():
        raise ValueError(f"{name}: missing values in the estimation sample")
    n_groups = int(frame[group].nunique())
    if n_groups < 2:
        raise GroupingError(f"{name}: random intercept needs >= 2 groups, got {n_groups}")
    if len(frame) <= len(predictors) + 2:
        raise GroupingError(
            f"{name}: {len(frame)} observations for {len(predictors)} predictors"
        )

    X, y, codes, names = _design(frame, response, predictors, group)
    check_rank(X, names)
    design = _GroupedDesign.build(X, y, codes)

    evaluations = 0

    def objective(log10_lam: float) -> float:
        nonlocal evaluations
        evaluations += 1
        return _profile(design, 10.0**log10_lam).criterion

    low, high = LOG10_LAMBDA_BOUNDS
    grid = np.linspace(low, high, _GRID_POINTS)
    values = [objective(x) for x in grid]
    centre = float(grid[int(np.argmin(values))])
    step = (high - low) / (_GRID_POINTS - 1)
    result = minimize_scalar(
        objective,
        bounds=(max(low, centre - step), min(high, centre + step)),
        method="bounded",
        options={"xatol": LOG10_LAMBDA_XATOL, "maxiter": MAX_EVALUATIONS},
    )
    converged = bool(result.success) and int(result.nfev) < MAX_EVALUATIONS

    lam = 10.0 ** float(result.x)
    best = _profile(design, lam)
    at_zero = _profile(design, 0.0)
    evaluations += 2
    if at_zero.criterion <= best.criterion:
        lam, best = 0.0, at_zero
    if not converged:
        logger.warning("%s: variance ratio search hit %d evaluations", name, MAX_EVALUATIONS)

    cov = best.sigma2 * linalg.cho_solve(best.chol, np.eye(design.p))
    se = np.sqrt(np.diag(cov))
    z = best.beta / se
    p = np.clip(2.0 * norm.sf(np.abs(z)), np.finfo(float).tiny, 1.0)

    sigma2_e = best.sigma2
    sigma2_u = lam * sigma2_e
    sigma2_f = float(np.var(X @ best.beta))
    r2_m, r2_c = r2_from_components(sigma2_f, sigma2_u, sigma2_e)

    fit = ModelFit(
        name=name,
        response=response,
        predictors=predictors,
        beta=dict(zip(names, map(float, best.beta))),
        se=dict(zip(names, map(float, se))),
        z=dict(zip(names, map(float, z))),
        p=dict(zip(names, map(float, p))),
        sigma2_u=float(sigma2_u),
        sigma2_e=float(sigma2_e),
        lambda_ratio=float(lam),
        n_obs=design.n,
        n_groups=n_groups,
        converged=converged,
        reml_criterion=best.criterion,
        n_evaluations=evaluations,
        r2_marginal=r2_m,
        r2_conditional=r2_c,
    )
    if isinstance(data, ModelDataset):
        fit.metadata["filters"] = dict(data.filters)
    logger.debug(
        "%s: n=%d groups=%d lambda=%.4g s2_u=%.4g s2_e=%.4g",
        name,
        fit.n_obs,
        fit.n_groups,
        lam,
        sigma2_u,
        sigma2_e,
    )
    return fit


def r2_from_components(
    sigma2_f: float, sigma2_u: float, sigma2_e: float
) -> tuple[float, float]:
    """Marginal and conditional R2 from the three variance components."""
    total = sigma2_f + sigma2_u + sigma2_e
    if total <= 0:
        raise UndefinedMetricError("R2 undefined: all variance components are zero")
    return sigma2_f / total, (sigma2_f + sigma2_u) / total


def nakagawa_r2(fit: ModelFit, data: pd.DataFrame | ModelDataset) -> tuple[float, float]:
    """
    Marginal and conditional R2 of a fit on its estimation data.

    The fixed-effect variance is the population variance (denominator n) of
    X beta.

    Raises:
        ConvergenceError: the fit did not converge.
    """
    if not fit.converged:
        raise ConvergenceError(f"{fit.name}: R2 needs a converged fit")
    frame = _frame(data)
    names = [INTERCEPT, *fit.predictors]
    X = np.column_stack(
        [np.ones(len(frame))] + [frame[c].to_numpy(dtype="float64") for c in fit.predictors]
    )
    beta = np.array([fit.beta[n] for n in names])
    return r2_from_components(float(np.var(X @ beta)), fit.sigma2_u, fit.sigma2_e)


# =========================================================================
# Observation tables
# =========================================================================
PAIR_NUMERIC = ["ideological_distance", "extremism_sum", "size_difference", "tweet_ratio"]
PAIR_DUMMIES = ["left_right_mismatch", "incumbency_io", "incumbency_oo"]
PARTY_NUMERIC = ["extremism", "size"]
PARTY_DUMMIES = ["right_wing", "incumbent"]

PAIR_COLUMNS = [
    "country",
    "party_a",
    "party_b",
    "variant",
    "f",
    "b_e",
    "i_e",
    "nodes",
    "edges",
    "internal_a",
    "internal_b",
    "boundary",
    "ei_a",
    "ei_b",
    *PAIR_NUMERIC,
    *PAIR_DUMMIES,
]
PARTY_COLUMNS = [
    "country",
    "party",
    "other_party",
    "variant",
    "fp",
    "internal_nodes",
    *PARTY_NUMERIC,
    *PARTY_DUMMIES,
]


def pair_frame(observations: Iterable[PairObservation]) -> pd.DataFrame:
    """One row per (pair, variant) with scores and covariates."""
    rows = []
    for obs in observations:
        cov = obs.covariates
        row: dict[str, object] = {
            "country": obs.country,
            "party_a": obs.party_a,
            "party_b": obs.party_b,
            "variant": obs.variant.value,
            "f": obs.f.value,
            "b_e": obs.f.b_e,
            "i_e": obs.f.i_e,
            "nodes": obs.node_count,
            "edges": obs.edge_count,
            "internal_a": obs.internal_a_count,
            "internal_b": obs.internal_b_count,
            "boundary": obs.boundary_count,
            "ei_a": obs.ei_a,
            "ei_b": obs.ei_b,
        }
        if cov is not None:
            row.update(
                ideological_distance=cov.ideological_distance,
                extremism_sum=cov.extremism_sum,
                size_difference=cov.size_difference,
                tweet_ratio=cov.tweet_ratio,
                left_right_mismatch=int(cov.left_right_mismatch),
                incumbency_io=int(cov.incumbency_pair is IncumbencyPair.IO),
                incumbency_oo=int(cov.incumbency_pair is IncumbencyPair.OO),
            )
        rows.append(row)
    frame = pd.DataFrame(rows, columns=PAIR_COLUMNS)
    floats = ["f", "ei_a", "ei_b", *PAIR_NUMERIC]
    return frame.astype({c: "float64" for c in floats})


def party_frame(
    observations: Iterable[PairObservation], parties: dict[tuple[str, str], Party]
) -> pd.DataFrame:
    """
    Two rows per (pair, variant), one for each party, with F_p as response.

    ``internal_nodes`` is the size of the party's internal set in that pair.
    """
    rows = []
    for obs in observations:
        sides = (
            (obs.party_a, obs.party_b, obs.fp_a, obs.internal_a_count),
            (obs.party_b, obs.party_a, obs.fp_b, obs.internal_b_count),
        )
        for party_id, other, fp, internal in sides:
            cov = party_covariates(parties[(obs.country, party_id)])
            rows.append(
                {
                    "country": obs.country,
                    "party": party_id,
                    "other_party": other,
                    "variant": obs.variant.value,
                    "fp": fp.value,
                    "internal_nodes": internal,
                    "extremism": cov.extremism,
                    "size": cov.size,
                    "right_wing": int(cov.right_wing),
                    "incumbent": int(cov.incumbent),
                }
            )
    return pd.DataFrame(rows, columns=PARTY_COLUMNS).astype({"fp": "float64"})


# =========================================================================
# Model grid
# =========================================================================
@dataclass(frozen=True, slots=True)
class ModelSpec:
    """One cell of the model grid."""

    name: str
    level: str  # "pair" or "party"
    variant: Variant
    numeric: tuple[str, ...]
    dummies: tuple[str, ...] = ()
    min_nodes: str | None = None  # "pair" or "party" filter
    label: str = ""

    @property
    def response(self) -> str:
        return "f" if self.level == "pair" else "fp"

    @property
    def predictors(self) -> list[str]:
        return [*self.numeric, *self.dummies]


_CONTROLS_NUMERIC = ("size_difference", "tweet_ratio")
_CONTROLS_DUMMIES = ("incumbency_io", "incumbency_oo")


def _pair_spec(
    name: str,
    ideology: str,
    controls: bool,
    label: str,
    variant: Variant = Variant.ALL,
    min_nodes: str | None = None,
) -> ModelSpec:
    numeric: tuple[str, ...] = (ideology,)
    dummies: tuple[str, ...] = ("left_right_mismatch",)
    if controls:
        numeric += _CONTROLS_NUMERIC
        dummies += _CONTROLS_DUMMIES
    return ModelSpec(name, "pair", variant, numeric, dummies, min_nodes, label)


def _party_spec(name: str, label: str, min_nodes: str | None = None) -> ModelSpec:
    return ModelSpec(
        name, "party", Variant.ALL, tuple(PARTY_NUMERIC), tuple(PARTY_DUMMIES), min_nodes, label
    )


MODEL_SPECS: dict[str, ModelSpec] = {
    spec.name: spec
    for spec in (
        _pair_spec("1.1", "ideological_distance", False, "Ideology"),
        _pair_spec("1.2", "ideological_distance", True, "Ideology + controls"),
        _pair_spec("1.3", "ideological_distance", True, "Ideology, large pairs", min_nodes="pair"),
        _pair_spec("2.1", "extremism_sum", False, "Extremism"),
        _pair_spec("2.2", "extremism_sum", True, "Extremism + controls"),
        _pair_spec("2.3", "extremism_sum", True, "Extremism, large pairs", min_nodes="pair"),
        _party_spec("3.1", "Party F_p"),
        _party_spec("3.2", "Party F_p, large parties", min_nodes="party"),
        _pair_spec("4.1", "extremism_sum", True, "Mentions only", Variant.MENTIONS),
        _pair_spec("4.2", "extremism_sum", True, "Retweets only", Variant.RETWEETS),
        _pair_spec("4.3", "extremism_sum", True, "Before election", Variant.PRE),
        _pair_spec("4.4", "extremism_sum", True, "After election", Variant.POST),
        _pair_spec("4.5", "extremism_sum", True, "Unweighted", Variant.UNWEIGHTED),
    )
}


def resolve_models(selection: str | Sequence[str]) -> list[str]:
    """``"all"``, ``"none"`` or explicit ids -> validated ids in grid order."""
    if isinstance(selection, str):
        if selection == "all":
            return list(MODEL_SPECS)
        if selection == "none":
            return []
        selection = [s.strip() for s in selection.split(",") if s.strip()]
    unknown = [s for s in selection if s not in MODEL_SPECS]
    if unknown:
        raise ConfigurationError(f"unknown model(s): {', '.join(unknown)}")
    return [name for name in MODEL_SPECS if name in set(selection)]


def prepare_dataset(
    spec: ModelSpec,
    pairs: pd.DataFrame,
    parties: pd.DataFrame | None = None,
    min_pair_nodes: int = 1000,
    min_party_nodes: int = 100,
    cube_response: bool = False,
) -> ModelDataset:
    """
    Estimation sample for one cell: variant rows, complete cases, node filter,
    optional cubed response, then standardization within the sample.

    Raises:
        ConfigurationError: the cell's variant has no scores.
    """
    source = pairs if spec.level == "pair" else parties
    if source is None or not (source["variant"] == spec.variant.value).any():
        raise ConfigurationError(
            f"model {spec.name} needs {spec.level} scores for variant {spec.variant.value!r}"
        )
    frame = source[source["variant"] == spec.variant.value]
    needed = [spec.response, *spec.predictors, "country"]
    complete = frame.dropna(subset=needed)
    dropped = len(frame) - len(complete)
    if dropped:
        logger.warning("model %s: dropped %d incomplete row(s)", spec.name, dropped)

    filters: dict[str, object] = {"variant": spec.variant.value}
    if spec.min_nodes == "pair":
        complete = complete[complete["nodes"] >= min_pair_nodes]
        filters["min_nodes"] = min_pair_nodes
    elif spec.min_nodes == "party":
        complete = complete[complete["internal_nodes"] >= min_party_nodes]
        filters["min_internal_nodes"] = min_party_nodes
    complete = complete.reset_index(drop=True)

    dataset = ModelDataset(
        frame=complete,
        response=spec.response,
        numeric=list(spec.numeric),
        dummies=list(spec.dummies),
        filters=filters,
    )
    if cube_response:
        dataset = cube_transform(dataset, spec.response)
    return standardize(dataset, [spec.response, *spec.numeric])


def fit_model(
    spec: ModelSpec,
    pairs: pd.DataFrame,
    parties: pd.DataFrame | None = None,
    min_pair_nodes: int = 1000,
    min_party_nodes: int = 100,
    cube_response: bool = False,
) -> ModelFit:
    dataset = prepare_dataset(
        spec, pairs, parties, min_pair_nodes, min_party_nodes, cube_response
    )
    fit = fit_random_intercept(dataset, name=spec.name)
    fit.metadata.update(
        label=spec.label,
        level=spec.level,
        cubed_response=cube_response,
        standardized="within the filtered estimation sample",
    )
    return fit


def model_suite(
    pairs: pd.DataFrame,
    parties: pd.DataFrame | None = None,
    models: str | Sequence[str] = "all",
    min_pair_nodes: int = 1000,
    min_party_nodes: int = 100,
    cube_response: bool = False,
    threads: int = 1,
    skip_failures: bool = True,
) -> list[ModelFit]:
    """
    Fit every requested cell of the model grid.

    Args:
        pairs: ``pair_frame`` output over all computed variants.
        parties: ``party_frame`` output, needed by the party-level cells.
        models: ``"all"``, ``"none"`` or model ids such as ``["2.2", "4.5"]``.
        threads: cells fitted concurrently.
        skip_failures: log and drop cells whose fit fails (rank, variance or
            grouping problems) instead of raising.

    Returns:
        list[ModelFit]: fits in grid order.

    Raises:
        ConfigurationError: a requested cell's variant scores are missing.
    """
    specs = [MODEL_SPECS[name] for name in resolve_models(models)]
    for spec in specs:
        source = pairs if spec.level == "pair" else parties
        if source is None or not (source["variant"] == spec.variant.value).any():
            raise ConfigurationError(
                f"model {spec.name} needs variant {spec.variant.value!r}, which was not computed"
            )

    def run(spec: ModelSpec) -> ModelFit | None:
        try:
            return fit_model(
                spec, pairs, parties, min_pair_nodes, min_party_nodes, cube_response
            )
        except (EchoscopeError, np.linalg.LinAlgError) as exc:
            if not skip_failures:
                raise
            logger.warning("model %s skipped: %s", spec.name, exc)
            return None

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        fits = list(pool.map(run, specs))
    logger.info("fitted %d of %d model(s)", sum(f is not None for f in fits), len(specs))
    return [f for f in fits if f is not None]
