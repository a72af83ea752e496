"""
metrics.py

Fragmentation scores for a classified pair network.

    F   = (B_e - I_e)  / (B_e + I_e)
    F_p = (B_e - I_ep) / (B_e + I_ep)

B_e is the weight of edges going from boundary nodes to internal nodes, I_e the
weight of edges inside internal-A plus inside internal-B, I_ep the weight inside
one side only. Higher F means a more active boundary relative to the internal
groups. All sums are integers; the division happens once.

Usage:
------
>>> from echoscope.metrics import fragmentation_f, party_fragmentation_fp
>>> fragmentation_f(pair, part).value
-0.4
>>> party_fragmentation_fp(pair, part, "a").value
-0.14285714285714285
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import UndefinedMetricError
from .models import (
    EdgeSums,
    FragmentationScore,
    PairCovariates,
    PairNetwork,
    PairObservation,
    PairPartition,
    Side,
    Summary,
    Variant,
)

logger = logging.getLogger(__name__)

_A, _B, _X = 0, 1, 2


def edge_sums(pair: PairNetwork, part: PairPartition) -> EdgeSums:
    """Weighted edge totals split by the categories of both endpoints."""
    edges = pair.network.edges
    if not len(edges):
        return EdgeSums()
    index = pd.Index(sorted(pair.nodes))
    labels = np.full(len(index), -1, dtype=np.int8)
    labels[index.get_indexer(list(part.internal_a))] = _A
    labels[index.get_indexer(list(part.internal_b))] = _B
    labels[index.get_indexer(list(part.boundary))] = _X

    ls = labels[index.get_indexer(edges["source"])]
    lt = labels[index.get_indexer(edges["target"])]
    w = edges["weight"].to_numpy(dtype=np.int64)

    def total(src_label: int, tgt_label: int) -> int:
        return int(w[(ls == src_label) & (lt == tgt_label)].sum())

    return EdgeSums(
        within_a=total(_A, _A),
        within_b=total(_B, _B),
        boundary_to_a=total(_X, _A),
        boundary_to_b=total(_X, _B),
        a_to_boundary=total(_A, _X),
        b_to_boundary=total(_B, _X),
        boundary_to_boundary=total(_X, _X),
        a_to_b=total(_A, _B),
        b_to_a=total(_B, _A),
    )


def _boundary_weight(sums: EdgeSums, count_internal_to_boundary: bool) -> int:
    if count_internal_to_boundary:
        return sums.b_e + sums.a_to_boundary + sums.b_to_boundary
    return sums.b_e


def fragmentation_f(
    pair: PairNetwork,
    part: PairPartition,
    count_internal_to_boundary: bool = False,
    sums: EdgeSums | None = None,
) -> FragmentationScore:
    """
    Pair-level fragmentation F.

    Args:
        pair: pair network.
        part: its partition.
        count_internal_to_boundary: diagnostic toggle, also count internal ->
            boundary edges in B_e.
        sums: precomputed ``edge_sums`` to reuse.

    Returns:
        FragmentationScore: ``defined`` is False when B_e + I_e == 0.
    """
    sums = sums if sums is not None else edge_sums(pair, part)
    score = FragmentationScore(_boundary_weight(sums, count_internal_to_boundary), sums.i_e)
    if not score.defined:
        logger.warning("F undefined for %s/%s: no weighted edges", pair.seed_a, pair.seed_b)
    return score


def party_fragmentation_fp(
    pair: PairNetwork,
    part: PairPartition,
    side: Side | str,
    count_internal_to_boundary: bool = False,
    sums: EdgeSums | None = None,
) -> FragmentationScore:
    """Party-level F_p: same B_e, internal weight of one side only."""
    side = Side(side)
    sums = sums if sums is not None else edge_sums(pair, part)
    return FragmentationScore(
        _boundary_weight(sums, count_internal_to_boundary), sums.internal(side)
    )


def ei_index(
    pair: PairNetwork,
    part: PairPartition,
    side: Side | str,
    sums: EdgeSums | None = None,
) -> float:
    """
    External-internal index of one side's internal set.

    E is the weight of edges (either direction) between the side's internal set
    and every node outside it, I the weight inside it.

    Raises:
        UndefinedMetricError: E + I == 0.
    """
    side = Side(side)
    sums = sums if sums is not None else edge_sums(pair, part)
    crossing = sums.a_to_b + sums.b_to_a
    if side is Side.A:
        external = sums.a_to_boundary + sums.boundary_to_a + crossing
    else:
        external = sums.b_to_boundary + sums.boundary_to_b + crossing
    internal = sums.internal(side)
    if external + internal == 0:
        raise UndefinedMetricError(f"E-I index undefined for side {side.value}")
    return (external - internal) / (external + internal)


@dataclass(frozen=True, slots=True)
class PairScores:
    """Every score of one classified pair, from a single pass over the edges."""

    sums: EdgeSums
    f: FragmentationScore
    fp_a: FragmentationScore
    fp_b: FragmentationScore
    ei_a: float | None
    ei_b: float | None


def score_pair(
    pair: PairNetwork, part: PairPartition, count_internal_to_boundary: bool = False
) -> PairScores:
    sums = edge_sums(pair, part)
    ei: dict[Side, float | None] = {}
    for side in Side:
        try:
            ei[side] = ei_index(pair, part, side, sums=sums)
        except UndefinedMetricError:
            ei[side] = None
    return PairScores(
        sums=sums,
        f=fragmentation_f(pair, part, count_internal_to_boundary, sums=sums),
        fp_a=party_fragmentation_fp(pair, part, Side.A, count_internal_to_boundary, sums),
        fp_b=party_fragmentation_fp(pair, part, Side.B, count_internal_to_boundary, sums),
        ei_a=ei[Side.A],
        ei_b=ei[Side.B],
    )


def observe_pair(
    country: str,
    party_a: str,
    party_b: str,
    variant: Variant | str,
    pair: PairNetwork,
    part: PairPartition,
    covariates: PairCovariates | None = None,
    count_internal_to_boundary: bool = False,
) -> PairObservation:
    """Score a classified pair and wrap it as one analysis row."""
    scores = score_pair(pair, part, count_internal_to_boundary)
    return PairObservation(
        country=country,
        party_a=party_a,
        party_b=party_b,
        variant=Variant(variant),
        f=scores.f,
        fp_a=scores.fp_a,
        fp_b=scores.fp_b,
        node_count=pair.network.number_of_nodes,
        edge_count=pair.network.number_of_edges,
        internal_a_count=len(part.internal_a),
        internal_b_count=len(part.internal_b),
        boundary_count=len(part.boundary),
        ei_a=scores.ei_a,
        ei_b=scores.ei_b,
        covariates=covariates,
    )


Selector = str | Callable[[object], float | None] | None


def _select(item: object, selector: Selector) -> float | None:
    if selector is None:
        return item  # type: ignore[return-value]
    if callable(selector):
        return selector(item)
    if isinstance(item, Mapping):
        return item.get(selector)
    value = getattr(item, selector)
    if isinstance(value, FragmentationScore):
        return value.value
    return value


def describe(items: Iterable[object], selector: Selector = None) -> Summary:
    """
    min, max, mean, sample SD (n - 1) and count of a field.

    ``selector`` is an attribute/key name, a callable, or None when ``items``
    are already numbers. Missing values (None) are left out.

    Raises:
        ValueError: nothing to summarize.
    """
    values = [v for v in (_select(item, selector) for item in items) if v is not None]
    if not values:
        raise ValueError("cannot describe an empty selection")
    series = pd.Series(values, dtype="float64")
    sd = float(series.std(ddof=1)) if len(series) > 1 else None
    return Summary(
        n=len(series),
        min=float(series.min()),
        max=float(series.max()),
        mean=float(series.mean()),
        sd=sd,
    )
