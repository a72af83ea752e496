"""
graph.py

Aggregate interaction records into a directed weighted network and extract the
subnetwork around a pair of party accounts.

Edges are kept aggregated (one row per source/target) in a pandas DataFrame with
per-kind tallies, so mention-only and retweet-only networks can be derived
without re-reading the records.

Usage:
------
>>> from echoscope.graph import build_network, pair_subnetwork
>>> net = build_network(records)
>>> pair = pair_subnetwork(net, records, "blueparty", "redparty")
>>> pair.network.number_of_nodes
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import pandas as pd

from .errors import InvalidPairError, SchemaError
from .ingest import classify_interaction, normalize_handle
from .models import (
    EDGE_COLUMNS,
    InteractionKind,
    InteractionNetwork,
    InteractionRecord,
    KindFilter,
    PairNetwork,
    Weighting,
)

logger = logging.getLogger(__name__)


def _passes(kind: InteractionKind, kind_filter: KindFilter) -> bool:
    if kind_filter is KindFilter.MENTION_ONLY:
        return kind is InteractionKind.MENTION
    if kind_filter is KindFilter.RETWEET_ONLY:
        return kind is InteractionKind.RETWEET
    return True


def select_kind(
    records: Iterable[InteractionRecord], kind_filter: KindFilter | str = KindFilter.ALL
) -> list[InteractionRecord]:
    """Records whose interaction kind passes ``kind_filter``."""
    kind_filter = KindFilter(kind_filter)
    return [r for r in records if _passes(classify_interaction(r), kind_filter)]


def edge_frame(rows: Iterable[tuple[str, str, int, int, int]] = ()) -> pd.DataFrame:
    """Edge table with canonical column order, dtypes and sort order."""
    frame = pd.DataFrame(list(rows), columns=EDGE_COLUMNS)
    frame = frame.astype(
        {
            "source": "object",
            "target": "object",
            "weight": "int64",
            "mention_count": "int64",
            "retweet_count": "int64",
        }
    )
    return frame.sort_values(["source", "target"], kind="mergesort").reset_index(
        drop=True
    )


def _apply_weighting(edges: pd.DataFrame, weighting: Weighting) -> pd.DataFrame:
    if weighting is Weighting.UNWEIGHTED and len(edges):
        edges = edges.copy()
        edges["weight"] = 1
    return edges


def build_network(
    records: Iterable[InteractionRecord],
    kind_filter: KindFilter | str = KindFilter.ALL,
    weighting: Weighting | str = Weighting.WEIGHTED,
) -> InteractionNetwork:
    """
    Build the directed network author -> mentioned handle.

    Each record passing ``kind_filter`` adds one unit of weight to every edge
    author -> h, h in its mentions. ``unweighted`` collapses weights to 1 after
    aggregation; the per-kind tallies keep the raw counts.

    Args:
        records: normalized records.
        kind_filter: ``all``, ``mention_only`` or ``retweet_only``.
        weighting: ``weighted`` or ``unweighted``.

    Returns:
        InteractionNetwork: aggregated network; authors of passing records are
        nodes even without mentions.
    """
    kind_filter = KindFilter(kind_filter)
    weighting = Weighting(weighting)

    mentions: Counter[tuple[str, str]] = Counter()
    retweets: Counter[tuple[str, str]] = Counter()
    nodes: set[str] = set()
    n_records = 0
    for record in records:
        kind = classify_interaction(record)
        if not _passes(kind, kind_filter):
            continue
        n_records += 1
        nodes.add(record.author)
        tally = retweets if kind is InteractionKind.RETWEET else mentions
        for handle in record.mentions:
            if handle == record.author:
                continue
            nodes.add(handle)
            tally[(record.author, handle)] += 1

    keys = set(mentions) | set(retweets)
    edges = edge_frame(
        (s, t, mentions[(s, t)] + retweets[(s, t)], mentions[(s, t)], retweets[(s, t)])
        for s, t in keys
    )
    edges = _apply_weighting(edges, weighting)
    logger.debug(
        "built %s %s network from %d records: %d nodes, %d edges",
        weighting.value,
        kind_filter.value,
        n_records,
        len(nodes),
        len(edges),
    )
    return InteractionNetwork(frozenset(nodes), edges, weighting)


def merge_networks(*networks: InteractionNetwork) -> InteractionNetwork:
    """Merge shard networks by adding weights and tallies."""
    if not networks:
        return InteractionNetwork(frozenset(), edge_frame())
    weighting = networks[0].weighting
    if any(n.weighting is not weighting for n in networks):
        raise ValueError("cannot merge weighted and unweighted networks")
    nodes = frozenset().union(*(n.nodes for n in networks))
    stacked = pd.concat([n.edges for n in networks], ignore_index=True)
    if len(stacked):
        stacked = stacked.groupby(["source", "target"], as_index=False, sort=True)[
            ["weight", "mention_count", "retweet_count"]
        ].sum()
    edges = _apply_weighting(edge_frame(stacked.itertuples(index=False)), weighting)
    return InteractionNetwork(nodes, edges, weighting)


def check_network(network: InteractionNetwork) -> None:
    """Assert the structural invariants of a network."""
    edges = network.edges
    if (edges["source"] == edges["target"]).any():
        raise AssertionError("network has self-loops")
    if (edges["weight"] < 1).any():
        raise AssertionError("network has weights below 1")
    if network.weighting is Weighting.WEIGHTED:
        tallies = edges["mention_count"] + edges["retweet_count"]
        if not (edges["weight"] == tallies).all():
            raise AssertionError("edge weight differs from its tallies")
    endpoints = set(edges["source"]) | set(edges["target"])
    if not endpoints <= network.nodes:
        raise AssertionError("edges reference unknown nodes")


# =========================================================================
# Pair subnetworks
# =========================================================================
@dataclass(slots=True)
class SeedMentionIndex:
    """Per seed handle: how often each author mentioned it, and total records."""

    authors: dict[str, Counter[str]] = field(default_factory=dict)
    tweet_counts: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_records(
        cls, records: Iterable[InteractionRecord], handles: Iterable[str]
    ) -> SeedMentionIndex:
        targets = {normalize_handle(h) for h in handles}
        index = cls({h: Counter() for h in targets}, {h: 0 for h in targets})
        for record in records:
            for handle in targets.intersection(record.mentions):
                index.authors[handle][record.author] += 1
                index.tweet_counts[handle] += 1
        return index

    def counts_for(self, handle: str) -> Counter[str]:
        return self.authors.get(handle, Counter())


def pair_subnetwork(
    network: InteractionNetwork,
    records: Iterable[InteractionRecord] | None,
    seed_a: str,
    seed_b: str,
    index: SeedMentionIndex | None = None,
) -> PairNetwork:
    """
    Subnetwork of the two seeds plus every author who mentioned either of them.

    The edge set is the subgraph of ``network`` induced by that node set. Pass a
    prebuilt ``index`` to avoid re-scanning the records for every pair.

    Raises:
        InvalidPairError: both seeds are the same handle.
    """
    seed_a, seed_b = normalize_handle(seed_a), normalize_handle(seed_b)
    if seed_a == seed_b:
        raise InvalidPairError(f"a pair needs two different seeds, got {seed_a!r}")
    if index is None:
        index = SeedMentionIndex.from_records(records or (), [seed_a, seed_b])

    by_a = index.counts_for(seed_a)
    by_b = index.counts_for(seed_b)
    members = set(by_a) | set(by_b) | {seed_a, seed_b}

    edges = network.edges
    inside = edges["source"].isin(members) & edges["target"].isin(members)
    sub_edges = edges.loc[inside].reset_index(drop=True)

    direct = {node: (by_a.get(node, 0), by_b.get(node, 0)) for node in members}
    return PairNetwork(
        seed_a=seed_a,
        seed_b=seed_b,
        network=InteractionNetwork(frozenset(members), sub_edges, network.weighting),
        direct_mention_counts=direct,
        tweet_count_a=index.tweet_counts.get(seed_a, 0),
        tweet_count_b=index.tweet_counts.get(seed_b, 0),
    )


# =========================================================================
# Import / export
# =========================================================================
def write_edge_list(network: InteractionNetwork, path: str | Path) -> None:
    """CSV ``source,target,weight,mention_count,retweet_count``."""
    network.edges[EDGE_COLUMNS].to_csv(path, index=False, lineterminator="\n")


def read_edge_list(
    path: str | Path, weighting: Weighting | str = Weighting.WEIGHTED
) -> InteractionNetwork:
    """Read an edge-list CSV; nodes are the edge endpoints."""
    frame = pd.read_csv(path, dtype={"source": str, "target": str})
    missing = set(EDGE_COLUMNS) - set(frame.columns)
    if missing:
        raise SchemaError(f"{path}: missing columns {sorted(missing)}")
    edges = edge_frame(frame[EDGE_COLUMNS].itertuples(index=False))
    nodes = frozenset(edges["source"]) | frozenset(edges["target"])
    return InteractionNetwork(nodes, edges, Weighting(weighting))


def to_networkx(
    network: InteractionNetwork,
    node_attrs: Mapping[str, Mapping[str, object]] | None = None,
) -> nx.DiGraph:
    """Directed networkx view with edge tallies and optional node attributes."""
    graph = nx.DiGraph(weighting=network.weighting.value)
    for node in sorted(network.nodes):
        graph.add_node(node, **dict((node_attrs or {}).get(node, {})))
    for row in network.edges.itertuples(index=False):
        graph.add_edge(
            row.source,
            row.target,
            weight=int(row.weight),
            mention_count=int(row.mention_count),
            retweet_count=int(row.retweet_count),
        )
    return graph


def from_networkx(graph: nx.DiGraph) -> InteractionNetwork:
    weighting = Weighting(graph.graph.get("weighting", Weighting.WEIGHTED.value))
    rows = []
    for source, target, data in graph.edges(data=True):
        weight = int(data.get("weight", 1))
        rows.append(
            (
                str(source),
                str(target),
                weight,
                int(data.get("mention_count", weight)),
                int(data.get("retweet_count", 0)),
            )
        )
    return InteractionNetwork(frozenset(map(str, graph.nodes)), edge_frame(rows), weighting)


def write_graphml(
    network: InteractionNetwork,
    path: str | Path,
    node_attrs: Mapping[str, Mapping[str, object]] | None = None,
) -> None:
    nx.write_graphml(to_networkx(network, node_attrs), path)


def read_graphml(path: str | Path) -> InteractionNetwork:
    return from_networkx(nx.read_graphml(path))
