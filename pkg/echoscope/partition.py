"""
partition.py

Split a pair network into internal-A, internal-B and boundary nodes.

Seeds are pinned to their own side. Every other node starts on the side of the
seed(s) it mentioned (both seeds: boundary). A cross edge joins a provisional
internal-A node to a provisional internal-B node, in either direction; edges
touching a provisional boundary node are never cross edges. A node with a cross
edge to the opposite seed must move to the boundary. The remaining cross edges
are covered by the cheapest set of moves: fewest moved nodes first, then the
most cross mentions authored by moved nodes, then the fewest moved internal-A
nodes. That set is unique, so the result does not depend on node or edge order,
and every moved node still touches both internal sets.

Usage:
------
>>> from echoscope.partition import classify_nodes
>>> part = classify_nodes(pair)
>>> sorted(part.boundary)
"""

from __future__ import annotations

import logging
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
from networkx.algorithms.flow import edmonds_karp

from .errors import MalformedPairError, SchemaError
from .models import Assignment, PairNetwork, PairPartition

logger = logging.getLogger(__name__)

SIDE_A, SIDE_B, BOUNDARY = 0, 1, 2
SOURCE, SINK = -1, -2


def provisional_labels(pair: PairNetwork) -> tuple[pd.Index, np.ndarray]:
    """
    Node index (sorted) and provisional label per node from direct seed mentions.

    Raises:
        MalformedPairError: a seed is missing or a non-seed node never
            mentioned either seed.
    """
    seed_a, seed_b = pair.seed_a, pair.seed_b
    if seed_a not in pair.nodes or seed_b not in pair.nodes:
        raise MalformedPairError(f"seeds {seed_a!r}/{seed_b!r} must both be nodes")

    index = pd.Index(sorted(pair.nodes))
    labels = np.empty(len(index), dtype=np.int8)
    for i, node in enumerate(index):
        if node == seed_a:
            labels[i] = SIDE_A
            continue
        if node == seed_b:
            labels[i] = SIDE_B
            continue
        count_a, count_b = pair.direct_mention_counts.get(node, (0, 0))
        if count_a > 0 and count_b > 0:
            labels[i] = BOUNDARY
        elif count_a > 0:
            labels[i] = SIDE_A
        elif count_b > 0:
            labels[i] = SIDE_B
        else:
            raise MalformedPairError(
                f"node {node!r} never mentioned {seed_a!r} or {seed_b!r}"
            )
    return index, labels


def edge_codes(pair: PairNetwork, index: pd.Index) -> tuple[np.ndarray, np.ndarray]:
    """Integer positions of every edge's source and target in ``index``."""
    edges = pair.network.edges
    src = index.get_indexer(edges["source"])
    tgt = index.get_indexer(edges["target"])
    if len(src) and (src.min() < 0 or tgt.min() < 0):
        raise MalformedPairError("pair network has edges to unknown nodes")
    return src, tgt


def cheapest_cover(
    labels: np.ndarray, src: np.ndarray, tgt: np.ndarray, cost: np.ndarray
) -> np.ndarray:
    """
    Node codes of the minimum-cost vertex cover of the cross edges ``src``-``tgt``.

    The cover comes from a minimum cut of source -> B side -> A side -> sink.
    Nodes reachable from the source in the residual network form the smallest
    source side, which picks the optimal cover with the fewest A-side nodes.
    """
    if src.size == 0:
        return np.empty(0, dtype=np.intp)
    end_a = np.where(labels[src] == SIDE_A, src, tgt)
    end_b = np.where(labels[src] == SIDE_A, tgt, src)

    flow = nx.DiGraph()
    for b in np.unique(end_b).tolist():
        flow.add_edge(SOURCE, b, capacity=int(cost[b]))
    for a in np.unique(end_a).tolist():
        flow.add_edge(a, SINK, capacity=int(cost[a]))
    # uncapped, so a finite cut never leaves a cross edge uncovered
    flow.add_edges_from(zip(end_b.tolist(), end_a.tolist()))

    residual = edmonds_karp(flow, SOURCE, SINK)
    open_edges = nx.DiGraph()
    open_edges.add_node(SOURCE)
    open_edges.add_edges_from(
        (u, v) for u, v, d in residual.edges(data=True) if d["flow"] < d["capacity"]
    )
    reached = nx.descendants(open_edges, SOURCE)
    cover = [b for b in np.unique(end_b).tolist() if b not in reached]
    cover += [a for a in np.unique(end_a).tolist() if a in reached]
    return np.array(sorted(cover), dtype=np.intp)


def classify_nodes(pair: PairNetwork) -> PairPartition:
    """
    Partition a pair network into internal-A, internal-B and boundary sets.

    Args:
        pair: pair network whose non-seed nodes all mentioned a seed.

    Returns:
        PairPartition: the three sets, the number of promotion passes, the
        weight of seed <-> seed edges (kept out of every sum) and the promoted
        nodes.

    Raises:
        MalformedPairError: the pair violates the PairNetwork invariants.
    """
    index, labels = provisional_labels(pair)
    src, tgt = edge_codes(pair, index)
    weights = pair.network.edges["weight"].to_numpy(dtype=np.int64)

    sa = index.get_loc(pair.seed_a)
    sb = index.get_loc(pair.seed_b)
    src_seed = (src == sa) | (src == sb)
    tgt_seed = (tgt == sa) | (tgt == sb)
    seed_seed = src_seed & tgt_seed

    promoted = np.zeros(len(index), dtype=bool)
    iterations = 0
    if len(index) > 2:
        ls, lt = labels[src], labels[tgt]
        cross = ((ls == SIDE_A) & (lt == SIDE_B)) | ((ls == SIDE_B) & (lt == SIDE_A))
        cross &= ~seed_seed

        # a seed is pinned, so its cross partner moves
        at_seed = cross & (src_seed | tgt_seed)
        promoted[np.where(src_seed[at_seed], tgt[at_seed], src[at_seed])] = True

        between = cross & ~src_seed & ~tgt_seed
        authored = np.bincount(src[between], minlength=len(index))
        open_cross = between & ~promoted[src] & ~promoted[tgt]
        # fewest moved nodes first, then the most authored cross mentions
        cost = int(between.sum()) + 1 - authored
        cover = cheapest_cover(labels, src[open_cross], tgt[open_cross], cost)
        promoted[cover] = True

        labels[promoted] = BOUNDARY
        iterations = max(1, int(at_seed.any()) + int(cover.size > 0))

    part = PairPartition(
        seed_a=pair.seed_a,
        seed_b=pair.seed_b,
        internal_a=frozenset(index[labels == SIDE_A]),
        internal_b=frozenset(index[labels == SIDE_B]),
        boundary=frozenset(index[labels == BOUNDARY]),
        iterations=iterations,
        seed_seed_edge_weight=int(weights[seed_seed].sum()),
        promoted=frozenset(index[promoted]),
    )
    logger.debug(
        "%s/%s: %d internal-a, %d internal-b, %d boundary (%d promoted)",
        pair.seed_a,
        pair.seed_b,
        len(part.internal_a),
        len(part.internal_b),
        len(part.boundary),
        len(part.promoted),
    )
    return part


def check_partition(pair: PairNetwork, part: PairPartition) -> None:
    """Raise ``AssertionError`` when a partition breaks its invariants."""
    sets = (part.internal_a, part.internal_b, part.boundary)
    if sum(len(s) for s in sets) != len(frozenset().union(*sets)):
        raise AssertionError("partition sets overlap")
    if frozenset().union(*sets) != pair.nodes:
        raise AssertionError("partition does not cover the pair's nodes")
    if pair.seed_a not in part.internal_a or pair.seed_b not in part.internal_b:
        raise AssertionError("seeds are not pinned to their sides")
    edges = pair.network.edges
    a_to_b = edges["source"].isin(part.internal_a) & edges["target"].isin(
        part.internal_b
    )
    b_to_a = edges["source"].isin(part.internal_b) & edges["target"].isin(
        part.internal_a
    )
    crossing = edges.loc[a_to_b | b_to_a]
    crossing = crossing[
        ~(
            crossing["source"].isin([pair.seed_a, pair.seed_b])
            & crossing["target"].isin([pair.seed_a, pair.seed_b])
        )
    ]
    if len(crossing):
        raise AssertionError(f"{len(crossing)} edge(s) join internal-a and internal-b")

    # either direction counts as contact
    ends = pd.concat(
        [
            edges[["source", "target"]],
            edges[["target", "source"]].set_axis(["source", "target"], axis=1),
        ]
    )
    ends = ends[ends["source"].isin(part.promoted)]
    touches_a = set(ends.loc[ends["target"].isin(part.internal_a), "source"])
    touches_b = set(ends.loc[ends["target"].isin(part.internal_b), "source"])
    stranded = part.promoted - (touches_a & touches_b)
    if stranded:
        raise AssertionError(f"promoted {sorted(stranded)} do not touch both internal sets")


def write_partition(part: PairPartition, path: str | Path) -> None:
    """CSV ``node,assignment`` sorted by node."""
    part.to_frame().to_csv(path, index=False, lineterminator="\n")


def read_partition(path: str | Path, seed_a: str = "", seed_b: str = "") -> PairPartition:
    """
    Read a ``node,assignment`` CSV back into a partition.

    Raises:
        SchemaError: missing columns or an unknown assignment.
    """
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if not {"node", "assignment"} <= set(frame.columns):
        raise SchemaError(f"{path}: expected columns node,assignment")
    groups: dict[Assignment, set[str]] = {a: set() for a in Assignment}
    for node, value in zip(frame["node"], frame["assignment"]):
        try:
            groups[Assignment(value)].add(node)
        except ValueError:
            raise SchemaError(f"{path}: unknown assignment {value!r} for {node!r}") from None
    return PairPartition(
        seed_a=seed_a,
        seed_b=seed_b,
        internal_a=frozenset(groups[Assignment.INTERNAL_A]),
        internal_b=frozenset(groups[Assignment.INTERNAL_B]),
        boundary=frozenset(groups[Assignment.BOUNDARY]),
    )
