"""
test_graph.py

Tests for network building, pair subnetworks and network import/export in
graph.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from conftest import PETITION_EDGES_CSV, record
from echoscope.errors import InvalidPairError
from echoscope.graph import (
    SeedMentionIndex,
    build_network,
    check_network,
    merge_networks,
    pair_subnetwork,
    read_edge_list,
    read_graphml,
    select_kind,
    write_edge_list,
    write_graphml,
)
from echoscope.ingest import read_records
from echoscope.models import KindFilter, Weighting


def test_petition_builds_nine_edges(petition_file: Path, tmp_path: Path) -> None:
    network = build_network(read_records([petition_file]))
    out = tmp_path / "edges.csv"
    write_edge_list(network, out)

    assert network.number_of_edges == 9
    assert network.nodes == {"blueparty", "john", "paul", "stephanie", "emilyw"}
    assert out.read_bytes() == PETITION_EDGES_CSV.encode()


def test_repeated_record_weighted_and_unweighted() -> None:
    rec = record("john", "@blueparty hi")

    assert build_network([rec, rec]).edge_weight("john", "blueparty") == 2
    unweighted = build_network([rec, rec], weighting=Weighting.UNWEIGHTED)
    assert unweighted.edge_weight("john", "blueparty") == 1
    assert unweighted.edges["mention_count"].tolist() == [2]


def test_empty_stream_gives_empty_network() -> None:
    network = build_network([])

    assert network.number_of_nodes == 0
    assert network.number_of_edges == 0


def test_kind_filters_split_the_weight() -> None:
    records = [
        record("a", "@b hello"),
        record("a", "RT @b: hello"),
        record("c", "RT @b: again"),
        record("c", "@a @b hi"),
    ]
    every = build_network(records)
    mentions = build_network(records, KindFilter.MENTION_ONLY)
    retweets = build_network(records, KindFilter.RETWEET_ONLY)

    check_network(every)
    assert every.total_weight == mentions.total_weight + retweets.total_weight == 5
    assert every.edge_weight("a", "b") == 2
    assert mentions.edge_weight("a", "b") == retweets.edge_weight("a", "b") == 1
    assert len(select_kind(records, KindFilter.RETWEET_ONLY)) == 2


def test_build_is_permutation_invariant() -> None:
    rng = np.random.default_rng(11)
    handles = [f"u{i}" for i in range(8)]
    records = [
        record(str(rng.choice(handles)), " ".join(f"@{h}" for h in rng.choice(handles, 3)))
        for _ in range(60)
    ]
    base = build_network(records)
    total_mentions = sum(len(r.mentions) for r in records)

    assert base.total_weight == total_mentions
    for _ in range(5):
        order = rng.permutation(len(records))
        shuffled = build_network([records[i] for i in order])
        assert shuffled.nodes == base.nodes
        assert shuffled.edges.equals(base.edges)


def test_merge_networks_adds_shards() -> None:
    records = [record("a", "@b"), record("a", "@b @c"), record("c", "RT @a")]
    merged = merge_networks(build_network(records[:2]), build_network(records[2:]))

    assert merged.edges.equals(build_network(records).edges)


# =========================================================================
# Pair subnetworks
# =========================================================================
def test_petition_pair_subnetwork(petition_records) -> None:
    network = build_network(petition_records)
    pair = pair_subnetwork(network, petition_records, "blueparty", "redparty")

    assert pair.nodes == {"blueparty", "redparty", "john", "paul"}
    assert set(zip(pair.network.edges["source"], pair.network.edges["target"])) == {
        ("john", "blueparty"),
        ("paul", "blueparty"),
        ("paul", "john"),
    }
    assert pair.tweet_count_a == 2
    assert pair.tweet_count_b == 0


def test_pair_without_mentions_has_only_seeds(petition_records) -> None:
    network = build_network(petition_records)
    pair = pair_subnetwork(network, petition_records, "greenparty", "redparty")

    assert pair.nodes == {"greenparty", "redparty"}
    assert pair.network.number_of_edges == 0


def test_direct_mention_counts_of_joint_mention() -> None:
    records = [record("w", "@sa @sb")]
    pair = pair_subnetwork(build_network(records), records, "sa", "sb")

    assert pair.direct_mention_counts["w"] == (1, 1)


def test_same_seed_is_invalid_pair() -> None:
    with pytest.raises(InvalidPairError):
        pair_subnetwork(build_network([]), [], "@BlueParty", "blueparty")


def test_pair_edges_are_the_induced_subgraph() -> None:
    rng = np.random.default_rng(5)
    handles = ["sa", "sb", *(f"u{i}" for i in range(30))]
    for _ in range(20):
        records = [
            record(str(rng.choice(handles)), " ".join(f"@{h}" for h in rng.choice(handles, 2)))
            for _ in range(int(rng.integers(10, 120)))
        ]
        network = build_network(records)
        index = SeedMentionIndex.from_records(records, ["sa", "sb"])
        pair = pair_subnetwork(network, None, "sa", "sb", index)

        members = {"sa", "sb"} | {
            r.author for r in records if {"sa", "sb"} & set(r.mentions)
        }
        expected = {
            (s, t)
            for s, t in zip(network.edges["source"], network.edges["target"])
            if s in members and t in members
        }
        assert pair.nodes == members
        assert set(zip(pair.network.edges["source"], pair.network.edges["target"])) == expected


# =========================================================================
# Import / export
# =========================================================================
def test_edge_list_and_graphml_read_back(tmp_path: Path, petition_records) -> None:
    network = build_network(petition_records + [record("ahmed", "RT @john: yes")])
    csv_path, graphml_path = tmp_path / "edges.csv", tmp_path / "edges.graphml"
    write_edge_list(network, csv_path)
    write_graphml(network, graphml_path)

    from_csv = read_edge_list(csv_path)
    from_graphml = read_graphml(graphml_path)

    assert from_csv.edges.equals(network.edges)
    assert from_graphml.edges.equals(network.edges)
    assert from_graphml.nodes == network.nodes
