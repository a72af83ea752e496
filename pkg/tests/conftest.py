"""
conftest.py

Shared fixtures for the echoscope test suite.

Usage:
------
# requires the dev extras (pytest, statsmodels) in the virtual environment
>>>  uv run pytest
"""

from __future__ import annotations

import json
from collections.abc import Callable
from pathlib import Path

import pytest

from echoscope.ingest import parse_record
from echoscope.models import InteractionRecord, PairNetwork
from echoscope.synth import pair_from_weights

PETITION_LINES = [
    '{"id": "t1", "author": "BlueParty", "timestamp": "2014-05-20T09:00:00Z", '
    '"text": ".@stephanie and @emilyw this am delivered a petition calling for prison reform"}',
    '{"id": "t2", "author": "John", "timestamp": "2014-05-20T10:00:00Z", '
    '"text": "@blueparty @stephanie @emilyw didn\'t we vote on this?"}',
    '{"id": "t3", "author": "Paul", "timestamp": "2014-05-20T11:00:00Z", '
    '"text": "@john @blueparty @stephanie @emilyw Nope. We had a vote on it last week"}',
]

PETITION_EDGES_CSV = (
    "source,target,weight,mention_count,retweet_count\n"
    "blueparty,emilyw,1,1,0\n"
    "blueparty,stephanie,1,1,0\n"
    "john,blueparty,1,1,0\n"
    "john,emilyw,1,1,0\n"
    "john,stephanie,1,1,0\n"
    "paul,blueparty,1,1,0\n"
    "paul,emilyw,1,1,0\n"
    "paul,john,1,1,0\n"
    "paul,stephanie,1,1,0\n"
)

EXAMPLE_DIR = Path(__file__).resolve().parent.parent / "data" / "example"


def record(
    author: str,
    text: str,
    timestamp: str = "2014-05-20T10:00:00Z",
    **fields: object,
) -> InteractionRecord:
    """Parse a record built from keyword fields, the way a JSONL line would be."""
    data = {"author": author, "timestamp": timestamp, "text": text, **fields}
    return parse_record(json.dumps(data))


def make_pair(
    edges: list[tuple[str, str, int]], seed_a: str = "sa", seed_b: str = "sb"
) -> PairNetwork:
    """Pair network from (author, mentioned, weight) triples."""
    nodes = sorted({seed_a, seed_b} | {s for s, _, _ in edges} | {t for _, t, _ in edges})
    weights = {(s, t): w for s, t, w in edges}
    return pair_from_weights(seed_a, seed_b, nodes, weights)


@pytest.fixture
def petition_records() -> list[InteractionRecord]:
    return [parse_record(line, i) for i, line in enumerate(PETITION_LINES, start=1)]


@pytest.fixture
def petition_file(tmp_path: Path) -> Path:
    path = tmp_path / "petition.jsonl"
    path.write_text("\n".join(PETITION_LINES) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def pair_factory() -> Callable[..., PairNetwork]:
    return make_pair


@pytest.fixture
def fragmented_pair() -> PairNetwork:
    """Seven nodes, one boundary node, F = -0.4."""
    return make_pair(
        [
            ("a1", "sa", 2),
            ("a2", "sa", 1),
            ("a2", "a1", 1),
            ("b1", "sb", 1),
            ("b2", "sb", 1),
            ("b2", "b1", 1),
            ("x", "sa", 1),
            ("x", "sb", 2),
        ]
    )


@pytest.fixture
def registry_file(tmp_path: Path) -> Path:
    path = tmp_path / "registry.csv"
    path.write_text(
        "country,party_id,handle,ideology,vote_share,incumbent\n"
        "uk,lab,@labourleader,4.2,30.4,false\n"
        "uk,con,@conservatives,7.1,33.0,true\n"
        "uk,ukip,@ukip,8.9,12.6,false\n"
        "ie,fg,@finegael,6.0,36.1,true\n",
        encoding="utf-8",
    )
    return path
