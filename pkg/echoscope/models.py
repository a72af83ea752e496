"""
models.py

Domain data structures shared across echoscope: records, networks, partitions,
scores, party registry rows and model fits.

These are plain containers with light serialization helpers; the rules that
produce them live in the per-concern modules (ingest, graph, partition, ...).

Usage:
------
>>> from echoscope.models import FragmentationScore
>>> FragmentationScore(b_e=3, i_e=7).value
-0.4
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from datetime import date, datetime, time, timezone
from enum import StrEnum
from fractions import Fraction

import pandas as pd

from .errors import ConfigurationError, SpecError

EDGE_COLUMNS = ["source", "target", "weight", "mention_count", "retweet_count"]


class InteractionKind(StrEnum):
    MENTION = "mention"
    RETWEET = "retweet"


class KindFilter(StrEnum):
    ALL = "all"
    MENTION_ONLY = "mention_only"
    RETWEET_ONLY = "retweet_only"

    @classmethod
    def from_cli(cls, value: str) -> KindFilter:
        """Accept the CLI spellings ``all``, ``mentions`` and ``retweets``."""
        aliases = {"mentions": cls.MENTION_ONLY, "retweets": cls.RETWEET_ONLY}
        return aliases.get(value, None) or cls(value)


class Weighting(StrEnum):
    WEIGHTED = "weighted"
    UNWEIGHTED = "unweighted"


class Split(StrEnum):
    ALL = "all"
    PRE = "pre"
    POST = "post"


class Side(StrEnum):
    A = "a"
    B = "b"


class Assignment(StrEnum):
    INTERNAL_A = "internal_a"
    INTERNAL_B = "internal_b"
    BOUNDARY = "boundary"


class Variant(StrEnum):
    """Ways of eliciting the discussion network for a pair."""

    ALL = "all"
    MENTIONS = "mentions"
    RETWEETS = "retweets"
    PRE = "pre"
    POST = "post"
    UNWEIGHTED = "unweighted"

    @property
    def kind_filter(self) -> KindFilter:
        if self is Variant.MENTIONS:
            return KindFilter.MENTION_ONLY
        if self is Variant.RETWEETS:
            return KindFilter.RETWEET_ONLY
        return KindFilter.ALL

    @property
    def split_mode(self) -> Split:
        if self is Variant.PRE:
            return Split.PRE
        if self is Variant.POST:
            return Split.POST
        return Split.ALL

    @property
    def weighting(self) -> Weighting:
        if self is Variant.UNWEIGHTED:
            return Weighting.UNWEIGHTED
        return Weighting.WEIGHTED


class IncumbencyPair(StrEnum):
    II = "II"
    IO = "IO"
    OO = "OO"


def format_timestamp(ts: datetime) -> str:
    """ISO-8601 in UTC with a ``Z`` suffix."""
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


# =========================================================================
# Ingest
# =========================================================================
@dataclass(frozen=True, slots=True)
class InteractionRecord:
    """One authored message with its normalized mentions."""

    id: str
    timestamp: datetime
    author: str
    text: str
    mentions: tuple[str, ...] = ()
    is_retweet: bool = False

    def to_dict(self) -> dict[str, object]:
        """Serialize the record into JSON-friendly primitives."""
        return {
            "id": self.id,
            "timestamp": format_timestamp(self.timestamp),
            "author": self.author,
            "text": self.text,
            "mentions": list(self.mentions),
            "is_retweet": self.is_retweet,
        }


@dataclass(frozen=True, slots=True)
class CollectionWindow:
    """Observation period, optionally split at an election date."""

    start: datetime
    end: datetime
    election_date: date | None = None

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ConfigurationError(
                f"window start {self.start.isoformat()} is not before end"
            )
        if self.election_date is not None:
            if not self.start <= self.election_start <= self.end:
                raise ConfigurationError(
                    f"election date {self.election_date} outside the window"
                )

    @property
    def election_start(self) -> datetime:
        """Election day midnight UTC; only valid with an election date."""
        assert self.election_date is not None
        return datetime.combine(self.election_date, time(0), tzinfo=timezone.utc)


# =========================================================================
# Graph
# =========================================================================
@dataclass(slots=True)
class InteractionNetwork:
    """Directed weighted network aggregated to one row per (source, target).

    ``edges`` has the columns of ``EDGE_COLUMNS``, integer weights and tallies,
    sorted by source then target.
    """

    nodes: frozenset[str]
    edges: pd.DataFrame
    weighting: Weighting = Weighting.WEIGHTED

    @property
    def number_of_nodes(self) -> int:
        return len(self.nodes)

    @property
    def number_of_edges(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> int:
        return int(self.edges["weight"].sum()) if len(self.edges) else 0

    def edge_weight(self, source: str, target: str) -> int:
        """Weight of ``source -> target``, 0 when absent."""
        hit = self.edges[
            (self.edges["source"] == source) & (self.edges["target"] == target)
        ]
        return int(hit["weight"].iloc[0]) if len(hit) else 0


@dataclass(slots=True)
class PairNetwork:
    """Subnetwork of everyone who mentioned at least one of two party seeds."""

    seed_a: str
    seed_b: str
    network: InteractionNetwork
    # node -> (mentions of seed_a, mentions of seed_b) over the pair's records
    direct_mention_counts: dict[str, tuple[int, int]]
    tweet_count_a: int = 0
    tweet_count_b: int = 0

    @property
    def nodes(self) -> frozenset[str]:
        return self.network.nodes


# =========================================================================
# Partition and metrics
# =========================================================================
@dataclass(frozen=True, slots=True)
class PairPartition:
    seed_a: str
    seed_b: str
    internal_a: frozenset[str]
    internal_b: frozenset[str]
    boundary: frozenset[str]
    iterations: int = 0
    seed_seed_edge_weight: int = 0
    # nodes moved from a provisional internal side into the boundary
    promoted: frozenset[str] = frozenset()

    def assignment(self, node: str) -> Assignment:
        if node in self.internal_a:
            return Assignment.INTERNAL_A
        if node in self.internal_b:
            return Assignment.INTERNAL_B
        if node in self.boundary:
            return Assignment.BOUNDARY
        raise KeyError(node)

    def internal(self, side: Side) -> frozenset[str]:
        return self.internal_a if side is Side.A else self.internal_b

    def to_frame(self) -> pd.DataFrame:
        """``node,assignment`` rows sorted by node."""
        rows = [(n, Assignment.INTERNAL_A.value) for n in self.internal_a]
        rows += [(n, Assignment.INTERNAL_B.value) for n in self.internal_b]
        rows += [(n, Assignment.BOUNDARY.value) for n in self.boundary]
        frame = pd.DataFrame(rows, columns=["node", "assignment"])
        return frame.sort_values("node", kind="mergesort").reset_index(drop=True)


@dataclass(frozen=True, slots=True)
class EdgeSums:
    """Weighted edge totals of a pair network by endpoint category."""

    within_a: int = 0
    within_b: int = 0
    boundary_to_a: int = 0
    boundary_to_b: int = 0
    a_to_boundary: int = 0
    b_to_boundary: int = 0
    boundary_to_boundary: int = 0
    a_to_b: int = 0
    b_to_a: int = 0

    @property
    def b_e(self) -> int:
        return self.boundary_to_a + self.boundary_to_b

    @property
    def i_e(self) -> int:
        return self.within_a + self.within_b

    def internal(self, side: Side) -> int:
        return self.within_a if side is Side.A else self.within_b


@dataclass(frozen=True, slots=True)
class FragmentationScore:
    """(b_e - i_e) / (b_e + i_e) on integer edge sums."""

    b_e: int
    i_e: int

    @property
    def defined(self) -> bool:
        return self.b_e + self.i_e > 0

    @property
    def value(self) -> float | None:
        if not self.defined:
            return None
        return (self.b_e - self.i_e) / (self.b_e + self.i_e)

    def as_fraction(self) -> Fraction:
        return Fraction(self.b_e - self.i_e, self.b_e + self.i_e)


@dataclass(frozen=True, slots=True)
class Summary:
    n: int
    min: float
    max: float
    mean: float
    sd: float | None

    def to_dict(self) -> dict[str, object]:
        return asdict(self)


# =========================================================================
# Covariates
# =========================================================================
@dataclass(frozen=True, slots=True)
class Party:
    id: str
    country: str
    handle: str
    ideology: float
    vote_share: float
    incumbent: bool

    @property
    def right_wing(self) -> bool:
        return self.ideology > 5


@dataclass(frozen=True, slots=True)
class PairCovariates:
    ideological_distance: float
    extremism_sum: float
    left_right_mismatch: bool
    size_difference: float
    incumbency_pair: IncumbencyPair
    tweet_ratio: float | None

    @property
    def complete(self) -> bool:
        return self.tweet_ratio is not None

    def to_dict(self) -> dict[str, object]:
        return {
            "ideological_distance": self.ideological_distance,
            "extremism_sum": self.extremism_sum,
            "left_right_mismatch": self.left_right_mismatch,
            "size_difference": self.size_difference,
            "incumbency_pair": self.incumbency_pair.value,
            "tweet_ratio": self.tweet_ratio,
        }


@dataclass(frozen=True, slots=True)
class PartyCovariates:
    extremism: float
    right_wing: bool
    size: float
    incumbent: bool


@dataclass(slots=True)
class PairObservation:
    """One analysis row: a pair's scores under one network variant."""

    country: str
    party_a: str
    party_b: str
    variant: Variant
    f: FragmentationScore
    fp_a: FragmentationScore
    fp_b: FragmentationScore
    node_count: int
    edge_count: int
    internal_a_count: int = 0
    internal_b_count: int = 0
    boundary_count: int = 0
    ei_a: float | None = None
    ei_b: float | None = None
    covariates: PairCovariates | None = None

    def to_dict(self) -> dict[str, object]:
        """Flat row for the pair-metrics report."""
        return {
            "country": self.country,
            "party_a": self.party_a,
            "party_b": self.party_b,
            "f": self.f.value,
            "b_e": self.f.b_e,
            "i_e": self.f.i_e,
            "nodes": self.node_count,
            "edges": self.edge_count,
            "variant": self.variant.value,
        }


# =========================================================================
# Stats
# =========================================================================
@dataclass(slots=True)
class ModelFit:
    """Random-intercept model estimates with Wald-z inference."""

    name: str
    response: str
    predictors: list[str]
    beta: dict[str, float]
    se: dict[str, float]
    z: dict[str, float]
    p: dict[str, float]
    sigma2_u: float
    sigma2_e: float
    lambda_ratio: float
    n_obs: int
    n_groups: int
    converged: bool
    reml_criterion: float
    n_evaluations: int = 0
    r2_marginal: float | None = None
    r2_conditional: float | None = None
    p_value_method: str = "Wald-z"
    metadata: dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "response": self.response,
            "predictors": list(self.predictors),
            "coefficients": {
                term: {
                    "estimate": self.beta[term],
                    "se": self.se[term],
                    "z": self.z[term],
                    "p": self.p[term],
                }
                for term in self.beta
            },
            "sigma2_u": self.sigma2_u,
            "sigma2_e": self.sigma2_e,
            "lambda": self.lambda_ratio,
            "r2_marginal": self.r2_marginal,
            "r2_conditional": self.r2_conditional,
            "n_obs": self.n_obs,
            "n_groups": self.n_groups,
            "converged": self.converged,
            "reml_criterion": self.reml_criterion,
            "n_evaluations": self.n_evaluations,
            "p_value_method": self.p_value_method,
            "metadata": dict(self.metadata),
        }


# =========================================================================
# Synth and viz
# =========================================================================
@dataclass(frozen=True, slots=True)
class PlantedPairSpec:
    n_a: int
    n_b: int
    w_internal_a: int
    w_internal_b: int
    n_boundary: int
    w_boundary: int
    rng_seed: int = 0
    noise: str = "deterministic"  # or "poisson"

    @classmethod
    def from_dict(cls, data: dict[str, object]) -> PlantedPairSpec:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise SpecError(f"unknown planted-pair key(s): {', '.join(unknown)}")
        return cls(**data)  # type: ignore[arg-type]


@dataclass(slots=True)
class Layout:
    """Node positions inside ``bbox`` (xmin, ymin, xmax, ymax)."""

    positions: dict[str, tuple[float, float]]
    iterations: int
    rng_seed: int
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    # layout energy after each iteration, filled on request
    energy: list[float] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            [(n, x, y) for n, (x, y) in self.positions.items()], columns=["node", "x", "y"]
        )
        return frame.sort_values("node", kind="mergesort").reset_index(drop=True)
