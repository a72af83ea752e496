"""
synth.py

Planted pair networks with known fragmentation, and planted studies whose F
values follow a random-intercept model with known coefficients.

A planted pair has two seeds, ``n_a``/``n_b`` internal nodes that only mention
their own side and ``n_boundary`` nodes that mention both seeds in one message.
Weights are realized exactly (deterministic) or as Poisson draws around the
targets, so F is known before anything is measured.

All randomness comes from ``numpy.random.Generator(Philox)`` seeded through
``SeedSequence``: the same seed gives the same stream on every platform.

Usage:
------
>>> from echoscope.models import PlantedPairSpec
>>> from echoscope.synth import generate_pair
>>> planted = generate_pair(PlantedPairSpec(2, 2, 4, 3, 1, 3))
>>> planted.f.value
-0.4
"""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.stats import truncnorm

from .covariates import pair_covariates, write_registry
from .errors import SpecError, ZeroVarianceError
from .extensions import make_rng
from .graph import edge_frame
from .ingest import write_records
from .metrics import observe_pair
from .models import (
    EDGE_COLUMNS,
    FragmentationScore,
    InteractionNetwork,
    IncumbencyPair,
    InteractionRecord,
    PairNetwork,
    PairObservation,
    PairPartition,
    Party,
    PlantedPairSpec,
    Variant,
)
from .partition import classify_nodes
from .stats import PAIR_DUMMIES, PAIR_NUMERIC, pair_frame

logger = logging.getLogger(__name__)

NOISE_MODES = ("deterministic", "poisson")

# calibration of the planted-study covariates
EXTREMISM_MEAN = 4.17
EXTREMISM_SD = 1.42
MISMATCH_PROBABILITY = 0.44
VOTE_SHARE_SHAPE = 2.0
VOTE_SHARE_SCALE = 6.0
INCUMBENT_PROBABILITY = 0.39


def _compose(total: int, parts: int) -> list[int]:
    """Split ``total`` into ``parts`` near-equal non-negative integers."""
    base, extra = divmod(total, parts)
    return [base + (i < extra) for i in range(parts)]


# =========================================================================
# Planted pairs
# =========================================================================
def validate_spec(spec: PlantedPairSpec) -> None:
    """
    Raise ``SpecError`` when a spec cannot be realized.

    Every internal node carries at least one unit of weight (its seed
    mention) and every boundary node at least two (one per seed).
    """
    counts = {
        "n_a": spec.n_a,
        "n_b": spec.n_b,
        "w_internal_a": spec.w_internal_a,
        "w_internal_b": spec.w_internal_b,
        "n_boundary": spec.n_boundary,
        "w_boundary": spec.w_boundary,
    }
    negative = [name for name, value in counts.items() if value < 0]
    if negative:
        raise SpecError(f"negative count(s): {', '.join(negative)}")
    if spec.noise not in NOISE_MODES:
        raise SpecError(f"noise must be one of {NOISE_MODES}, got {spec.noise!r}")
    if spec.w_internal_a + spec.w_internal_b + spec.w_boundary == 0:
        raise SpecError("at least one weight target must be positive")
    for side, n, w in (("a", spec.n_a, spec.w_internal_a), ("b", spec.n_b, spec.w_internal_b)):
        if n == 0 and w > 0:
            raise SpecError(f"w_internal_{side}={w} needs internal nodes on side {side}")
        if w < n:
            raise SpecError(f"w_internal_{side}={w} below its {n} seed mention(s)")
    if spec.w_boundary > 0 and spec.n_boundary == 0:
        raise SpecError(f"w_boundary={spec.w_boundary} needs boundary nodes")
    if spec.w_boundary < 2 * spec.n_boundary:
        raise SpecError(
            f"w_boundary={spec.w_boundary} below the {2 * spec.n_boundary} seed mentions "
            f"of {spec.n_boundary} boundary node(s)"
        )


@dataclass(slots=True)
class PlantedPair:
    """A generated pair network with its ground-truth partition."""

    spec: PlantedPairSpec
    pair: PairNetwork
    partition: PairPartition
    # planned edge weights, (author, mentioned) -> weight
    weights: dict[tuple[str, str], int]
    # boundary authors whose first message mentions both seeds
    joint_authors: tuple[str, ...] = ()

    @property
    def b_e(self) -> int:
        internal = self.partition.internal_a | self.partition.internal_b
        return sum(
            w
            for (s, t), w in self.weights.items()
            if s in self.partition.boundary and t in internal
        )

    @property
    def i_e(self) -> int:
        part = self.partition
        return sum(
            w
            for (s, t), w in self.weights.items()
            if (s in part.internal_a and t in part.internal_a)
            or (s in part.internal_b and t in part.internal_b)
        )

    @property
    def f(self) -> FragmentationScore:
        return FragmentationScore(self.b_e, self.i_e)

    def to_records(
        self,
        start: datetime,
        end: datetime,
        retweet_every: int = 0,
        id_prefix: str = "",
    ) -> list[InteractionRecord]:
        """
        Expand the planned weights into messages spread evenly over
        ``[start, end]``.

        Building the network from these records gives back ``self.pair``
        (with ``retweet_every`` > 0 every k-th message is a retweet).
        """
        seeds = (self.pair.seed_a, self.pair.seed_b)
        remaining = dict(self.weights)
        messages: list[tuple[str, tuple[str, ...]]] = []
        for author in sorted({s for s, _ in self.weights}):
            if author in self.joint_authors:
                messages.append((author, seeds))
                for seed in seeds:
                    remaining[(author, seed)] -= 1
        for (author, target), weight in sorted(remaining.items()):
            messages.extend([(author, (target,))] * weight)

        span = (end - start).total_seconds()
        records = []
        for i, (author, mentions) in enumerate(messages):
            offset = int(span * (i + 0.5) / len(messages))
            is_retweet = retweet_every > 0 and i % retweet_every == retweet_every - 1
            text = " ".join(f"@{h}" for h in mentions)
            records.append(
                InteractionRecord(
                    id=f"{id_prefix}{i}",
                    timestamp=start + timedelta(seconds=offset),
                    author=author,
                    text=f"RT {text}" if is_retweet else text,
                    mentions=mentions,
                    is_retweet=is_retweet,
                )
            )
        return records


def _realized_targets(spec: PlantedPairSpec) -> tuple[int, int, int]:
    targets = (spec.w_internal_a, spec.w_internal_b, spec.w_boundary)
    if spec.noise == "deterministic":
        return targets
    rng = make_rng(spec.rng_seed)
    minima = (spec.n_a, spec.n_b, 2 * spec.n_boundary)
    a, b, x = (low + int(rng.poisson(target - low)) for target, low in zip(targets, minima))
    return a, b, x


def _side_weights(
    seed: str, nodes: list[str], target: int, weights: dict[tuple[str, str], int]
) -> None:
    for node in nodes:
        weights[(node, seed)] = 1
    extra = target - len(nodes)
    if not extra:
        return
    if len(nodes) >= 2:
        chain = list(zip(nodes[1:], nodes[:-1]))
        for edge, w in zip(chain, _compose(extra, len(chain))):
            if w:
                weights[edge] = w
    else:
        weights[(nodes[0], seed)] += extra


def pair_from_weights(
    seed_a: str,
    seed_b: str,
    nodes: list[str],
    weights: Mapping[tuple[str, str], int],
) -> PairNetwork:
    """PairNetwork whose every edge comes from weight-many single messages."""
    edges = edge_frame((s, t, w, w, 0) for (s, t), w in weights.items())
    direct = {
        node: (weights.get((node, seed_a), 0), weights.get((node, seed_b), 0))
        for node in nodes
    }
    return PairNetwork(
        seed_a=seed_a,
        seed_b=seed_b,
        network=InteractionNetwork(frozenset(nodes), edges),
        direct_mention_counts=direct,
        tweet_count_a=sum(w for (_, t), w in weights.items() if t == seed_a),
        tweet_count_b=sum(w for (_, t), w in weights.items() if t == seed_b),
    )


def generate_pair(
    spec: PlantedPairSpec,
    prefix: str = "",
    seed_a: str | None = None,
    seed_b: str | None = None,
) -> PlantedPair:
    """
    Build a planted pair network and its ground-truth partition.

    Internal nodes ``a1..`` mention their seed once and each other along a
    chain carrying the remaining internal weight. Boundary nodes ``x1..``
    mention both seeds in one message; the remaining boundary weight goes to
    internal non-seed nodes (or to the seeds when there are none).

    Args:
        spec: sizes and weight targets.
        prefix: prepended to every generated handle.
        seed_a, seed_b: seed handles, ``{prefix}sa``/``{prefix}sb`` by default.

    Raises:
        SpecError: the spec is infeasible.
    """
    validate_spec(spec)
    w_a, w_b, w_x = _realized_targets(spec)
    seed_a = seed_a or f"{prefix}sa"
    seed_b = seed_b or f"{prefix}sb"
    side_a = [f"{prefix}a{i}" for i in range(1, spec.n_a + 1)]
    side_b = [f"{prefix}b{i}" for i in range(1, spec.n_b + 1)]
    boundary = [f"{prefix}x{i}" for i in range(1, spec.n_boundary + 1)]

    weights: dict[tuple[str, str], int] = {}
    _side_weights(seed_a, side_a, w_a, weights)
    _side_weights(seed_b, side_b, w_b, weights)

    for node in boundary:
        weights[(node, seed_a)] = 1
        weights[(node, seed_b)] = 1
    extra = w_x - 2 * len(boundary)
    if extra:
        targets = side_a + side_b
        if targets:
            for j, (node, w) in enumerate(zip(boundary, _compose(extra, len(boundary)))):
                if w:
                    weights[(node, targets[j % len(targets)])] = w
        else:
            seed_edges = [(node, seed) for node in boundary for seed in (seed_a, seed_b)]
            for edge, w in zip(seed_edges, _compose(extra, len(seed_edges))):
                weights[edge] += w

    nodes = [seed_a, seed_b, *side_a, *side_b, *boundary]
    pair = pair_from_weights(seed_a, seed_b, nodes, weights)
    truth = PairPartition(
        seed_a=seed_a,
        seed_b=seed_b,
        internal_a=frozenset([seed_a, *side_a]),
        internal_b=frozenset([seed_b, *side_b]),
        boundary=frozenset(boundary),
        iterations=1 if len(nodes) > 2 else 0,
    )
    return PlantedPair(spec, pair, truth, weights, tuple(boundary))


def generate_large_pair(
    n_nodes: int = 175_299,
    n_edges: int = 1_088_381,
    rng_seed: int = 0,
    boundary_share: float = 0.1,
    max_weight: int = 5,
) -> PairNetwork:
    """
    A planted pair at large scale, built with vectorized numpy draws.

    Membership edges (internal -> own seed, boundary -> both seeds) come first;
    the rest are distinct random within-side and boundary -> internal edges.

    Raises:
        SpecError: fewer edges than the membership edges need.
    """
    rng = make_rng(rng_seed)
    n_x = int(round((n_nodes - 2) * boundary_share))
    n_a = (n_nodes - 2 - n_x) // 2
    n_b = n_nodes - 2 - n_x - n_a
    lo_a, lo_b, lo_x = 2, 2 + n_a, 2 + n_a + n_b
    membership = n_a + n_b + 2 * n_x
    if n_edges < membership or min(n_a, n_b) < 2:
        raise SpecError(f"{n_edges} edges cannot connect {n_nodes} planted nodes")

    a_ids = np.arange(lo_a, lo_b)
    b_ids = np.arange(lo_b, lo_x)
    x_ids = np.arange(lo_x, n_nodes)
    src = [a_ids, b_ids, x_ids, x_ids]
    tgt = [
        np.zeros(n_a, np.int64),
        np.ones(n_b, np.int64),
        np.zeros(n_x, np.int64),
        np.ones(n_x, np.int64),
    ]

    need = n_edges - membership
    share_x = need // 10 if n_x else 0
    share_a = (need - share_x) // 2
    share_b = need - share_x - share_a
    for (s_lo, s_hi, t_lo, t_hi), k in (
        ((lo_a, lo_b, lo_a, lo_b), share_a),
        ((lo_b, lo_x, lo_b, lo_x), share_b),
        ((lo_x, n_nodes, lo_a, lo_x), share_x),
    ):
        s, t = _distinct_edges(rng, s_lo, s_hi, t_lo, t_hi, k, n_nodes)
        src.append(s)
        tgt.append(t)

    source = np.concatenate(src)
    target = np.concatenate(tgt)
    weight = rng.integers(1, max_weight + 1, size=len(source))

    names = np.array(["seeda", "seedb", *(f"n{i}" for i in range(2, n_nodes))], dtype=object)
    edges = pd.DataFrame(
        {
            "source": names[source],
            "target": names[target],
            "weight": weight,
            "mention_count": weight,
            "retweet_count": np.zeros(len(source), dtype=np.int64),
        },
        columns=EDGE_COLUMNS,
    )
    edges = edges.sort_values(["source", "target"], kind="mergesort").reset_index(drop=True)

    to_a = np.zeros(n_nodes, dtype=np.int64)
    to_b = np.zeros(n_nodes, dtype=np.int64)
    seed_edges = target < 2
    np.add.at(to_a, source[seed_edges & (target == 0)], weight[seed_edges & (target == 0)])
    np.add.at(to_b, source[seed_edges & (target == 1)], weight[seed_edges & (target == 1)])
    direct = dict(zip(names.tolist(), zip(to_a.tolist(), to_b.tolist())))
    logger.info("planted large pair: %d nodes, %d edges", n_nodes, len(edges))
    return PairNetwork(
        seed_a="seeda",
        seed_b="seedb",
        network=InteractionNetwork(frozenset(names.tolist()), edges),
        direct_mention_counts=direct,
        tweet_count_a=int(to_a.sum()),
        tweet_count_b=int(to_b.sum()),
    )


def _distinct_edges(
    rng: np.random.Generator,
    s_lo: int,
    s_hi: int,
    t_lo: int,
    t_hi: int,
    k: int,
    n: int,
) -> tuple[np.ndarray, np.ndarray]:
    """``k`` distinct non-loop edges with endpoints drawn from two id ranges."""
    codes = np.empty(0, dtype=np.int64)
    while codes.size < k:
        m = int((k - codes.size) * 1.2) + 16
        s = rng.integers(s_lo, s_hi, size=m)
        t = rng.integers(t_lo, t_hi, size=m)
        keep = s != t
        codes = np.unique(np.concatenate([codes, s[keep] * n + t[keep]]))
    codes = rng.choice(codes, size=k, replace=False)
    return codes // n, codes % n


# =========================================================================
# Planted studies
# =========================================================================
@dataclass(slots=True)
class PlantedStudy:
    """Measured observations of a planted study plus its ground truth."""

    observations: list[PairObservation]
    parties: dict[tuple[str, str], Party]
    beta: dict[str, float]
    sigma_u: float
    sigma_e: float
    country_effects: dict[str, float]
    composed_f: list[float]
    resamples: int
    pairs: list[PlantedPair] = field(default_factory=list, repr=False)

    def pair_frame(self) -> pd.DataFrame:
        return pair_frame(self.observations)


def _draw_ideologies(rng: np.random.Generator) -> tuple[float, float]:
    """Two ideology scores with calibrated extremism sum and side mismatch."""
    a_std = (0.0 - EXTREMISM_MEAN) / EXTREMISM_SD
    b_std = (10.0 - EXTREMISM_MEAN) / EXTREMISM_SD
    total = float(
        truncnorm.rvs(a_std, b_std, loc=EXTREMISM_MEAN, scale=EXTREMISM_SD, random_state=rng)
    )
    e_a = float(rng.uniform(max(0.0, total - 5.0), min(5.0, total)))
    e_b = total - e_a
    side_a = 1.0 if rng.random() < 0.5 else -1.0
    side_b = -side_a if rng.random() < MISMATCH_PROBABILITY else side_a
    return 5.0 + side_a * e_a, 5.0 + side_b * e_b


def draw_parties(
    rng: np.random.Generator, country: str, index: int
) -> tuple[Party, Party]:
    """Two parties of a planted pair with calibrated covariates."""
    ideology_a, ideology_b = _draw_ideologies(rng)
    shares = np.minimum(rng.gamma(VOTE_SHARE_SHAPE, VOTE_SHARE_SCALE, size=2), 100.0)
    incumbent = rng.random(2) < INCUMBENT_PROBABILITY
    a, b = (
        Party(
            id=f"p{index:02d}{side}",
            country=country,
            handle=f"{country}p{index:02d}s{side}",
            ideology=ideology,
            vote_share=float(share),
            incumbent=bool(inc),
        )
        for side, ideology, share, inc in zip("ab", (ideology_a, ideology_b), shares, incumbent)
    )
    return a, b


def _feasible(b: int, total: int, n_a: int, n_b: int, n_x: int) -> bool:
    return b >= 2 * n_x and (b > 0 or n_x == 0) and total - b >= n_a + n_b


def generate_study(
    countries: int,
    pairs_per_country: int,
    beta: Mapping[str, float],
    sigma_u: float,
    sigma_e: float,
    rng_seed: int = 0,
    f_mean: float = 0.0,
    f_scale: float = 0.3,
    total_weight: int = 400,
    max_resamples: int = 1000,
) -> PlantedStudy:
    """
    Draw a study whose pair F values follow a random-intercept model.

    F = f_mean + f_scale * (X beta + u_country + e), with numeric covariates
    sample-standardized over the whole study and dummies as 0/1. Each F is
    realized as a planted pair with ``total_weight`` units of weight, so the
    measured F is within 1/total_weight of the composed value.

    Args:
        countries: number of countries (groups).
        pairs_per_country: planted pairs per country, each with two fresh parties.
        beta: coefficients keyed by pair-covariate column (``extremism_sum``,
            ``left_right_mismatch``, ``incumbency_io``, ...); absent means 0.
        sigma_u, sigma_e: SDs of the country intercept and the residual.
        rng_seed: root seed.

    Returns:
        PlantedStudy: measured observations (variant ``all``) and ground truth.

    Raises:
        SpecError: non-positive dimensions, or a pair stayed infeasible after
            ``max_resamples`` residual redraws.
    """
    if countries < 1 or pairs_per_country < 1:
        raise SpecError("countries and pairs_per_country must be positive")
    rng = make_rng(rng_seed)

    effects: dict[str, float] = {}
    drafts = []
    for j in range(1, countries + 1):
        country = f"c{j:02d}"
        effects[country] = float(rng.normal(0.0, sigma_u)) if sigma_u > 0 else 0.0
        for k in range(1, pairs_per_country + 1):
            party_a, party_b = draw_parties(rng, country, k)
            n_a, n_b = (int(v) for v in rng.integers(2, 9, size=2))
            n_x = int(rng.integers(1, 9))
            covariates = pair_covariates(party_a, party_b, n_a + n_x, n_b + n_x)
            drafts.append((country, k, party_a, party_b, n_a, n_b, n_x, covariates))

    # covariate columns exactly as the model frames carry them
    design = pd.DataFrame(
        [
            {
                **covariates.to_dict(),
                "left_right_mismatch": int(covariates.left_right_mismatch),
                "incumbency_io": int(covariates.incumbency_pair is IncumbencyPair.IO),
                "incumbency_oo": int(covariates.incumbency_pair is IncumbencyPair.OO),
            }
            for *_, covariates in drafts
        ]
    )
    linear = np.zeros(len(design))
    for name, coef in beta.items():
        if name not in (*PAIR_NUMERIC, *PAIR_DUMMIES):
            raise SpecError(f"unknown study predictor {name!r}")
        column = design[name].astype("float64")
        if name in PAIR_NUMERIC:
            sd = float(column.std(ddof=1))
            if not sd > 0:
                raise ZeroVarianceError(name)
            column = (column - column.mean()) / sd
        linear += coef * column.to_numpy()

    observations: list[PairObservation] = []
    planted: list[PlantedPair] = []
    parties: dict[tuple[str, str], Party] = {}
    composed: list[float] = []
    resamples = 0
    for (country, k, party_a, party_b, n_a, n_b, n_x, covariates), xb in zip(drafts, linear):
        for attempt in range(max_resamples + 1):
            noise = float(rng.normal(0.0, sigma_e)) if sigma_e > 0 else 0.0
            f = f_mean + f_scale * (xb + effects[country] + noise)
            b = int(round(total_weight * (1.0 + f) / 2.0))
            if -1.0 < f < 1.0 and _feasible(b, total_weight, n_a, n_b, n_x):
                break
            if attempt == max_resamples:
                raise SpecError(
                    f"{country}/p{k:02d}: no feasible F after {max_resamples} redraws"
                )
            resamples += 1

        internal = total_weight - b
        i_a = max(n_a, min(internal - n_b, round(internal * n_a / (n_a + n_b))))
        spec = PlantedPairSpec(n_a, n_b, i_a, internal - i_a, n_x, b)
        pair = generate_pair(
            spec, prefix=f"{country}p{k:02d}", seed_a=party_a.handle, seed_b=party_b.handle
        )
        part = classify_nodes(pair.pair)
        observations.append(
            observe_pair(country, party_a.id, party_b.id, Variant.ALL, pair.pair, part, covariates)
        )
        planted.append(pair)
        composed.append(f)
        parties[(country, party_a.id)] = party_a
        parties[(country, party_b.id)] = party_b

    if resamples:
        logger.warning("planted study: %d infeasible draw(s) resampled", resamples)
    return PlantedStudy(
        observations=observations,
        parties=parties,
        beta=dict(beta),
        sigma_u=sigma_u,
        sigma_e=sigma_e,
        country_effects=effects,
        composed_f=composed,
        resamples=resamples,
        pairs=planted,
    )


# =========================================================================
# Corpus files
# =========================================================================
def write_study_corpus(
    study: PlantedStudy,
    directory: str | Path,
    start: datetime = datetime(2014, 5, 11, tzinfo=timezone.utc),
    end: datetime = datetime(2014, 6, 10, 23, 59, 59, tzinfo=timezone.utc),
    election: date = date(2014, 5, 22),
    retweet_every: int = 3,
    rng_seed: int = 0,
) -> dict[str, Path]:
    """
    Write a planted study as ingestable files.

    Produces ``records.jsonl``, ``registry.csv`` and ``config.json`` (a run
    config pointing at the other two) in ``directory``.

    Returns:
        dict[str, Path]: file role -> path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": directory / "records.jsonl",
        "registry": directory / "registry.csv",
        "config": directory / "config.json",
    }

    records: list[InteractionRecord] = []
    for pair in study.pairs:
        records.extend(pair.to_records(start, end, retweet_every, id_prefix=pair.pair.seed_a))
    records.sort(key=lambda r: (r.timestamp, r.id))
    count = write_records(records, paths["records"])
    write_registry(study.parties.values(), paths["registry"])

    config = {
        "inputs": [paths["records"].name],
        "registry": paths["registry"].name,
        "elections": {c: election.isoformat() for c in sorted(study.country_effects)},
        "window": {
            "start": start.isoformat().replace("+00:00", "Z"),
            "end": end.isoformat().replace("+00:00", "Z"),
        },
        "variants": [v.value for v in Variant],
        "models": "all",
        "min_pair_nodes": 10,
        "min_party_nodes": 3,
        "output_dir": "reports",
        "rng_seed": rng_seed,
    }
    text = json.dumps(config, indent=2, sort_keys=True) + "\n"
    paths["config"].write_text(text, encoding="utf-8")
    logger.info("wrote %d records for %d parties to %s", count, len(study.parties), directory)
    return paths
