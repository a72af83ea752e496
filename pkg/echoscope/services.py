"""
services.py

Pipeline business logic for echoscope: from record files and a party registry
to pair observations, model fits and a written report bundle.

This module has no argparse or printing; the CLI, scripts, notebooks and tests
all call the same functions.

Use cases
---------
1. Full run from a config file:

    >>> from echoscope.config import RunConfig
    >>> bundle = run_pipeline(RunConfig.from_json("data/example/config.json"))
    >>> bundle.pair_count, bundle.paths["pair_metrics"]

2. One variant of one country, in memory:

    >>> records = load_window_records(["records.jsonl"], window)
    >>> results = measure_country(records, "uk", registry.parties_in("uk"), Variant.ALL, window)

3. Unit testing with a handful of records:

    >>> eligible_parties(records, registry)
    {'uk': [Party(id='con', ...), Party(id='lab', ...)]}
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import pandas as pd

from .config import Config, RunConfig
from .covariates import Registry, load_registry, pair_covariates
from .errors import EchoscopeError
from .extensions import derive_seed
from .graph import SeedMentionIndex, build_network, pair_subnetwork, select_kind
from .ingest import filter_country, filter_window, read_records
from .metrics import observe_pair
from .models import (
    CollectionWindow,
    InteractionRecord,
    Layout,
    ModelFit,
    PairNetwork,
    PairObservation,
    PairPartition,
    Party,
    Variant,
)
from .partition import classify_nodes
from .reports import write_bundle
from .stats import model_suite, pair_frame, party_frame
from .viz import MAX_LAYOUT_NODES, fruchterman_reingold

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class PairResult:
    """A measured pair with the network and partition behind its scores."""

    observation: PairObservation
    pair: PairNetwork
    partition: PairPartition
    layout: Layout | None = None

    @property
    def key(self) -> str:
        obs = self.observation
        return f"{obs.country}__{obs.party_a}__{obs.party_b}"


@dataclass(slots=True)
class ReportBundle:
    """Everything one run produced, plus the files it wrote."""

    config: RunConfig
    results: list[PairResult]
    fits: list[ModelFit]
    pair_table: pd.DataFrame
    party_table: pd.DataFrame
    eligible: dict[str, list[str]]
    # variant -> country -> total edge weight of the country network
    network_weights: dict[str, dict[str, int]]
    skipped: list[str] = field(default_factory=list)
    paths: dict[str, Path] = field(default_factory=dict)

    @property
    def observations(self) -> list[PairObservation]:
        return [r.observation for r in self.results]

    @property
    def pair_count(self) -> int:
        """Distinct within-country pairs measured in at least one variant."""
        return len({(o.country, o.party_a, o.party_b) for o in self.observations})


# =========================================================================
# Record selection
# =========================================================================
def load_window_records(
    paths: Iterable[str | Path], window: CollectionWindow
) -> list[InteractionRecord]:
    """Read every record file and keep the records inside the window."""
    records = list(filter_window(read_records(paths), window))
    logger.info("%d records inside the collection window", len(records))
    return records


def variant_records(
    records: Iterable[InteractionRecord], window: CollectionWindow, variant: Variant
) -> list[InteractionRecord]:
    """The record stream a variant's network and pair membership are built from."""
    split = filter_window(records, window, variant.split_mode)
    return select_kind(split, variant.kind_filter)


def eligible_parties(
    records: Iterable[InteractionRecord], registry: Registry
) -> dict[str, list[Party]]:
    """
    Parties mentioned at least once, grouped by country and sorted by id.

    Countries left with fewer than two mentioned parties are dropped with a
    warning, since they cannot form a pair.
    """
    index = SeedMentionIndex.from_records(records, registry.handles())
    eligible: dict[str, list[Party]] = {}
    for country in registry.countries():
        parties = registry.parties_in(country)
        mentioned = [p for p in parties if index.tweet_counts.get(p.handle, 0) > 0]
        for party in parties:
            if party not in mentioned:
                logger.info("%s/%s never mentioned, not eligible", country, party.id)
        if len(mentioned) < 2:
            logger.warning(
                "country %s has %d eligible part%s, no pairs formed",
                country,
                len(mentioned),
                "y" if len(mentioned) == 1 else "ies",
            )
            continue
        eligible[country] = mentioned
    return eligible


# =========================================================================
# Pair measurement
# =========================================================================
def measure_country(
    records: Sequence[InteractionRecord],
    country: str,
    parties: Sequence[Party],
    variant: Variant,
    window: CollectionWindow,
    threads: int = 1,
    count_internal_to_boundary: bool = False,
) -> tuple[list[PairResult], int, list[str]]:
    """
    Measure every within-country pair of ``parties`` for one variant.

    Args:
        records: window records of the country's audience.
        country: country code.
        parties: eligible parties, in pair order.
        variant: network elicitation variant.
        window: collection window carrying the country's election date.
        threads: pairs measured concurrently.
        count_internal_to_boundary: diagnostic B_e toggle.

    Returns:
        tuple: pair results in pair order, the total weight of the country's
        variant network and the keys of skipped degenerate pairs.
    """
    selected = variant_records(records, window, variant)
    network = build_network(selected, weighting=variant.weighting)
    index = SeedMentionIndex.from_records(selected, [p.handle for p in parties])
    logger.info(
        "%s/%s: %d records, %d nodes, %d edges",
        country,
        variant.value,
        len(selected),
        network.number_of_nodes,
        network.number_of_edges,
    )

    def measure(pair_parties: tuple[Party, Party]) -> PairResult | str:
        a, b = pair_parties
        try:
            pair = pair_subnetwork(network, None, a.handle, b.handle, index)
            part = classify_nodes(pair)
            covariates = pair_covariates(a, b, pair.tweet_count_a, pair.tweet_count_b)
            observation = observe_pair(
                country, a.id, b.id, variant, pair, part, covariates, count_internal_to_boundary
            )
        except EchoscopeError as exc:
            logger.warning("%s/%s %s-%s skipped: %s", country, variant.value, a.id, b.id, exc)
            return f"{variant.value}:{country}__{a.id}__{b.id}"
        return PairResult(observation, pair, part)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outcomes = list(pool.map(measure, combinations(parties, 2)))

    results = [o for o in outcomes if isinstance(o, PairResult)]
    skipped = [o for o in outcomes if isinstance(o, str)]
    return results, network.total_weight, skipped


def lay_out_results(
    results: Sequence[PairResult],
    root_seed: int,
    iterations: int = Config.LAYOUT_ITERATIONS,
    threads: int = 1,
) -> None:
    """Attach a layout to each result small enough for the dense solver."""

    def lay_out(item: tuple[int, PairResult]) -> None:
        i, result = item
        n = result.pair.network.number_of_nodes
        if n > MAX_LAYOUT_NODES:
            logger.warning("%s: %d nodes, no figure", result.key, n)
            return
        result.layout = fruchterman_reingold(
            result.pair, iterations=iterations, rng_seed=derive_seed(root_seed, i)
        )

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        list(pool.map(lay_out, enumerate(results)))


# =========================================================================
# Full run
# =========================================================================
def run_pipeline(config: RunConfig, write: bool = True) -> ReportBundle:
    """
    Run ingest -> networks -> pairs -> partitions -> scores -> models -> reports.

    Args:
        config: run configuration; validated before any computation.
        write: write the report bundle into ``config.output_dir``.

    Returns:
        ReportBundle: results, fits and (when written) the output paths.

    Raises:
        ConfigurationError: invalid configuration, raised before any work.
        RegistryError, RecordParseError, SchemaError: bad input files.
    """
    registry = load_registry(config.registry)
    config.validate({c: len(registry.parties_in(c)) for c in registry.countries()})
    models = config.model_names()

    records = load_window_records(config.inputs, config.window)
    eligible = eligible_parties(records, registry)
    logger.info(
        "%d countries with pairs, %d pairs per variant",
        len(eligible),
        sum(len(p) * (len(p) - 1) // 2 for p in eligible.values()),
    )

    audiences = {
        country: filter_country(records, [p.handle for p in parties])
        for country, parties in eligible.items()
    }
    results: list[PairResult] = []
    skipped: list[str] = []
    weights: dict[str, dict[str, int]] = {}
    for variant in config.variants:
        weights[variant.value] = {}
        for country, parties in eligible.items():
            country_results, total, country_skipped = measure_country(
                audiences[country],
                country,
                parties,
                variant,
                config.window_for(country),
                threads=config.threads,
                count_internal_to_boundary=config.count_internal_to_boundary,
            )
            results.extend(country_results)
            skipped.extend(country_skipped)
            weights[variant.value][country] = total

    observations = [r.observation for r in results]
    pairs = pair_frame(observations)
    parties_by_key = {(p.country, p.id): p for p in registry}
    party_table = party_frame(observations, parties_by_key)
    fits = model_suite(
        pairs,
        party_table,
        models=models,
        min_pair_nodes=config.min_pair_nodes,
        min_party_nodes=config.min_party_nodes,
        cube_response=config.cube_response,
        threads=config.threads,
    )

    if config.figures:
        lay_out_results(
            [r for r in results if r.observation.variant is Variant.ALL],
            config.rng_seed,
            threads=config.threads,
        )

    bundle = ReportBundle(
        config=config,
        results=results,
        fits=fits,
        pair_table=pairs,
        party_table=party_table,
        eligible={c: [p.id for p in ps] for c, ps in eligible.items()},
        network_weights=weights,
        skipped=skipped,
    )
    if write:
        bundle.paths = write_bundle(bundle, config.output_dir)
    return bundle
