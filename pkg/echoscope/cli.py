"""
cli.py

Command-line entry point for echoscope.

Each subcommand parses its flags, calls the library or ``services`` and prints
a short summary. Errors map to exit codes: 0 success, 1 invalid input or
configuration, 2 any other failure.

Usage:
------
    echoscope run --config data/example/config.json --threads 4
    echoscope build --input records.jsonl --filter mentions --output edges.csv
    echoscope classify --input records.jsonl --pair blueparty,redparty --output part.csv
    echoscope fit --observations reports/observations.csv --model 2.2
    echoscope synth study --countries 25 --pairs-per-country 6 --output corpus/

See docs/CLI_usage.md for every command.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from datetime import date
from pathlib import Path

import pandas as pd

from . import __version__
from .config import Config, RunConfig
from .covariates import load_registry, pair_covariates
from .errors import ConfigurationError, EchoscopeError, ValidationError
from .extensions import configure_logging
from .graph import (
    SeedMentionIndex,
    build_network,
    pair_subnetwork,
    read_edge_list,
    read_graphml,
    select_kind,
    write_edge_list,
    write_graphml,
)
from .ingest import filter_window, parse_timestamp, read_records, write_records
from .metrics import score_pair
from .models import (
    CollectionWindow,
    InteractionNetwork,
    InteractionRecord,
    KindFilter,
    PlantedPairSpec,
    Split,
    Variant,
    Weighting,
)
from .partition import classify_nodes, read_partition, write_partition
from .reports import format_model_table, pair_metrics_frame, write_csv, write_json
from .services import eligible_parties, run_pipeline
from .stats import MODEL_SPECS, model_suite
from .synth import generate_pair, generate_study, write_study_corpus
from .viz import fruchterman_reingold, render

logger = logging.getLogger(__name__)


# =========================================================================
# Shared helpers
# =========================================================================
def _window(args: argparse.Namespace) -> CollectionWindow | None:
    if not getattr(args, "window", None):
        return None
    start, end = (parse_timestamp(v) for v in args.window)
    election = None
    if getattr(args, "election", None):
        try:
            election = date.fromisoformat(args.election)
        except ValueError:
            raise ConfigurationError(f"--election is not a date: {args.election!r}") from None
    return CollectionWindow(start, end, election)


def _records(args: argparse.Namespace) -> list[InteractionRecord]:
    records = read_records(args.input)
    window = _window(args)
    if window is not None:
        return list(filter_window(records, window, getattr(args, "split", Split.ALL)))
    if getattr(args, "split", "all") != "all":
        raise ConfigurationError("--split needs --window and --election")
    return list(records)


def _read_network(path: Path) -> InteractionNetwork:
    if path.suffix.lower() == ".graphml":
        return read_graphml(path)
    return read_edge_list(path)


def _pair_handles(value: str) -> tuple[str, str]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError("expected two handles as A,B")
    return parts[0], parts[1]


def _beta(values: Sequence[str]) -> dict[str, float]:
    beta = {}
    for item in values:
        name, _, value = item.partition("=")
        try:
            beta[name.strip()] = float(value)
        except ValueError:
            raise ConfigurationError(f"--beta expects name=value, got {item!r}") from None
    return beta


# =========================================================================
# Commands
# =========================================================================
def cmd_ingest(args: argparse.Namespace) -> int:
    records = _records(args)
    count = write_records(records, args.output)
    print(f"✅ {count} records written to {args.output}")
    return 0


def cmd_build(args: argparse.Namespace) -> int:
    network = build_network(
        _records(args), KindFilter.from_cli(args.filter), Weighting(args.weighting)
    )
    output = Path(args.output)
    if output.suffix.lower() == ".graphml":
        write_graphml(network, output)
    else:
        write_edge_list(network, output)
    print(
        f"✅ {network.number_of_nodes} nodes, {network.number_of_edges} edges, "
        f"total weight {network.total_weight} -> {output}"
    )
    return 0


def cmd_pairs(args: argparse.Namespace) -> int:
    registry = load_registry(args.registry)
    records = _records(args)
    network = build_network(records)
    index = SeedMentionIndex.from_records(records, registry.handles())
    rows = []
    for country, parties in eligible_parties(records, registry).items():
        if args.country and country != args.country:
            continue
        for i, a in enumerate(parties):
            for b in parties[i + 1 :]:
                pair = pair_subnetwork(network, None, a.handle, b.handle, index)
                rows.append(
                    {
                        "country": country,
                        "party_a": a.id,
                        "party_b": b.id,
                        "seed_a": a.handle,
                        "seed_b": b.handle,
                        "nodes": pair.network.number_of_nodes,
                        "edges": pair.network.number_of_edges,
                        "tweets_a": pair.tweet_count_a,
                        "tweets_b": pair.tweet_count_b,
                    }
                )
    frame = pd.DataFrame(rows)
    if args.output:
        write_csv(frame, args.output)
        print(f"✅ {len(frame)} pairs -> {args.output}")
    else:
        print(frame.to_string(index=False) if len(frame) else "No eligible pairs.")
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    records = select_kind(_records(args), KindFilter.from_cli(args.filter))
    seed_a, seed_b = args.pair
    network = build_network(records, weighting=Weighting(args.weighting))
    pair = pair_subnetwork(network, records, seed_a, seed_b)
    part = classify_nodes(pair)
    write_partition(part, args.output)
    scores = score_pair(pair, part)
    print(
        f"✅ {pair.seed_a}/{pair.seed_b}: {len(part.internal_a)} internal-a, "
        f"{len(part.internal_b)} internal-b, {len(part.boundary)} boundary "
        f"({part.iterations} sweeps) -> {args.output}"
    )
    print(f"   F = {scores.f.value if scores.f.defined else 'undefined'}")
    return 0


def _run_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_json(args.config)
    return config.with_overrides(
        variants=getattr(args, "variant", None),
        models=getattr(args, "models", None),
        output_dir=getattr(args, "output_dir", None),
        rng_seed=getattr(args, "seed", None),
        threads=getattr(args, "threads", None),
        figures=True if getattr(args, "figures", False) else None,
        cube_response=True if getattr(args, "cube_response", False) else None,
    )


def cmd_metrics(args: argparse.Namespace) -> int:
    config = _run_config(args).with_overrides(models="none")
    bundle = run_pipeline(config, write=False)
    output = Path(args.output or config.output_dir / "pair_metrics.csv")
    write_csv(pair_metrics_frame(bundle), output)
    print(f"✅ {len(bundle.results)} pair scores ({bundle.pair_count} pairs) -> {output}")
    if bundle.skipped:
        print(f"⚠️  {len(bundle.skipped)} degenerate pair(s) skipped")
    return 0


def cmd_covariates(args: argparse.Namespace) -> int:
    registry = load_registry(args.registry)
    counts: dict[str, int] = {}
    if args.input:
        index = SeedMentionIndex.from_records(read_records(args.input), registry.handles())
        counts = index.tweet_counts
    rows = []
    for country in registry.countries():
        parties = registry.parties_in(country)
        for i, a in enumerate(parties):
            for b in parties[i + 1 :]:
                cov = pair_covariates(a, b, counts.get(a.handle, 0), counts.get(b.handle, 0))
                rows.append({"country": country, "party_a": a.id, "party_b": b.id, **cov.to_dict()})
    frame = pd.DataFrame(rows)
    write_csv(frame, args.output)
    print(f"✅ covariates for {len(frame)} pairs -> {args.output}")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    pairs = pd.read_csv(args.observations)
    parties = pd.read_csv(args.parties) if args.parties else None
    models = args.model or args.suite
    if models == "all":
        computed = set(pairs["variant"])
        models = [
            name
            for name, spec in MODEL_SPECS.items()
            if spec.variant.value in computed and (spec.level == "pair" or parties is not None)
        ]
    fits = model_suite(
        pairs,
        parties,
        models=models,
        min_pair_nodes=args.min_pair_nodes,
        min_party_nodes=args.min_party_nodes,
        cube_response=args.cube_response,
        threads=args.threads,
    )
    if args.output:
        write_json([f.to_dict() for f in fits], args.output)
    print(format_model_table(fits), end="")
    if args.output:
        print(f"✅ {len(fits)} model(s) -> {args.output}")
    return 0


def cmd_synth_pair(args: argparse.Namespace) -> int:
    if args.spec:
        spec = PlantedPairSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
    else:
        spec = PlantedPairSpec(
            n_a=args.n_a,
            n_b=args.n_b,
            w_internal_a=args.w_a,
            w_internal_b=args.w_b,
            n_boundary=args.n_boundary,
            w_boundary=args.w_boundary,
            rng_seed=args.seed,
            noise=args.noise,
        )
    planted = generate_pair(spec)
    output = Path(args.output)
    if output.suffix.lower() == ".jsonl":
        window = _window(args) or CollectionWindow(
            parse_timestamp("2014-05-11T00:00:00Z"), parse_timestamp("2014-06-10T23:59:59Z")
        )
        write_records(planted.to_records(window.start, window.end), output)
    else:
        write_edge_list(planted.pair.network, output)
    print(
        f"✅ planted pair F = {planted.f.value} "
        f"(b_e={planted.b_e}, i_e={planted.i_e}) -> {output}"
    )
    return 0


def cmd_synth_study(args: argparse.Namespace) -> int:
    study = generate_study(
        countries=args.countries,
        pairs_per_country=args.pairs_per_country,
        beta=_beta(args.beta),
        sigma_u=args.sigma_u,
        sigma_e=args.sigma_e,
        rng_seed=args.seed,
    )
    paths = write_study_corpus(study, args.output, rng_seed=args.seed)
    print(f"✅ {len(study.observations)} planted pairs in {args.countries} countries")
    for role, path in paths.items():
        print(f"   {role}: {path}")
    if study.resamples:
        print(f"⚠️  {study.resamples} infeasible draw(s) resampled")
    return 0


def cmd_layout(args: argparse.Namespace) -> int:
    network = _read_network(Path(args.edges))
    partition = read_partition(args.partition) if args.partition else None
    layout = fruchterman_reingold(network, iterations=args.iterations, rng_seed=args.seed)
    path = render(network, layout, args.output, partition=partition, fmt=args.format)
    print(f"✅ {network.number_of_nodes} nodes laid out in {args.iterations} iterations -> {path}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _run_config(args)
    bundle = run_pipeline(config)
    print(f"✅ {bundle.pair_count} pairs, {len(bundle.results)} pair scores")
    print(f"📊 {len(bundle.fits)} model(s) fitted")
    if bundle.skipped:
        print(f"⚠️  {len(bundle.skipped)} degenerate pair(s) skipped")
    print(f"📁 reports in {config.output_dir}")
    return 0


# =========================================================================
# Parser
# =========================================================================
def _add_records_flags(parser: argparse.ArgumentParser, split: bool = True) -> None:
    parser.add_argument("--input", nargs="+", required=True, type=Path, help="record JSONL file(s)")
    parser.add_argument("--window", nargs=2, metavar=("START", "END"), help="ISO-8601 instants")
    if split:
        parser.add_argument("--split", choices=[s.value for s in Split], default="all")
        parser.add_argument("--election", help="election date (YYYY-MM-DD) for pre/post")


def _add_network_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--filter", choices=["all", "mentions", "retweets"], default="all")
    parser.add_argument("--weighting", choices=[w.value for w in Weighting], default="weighted")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, type=Path, help="run config JSON")
    parser.add_argument(
        "--variant", nargs="+", choices=[v.value for v in Variant], help="variants to compute"
    )
    parser.add_argument("--threads", type=int, help="pairs and models processed concurrently")
    parser.add_argument("--seed", type=int, help="root random seed")
    parser.add_argument("--output-dir", type=Path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echoscope", description="Fragmentation of party mention networks."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize and window-filter record files")
    _add_records_flags(p)
    p.add_argument("--output", required=True, type=Path)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="build the interaction network")
    _add_records_flags(p)
    _add_network_flags(p)
    p.add_argument("--output", required=True, type=Path, help=".csv edge list or .graphml")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("pairs", help="list eligible party pairs and their subnetwork sizes")
    _add_records_flags(p, split=False)
    p.add_argument("--registry", required=True, type=Path)
    p.add_argument("--country")
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("classify", help="partition one pair network")
    _add_records_flags(p)
    _add_network_flags(p)
    p.add_argument("--pair", required=True, type=_pair_handles, help="seed handles A,B")
    p.add_argument("--output", required=True, type=Path)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("metrics", help="score every pair for the configured variants")
    _add_run_flags(p)
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("covariates", help="pair covariates from the registry")
    p.add_argument("--registry", required=True, type=Path)
    p.add_argument("--input", nargs="*", type=Path, help="records for tweet counts")
    p.add_argument("--output", required=True, type=Path)
    p.set_defaults(func=cmd_covariates)

    p = sub.add_parser("fit", help="fit random-intercept models")
    p.add_argument("--observations", required=True, type=Path, help="observations.csv")
    p.add_argument("--parties", type=Path, help="party_metrics.csv for the party models")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--model", nargs="+", choices=list(MODEL_SPECS))
    group.add_argument("--suite", default="all", choices=["all", "none"])
    p.add_argument("--min-pair-nodes", type=int, default=1000)
    p.add_argument("--min-party-nodes", type=int, default=100)
    p.add_argument("--cube-response", action="store_true")
    p.add_argument("--threads", type=int, default=Config.THREADS)
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="planted networks and studies")
    synth = p.add_subparsers(dest="synth_command", required=True)
    sp = synth.add_parser("pair", help="one planted pair")
    sp.add_argument("--spec", type=Path, help="JSON planted-pair spec")
    sp.add_argument("--n-a", type=int, default=2)
    sp.add_argument("--n-b", type=int, default=2)
    sp.add_argument("--w-a", type=int, default=4)
    sp.add_argument("--w-b", type=int, default=3)
    sp.add_argument("--n-boundary", type=int, default=1)
    sp.add_argument("--w-boundary", type=int, default=3)
    sp.add_argument("--noise", choices=["deterministic", "poisson"], default="deterministic")
    sp.add_argument("--seed", type=int, default=Config.SEED)
    sp.add_argument("--window", nargs=2, metavar=("START", "END"))
    sp.add_argument("--output", required=True, type=Path, help=".csv edge list or .jsonl records")
    sp.set_defaults(func=cmd_synth_pair)
    sp = synth.add_parser("study", help="planted study corpus for `run`")
    sp.add_argument("--countries", type=int, default=25)
    sp.add_argument("--pairs-per-country", type=int, default=6)
    sp.add_argument("--beta", nargs="*", default=["extremism_sum=-0.22"], help="name=value")
    sp.add_argument("--sigma-u", type=float, default=0.5)
    sp.add_argument("--sigma-e", type=float, default=0.45)
    sp.add_argument("--seed", type=int, default=Config.SEED)
    sp.add_argument("--output", required=True, type=Path)
    sp.set_defaults(func=cmd_synth_study)

    p = sub.add_parser("layout", help="force-directed figure of a network")
    p.add_argument("--edges", required=True, type=Path, help=".csv edge list or .graphml")
    p.add_argument("--partition", type=Path, help="node,assignment CSV for colours")
    p.add_argument("--iterations", type=int, default=Config.LAYOUT_ITERATIONS)
    p.add_argument("--seed", type=int, default=Config.SEED)
    p.add_argument("--format", choices=["svg", "png", "dot", "graphml"])
    p.add_argument("--output", required=True, type=Path)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("run", help="full pipeline from a run config")
    _add_run_flags(p)
    p.add_argument("--models", help="all, none or comma-separated model ids")
    p.add_argument("--figures", action="store_true")
    p.add_argument("--cube-response", action="store_true")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return 1
    except (EchoscopeError, OSError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("unexpected failure")
        return 2


if __name__ == "__main__":
    sys.exit(main())
