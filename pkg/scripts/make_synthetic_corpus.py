#!/usr/bin/env python3
"""
Write a planted study corpus and a full-size benchmark pair to disk.

The corpus (records.jsonl, registry.csv, config.json) runs end to end with
``echoscope run``; the benchmark pair is an edge list at the size of the
largest pair network seen in practice, for timing ``classify`` and ``layout``.

Usage:
  uv run python scripts/make_synthetic_corpus.py data/synthetic
  uv run python scripts/make_synthetic_corpus.py data/synthetic 25 6 --large
"""

import sys
import time
from pathlib import Path

# Ensure project root is importable BEFORE importing package modules
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from echoscope.config import Config
from echoscope.extensions import configure_logging
from echoscope.graph import write_edge_list
from echoscope.synth import generate_large_pair, generate_study, write_study_corpus

BETA = {"extremism_sum": -0.22}


def make_corpus(
    directory: str | Path,
    countries: int = 25,
    pairs_per_country: int = 6,
    large: bool = False,
    rng_seed: int = Config.SEED,
) -> dict[str, Path]:
    """
    Write the corpus files (and optionally ``large_pair.csv``) into
    ``directory`` and return file role -> path.
    """
    study = generate_study(countries, pairs_per_country, BETA, 0.5, 0.45, rng_seed=rng_seed)
    paths = write_study_corpus(study, directory, rng_seed=rng_seed)
    print(f"✓ {len(study.observations)} planted pairs in {countries} countries")
    if study.resamples:
        print(f"⚠️  {study.resamples} infeasible draw(s) resampled")

    if large:
        started = time.perf_counter()
        pair = generate_large_pair(rng_seed=rng_seed)
        paths["large_pair"] = Path(directory) / "large_pair.csv"
        write_edge_list(pair.network, paths["large_pair"])
        print(
            f"✓ benchmark pair: {pair.network.number_of_nodes} nodes, "
            f"{pair.network.number_of_edges} edges ({time.perf_counter() - started:.1f}s)"
        )

    for role, path in paths.items():
        print(f"  • {role}: {path}")
    return paths


if __name__ == "__main__":
    flags = {a for a in sys.argv[1:] if a.startswith("--")}
    positional = [a for a in sys.argv[1:] if not a.startswith("--")]
    if not 1 <= len(positional) <= 3 or flags - {"--large"}:
        print("Usage: uv run python scripts/make_synthetic_corpus.py <dir> [countries] [pairs]")
        print("Example: uv run python scripts/make_synthetic_corpus.py data/synthetic 25 6 --large")
        sys.exit(1)

    configure_logging(Config.LOG_LEVEL)
    try:
        sizes = [int(v) for v in positional[1:]]
    except ValueError:
        print(f"❌ Error: country and pair counts must be integers, got {positional[1:]}")
        sys.exit(1)
    make_corpus(positional[0], *sizes, large="--large" in flags)
