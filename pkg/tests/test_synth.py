"""
test_synth.py

Tests for planted pairs and planted studies in synth.py. The replication tests
are marked ``slow``; skip them with ``pytest -m "not slow"``.
"""

from __future__ import annotations

import time
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np
import pytest

from echoscope.errors import SpecError
from echoscope.extensions import make_rng
from echoscope.graph import build_network, pair_subnetwork
from echoscope.metrics import fragmentation_f, party_fragmentation_fp
from echoscope.models import PlantedPairSpec
from echoscope.partition import check_partition, classify_nodes
from echoscope.stats import MODEL_SPECS, fit_model
from echoscope.synth import (
    draw_parties,
    generate_large_pair,
    generate_pair,
    generate_study,
)

START = datetime(2014, 5, 11, tzinfo=timezone.utc)
END = datetime(2014, 6, 10, 23, 59, 59, tzinfo=timezone.utc)


# =========================================================================
# Planted pairs
# =========================================================================
def test_deterministic_spec_measures_exact_f() -> None:
    planted = generate_pair(PlantedPairSpec(2, 2, 4, 3, 1, 3))
    part = classify_nodes(planted.pair)
    f = fragmentation_f(planted.pair, part)

    assert (part.internal_a, part.internal_b, part.boundary) == (
        planted.partition.internal_a,
        planted.partition.internal_b,
        planted.partition.boundary,
    )
    assert (f.b_e, f.i_e) == (3, 7)
    assert f.value == -0.4


@pytest.mark.parametrize(
    "spec, expected",
    [
        (PlantedPairSpec(2, 3, 5, 4, 0, 0), -1.0),
        (PlantedPairSpec(0, 0, 0, 0, 1, 3), 1.0),
        (PlantedPairSpec(1, 1, 1, 1, 1, 2), 0.0),
    ],
)
def test_formula_limits_on_planted_pairs(spec: PlantedPairSpec, expected: float) -> None:
    planted = generate_pair(spec)

    assert fragmentation_f(planted.pair, classify_nodes(planted.pair)).value == expected


def test_party_scores_follow_planted_sides() -> None:
    planted = generate_pair(PlantedPairSpec(3, 2, 6, 2, 2, 5))
    part = classify_nodes(planted.pair)

    fp_a = party_fragmentation_fp(planted.pair, part, "a")
    fp_b = party_fragmentation_fp(planted.pair, part, "b")

    assert fp_a.as_fraction() == Fraction(5 - 6, 5 + 6)
    assert fp_b.as_fraction() == Fraction(5 - 2, 5 + 2)


def test_classification_recovers_random_planted_partitions() -> None:
    rng = np.random.default_rng(1000)
    checked = 0
    while checked < 1000:
        n_a, n_b, n_x = (int(v) for v in rng.integers(0, 6, size=3))
        w_a = n_a + (int(rng.integers(0, 7)) if n_a else 0)
        w_b = n_b + (int(rng.integers(0, 7)) if n_b else 0)
        w_x = 2 * n_x + (int(rng.integers(0, 7)) if n_x else 0)
        if w_a + w_b + w_x == 0:
            continue
        planted = generate_pair(PlantedPairSpec(n_a, n_b, w_a, w_b, n_x, w_x))
        part = classify_nodes(planted.pair)
        f = fragmentation_f(planted.pair, part)

        assert part.boundary == planted.partition.boundary
        assert part.promoted == frozenset()
        assert (f.b_e, f.i_e) == (planted.b_e, planted.i_e) == (w_x, w_a + w_b)
        checked += 1


def test_poisson_mode_centres_on_target() -> None:
    # the -0.4 sums scaled by ten: one draw has sd near 0.09
    values = [
        generate_pair(PlantedPairSpec(2, 2, 40, 30, 1, 30, rng_seed=seed, noise="poisson")).f.value
        for seed in range(200)
    ]

    assert np.mean(values) == pytest.approx(-0.4, abs=0.02)
    assert len(set(values)) > 1


def test_same_seed_same_network() -> None:
    spec = PlantedPairSpec(3, 3, 9, 7, 2, 8, rng_seed=42, noise="poisson")

    assert generate_pair(spec).pair.network.edges.equals(generate_pair(spec).pair.network.edges)


@pytest.mark.parametrize(
    "spec",
    [
        PlantedPairSpec(0, 0, 0, 0, 0, 3),
        PlantedPairSpec(2, 2, 1, 2, 0, 0),
        PlantedPairSpec(0, 0, 0, 0, 0, 0),
        PlantedPairSpec(1, 1, 1, 1, 1, 1),
        PlantedPairSpec(1, 1, 1, 1, 0, 0, noise="gaussian"),
        PlantedPairSpec(-1, 1, 0, 1, 0, 0),
    ],
)
def test_infeasible_specs(spec: PlantedPairSpec) -> None:
    with pytest.raises(SpecError):
        generate_pair(spec)


def test_spec_from_dict_rejects_unknown_keys() -> None:
    data = {"n_a": 1, "n_b": 1, "w_internal_a": 1, "w_internal_b": 1, "n_boundary": 0}

    assert PlantedPairSpec.from_dict({**data, "w_boundary": 0}).n_a == 1
    with pytest.raises(SpecError, match="w_boundry"):
        PlantedPairSpec.from_dict({**data, "w_boundry": 0})


def test_records_rebuild_the_planted_pair() -> None:
    planted = generate_pair(PlantedPairSpec(3, 2, 7, 4, 2, 6))
    records = planted.to_records(START, END, retweet_every=3)
    network = build_network(records)
    pair = pair_subnetwork(network, records, "sa", "sb")
    columns = ["source", "target", "weight"]

    assert all(START <= r.timestamp <= END for r in records)
    assert any(r.is_retweet for r in records)
    assert pair.nodes == planted.pair.nodes
    assert pair.network.edges[columns].equals(planted.pair.network.edges[columns])
    assert pair.direct_mention_counts["x1"] == (1, 1)


def test_large_pair_has_requested_size() -> None:
    pair = generate_large_pair(n_nodes=5000, n_edges=30000, rng_seed=3)
    part = classify_nodes(pair)

    assert pair.network.number_of_nodes == 5000
    assert pair.network.number_of_edges == 30000
    assert not pair.network.edges.duplicated(["source", "target"]).any()
    check_partition(pair, part)
    assert fragmentation_f(pair, part).defined


@pytest.mark.slow
def test_large_pair_scores_quickly() -> None:
    pair = generate_large_pair(rng_seed=1)
    started = time.perf_counter()
    part = classify_nodes(pair)
    fragmentation_f(pair, part)
    party_fragmentation_fp(pair, part, "a")

    assert time.perf_counter() - started < 10.0


# =========================================================================
# Planted studies
# =========================================================================
def test_covariate_draws_are_calibrated() -> None:
    rng = make_rng(7)
    sums, distances, mismatches = [], [], []
    for i in range(10_000):
        a, b = draw_parties(rng, "c01", i)
        sums.append(abs(a.ideology - 5) + abs(b.ideology - 5))
        distances.append(abs(a.ideology - b.ideology))
        mismatches.append((a.ideology - 5) * (b.ideology - 5) < 0)

    assert np.mean(sums) == pytest.approx(4.17, abs=0.1)
    assert np.std(sums, ddof=1) == pytest.approx(1.42, abs=0.1)
    assert np.mean(mismatches) == pytest.approx(0.44, abs=0.02)
    # the side geometry puts the distance mean near 2.87
    assert np.mean(distances) == pytest.approx(2.95, abs=0.15)


def test_study_measures_composed_f() -> None:
    study = generate_study(4, 3, {"extremism_sum": -0.22}, 0.5, 0.45, rng_seed=5)

    assert len(study.observations) == 12
    assert len(study.parties) == 24
    assert sorted(study.country_effects) == ["c01", "c02", "c03", "c04"]
    for obs, composed in zip(study.observations, study.composed_f):
        assert obs.f.value == pytest.approx(composed, abs=0.01)
        assert obs.covariates is not None


def test_study_is_reproducible() -> None:
    one = generate_study(3, 3, {"left_right_mismatch": 0.3}, 0.2, 0.3, rng_seed=11)
    two = generate_study(3, 3, {"left_right_mismatch": 0.3}, 0.2, 0.3, rng_seed=11)

    assert [o.f for o in one.observations] == [o.f for o in two.observations]


def test_study_rejects_bad_arguments() -> None:
    with pytest.raises(SpecError):
        generate_study(0, 3, {}, 0.1, 0.1)
    with pytest.raises(SpecError, match="turnout"):
        generate_study(2, 3, {"turnout": 1.0}, 0.1, 0.1)


@pytest.mark.slow
def test_planted_extremism_effect_is_recovered() -> None:
    spec = MODEL_SPECS["2.1"]
    detected = covered = 0
    for seed in range(100):
        study = generate_study(23, 7, {"extremism_sum": -0.22}, 0.5, 0.45, rng_seed=seed)
        frame = study.pair_frame()
        fit = fit_model(spec, frame)
        # planted coefficient on the standardized-response scale
        truth = -0.22 * 0.3 / float(frame["f"].std(ddof=1))
        estimate, se = fit.beta["extremism_sum"], fit.se["extremism_sum"]

        detected += estimate < 0 and fit.p["extremism_sum"] < 0.05
        covered += abs(estimate - truth) <= 2 * se

    assert detected >= 90
    assert covered >= 90


@pytest.mark.slow
def test_null_study_rarely_finds_an_effect() -> None:
    false_positives = 0
    runs = 100
    for seed in range(runs):
        study = generate_study(12, 6, {}, 0.0, 0.45, rng_seed=10_000 + seed)
        fit = fit_model(MODEL_SPECS["2.1"], study.pair_frame())
        false_positives += fit.p["extremism_sum"] < 0.05

    assert false_positives / runs <= 0.10
