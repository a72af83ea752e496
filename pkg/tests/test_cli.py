"""
test_cli.py

Tests for the echoscope command line: subcommand outputs and exit codes.
"""

from __future__ import annotations

import json
from pathlib import Path

import pandas as pd
import pytest

from conftest import EXAMPLE_DIR, PETITION_EDGES_CSV
from echoscope import __version__
from echoscope.cli import main

EXAMPLE_CONFIG = str(EXAMPLE_DIR / "config.json")


def test_version(capsys) -> None:
    with pytest.raises(SystemExit) as info:
        main(["--version"])

    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_build_petition_thread(tmp_path: Path, petition_file: Path, capsys) -> None:
    out = tmp_path / "edges.csv"

    assert main(["build", "--input", str(petition_file), "--output", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == PETITION_EDGES_CSV
    assert "9 edges" in capsys.readouterr().out


def test_ingest_window(tmp_path: Path) -> None:
    out = tmp_path / "records.jsonl"
    code = main(
        [
            "ingest",
            "--input",
            str(EXAMPLE_DIR / "records.jsonl"),
            "--window",
            "2014-05-11T00:00:00Z",
            "2014-06-10T23:59:59Z",
            "--split",
            "pre",
            "--election",
            "2014-05-22",
            "--output",
            str(out),
        ]
    )

    assert code == 0
    assert [json.loads(line)["id"] for line in out.read_text().splitlines()] == ["r01", "r02"]


def test_split_without_window_is_bad_input(tmp_path: Path, petition_file: Path, capsys) -> None:
    output = str(tmp_path / "o")
    code = main(["ingest", "--input", str(petition_file), "--split", "post", "--output", output])

    assert code == 1
    assert "--split" in capsys.readouterr().err


def test_classify_joint_mentioner_is_boundary(tmp_path: Path, capsys) -> None:
    records = [str(EXAMPLE_DIR / "petition.jsonl"), str(EXAMPLE_DIR / "records.jsonl")]
    partition = tmp_path / "part.csv"

    assert main(["classify", "--input", *records, "--pair", "blueparty,redparty",
                 "--output", str(partition)]) == 0
    assert "F = " in capsys.readouterr().out

    frame = pd.read_csv(partition)
    assert set(frame["assignment"]) <= {"internal_a", "internal_b", "boundary"}
    assert frame.set_index("node").loc["lucy", "assignment"] == "boundary"


def test_layout_of_pair_edges(tmp_path: Path) -> None:
    spec = tmp_path / "spec.json"
    spec.write_text(
        json.dumps({"n_a": 2, "n_b": 2, "w_internal_a": 4, "w_internal_b": 3,
                    "n_boundary": 1, "w_boundary": 3}),
        encoding="utf-8",
    )
    edges = tmp_path / "planted.csv"
    figure = tmp_path / "planted.dot"

    assert main(["synth", "pair", "--spec", str(spec), "--output", str(edges)]) == 0
    assert main(["layout", "--edges", str(edges), "--iterations", "10",
                 "--output", str(figure)]) == 0
    assert "digraph" in figure.read_text(encoding="utf-8")


def test_synth_pair_records(tmp_path: Path, capsys) -> None:
    out = tmp_path / "planted.jsonl"
    edges = tmp_path / "rebuilt.csv"

    assert main(["synth", "pair", "--output", str(out)]) == 0
    assert "F = -0.4" in capsys.readouterr().out
    assert main(["build", "--input", str(out), "--output", str(edges)]) == 0
    assert "7 nodes" in capsys.readouterr().out


def test_bad_spec_key_is_bad_input(tmp_path: Path, capsys) -> None:
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_a": 1, "colour": "red"}), encoding="utf-8")

    assert main(["synth", "pair", "--spec", str(spec), "--output", str(tmp_path / "x.csv")]) == 1
    assert "colour" in capsys.readouterr().err


def test_run_and_fit(tmp_path: Path, capsys) -> None:
    corpus = tmp_path / "corpus"
    reports = tmp_path / "reports"
    assert main(["synth", "study", "--countries", "4", "--pairs-per-country", "3",
                 "--seed", "3", "--output", str(corpus)]) == 0
    code = main(["run", "--config", str(corpus / "config.json"), "--variant", "all",
                 "--models", "2.1", "--output-dir", str(reports)])

    assert code == 0
    out = capsys.readouterr().out
    assert "1 model(s) fitted" in out
    assert (reports / "models.txt").is_file()

    fits = tmp_path / "fits.json"
    assert main(["fit", "--observations", str(reports / "observations.csv"),
                 "--model", "1.1", "2.1", "--min-pair-nodes", "0", "--output", str(fits)]) == 0
    assert [f["name"] for f in json.loads(fits.read_text())] == ["1.1", "2.1"]


def test_metrics_command(tmp_path: Path) -> None:
    out = tmp_path / "metrics.csv"

    assert main(["metrics", "--config", EXAMPLE_CONFIG, "--variant", "all",
                 "--output", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 3
    assert set(frame["variant"]) == {"all"}


def test_pairs_and_covariates(tmp_path: Path) -> None:
    registry = str(EXAMPLE_DIR / "registry.csv")
    records = str(EXAMPLE_DIR / "records.jsonl")
    pairs = tmp_path / "pairs.csv"
    covariates = tmp_path / "covariates.csv"

    assert main(["pairs", "--input", records, "--registry", registry,
                 "--output", str(pairs)]) == 0
    assert main(["covariates", "--registry", registry, "--input", records,
                 "--output", str(covariates)]) == 0
    assert len(pd.read_csv(pairs)) == 3
    assert list(pd.read_csv(covariates)["party_a"]) == ["blue", "blue", "green"]


def test_missing_election_date_names_the_country(tmp_path: Path, capsys) -> None:
    config = json.loads((EXAMPLE_DIR / "config.json").read_text(encoding="utf-8"))
    config["elections"] = {}
    config["inputs"] = [str(EXAMPLE_DIR / p) for p in config["inputs"]]
    config["registry"] = str(EXAMPLE_DIR / config["registry"])
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")

    code = main(["run", "--config", str(path), "--variant", "pre",
                 "--output-dir", str(tmp_path / "out")])

    assert code == 1
    assert "'uk'" in capsys.readouterr().err


def test_missing_input_file_is_bad_input(tmp_path: Path) -> None:
    code = main(["build", "--input", str(tmp_path / "absent.jsonl"),
                 "--output", str(tmp_path / "e.csv")])

    assert code == 1
