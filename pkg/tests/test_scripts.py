"""
test_scripts.py

Smoke test for scripts/make_synthetic_corpus.py
"""

from __future__ import annotations

import importlib.util
from pathlib import Path

from echoscope.config import RunConfig
from echoscope.services import run_pipeline

SCRIPT = Path(__file__).resolve().parent.parent / "scripts" / "make_synthetic_corpus.py"


def _load_script():
    spec = importlib.util.spec_from_file_location("make_synthetic_corpus", SCRIPT)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_corpus_runs_end_to_end(tmp_path: Path, capsys) -> None:
    script = _load_script()
    paths = script.make_corpus(tmp_path / "corpus", countries=2, pairs_per_country=2, rng_seed=5)

    assert set(paths) == {"records", "registry", "config"}
    assert "4 planted pairs in 2 countries" in capsys.readouterr().out

    config = RunConfig.from_json(paths["config"]).with_overrides(
        output_dir=tmp_path / "reports", models="none"
    )
    bundle = run_pipeline(config)
    assert bundle.pair_count > 0
