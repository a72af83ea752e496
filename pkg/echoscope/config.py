"""
config.py
Set echoscope defaults and load run configurations.

Process-wide defaults come from environment variables, optionally recorded in
a ``.env`` file at the project root. A run is described by one JSON file; CLI
flags override its fields.

Run config (paths relative to the file's directory):

    {
      "inputs": ["records.jsonl"],
      "registry": "registry.csv",
      "elections": {"uk": "2014-05-22"},
      "window": {"start": "2014-05-11T00:00:00Z", "end": "2014-06-10T23:59:59Z"},
      "variants": ["all", "mentions", "retweets", "pre", "post", "unweighted"],
      "models": "all",
      "output_dir": "reports",
      "rng_seed": 2014
    }

Usage:
------
>>> from echoscope.config import RunConfig
>>> config = RunConfig.from_json("data/example/config.json").with_overrides(threads=4)
>>> config.validate()
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from datetime import date
from os import environ
from pathlib import Path

from dotenv import load_dotenv

from .errors import ConfigurationError
from .ingest import parse_timestamp
from .models import CollectionWindow, Split, Variant, format_timestamp
from .stats import MODEL_SPECS, resolve_models

BASEDIR = Path(__file__).resolve().parent.parent


# Load .env file from project root
load_dotenv(BASEDIR / ".env")


class Config:
    """Environment defaults shared by every command."""

    LOG_LEVEL = environ.get("ECHOSCOPE_LOG_LEVEL", "INFO").upper()
    THREADS = int(environ.get("ECHOSCOPE_THREADS", "1"))
    OUTPUT_DIR = environ.get("ECHOSCOPE_OUTPUT_DIR", "reports")
    SEED = int(environ.get("ECHOSCOPE_SEED", "2014"))
    LAYOUT_ITERATIONS = int(environ.get("ECHOSCOPE_LAYOUT_ITERATIONS", "500"))


def _resolve(base: Path, value: str | Path) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


@dataclass(slots=True)
class RunConfig:
    inputs: list[Path]
    registry: Path
    window: CollectionWindow
    elections: dict[str, date] = field(default_factory=dict)
    variants: list[Variant] = field(default_factory=lambda: [Variant.ALL])
    models: str | list[str] = "all"
    output_dir: Path = field(default_factory=lambda: Path(Config.OUTPUT_DIR))
    rng_seed: int = Config.SEED
    threads: int = Config.THREADS
    min_pair_nodes: int = 1000
    min_party_nodes: int = 100
    cube_response: bool = False
    figures: bool = False
    count_internal_to_boundary: bool = False

    @classmethod
    def from_dict(cls, data: dict[str, object], base: str | Path = ".") -> RunConfig:
        """
        Build a run config from parsed JSON.

        Raises:
            ConfigurationError: unknown keys, missing required keys or values
                of the wrong shape.
        """
        base = Path(base)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
        for key in ("inputs", "registry", "window"):
            if key not in data:
                raise ConfigurationError(f"config is missing {key!r}")

        inputs = data["inputs"]
        if isinstance(inputs, str):
            inputs = [inputs]
        if not isinstance(inputs, list) or not inputs:
            raise ConfigurationError("'inputs' must be a non-empty list of paths")

        window = data["window"]
        if not isinstance(window, dict) or not {"start", "end"} <= set(window):
            raise ConfigurationError("'window' needs 'start' and 'end'")
        try:
            start = parse_timestamp(window["start"])
            end = parse_timestamp(window["end"])
        except ValueError as exc:
            raise ConfigurationError(f"window: {exc}") from exc

        elections_raw = data.get("elections") or {}
        if not isinstance(elections_raw, dict):
            raise ConfigurationError("'elections' must map country -> ISO date")
        elections: dict[str, date] = {}
        for country, value in elections_raw.items():
            try:
                elections[str(country).lower()] = date.fromisoformat(str(value))
            except ValueError:
                raise ConfigurationError(
                    f"election date for {country!r} is not an ISO date: {value!r}"
                ) from None

        variants_raw = data.get("variants", ["all"])
        if isinstance(variants_raw, str):
            variants_raw = [v.strip() for v in variants_raw.split(",") if v.strip()]
        try:
            variants = [Variant(v) for v in variants_raw]  # type: ignore[union-attr]
        except ValueError as exc:
            raise ConfigurationError(f"unknown variant: {exc}") from exc

        extra = {
            key: data[key]
            for key in (
                "models",
                "rng_seed",
                "threads",
                "min_pair_nodes",
                "min_party_nodes",
                "cube_response",
                "figures",
                "count_internal_to_boundary",
            )
            if key in data
        }
        if "output_dir" in data:
            extra["output_dir"] = _resolve(base, str(data["output_dir"]))

        return cls(
            inputs=[_resolve(base, str(p)) for p in inputs],
            registry=_resolve(base, str(data["registry"])),
            window=CollectionWindow(start, end),
            elections=elections,
            variants=list(dict.fromkeys(variants)),
            **extra,  # type: ignore[arg-type]
        )

    @classmethod
    def from_json(cls, path: str | Path) -> RunConfig:
        """Read a run config; relative paths resolve against its directory."""
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigurationError(f"config file {path} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc.msg})") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be an object")
        return cls.from_dict(data, base=path.resolve().parent)

    def with_overrides(self, **overrides: object) -> RunConfig:
        """Copy with every non-None override applied; flags win over the file."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        if "variants" in changes:
            variants = changes["variants"]
            changes["variants"] = [Variant(v) for v in variants]  # type: ignore[attr-defined]
        if "output_dir" in changes:
            changes["output_dir"] = Path(changes["output_dir"])  # type: ignore[arg-type]
        return replace(self, **changes)  # type: ignore[arg-type]

    def window_for(self, country: str) -> CollectionWindow:
        """The collection window with the country's election date attached."""
        return CollectionWindow(self.window.start, self.window.end, self.elections.get(country))

    def model_names(self) -> list[str]:
        """
        Model ids to fit. ``"all"`` keeps the cells whose variant is
        configured; an explicit id with a missing variant is an error.
        """
        names = resolve_models(self.models)
        if self.models == "all":
            return [n for n in names if MODEL_SPECS[n].variant in self.variants]
        for name in names:
            variant = MODEL_SPECS[name].variant
            if variant not in self.variants:
                raise ConfigurationError(
                    f"model {name} needs variant {variant.value!r}, which is not configured"
                )
        return names

    @property
    def needs_elections(self) -> bool:
        return any(v.split_mode is not Split.ALL for v in self.variants)

    def validate(self, countries: dict[str, int] | None = None) -> None:
        """
        Fail fast on anything that would stop the run midway.

        Args:
            countries: registry country -> party count; when given, pre/post
                variants require an election date for every country with at
                least two parties.

        Raises:
            ConfigurationError: naming the missing path, bad value, model or
                country.
        """
        for path in self.inputs:
            if not path.is_file():
                raise ConfigurationError(f"input file {path} does not exist")
        if not self.registry.is_file():
            raise ConfigurationError(f"registry file {self.registry} does not exist")
        if self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}")
        if self.min_pair_nodes < 0 or self.min_party_nodes < 0:
            raise ConfigurationError("node filters must be non-negative")
        if not self.variants:
            raise ConfigurationError("no variants requested")

        self.model_names()

        for country in self.elections:
            try:
                self.window_for(country)
            except ConfigurationError as exc:
                raise ConfigurationError(f"{country}: {exc}") from exc
        if self.needs_elections and countries is not None:
            for country, n_parties in sorted(countries.items()):
                if n_parties >= 2 and country not in self.elections:
                    raise ConfigurationError(
                        f"country {country!r} has no election date for the pre/post variants"
                    )

    def to_dict(self) -> dict[str, object]:
        """JSON-friendly snapshot recorded in the report metadata."""
        return {
            "inputs": [p.name for p in self.inputs],
            "registry": self.registry.name,
            "elections": {c: d.isoformat() for c, d in sorted(self.elections.items())},
            "window": {
                "start": format_timestamp(self.window.start),
                "end": format_timestamp(self.window.end),
            },
            "variants": [v.value for v in self.variants],
            "models": self.models,
            "rng_seed": self.rng_seed,
            "min_pair_nodes": self.min_pair_nodes,
            "min_party_nodes": self.min_party_nodes,
            "cube_response": self.cube_response,
            "count_internal_to_boundary": self.count_internal_to_boundary,
        }
