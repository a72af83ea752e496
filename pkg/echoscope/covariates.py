"""
covariates.py

Party registry loading and the explanatory variables of the fragmentation
models.

Registry CSV (one row per party):

    country,party_id,handle,ideology,vote_share,incumbent
    uk,lab,@labourleader,4.2,30.4,false

ideology is on a 0 (left) .. 10 (right) scale, vote_share in percent.

Usage:
------
>>> from echoscope.covariates import load_registry, pair_covariates
>>> registry = load_registry("data/example/registry.csv")
>>> lab, con = registry.get("uk", "lab"), registry.get("uk", "con")
>>> pair_covariates(lab, con, 500, 2000).tweet_ratio
0.25
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from .errors import InvalidPairError, RegistryError
from .ingest import HANDLE_RE, normalize_handle
from .models import IncumbencyPair, PairCovariates, Party, PartyCovariates

logger = logging.getLogger(__name__)

REGISTRY_COLUMNS = ["country", "party_id", "handle", "ideology", "vote_share", "incumbent"]
CENTRE = 5.0

_TRUE = {"true", "1", "yes", "y", "t"}
_FALSE = {"false", "0", "no", "n", "f"}


def _parse_bool(value: str, name: str) -> bool:
    lowered = value.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"{name} must be true/false, got {value!r}")


def _parse_float(value: str, name: str, low: float, high: float) -> float:
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"{name} is not a number: {value!r}") from None
    if not low <= number <= high:
        raise ValueError(f"{name} {number} outside [{low:g}, {high:g}]")
    return number


def party_from_row(row: dict[str, str]) -> Party:
    """Validate one registry row; raises ``ValueError`` on bad content."""
    country = row["country"].strip().lower()
    party_id = row["party_id"].strip()
    handle = normalize_handle(row["handle"])
    if not country:
        raise ValueError("country is empty")
    if not party_id:
        raise ValueError("party_id is empty")
    if not HANDLE_RE.fullmatch(handle):
        raise ValueError(f"invalid handle {row['handle']!r}")
    return Party(
        id=party_id,
        country=country,
        handle=handle,
        ideology=_parse_float(row["ideology"], "ideology", 0.0, 10.0),
        vote_share=_parse_float(row["vote_share"], "vote_share", 0.0, 100.0),
        incumbent=_parse_bool(row["incumbent"], "incumbent"),
    )


@dataclass(frozen=True)
class Registry:
    """Validated, immutable set of parties keyed by (country, id) and handle."""

    parties: tuple[Party, ...]
    _by_key: dict[tuple[str, str], Party] = field(init=False, repr=False, compare=False)
    _by_handle: dict[str, Party] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_key: dict[tuple[str, str], Party] = {}
        by_handle: dict[str, Party] = {}
        for party in self.parties:
            if party.handle in by_handle:
                raise RegistryError(f"duplicate handle {party.handle!r}")
            if (party.country, party.id) in by_key:
                raise RegistryError(f"duplicate party {party.country}/{party.id}")
            by_handle[party.handle] = party
            by_key[(party.country, party.id)] = party
        object.__setattr__(self, "_by_key", by_key)
        object.__setattr__(self, "_by_handle", by_handle)

    def __iter__(self) -> Iterator[Party]:
        return iter(self.parties)

    def __len__(self) -> int:
        return len(self.parties)

    def get(self, country: str, party_id: str) -> Party:
        try:
            return self._by_key[(country, party_id)]
        except KeyError:
            raise KeyError(f"unknown party {country}/{party_id}") from None

    def by_handle(self, handle: str) -> Party:
        return self._by_handle[normalize_handle(handle)]

    def countries(self) -> list[str]:
        return sorted({p.country for p in self.parties})

    def parties_in(self, country: str) -> list[Party]:
        """Parties of one country sorted by id."""
        return sorted((p for p in self.parties if p.country == country), key=lambda p: p.id)

    def handles(self, country: str | None = None) -> list[str]:
        return [p.handle for p in self.parties if country is None or p.country == country]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "country": p.country,
                    "party_id": p.id,
                    "handle": p.handle,
                    "ideology": p.ideology,
                    "vote_share": p.vote_share,
                    "incumbent": str(p.incumbent).lower(),
                }
                for p in self.parties
            ],
            columns=REGISTRY_COLUMNS,
        )


def load_registry(path: str | Path) -> Registry:
    """
    Read and validate a registry CSV.

    Args:
        path: CSV with the ``REGISTRY_COLUMNS`` header.

    Returns:
        Registry: parties with lowercased handles.

    Raises:
        RegistryError: missing columns, a bad row (with its file row number)
            or a duplicate handle.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise RegistryError(f"{path}: unreadable registry ({exc})") from exc
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in REGISTRY_COLUMNS if c not in frame.columns]
    if missing:
        raise RegistryError(f"{path}: missing column(s) {', '.join(missing)}")

    parties: list[Party] = []
    seen: dict[str, int] = {}
    # header is row 1 of the file
    for row_number, row in enumerate(frame[REGISTRY_COLUMNS].to_dict("records"), start=2):
        try:
            party = party_from_row(row)
        except ValueError as exc:
            raise RegistryError(str(exc), row_number) from exc
        if party.handle in seen:
            raise RegistryError(
                f"duplicate handle {party.handle!r} (first on row {seen[party.handle]})",
                row_number,
            )
        seen[party.handle] = row_number
        parties.append(party)

    registry = Registry(tuple(parties))
    logger.info(
        "loaded %d parties in %d countries from %s",
        len(registry),
        len(registry.countries()),
        path,
    )
    return registry


def write_registry(registry: Registry | Iterable[Party], path: str | Path) -> None:
    if not isinstance(registry, Registry):
        registry = Registry(tuple(registry))
    registry.to_frame().to_csv(path, index=False, lineterminator="\n")


# =========================================================================
# Covariates
# =========================================================================
def extremism(ideology: float) -> float:
    return abs(ideology - CENTRE)


def incumbency_pair(a: Party, b: Party) -> IncumbencyPair:
    if a.incumbent and b.incumbent:
        return IncumbencyPair.II
    if a.incumbent or b.incumbent:
        return IncumbencyPair.IO
    return IncumbencyPair.OO


def tweet_ratio(count_a: int, count_b: int) -> float | None:
    """Smaller over larger count; None when neither party was mentioned."""
    high = max(count_a, count_b)
    if high == 0:
        return None
    return min(count_a, count_b) / high


def pair_covariates(a: Party, b: Party, tweet_count_a: int, tweet_count_b: int) -> PairCovariates:
    """
    Pair-level explanatory variables, symmetric in ``a`` and ``b``.

    Args:
        a, b: two parties of the same country.
        tweet_count_a, tweet_count_b: records mentioning each party's handle.

    Returns:
        PairCovariates: ``tweet_ratio`` is None (pair incomplete) when both
        counts are zero.

    Raises:
        InvalidPairError: parties from different countries, or the same party.
    """
    if a.country != b.country:
        raise InvalidPairError(
            f"{a.id} ({a.country}) and {b.id} ({b.country}) are in different countries"
        )
    if a.id == b.id:
        raise InvalidPairError(f"pair of party {a.id!r} with itself")

    ratio = tweet_ratio(tweet_count_a, tweet_count_b)
    if ratio is None:
        logger.warning("%s/%s: neither party mentioned, tweet ratio undefined", a.id, b.id)
    return PairCovariates(
        ideological_distance=abs(a.ideology - b.ideology),
        extremism_sum=extremism(a.ideology) + extremism(b.ideology),
        left_right_mismatch=(a.ideology - CENTRE) * (b.ideology - CENTRE) < 0,
        size_difference=abs(a.vote_share - b.vote_share),
        incumbency_pair=incumbency_pair(a, b),
        tweet_ratio=ratio,
    )


def party_covariates(party: Party) -> PartyCovariates:
    return PartyCovariates(
        extremism=extremism(party.ideology),
        right_wing=party.right_wing,
        size=party.vote_share,
        incumbent=party.incumbent,
    )
