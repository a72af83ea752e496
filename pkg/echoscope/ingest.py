"""
ingest.py

Read interaction records from newline-delimited JSON, extract mentions, tell
retweets from mentions and restrict records to a collection window.

Usage:
------
>>> from echoscope.ingest import parse_record
>>> rec = parse_record('{"author":"John","timestamp":"2014-05-21T10:00:00Z",'
...                    '"text":"@BlueParty hi"}')
>>> rec.author, rec.mentions, rec.is_retweet
('john', ('blueparty',), False)

Record files:
    {"id": "1", "author": "paul", "timestamp": "2014-05-21T10:00:00Z",
     "text": "@john @blueparty nope", "mentions": [...], "is_retweet": false}

``mentions`` and ``is_retweet`` are optional; when present they win over the
values derived from the text.
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Iterable, Iterator
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigurationError, RecordParseError, SchemaError
from .models import CollectionWindow, InteractionKind, InteractionRecord, Split

logger = logging.getLogger(__name__)

# "@" + 1-15 ASCII word characters, not glued to a preceding word character
HANDLE_PATTERN = re.compile(r"(?<![A-Za-z0-9_@])@([A-Za-z0-9_]+)")
HANDLE_RE = re.compile(r"[a-z0-9_]{1,15}")
MAX_HANDLE_LENGTH = 15
RETWEET_PREFIX = re.compile(r"^RT @", re.IGNORECASE)

REQUIRED_FIELDS = ("author", "timestamp", "text")


def normalize_handle(handle: str) -> str:
    """Lowercase a handle and strip a leading ``@``."""
    return handle.strip().lstrip("@").lower()


def extract_mentions(text: str, author: str = "") -> list[str]:
    """
    Return the handles mentioned in ``text``.

    Handles are lowercased and deduplicated in order of first appearance; the
    author is dropped. A leading ``.`` before ``@`` (the broadcast convention)
    does not block extraction; tokens longer than 15 characters are ignored.

    Args:
        text: message body.
        author: author handle, removed from the result.

    Returns:
        list[str]: mentioned handles.
    """
    author = normalize_handle(author) if author else ""
    seen: dict[str, None] = {}
    for match in HANDLE_PATTERN.finditer(text):
        token = match.group(1)
        if len(token) > MAX_HANDLE_LENGTH:
            continue
        handle = token.lower()
        if handle != author:
            seen.setdefault(handle, None)
    return list(seen)


def classify_interaction(record: InteractionRecord) -> InteractionKind:
    """Retweet when flagged or when the text starts with ``RT @``."""
    if record.is_retweet or RETWEET_PREFIX.match(record.text):
        return InteractionKind.RETWEET
    return InteractionKind.MENTION


def parse_timestamp(value: object) -> datetime:
    """Parse an ISO-8601 instant to an aware UTC datetime (naive means UTC)."""
    if not isinstance(value, str):
        raise SchemaError(f"timestamp must be an ISO-8601 string, got {value!r}")
    try:
        ts = datetime.fromisoformat(value.strip().replace("Z", "+00:00"))
    except ValueError as exc:
        raise SchemaError(f"unparseable timestamp {value!r}") from exc
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _explicit_mentions(value: object, author: str) -> tuple[str, ...]:
    if not isinstance(value, list):
        raise SchemaError(f"mentions must be a list of strings, got {value!r}")
    seen: dict[str, None] = {}
    for item in value:
        if not isinstance(item, str):
            raise SchemaError(f"mention {item!r} is not a string")
        handle = normalize_handle(item)
        if not HANDLE_RE.fullmatch(handle):
            raise SchemaError(f"mention {item!r} is not a valid handle")
        if handle != author:
            seen.setdefault(handle, None)
    return tuple(seen)


def record_from_dict(data: dict[str, object], record_id: str = "") -> InteractionRecord:
    """Build a normalized record from an already decoded JSON object."""
    missing = [name for name in REQUIRED_FIELDS if name not in data]
    if missing:
        raise SchemaError(f"missing field(s): {', '.join(missing)}")

    author_raw = data["author"]
    text = data["text"]
    if not isinstance(author_raw, str) or not normalize_handle(author_raw):
        raise SchemaError(f"author must be a non-empty string, got {author_raw!r}")
    if not isinstance(text, str):
        raise SchemaError("text must be a string")
    author = normalize_handle(author_raw)
    timestamp = parse_timestamp(data["timestamp"])

    if data.get("mentions") is not None:
        mentions = _explicit_mentions(data["mentions"], author)
    else:
        mentions = tuple(extract_mentions(text, author))

    flag = data.get("is_retweet")
    if flag is not None and not isinstance(flag, bool):
        raise SchemaError(f"is_retweet must be a boolean, got {flag!r}")

    record = InteractionRecord(
        id=str(data.get("id") or record_id),
        timestamp=timestamp,
        author=author,
        text=text,
        mentions=mentions,
        is_retweet=bool(flag),
    )
    if flag is None:
        derived = classify_interaction(record) is InteractionKind.RETWEET
        record = replace(record, is_retweet=derived)
    return record


def parse_record(line: str, line_number: int | None = None) -> InteractionRecord:
    """
    Parse one JSON line into an ``InteractionRecord``.

    Raises:
        RecordParseError: the line is not a JSON object.
        SchemaError: a mandatory field is missing or malformed.
    """
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"malformed JSON: {exc.msg}", line_number) from exc
    if not isinstance(data, dict):
        raise RecordParseError("expected a JSON object", line_number)
    try:
        return record_from_dict(data, record_id=str(line_number or ""))
    except SchemaError as exc:
        if line_number is None:
            raise
        raise SchemaError(f"line {line_number}: {exc}") from exc


def serialize_record(record: InteractionRecord) -> str:
    """One JSON line; ``parse_record`` reads it back unchanged."""
    return json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True)


def read_records(paths: Iterable[str | Path]) -> Iterator[InteractionRecord]:
    """Stream records from one or more JSONL files, skipping blank lines."""
    for path in paths:
        path = Path(path)
        count = 0
        with path.open(encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = parse_record(line, line_number)
                except RecordParseError as exc:
                    err = RecordParseError(f"{path}: {exc}")
                    err.line_number = exc.line_number
                    raise err from exc
                except SchemaError as exc:
                    raise SchemaError(f"{path}: {exc}") from exc
                count += 1
                yield record
        logger.info("read %d records from %s", count, path)


def write_records(records: Iterable[InteractionRecord], path: str | Path) -> int:
    """Write records as JSONL and return how many were written."""
    count = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(serialize_record(record) + "\n")
            count += 1
    return count


def filter_window(
    records: Iterable[InteractionRecord],
    window: CollectionWindow,
    split: Split | str = Split.ALL,
) -> Iterator[InteractionRecord]:
    """
    Keep records inside ``[start, end]``; ``pre``/``post`` further split at
    election-day midnight UTC (``pre`` strictly before, ``post`` from it on).

    Raises:
        ConfigurationError: pre/post split without an election date.
    """
    split = Split(split)
    if split is not Split.ALL and window.election_date is None:
        raise ConfigurationError(f"split {split.value!r} needs an election date")
    return _window_iter(records, window, split)


def _window_iter(
    records: Iterable[InteractionRecord], window: CollectionWindow, split: Split
) -> Iterator[InteractionRecord]:
    cut = window.election_start if split is not Split.ALL else window.start
    for record in records:
        ts = record.timestamp
        if ts < window.start or ts > window.end:
            continue
        if split is Split.PRE and ts >= cut:
            continue
        if split is Split.POST and ts < cut:
            continue
        yield record


def country_audience(
    records: Iterable[InteractionRecord], handles: Iterable[str]
) -> set[str]:
    """Authors with at least one record mentioning any of ``handles``."""
    targets = {normalize_handle(h) for h in handles}
    audience = set(targets)
    for record in records:
        if targets.intersection(record.mentions):
            audience.add(record.author)
    return audience


def filter_country(
    records: list[InteractionRecord], handles: Iterable[str]
) -> list[InteractionRecord]:
    """
    Keep the records authored by a country's audience.

    Every pair subnetwork of that country only contains audience members and
    their outgoing edges, so pair results are unchanged.
    """
    audience = country_audience(records, handles)
    return [r for r in records if r.author in audience]
