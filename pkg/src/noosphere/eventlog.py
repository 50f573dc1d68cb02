"""Append-only event log: wire format, file I/O, and clocks.

Log file format: one JSON object per line, UTF-8, LF endings, with fields
seq, ts (RFC 3339 UTC), actor, kind, payload. Snapshot files carry a leading
header record with a format version; readers reject other versions.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import CorruptRecord
from .model import EVENT_KINDS, EventRecord

SNAPSHOT_VERSION = 1


def format_ts(ts: datetime) -> str:
    """RFC 3339 UTC, seconds precision unless sub-second detail is present."""
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_ts(raw: str) -> datetime:
    # Python 3.10 fromisoformat does not accept a trailing Z.
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp lacks timezone: {raw}")
    return ts.astimezone(timezone.utc)


class Clock:
    def now(self) -> datetime:
        raise NotImplementedError


class UtcClock(Clock):
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class ManualClock(Clock):
    """Test/fixture clock: time moves only when told to."""

    def __init__(self, start: datetime):
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        self.current = start.astimezone(timezone.utc)

    def now(self) -> datetime:
        return self.current

    def advance(self, seconds: float) -> datetime:
        from datetime import timedelta

        self.current = self.current + timedelta(seconds=seconds)
        return self.current

    def set(self, ts: datetime) -> datetime:
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        self.current = ts.astimezone(timezone.utc)
        return self.current


def record_to_line(record: EventRecord) -> str:
    doc = {
        "seq": record.seq,
        "ts": format_ts(record.ts),
        "actor": record.actor,
        "kind": record.kind,
        "payload": record.payload,
    }
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))


def record_from_line(line: str, expected_seq: int | None = None) -> EventRecord:
    """Parse one log line; raises CorruptRecord on structural problems."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptRecord(expected_seq or -1, f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptRecord(expected_seq or -1, "record is not an object")
    try:
        seq = doc["seq"]
        ts = parse_ts(doc["ts"])
        actor = doc["actor"]
        kind = doc["kind"]
        payload = doc["payload"]
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptRecord(doc.get("seq", expected_seq or -1), str(exc)) from exc
    if not isinstance(seq, int) or not isinstance(payload, dict):
        raise CorruptRecord(doc.get("seq", -1), "bad field types")
    if expected_seq is not None and seq != expected_seq:
        raise CorruptRecord(seq, f"expected seq {expected_seq}, found {seq}")
    if kind not in EVENT_KINDS:
        raise CorruptRecord(seq, f"unknown event kind: {kind}")
    missing = [k for k in EVENT_KINDS[kind] if k not in payload]
    if missing:
        raise CorruptRecord(seq, f"{kind} payload missing {missing}")
    return EventRecord(seq=seq, ts=ts, actor=actor, kind=kind, payload=payload)


def read_log(path: str | Path) -> list[EventRecord]:
    """Read a whole log file, enforcing gapless seq starting at 1."""
    records: list[EventRecord] = []
    with open(path, encoding="utf-8") as fh:
        records.extend(iter_records(fh))
    return records


def iter_records(lines: Iterable[str]) -> Iterator[EventRecord]:
    expected = 1
    last_ts: datetime | None = None
    for line in lines:
        line = line.strip()
        if not line:
            continue
        record = record_from_line(line, expected_seq=expected)
        if last_ts is not None and record.ts < last_ts:
            raise CorruptRecord(record.seq, "timestamp decreases")
        last_ts = record.ts
        expected += 1
        yield record


class LogWriter:
    """Serialized appender over a log file. Thread-safe; flushes every record."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._fh: IO[str] = open(self.path, "a", encoding="utf-8", newline="\n")

    def append(self, record: EventRecord) -> None:
        with self._lock:
            self._fh.write(record_to_line(record) + "\n")
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()


def write_snapshot_lines(lines: list[str], path: str | Path) -> None:
    header = json.dumps({"snapshot_version": SNAPSHOT_VERSION}, separators=(",", ":"))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for line in lines:
            fh.write(line + "\n")


def read_snapshot_lines(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        raw = [line.rstrip("\n") for line in fh]
    if not raw:
        raise ValueError("empty snapshot file")
    header = json.loads(raw[0])
    version = header.get("snapshot_version")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version: {version}")
    return raw[1:]
