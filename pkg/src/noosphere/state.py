"""Materialized state and the event reducer.

State is a pure function of the event log: apply_event is the only code that
mutates it, both on the live append path and during replay, so
rebuild_state(log) always equals the live state that produced the log.

Each handler validates against current state before mutating (a record that
cannot apply raises CorruptRecord and leaves state untouched), then mutates,
then runs notification fan-out for the same record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime

from .errors import CorruptRecord
from .eventlog import format_ts
from .model import (
    CHANNELS,
    ENTRY_KINDS,
    EVENT_KINDS,
    REF_KINDS,
    REVIEW_STATES,
    ROLES,
    SEVERITIES,
    Correction,
    Entry,
    EventRecord,
    Message,
    Notice,
    Request,
    User,
    Watch,
)
from .notify import fan_out


@dataclass
class MaterializedState:
    users: dict[str, User] = field(default_factory=dict)
    entries: dict[str, Entry] = field(default_factory=dict)
    corrections: dict[str, Correction] = field(default_factory=dict)
    requests: dict[str, Request] = field(default_factory=dict)
    messages: dict[str, Message] = field(default_factory=dict)
    watches: dict[tuple[str, str, str], Watch] = field(default_factory=dict)
    notices: dict[str, Notice] = field(default_factory=dict)
    last_seq: int = 0
    last_ts: datetime | None = None

    def object_exists(self, kind: str, object_id: str) -> bool:
        table = {
            "entry": self.entries,
            "correction": self.corrections,
            "request": self.requests,
            "message": self.messages,
        }.get(kind)
        return table is not None and object_id in table

    def open_correction_ids(self, entry_id: str) -> list[str]:
        return [
            c.id
            for c in self.corrections.values()
            if c.entry_id == entry_id and c.state == "open"
        ]

    def watches_on(self, obj: tuple[str, str]) -> list[Watch]:
        kind, object_id = obj
        return [
            w
            for w in self.watches.values()
            if w.object_kind == kind and w.object_id == object_id
        ]

    def notices_for(self, user_id: str) -> list[Notice]:
        return [n for n in self.notices.values() if n.user_id == user_id]


def _require(condition: bool, seq: int, message: str) -> None:
    if not condition:
        raise CorruptRecord(seq, message)


def apply_event(state: MaterializedState, record: EventRecord) -> list[Notice]:
    """Apply one record; returns the notices it fanned out."""
    _require(record.seq == state.last_seq + 1, record.seq, "seq gap")
    _require(
        state.last_ts is None or record.ts >= state.last_ts,
        record.seq,
        "timestamp decreases",
    )
    kind = record.kind
    _require(kind in EVENT_KINDS, record.seq, f"unknown event kind {kind}")
    missing = [k for k in EVENT_KINDS[kind] if k not in record.payload]
    _require(not missing, record.seq, f"payload missing {missing}")
    if kind != "user_registered" or state.users:
        _require(record.actor in state.users, record.seq, f"unknown actor {record.actor}")

    _HANDLERS[kind](state, record)
    state.last_seq = record.seq
    state.last_ts = record.ts

    notices, _ = fanned = fan_out(state, record)
    for notice in notices:
        state.notices[notice.id] = notice
    # Callers that deliver mail use the second element; replay ignores it.
    state._last_fan_out = fanned  # type: ignore[attr-defined]
    return notices


def rebuild_state(records: list[EventRecord]) -> MaterializedState:
    """Deterministically materialize a full log. Empty log -> empty state."""
    state = MaterializedState()
    for record in records:
        apply_event(state, record)
    return state


# -- per-kind handlers ------------------------------------------------------
# Validation raises before any mutation so a failed apply never half-writes.


def _apply_user_registered(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    seq = record.seq
    _require(isinstance(p["user_id"], str) and 0 < len(p["user_id"]) <= 64, seq, "bad user id")
    _require(p["user_id"] not in state.users, seq, f'user {p["user_id"]} already exists')
    _require(p["role"] in ROLES, seq, f'bad role {p["role"]}')
    _require(bool(p["name"]), seq, "empty name")
    state.users[p["user_id"]] = User(
        id=p["user_id"],
        name=p["name"],
        role=p["role"],
        email=p["email"],
        secret_salt=p.get("secret_salt"),
        secret_hash=p.get("secret_hash"),
    )


def _apply_entry_created(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    seq = record.seq
    _require(p["entry_id"] not in state.entries, seq, "duplicate entry id")
    _require(bool(p["title"]), seq, "empty title")
    _require(p["kind"] in ENTRY_KINDS, seq, f'bad entry kind {p["kind"]}')
    state.entries[p["entry_id"]] = Entry(
        id=p["entry_id"],
        title=p["title"],
        synonyms=list(p["synonyms"]),
        kind=p["kind"],
        content=p["content"],
        owner=record.actor,
        created_at=record.ts,
        updated_at=record.ts,
        revision=1,
        review_state="unreviewed",
        created_seq=seq,
    )


def _get_entry(state: MaterializedState, record: EventRecord) -> Entry:
    entry_id = record.payload["entry_id"]
    _require(entry_id in state.entries, record.seq, f"no such entry {entry_id}")
    return state.entries[entry_id]


def _apply_entry_revised(state: MaterializedState, record: EventRecord) -> None:
    entry = _get_entry(state, record)
    p = record.payload
    _require(p["revision"] == entry.revision + 1, record.seq, "revision not contiguous")
    entry.content = p["content"]
    entry.revision = p["revision"]
    entry.updated_at = record.ts


def _apply_entry_orphaned(state: MaterializedState, record: EventRecord) -> None:
    entry = _get_entry(state, record)
    _require(entry.owner is not None, record.seq, "entry already orphaned")
    entry.owner = None
    entry.updated_at = record.ts


def _apply_entry_adopted(state: MaterializedState, record: EventRecord) -> None:
    entry = _get_entry(state, record)
    _require(entry.owner is None, record.seq, "entry is not orphaned")
    entry.owner = record.actor
    entry.updated_at = record.ts


def _apply_entry_transferred(state: MaterializedState, record: EventRecord) -> None:
    entry = _get_entry(state, record)
    to_user = record.payload["to_user"]
    _require(to_user in state.users, record.seq, f"no such user {to_user}")
    _require(entry.owner is not None, record.seq, "entry is orphaned")
    entry.owner = to_user
    entry.updated_at = record.ts


def _apply_entry_reviewed(state: MaterializedState, record: EventRecord) -> None:
    entry = _get_entry(state, record)
    review_state = record.payload["review_state"]
    _require(review_state in REVIEW_STATES, record.seq, f"bad review state {review_state}")
    entry.review_state = review_state


def _apply_correction_filed(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    seq = record.seq
    _require(p["entry_id"] in state.entries, seq, f'no such entry {p["entry_id"]}')
    _require(p["correction_id"] not in state.corrections, seq, "duplicate correction id")
    _require(bool(p["text"]), seq, "empty correction text")
    _require(p["severity"] in SEVERITIES, seq, f'bad severity {p["severity"]}')
    state.corrections[p["correction_id"]] = Correction(
        id=p["correction_id"],
        entry_id=p["entry_id"],
        filer=record.actor,
        text=p["text"],
        severity=p["severity"],
        state="open",
        filed_at=record.ts,
    )


def _apply_correction_resolved(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    seq = record.seq
    _require(p["correction_id"] in state.corrections, seq, "no such correction")
    correction = state.corrections[p["correction_id"]]
    _require(correction.state == "open", seq, "correction already resolved")
    _require(bool(p["action"]) and bool(p["note"]), seq, "empty action or note")
    correction.state = "resolved"
    correction.action_taken = p["action"]
    correction.resolution_note = p["note"]
    correction.resolved_at = record.ts
    # Fan-out and watch matching read the entry id off the payload.
    record.payload.setdefault("entry_id", correction.entry_id)


def _apply_request_created(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    _require(p["request_id"] not in state.requests, record.seq, "duplicate request id")
    _require(bool(p["title"]), record.seq, "empty title")
    state.requests[p["request_id"]] = Request(
        id=p["request_id"],
        title=p["title"],
        description=p["description"],
        creator=record.actor,
        state="active",
        created_at=record.ts,
    )


def _apply_request_filled(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    seq = record.seq
    _require(p["request_id"] in state.requests, seq, "no such request")
    request = state.requests[p["request_id"]]
    _require(request.state == "active", seq, "request already filled")
    _require(p["entry_id"] in state.entries, seq, f'no such entry {p["entry_id"]}')
    request.state = "filled"
    request.filled_by = p["entry_id"]
    request.filled_at = record.ts


def _apply_message_posted(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    seq = record.seq
    _require(p["target_kind"] in REF_KINDS, seq, f'bad target kind {p["target_kind"]}')
    _require(
        state.object_exists(p["target_kind"], p["target_id"]),
        seq,
        f'no such {p["target_kind"]}: {p["target_id"]}',
    )
    _require(p["message_id"] not in state.messages, seq, "duplicate message id")
    _require(bool(p["body"]), seq, "empty body")
    state.messages[p["message_id"]] = Message(
        id=p["message_id"],
        target_kind=p["target_kind"],
        target_id=p["target_id"],
        author=record.actor,
        subject=p["subject"],
        body=p["body"],
        posted_at=record.ts,
    )


def _apply_watch_added(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    seq = record.seq
    _require(p["object_kind"] in REF_KINDS, seq, f'bad object kind {p["object_kind"]}')
    _require(
        state.object_exists(p["object_kind"], p["object_id"]),
        seq,
        f'no such {p["object_kind"]}: {p["object_id"]}',
    )
    channels = sorted(set(p["channels"]))
    _require(bool(channels) and all(c in CHANNELS for c in channels), seq, "bad channels")
    watch = Watch(
        user_id=p["user_id"],
        object_kind=p["object_kind"],
        object_id=p["object_id"],
        channels=channels,
    )
    state.watches[watch.key] = watch


def _apply_watch_removed(state: MaterializedState, record: EventRecord) -> None:
    p = record.payload
    key = (p["user_id"], p["object_kind"], p["object_id"])
    _require(key in state.watches, record.seq, "no such watch")
    del state.watches[key]


def _apply_notice_read(state: MaterializedState, record: EventRecord) -> None:
    notice_id = record.payload["notice_id"]
    _require(notice_id in state.notices, record.seq, f"no such notice {notice_id}")
    state.notices[notice_id].read = True


_HANDLERS = {
    "user_registered": _apply_user_registered,
    "entry_created": _apply_entry_created,
    "entry_revised": _apply_entry_revised,
    "entry_orphaned": _apply_entry_orphaned,
    "entry_force_orphaned": _apply_entry_orphaned,
    "entry_adopted": _apply_entry_adopted,
    "entry_transferred": _apply_entry_transferred,
    "entry_reviewed": _apply_entry_reviewed,
    "correction_filed": _apply_correction_filed,
    "correction_resolved": _apply_correction_resolved,
    "request_created": _apply_request_created,
    "request_filled": _apply_request_filled,
    "message_posted": _apply_message_posted,
    "watch_added": _apply_watch_added,
    "watch_removed": _apply_watch_removed,
    "notice_read": _apply_notice_read,
}


# -- canonical snapshot -----------------------------------------------------


def _dump(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"), sort_keys=True)


def _ts(ts: datetime | None) -> str | None:
    return None if ts is None else format_ts(ts)


def canonical_lines(state: MaterializedState) -> list[str]:
    """Deterministic line-per-object rendering; identical states give identical bytes."""
    lines: list[str] = []
    lines.append(_dump({"record": "meta", "last_seq": state.last_seq, "last_ts": _ts(state.last_ts)}))
    for user in sorted(state.users.values(), key=lambda u: u.id):
        lines.append(
            _dump(
                {
                    "record": "user",
                    "id": user.id,
                    "name": user.name,
                    "role": user.role,
                    "email": user.email,
                    "secret_salt": user.secret_salt,
                    "secret_hash": user.secret_hash,
                }
            )
        )
    for entry in sorted(state.entries.values(), key=lambda e: e.id):
        lines.append(
            _dump(
                {
                    "record": "entry",
                    "id": entry.id,
                    "title": entry.title,
                    "synonyms": entry.synonyms,
                    "kind": entry.kind,
                    "content": entry.content,
                    "owner": entry.owner,
                    "created_at": _ts(entry.created_at),
                    "updated_at": _ts(entry.updated_at),
                    "revision": entry.revision,
                    "review_state": entry.review_state,
                    "created_seq": entry.created_seq,
                }
            )
        )
    for correction in sorted(state.corrections.values(), key=lambda c: c.id):
        lines.append(
            _dump(
                {
                    "record": "correction",
                    "id": correction.id,
                    "entry_id": correction.entry_id,
                    "filer": correction.filer,
                    "text": correction.text,
                    "severity": correction.severity,
                    "state": correction.state,
                    "action_taken": correction.action_taken,
                    "resolution_note": correction.resolution_note,
                    "filed_at": _ts(correction.filed_at),
                    "resolved_at": _ts(correction.resolved_at),
                }
            )
        )
    for request in sorted(state.requests.values(), key=lambda r: r.id):
        lines.append(
            _dump(
                {
                    "record": "request",
                    "id": request.id,
                    "title": request.title,
                    "description": request.description,
                    "creator": request.creator,
                    "state": request.state,
                    "filled_by": request.filled_by,
                    "created_at": _ts(request.created_at),
                    "filled_at": _ts(request.filled_at),
                }
            )
        )
    for message in sorted(state.messages.values(), key=lambda m: m.id):
        lines.append(
            _dump(
                {
                    "record": "message",
                    "id": message.id,
                    "target_kind": message.target_kind,
                    "target_id": message.target_id,
                    "author": message.author,
                    "subject": message.subject,
                    "body": message.body,
                    "posted_at": _ts(message.posted_at),
                }
            )
        )
    for watch in sorted(state.watches.values(), key=lambda w: w.key):
        lines.append(
            _dump(
                {
                    "record": "watch",
                    "user_id": watch.user_id,
                    "object_kind": watch.object_kind,
                    "object_id": watch.object_id,
                    "channels": watch.channels,
                }
            )
        )
    for notice in sorted(state.notices.values(), key=lambda n: n.id):
        lines.append(
            _dump(
                {
                    "record": "notice",
                    "id": notice.id,
                    "user_id": notice.user_id,
                    "event_seq": notice.event_seq,
                    "summary": notice.summary,
                    "cause": notice.cause,
                    "read": notice.read,
                    "created_at": _ts(notice.created_at),
                }
            )
        )
    return lines


def canonical_bytes(state: MaterializedState) -> bytes:
    return ("\n".join(canonical_lines(state)) + "\n").encode("utf-8")
