"""Notice fan-out and outbound mail.

Fan-out runs inside the reducer, atomically with each applied event, so
notices are part of materialized state and replay exactly. Mail delivery is
a live-engine concern layered on top: the engine turns email-worthy notices
into MailMessages and pushes them through a pluggable sink with an
at-least-once retry queue.

Rules enforced here:
- at most one notice per (user, event), implicit cause winning over watch;
- the actor of an event never receives an implicit or watch notice for it;
- an adoption that inherits open corrections produces a digest notice to the
  adopter (the one deliberate exception to actor suppression: it is a receipt
  for obligations the adopter just took on).
"""

from __future__ import annotations

import json
from typing import TYPE_CHECKING

from .model import EventRecord, MailMessage, Notice

if TYPE_CHECKING:  # pragma: no cover
    from .state import MaterializedState

# Event kinds that watchers of the touched object are notified about.
WATCHED_EVENT_KINDS = frozenset(
    {
        "entry_revised",
        "entry_orphaned",
        "entry_force_orphaned",
        "entry_adopted",
        "entry_transferred",
        "correction_filed",
        "correction_resolved",
        "message_posted",
        "request_filled",
    }
)


def _clip(text: str, limit: int = 80) -> str:
    text = " ".join(text.split())
    return text if len(text) <= limit else text[: limit - 3] + "..."


def summarize(state: "MaterializedState", record: EventRecord) -> str:
    """One human-readable line per event; shared by implicit and watch notices."""
    p = record.payload
    kind = record.kind
    if kind == "correction_filed":
        entry = state.entries[p["entry_id"]]
        return f'Correction filed on "{entry.title}" by {record.actor}: {_clip(p["text"])}'
    if kind == "correction_resolved":
        correction = state.corrections[p["correction_id"]]
        entry = state.entries[correction.entry_id]
        return (
            f'Correction on "{entry.title}" resolved by {record.actor}; '
            f'action taken: {p["action"]} ({_clip(p["note"])})'
        )
    if kind == "message_posted":
        return f'Message from {record.actor}: {_clip(p["subject"] or p["body"])}'
    if kind == "request_filled":
        request = state.requests[p["request_id"]]
        return f'Request "{request.title}" filled by {record.actor} with entry {p["entry_id"]}'
    if kind == "entry_revised":
        entry = state.entries[p["entry_id"]]
        return f'Entry "{entry.title}" revised by {record.actor} (revision {p["revision"]})'
    if kind in ("entry_orphaned", "entry_force_orphaned"):
        entry = state.entries[p["entry_id"]]
        return f'Entry "{entry.title}" orphaned'
    if kind == "entry_adopted":
        entry = state.entries[p["entry_id"]]
        return f'Entry "{entry.title}" adopted by {record.actor}'
    if kind == "entry_transferred":
        entry = state.entries[p["entry_id"]]
        return f'Entry "{entry.title}" transferred to {p["to_user"]}'
    return f"{kind} by {record.actor}"


def implicit_recipients(state: "MaterializedState", record: EventRecord) -> set[str]:
    """Recipients wired into the protocol itself, independent of watches."""
    p = record.payload
    kind = record.kind
    recipients: set[str] = set()
    if kind == "correction_filed":
        owner = state.entries[p["entry_id"]].owner
        if owner is not None:
            recipients.add(owner)
    elif kind == "correction_resolved":
        recipients.add(state.corrections[p["correction_id"]].filer)
    elif kind == "message_posted" and p["target_kind"] == "message":
        recipients.add(state.messages[p["target_id"]].author)
    elif kind == "request_filled":
        recipients.add(state.requests[p["request_id"]].creator)
    return recipients


def watched_objects(record: EventRecord) -> list[tuple[str, str]]:
    """Object refs an event counts as activity on, for watch matching."""
    p = record.payload
    kind = record.kind
    if kind in (
        "entry_revised",
        "entry_orphaned",
        "entry_force_orphaned",
        "entry_adopted",
        "entry_transferred",
    ):
        return [("entry", p["entry_id"])]
    if kind == "correction_filed":
        return [("entry", p["entry_id"])]
    if kind == "correction_resolved":
        return [("correction", p["correction_id"]), ("entry", p["entry_id"])]
    if kind == "message_posted":
        return [(p["target_kind"], p["target_id"])]
    if kind == "request_filled":
        return [("request", p["request_id"])]
    return []


def fan_out(state: "MaterializedState", record: EventRecord) -> tuple[list[Notice], list[str]]:
    """Create notices for one applied event.

    Returns (new notices, user ids to email). Called by the reducer after the
    event's own effect is applied, so lookups see post-event state; resolved
    corrections carry entry_id in the payload for this reason.
    """
    implicit = implicit_recipients(state, record)
    watchers: set[str] = set()
    email_watchers: set[str] = set()
    if record.kind in WATCHED_EVENT_KINDS:
        for obj in watched_objects(record):
            for watch in state.watches_on(obj):
                watchers.add(watch.user_id)
                if "email" in watch.channels:
                    email_watchers.add(watch.user_id)

    recipients = (implicit | watchers) - {record.actor}
    summary = summarize(state, record)
    notices: list[Notice] = []
    for i, user_id in enumerate(sorted(recipients)):
        notices.append(
            Notice(
                id=f"n{record.seq:06d}.{i}",
                user_id=user_id,
                event_seq=record.seq,
                summary=summary,
                cause="implicit" if user_id in implicit else "watch",
                created_at=record.ts,
            )
        )
    # Implicit recipients are emailed unconditionally (inbox + email is the
    # protocol's contract for them); watchers only on an email channel.
    email_to = sorted((implicit | email_watchers) - {record.actor})

    if record.kind == "entry_adopted":
        open_ids = state.open_correction_ids(record.payload["entry_id"])
        if open_ids:
            entry = state.entries[record.payload["entry_id"]]
            notices.append(
                Notice(
                    id=f"n{record.seq:06d}.{len(notices)}",
                    user_id=record.actor,
                    event_seq=record.seq,
                    summary=(
                        f'Adopted entry "{entry.title}" carries '
                        f"{len(open_ids)} open correction(s) to resolve"
                    ),
                    cause="digest",
                    created_at=record.ts,
                )
            )
    return notices, email_to


class MailSink:
    """Outbound mail boundary. deliver() raises on failure; the outbox retries."""

    def deliver(self, message: MailMessage) -> None:
        raise NotImplementedError


class NullMailSink(MailSink):
    def deliver(self, message: MailMessage) -> None:
        pass


class FileMailSink(MailSink):
    """One JSON record per line: to, subject, body, event_seq."""

    def __init__(self, path):
        self.path = path

    def deliver(self, message: MailMessage) -> None:
        doc = {
            "to": message.to,
            "subject": message.subject,
            "body": message.body,
            "event_seq": message.event_seq,
        }
        with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n")


class Outbox:
    """At-least-once delivery queue in front of a MailSink."""

    def __init__(self, sink: MailSink):
        self.sink = sink
        self.pending: list[MailMessage] = []

    def enqueue(self, message: MailMessage) -> None:
        self.pending.append(message)

    def flush(self) -> int:
        """Attempt delivery of everything pending; failures stay queued.

        Returns the number of messages delivered.
        """
        delivered = 0
        remaining: list[MailMessage] = []
        for message in self.pending:
            try:
                self.sink.deliver(message)
                delivered += 1
            except Exception:
                remaining.append(message)
        self.pending = remaining
        return delivered
