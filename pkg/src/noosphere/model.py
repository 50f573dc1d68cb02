"""Domain objects and the event vocabulary.

Everything here is materialized state: it is only ever produced by replaying
event records, never mutated out of band. Object ids are opaque URL-safe
strings assigned by the engine at append time and recorded in the event
payload, so replay reproduces them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

ROLES = ("student", "instructor", "auditor", "admin")
ENTRY_KINDS = ("concept", "theorem", "proof", "example", "exercise")
REVIEW_STATES = ("unreviewed", "needs_work", "approved")
SEVERITIES = ("error", "improvement", "style")
CHANNELS = ("inbox", "email")
REF_KINDS = ("entry", "correction", "request", "message")

# Roles allowed to exercise moderator overrides (force-orphan, resolve any
# correction, set review state, register users).
MODERATOR_ROLES = ("instructor", "admin")

# Event kind -> required payload keys. Appends are rejected unless the kind
# is registered; replay raises CorruptRecord on a missing key.
EVENT_KINDS: dict[str, tuple[str, ...]] = {
    "user_registered": ("user_id", "name", "role", "email"),
    "entry_created": ("entry_id", "title", "synonyms", "kind", "content"),
    "entry_revised": ("entry_id", "content", "revision"),
    "entry_orphaned": ("entry_id",),
    "entry_force_orphaned": ("entry_id", "previous_owner"),
    "entry_adopted": ("entry_id",),
    "entry_transferred": ("entry_id", "to_user"),
    "entry_reviewed": ("entry_id", "review_state"),
    "correction_filed": ("correction_id", "entry_id", "text", "severity"),
    "correction_resolved": ("correction_id", "action", "note"),
    "request_created": ("request_id", "title", "description"),
    "request_filled": ("request_id", "entry_id"),
    "message_posted": ("message_id", "target_kind", "target_id", "subject", "body"),
    "watch_added": ("user_id", "object_kind", "object_id", "channels"),
    "watch_removed": ("user_id", "object_kind", "object_id"),
    "notice_read": ("notice_id",),
}


@dataclass
class EventRecord:
    seq: int
    ts: datetime  # UTC
    actor: str
    kind: str
    payload: dict


@dataclass
class User:
    id: str
    name: str
    role: str
    email: str
    # PBKDF2 verifier; unset for accounts that cannot log in.
    secret_salt: str | None = None
    secret_hash: str | None = None


@dataclass
class Entry:
    id: str
    title: str
    synonyms: list[str]
    kind: str
    content: str
    owner: str | None  # None == orphaned
    created_at: datetime
    updated_at: datetime
    revision: int
    review_state: str
    created_seq: int

    @property
    def orphaned(self) -> bool:
        return self.owner is None


@dataclass
class Correction:
    id: str
    entry_id: str
    filer: str
    text: str
    severity: str
    state: str  # open | resolved
    filed_at: datetime
    action_taken: str | None = None
    resolution_note: str | None = None
    resolved_at: datetime | None = None


@dataclass
class Request:
    id: str
    title: str
    description: str
    creator: str
    state: str  # active | filled
    created_at: datetime
    filled_by: str | None = None
    filled_at: datetime | None = None


@dataclass
class Message:
    id: str
    target_kind: str  # entry | correction | request | message
    target_id: str
    author: str
    subject: str
    body: str
    posted_at: datetime


@dataclass
class Watch:
    user_id: str
    object_kind: str
    object_id: str
    channels: list[str]  # sorted, nonempty subset of CHANNELS

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.user_id, self.object_kind, self.object_id)


@dataclass
class Notice:
    id: str
    user_id: str
    event_seq: int
    summary: str
    cause: str  # implicit | watch | digest
    created_at: datetime
    read: bool = False


@dataclass
class MailMessage:
    to: str
    subject: str
    body: str
    event_seq: int


@dataclass
class TreeNode:
    """One message plus its replies, children ordered by post time."""

    message: Message
    children: list["TreeNode"] = field(default_factory=list)
