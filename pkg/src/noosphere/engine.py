"""The engine: validated commands over the append-only log.

A single writer lock serializes validate+append+apply, so concurrent
conflicting commands resolve by log order and the loser sees the usual
precondition error. Reads take the same lock briefly; state is never handed
out mid-apply.

Object ids are assigned here (kind prefix + the creating event's seq) and
recorded in payloads, which is what makes replay reproduce them.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import threading
from pathlib import Path

from .errors import DomainError, entry_missing, not_owner, unknown_user
from .eventlog import Clock, LogWriter, UtcClock, read_log
from .model import (
    CHANNELS,
    ENTRY_KINDS,
    EVENT_KINDS,
    MODERATOR_ROLES,
    REF_KINDS,
    REVIEW_STATES,
    SEVERITIES,
    Correction,
    Entry,
    EventRecord,
    MailMessage,
    Message,
    Notice,
    Request,
    TreeNode,
    User,
    Watch,
)
from .notify import MailSink, NullMailSink, Outbox
from .state import MaterializedState, apply_event, canonical_bytes

LOG_FILENAME = "events.log"


def make_verifier(secret: str, salt: str | None = None) -> tuple[str, str]:
    # salt may be pinned for reproducible fixture logs
    if salt is None:
        salt = os.urandom(16).hex()
    digest = hashlib.pbkdf2_hmac("sha256", secret.encode(), bytes.fromhex(salt), 50_000)
    return salt, digest.hex()


def check_secret(user: User, secret: str) -> bool:
    """Constant-shape check: always computes a hash, even for loginless users."""
    salt = user.secret_salt or "00" * 16
    expected = user.secret_hash or "00" * 32
    digest = hashlib.pbkdf2_hmac("sha256", secret.encode(), bytes.fromhex(salt), 50_000)
    return hmac.compare_digest(digest.hex(), expected) and user.secret_hash is not None


class Engine:
    def __init__(
        self,
        clock: Clock | None = None,
        log_path: str | Path | None = None,
        sink: MailSink | None = None,
    ):
        self.clock = clock or UtcClock()
        self.state = MaterializedState()
        self.records: list[EventRecord] = []
        self.outbox = Outbox(sink or NullMailSink())
        self._lock = threading.RLock()
        self._writer = LogWriter(log_path) if log_path is not None else None

    @classmethod
    def open(
        cls,
        data_dir: str | Path,
        clock: Clock | None = None,
        sink: MailSink | None = None,
    ) -> "Engine":
        """Open (or initialize) a file-backed engine in data_dir."""
        data_dir = Path(data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        log_path = data_dir / LOG_FILENAME
        records = read_log(log_path) if log_path.exists() else []
        engine = cls(clock=clock, sink=sink)
        for record in records:
            apply_event(engine.state, record)
        engine.records = records
        engine._writer = LogWriter(log_path)
        return engine

    def close(self) -> None:
        with self._lock:
            self.outbox.flush()
            if self._writer:
                self._writer.close()

    # -- substrate ----------------------------------------------------------

    def append_event(self, actor: str, kind: str, payload: dict) -> EventRecord:
        """Raw append. Commands below are the normal way in; this is the substrate."""
        with self._lock:
            if self.state.users and actor not in self.state.users:
                raise DomainError("unknown-actor", f"no such user: {actor}")
            if kind not in EVENT_KINDS:
                raise DomainError("unknown-event-kind", f"unregistered event kind: {kind}")
            return self._append(actor, kind, payload)

    def _append(self, actor: str, kind: str, payload: dict) -> EventRecord:
        seq = self.state.last_seq + 1
        ts = self.clock.now()
        if self.state.last_ts is not None and ts < self.state.last_ts:
            ts = self.state.last_ts
        record = EventRecord(seq=seq, ts=ts, actor=actor, kind=kind, payload=payload)
        apply_event(self.state, record)  # raises before mutating on a bad record
        self.records.append(record)
        if self._writer:
            self._writer.append(record)
        self._enqueue_mail(record)
        self.outbox.flush()
        return record

    def _enqueue_mail(self, record: EventRecord) -> None:
        notices, email_to = getattr(self.state, "_last_fan_out", ([], []))
        by_user = {n.user_id: n for n in notices}
        for user_id in email_to:
            user = self.state.users.get(user_id)
            notice = by_user.get(user_id)
            if user is None or notice is None or not user.email:
                continue
            self.outbox.enqueue(
                MailMessage(
                    to=user.email,
                    subject=notice.summary,
                    body=notice.summary,
                    event_seq=record.seq,
                )
            )

    def _next_id(self, prefix: str) -> str:
        return f"{prefix}{self.state.last_seq + 1:06d}"

    def _user(self, user_id: str) -> User:
        user = self.state.users.get(user_id)
        if user is None:
            raise unknown_user(user_id)
        return user

    def _entry(self, entry_id: str) -> Entry:
        entry = self.state.entries.get(entry_id)
        if entry is None:
            raise entry_missing(entry_id)
        return entry

    def _is_moderator(self, user_id: str) -> bool:
        user = self.state.users.get(user_id)
        return user is not None and user.role in MODERATOR_ROLES

    def snapshot_bytes(self) -> bytes:
        with self._lock:
            return canonical_bytes(self.state)

    # -- users ---------------------------------------------------------------

    def register_user(
        self,
        actor: str,
        user_id: str,
        name: str,
        role: str,
        email: str,
        secret: str | None = None,
        salt: str | None = None,
    ) -> User:
        with self._lock:
            if not self.state.users:
                # Bootstrap: the very first account registers itself and must
                # be the admin that will create everyone else.
                if actor != user_id or role != "admin":
                    raise DomainError("forbidden", "first account must be a self-registered admin")
            else:
                if actor not in self.state.users:
                    raise DomainError("unknown-actor", f"no such user: {actor}")
                if not self._is_moderator(actor):
                    raise DomainError("forbidden", "only instructors or admins register users")
            if role not in ("student", "instructor", "auditor", "admin"):
                raise DomainError("invalid-role", f"bad role: {role}")
            if not name:
                raise DomainError("empty-name", "display name must be nonempty")
            if user_id in self.state.users:
                raise DomainError("duplicate-user", f"user exists: {user_id}")
            payload = {"user_id": user_id, "name": name, "role": role, "email": email}
            if secret is not None:
                salt_hex, digest = make_verifier(secret, salt)
                payload["secret_salt"] = salt_hex
                payload["secret_hash"] = digest
            self._append(actor, "user_registered", payload)
            return self.state.users[user_id]

    # -- ownership state machine ---------------------------------------------

    def create_entry(
        self,
        author: str,
        title: str,
        synonyms: list[str] | None = None,
        kind: str = "concept",
        content: str = "",
    ) -> Entry:
        with self._lock:
            self._user(author)
            if not title:
                raise DomainError("empty-title", "entry title must be nonempty")
            if kind not in ENTRY_KINDS:
                raise DomainError("invalid-kind", f"bad entry kind: {kind}")
            entry_id = self._next_id("e")
            self._append(
                author,
                "entry_created",
                {
                    "entry_id": entry_id,
                    "title": title,
                    "synonyms": list(synonyms or []),
                    "kind": kind,
                    "content": content,
                },
            )
            return self.state.entries[entry_id]

    def revise_entry(
        self,
        actor: str,
        entry_id: str,
        content: str,
        expected_revision: int | None = None,
    ) -> Entry:
        with self._lock:
            self._user(actor)
            entry = self._entry(entry_id)
            if entry.owner is None:
                raise DomainError("orphaned-entry", "entry is orphaned; adopt it first")
            if entry.owner != actor and not self._is_moderator(actor):
                raise not_owner(entry_id)
            if expected_revision is not None and expected_revision != entry.revision:
                raise DomainError(
                    "revision-conflict",
                    f"entry is at revision {entry.revision}, expected {expected_revision}",
                )
            self._append(
                actor,
                "entry_revised",
                {"entry_id": entry_id, "content": content, "revision": entry.revision + 1},
            )
            return entry

    def orphan_entry(self, actor: str, entry_id: str) -> Entry:
        with self._lock:
            self._user(actor)
            entry = self._entry(entry_id)
            if entry.owner is None:
                raise DomainError("already-orphaned", f"entry {entry_id} is already orphaned")
            if entry.owner == actor:
                self._append(actor, "entry_orphaned", {"entry_id": entry_id})
            elif self._is_moderator(actor):
                # Moderator override is a distinct event kind for the audit trail.
                self._append(
                    actor,
                    "entry_force_orphaned",
                    {"entry_id": entry_id, "previous_owner": entry.owner},
                )
            else:
                raise not_owner(entry_id)
            return entry

    def adopt_entry(self, actor: str, entry_id: str) -> Entry:
        with self._lock:
            self._user(actor)
            entry = self._entry(entry_id)
            if entry.owner is not None:
                raise DomainError("not-orphaned", f"entry {entry_id} has an owner")
            self._append(actor, "entry_adopted", {"entry_id": entry_id})
            return entry

    def transfer_entry(self, actor: str, entry_id: str, recipient: str) -> Entry:
        with self._lock:
            self._user(actor)
            entry = self._entry(entry_id)
            if entry.owner != actor:
                raise not_owner(entry_id)
            if recipient not in self.state.users:
                raise DomainError("unknown-recipient", f"no such user: {recipient}")
            if recipient == actor:
                raise DomainError("self-transfer", "cannot transfer an entry to yourself")
            self._append(actor, "entry_transferred", {"entry_id": entry_id, "to_user": recipient})
            return entry

    def review_entry(self, actor: str, entry_id: str, review_state: str) -> Entry:
        with self._lock:
            self._user(actor)
            entry = self._entry(entry_id)
            if not self._is_moderator(actor):
                raise DomainError("forbidden", "only instructors or admins set review state")
            if review_state not in REVIEW_STATES:
                raise DomainError("invalid-review-state", f"bad review state: {review_state}")
            self._append(
                actor, "entry_reviewed", {"entry_id": entry_id, "review_state": review_state}
            )
            return entry

    def list_entries(self) -> list[Entry]:
        with self._lock:
            return list(self.state.entries.values())

    def get_entry(self, entry_id: str) -> Entry:
        with self._lock:
            return self._entry(entry_id)

    def list_orphans(self) -> list[Entry]:
        with self._lock:
            return [e for e in self.state.entries.values() if e.owner is None]

    # -- corrections -----------------------------------------------------------

    def file_correction(self, filer: str, entry_id: str, text: str, severity: str = "improvement") -> Correction:
        with self._lock:
            self._user(filer)
            self._entry(entry_id)
            if not text:
                raise DomainError("empty-text", "correction text must be nonempty")
            if severity not in SEVERITIES:
                raise DomainError("invalid-severity", f"bad severity: {severity}")
            correction_id = self._next_id("c")
            self._append(
                filer,
                "correction_filed",
                {
                    "correction_id": correction_id,
                    "entry_id": entry_id,
                    "text": text,
                    "severity": severity,
                },
            )
            return self.state.corrections[correction_id]

    def resolve_correction(self, actor: str, correction_id: str, action: str, note: str) -> Correction:
        with self._lock:
            self._user(actor)
            correction = self.state.corrections.get(correction_id)
            if correction is None:
                raise DomainError("correction-missing", f"no such correction: {correction_id}")
            if correction.state == "resolved":
                raise DomainError("already-resolved", f"correction {correction_id} is resolved")
            entry = self._entry(correction.entry_id)
            if entry.owner != actor and not self._is_moderator(actor):
                raise not_owner(entry.id)
            if not action:
                raise DomainError("empty-action", "resolution action must be nonempty")
            if not note:
                raise DomainError("empty-action", "resolution note must be nonempty")
            self._append(
                actor,
                "correction_resolved",
                {"correction_id": correction_id, "action": action, "note": note},
            )
            return correction

    def open_corrections(self, entry_id: str) -> list[Correction]:
        """Open corrections for an entry, oldest first (the pinned display block)."""
        with self._lock:
            self._entry(entry_id)
            return [
                c
                for c in self.state.corrections.values()
                if c.entry_id == entry_id and c.state == "open"
            ]

    # -- requests ----------------------------------------------------------------

    def create_request(self, creator: str, title: str, description: str = "") -> Request:
        with self._lock:
            self._user(creator)
            if not title:
                raise DomainError("empty-title", "request title must be nonempty")
            request_id = self._next_id("r")
            self._append(
                creator,
                "request_created",
                {"request_id": request_id, "title": title, "description": description},
            )
            return self.state.requests[request_id]

    def fulfill_request(self, actor: str, request_id: str, entry_id: str) -> Request:
        with self._lock:
            self._user(actor)
            request = self.state.requests.get(request_id)
            if request is None:
                raise DomainError("request-missing", f"no such request: {request_id}")
            if request.state == "filled":
                raise DomainError("already-filled", f"request {request_id} is already filled")
            entry = self._entry(entry_id)
            if entry.owner != actor:
                raise DomainError("not-entry-owner", "only the entry's owner can fulfill with it")
            self._append(actor, "request_filled", {"request_id": request_id, "entry_id": entry_id})
            return request

    def list_requests(self, state_filter: str = "all") -> list[Request]:
        if state_filter not in ("active", "filled", "all"):
            raise DomainError("invalid-filter", f"bad request filter: {state_filter}")
        with self._lock:
            requests = sorted(self.state.requests.values(), key=lambda r: (r.created_at, r.id))
            if state_filter == "all":
                return requests
            return [r for r in requests if r.state == state_filter]

    # -- discussion ----------------------------------------------------------------

    def post_message(
        self, author: str, target_kind: str, target_id: str, subject: str, body: str
    ) -> Message:
        with self._lock:
            self._user(author)
            if target_kind not in REF_KINDS or not self.state.object_exists(target_kind, target_id):
                raise DomainError("unknown-target", f"no such {target_kind}: {target_id}")
            if not body:
                raise DomainError("empty-body", "message body must be nonempty")
            message_id = self._next_id("m")
            self._append(
                author,
                "message_posted",
                {
                    "message_id": message_id,
                    "target_kind": target_kind,
                    "target_id": target_id,
                    "subject": subject,
                    "body": body,
                },
            )
            return self.state.messages[message_id]

    def get_thread(self, anchor_kind: str, anchor_id: str) -> list[TreeNode]:
        """Full discussion tree under an anchor; children ordered by post time."""
        with self._lock:
            if anchor_kind not in REF_KINDS or not self.state.object_exists(anchor_kind, anchor_id):
                raise DomainError("unknown-anchor", f"no such {anchor_kind}: {anchor_id}")
            children: dict[tuple[str, str], list[Message]] = {}
            for message in self.state.messages.values():
                children.setdefault((message.target_kind, message.target_id), []).append(message)
            for siblings in children.values():
                siblings.sort(key=lambda m: (m.posted_at, m.id))

            def build(message: Message) -> TreeNode:
                kids = children.get(("message", message.id), [])
                return TreeNode(message=message, children=[build(k) for k in kids])

            return [build(m) for m in children.get((anchor_kind, anchor_id), [])]

    def display_subject(self, message: Message) -> str:
        """Replies without a subject inherit the root subject, Re:-prefixed."""
        if message.subject:
            return message.subject
        current = message
        while current.target_kind == "message":
            current = self.state.messages[current.target_id]
            if current.subject:
                return "Re: " + current.subject
        return "Re:"

    # -- watches and inbox ------------------------------------------------------------

    def add_watch(self, user_id: str, object_kind: str, object_id: str, channels: list[str]) -> Watch:
        with self._lock:
            self._user(user_id)
            if object_kind not in REF_KINDS or not self.state.object_exists(object_kind, object_id):
                raise DomainError("unknown-object", f"no such {object_kind}: {object_id}")
            channels = sorted(set(channels))
            if not channels or any(c not in CHANNELS for c in channels):
                raise DomainError("empty-channels", "channels must be a nonempty subset of inbox/email")
            self._append(
                user_id,
                "watch_added",
                {
                    "user_id": user_id,
                    "object_kind": object_kind,
                    "object_id": object_id,
                    "channels": channels,
                },
            )
            return self.state.watches[(user_id, object_kind, object_id)]

    def remove_watch(self, user_id: str, object_kind: str, object_id: str) -> None:
        with self._lock:
            self._user(user_id)
            if (user_id, object_kind, object_id) not in self.state.watches:
                raise DomainError("no-such-watch", "no watch on that object")
            self._append(
                user_id,
                "watch_removed",
                {"user_id": user_id, "object_kind": object_kind, "object_id": object_id},
            )

    def inbox(self, user_id: str, unread_only: bool = False) -> list[Notice]:
        with self._lock:
            self._user(user_id)
            notices = [n for n in self.state.notices.values() if n.user_id == user_id]
            if unread_only:
                notices = [n for n in notices if not n.read]
            notices.sort(key=lambda n: (n.created_at, n.event_seq, n.id), reverse=True)
            return notices

    def mark_read(self, user_id: str, notice_id: str) -> Notice:
        with self._lock:
            self._user(user_id)
            notice = self.state.notices.get(notice_id)
            if notice is None or notice.user_id != user_id:
                raise DomainError("not-your-notice", "notice does not exist or is not yours")
            if not notice.read:
                self._append(user_id, "notice_read", {"notice_id": notice_id})
            return notice
