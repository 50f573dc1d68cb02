"""HTTP/JSON API over the engine.

All mutations require a session token and funnel into single engine
commands; reads are anonymous (the critique lives in the open). Engine
precondition failures surface as 4xx responses carrying the machine-readable
error code; unknown request fields are rejected.
"""

from __future__ import annotations

import secrets
import threading
from contextlib import asynccontextmanager
from datetime import datetime, timedelta, timezone

from fastapi import Depends, FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .assess import RubricConfig, closure_histogram, participation_report
from .autolink import build_index, link, tokenize
from .config import Config
from .engine import Engine, check_secret
from .errors import DomainError
from .eventlog import format_ts, parse_ts
from .export import FrontMatter, compile_document, load_collections, serialize
from .model import Correction, Entry, Message, Notice, Request as RequestObj, TreeNode, User, Watch

# error code -> HTTP status; anything unlisted is a 400
ERROR_STATUS = {
    "entry-missing": 404,
    "request-missing": 404,
    "correction-missing": 404,
    "unknown-object": 404,
    "unknown-target": 404,
    "unknown-anchor": 404,
    "unknown-user": 404,
    "unknown-recipient": 404,
    "unknown-actor": 404,
    "no-such-watch": 404,
    "not-your-notice": 404,
    "not-owner": 403,
    "not-entry-owner": 403,
    "forbidden": 403,
    "already-orphaned": 409,
    "not-orphaned": 409,
    "already-resolved": 409,
    "already-filled": 409,
    "revision-conflict": 409,
    "orphaned-entry": 409,
    "duplicate-user": 409,
    "bad-credentials": 401,
    "authentication-required": 401,
}


class SessionStore:
    def __init__(self, ttl_seconds: int):
        self.ttl = ttl_seconds
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple[str, datetime]] = {}

    def issue(self, user_id: str) -> tuple[str, datetime]:
        token = secrets.token_urlsafe(24)
        expires = datetime.now(timezone.utc) + timedelta(seconds=self.ttl)
        with self._lock:
            self._sessions[token] = (user_id, expires)
        return token, expires

    def resolve(self, token: str) -> str | None:
        with self._lock:
            record = self._sessions.get(token)
            if record is None:
                return None
            user_id, expires = record
            if datetime.now(timezone.utc) >= expires:
                del self._sessions[token]
                return None
            return user_id


# -- request bodies (unknown fields rejected) ---------------------------------


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LoginBody(StrictModel):
    user: str
    secret: str


class EntryCreateBody(StrictModel):
    title: str
    synonyms: list[str] = []
    kind: str = "concept"
    content: str = ""


class EntryReviseBody(StrictModel):
    content: str
    expected_revision: int | None = None


class TransferBody(StrictModel):
    recipient: str


class ReviewBody(StrictModel):
    review_state: str


class CorrectionBody(StrictModel):
    text: str
    severity: str = "improvement"


class ResolveBody(StrictModel):
    action: str
    note: str


class RequestBody(StrictModel):
    title: str
    description: str = ""


class FulfillBody(StrictModel):
    entry: str


class MessageBody(StrictModel):
    target_kind: str
    target_id: str
    subject: str = ""
    body: str


class WatchBody(StrictModel):
    object_kind: str
    object_id: str
    channels: list[str]


# -- serializers ----------------------------------------------------------------


def _ts(value: datetime | None) -> str | None:
    return None if value is None else format_ts(value)


def user_payload(user: User) -> dict:
    return {"id": user.id, "name": user.name, "role": user.role}


def entry_summary(entry: Entry, open_count: int) -> dict:
    return {
        "id": entry.id,
        "title": entry.title,
        "synonyms": entry.synonyms,
        "kind": entry.kind,
        "owner": entry.owner,
        "revision": entry.revision,
        "review_state": entry.review_state,
        "created_at": _ts(entry.created_at),
        "updated_at": _ts(entry.updated_at),
        "open_corrections": open_count,
    }


def correction_payload(c: Correction) -> dict:
    return {
        "id": c.id,
        "entry_id": c.entry_id,
        "filer": c.filer,
        "text": c.text,
        "severity": c.severity,
        "state": c.state,
        "action_taken": c.action_taken,
        "resolution_note": c.resolution_note,
        "filed_at": _ts(c.filed_at),
        "resolved_at": _ts(c.resolved_at),
    }


def request_payload(r: RequestObj) -> dict:
    return {
        "id": r.id,
        "title": r.title,
        "description": r.description,
        "creator": r.creator,
        "state": r.state,
        "filled_by": r.filled_by,
        "created_at": _ts(r.created_at),
        "filled_at": _ts(r.filled_at),
    }


def message_payload(m: Message) -> dict:
    return {
        "id": m.id,
        "target_kind": m.target_kind,
        "target_id": m.target_id,
        "author": m.author,
        "subject": m.subject,
        "body": m.body,
        "posted_at": _ts(m.posted_at),
    }


def tree_payload(node: TreeNode) -> dict:
    return {
        "message": message_payload(node.message),
        "children": [tree_payload(child) for child in node.children],
    }


def notice_payload(n: Notice) -> dict:
    return {
        "id": n.id,
        "user_id": n.user_id,
        "event_seq": n.event_seq,
        "summary": n.summary,
        "cause": n.cause,
        "read": n.read,
        "created_at": _ts(n.created_at),
    }


def watch_payload(w: Watch) -> dict:
    return {
        "user_id": w.user_id,
        "object_kind": w.object_kind,
        "object_id": w.object_id,
        "channels": w.channels,
    }


def create_app(engine: Engine, config: Config) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        engine.close()  # flush the log and the mail outbox on shutdown

    app = FastAPI(title="noosphere", version="0.1.0", lifespan=lifespan)
    sessions = SessionStore(config.session_ttl_seconds)
    rubric = RubricConfig(config.negligible_max_chars, config.developed_min_chars)
    front = FrontMatter(
        title=config.front_matter_title,
        subtitle=config.front_matter_subtitle,
        institution=config.front_matter_institution,
        date=config.front_matter_date,
    )

    @app.exception_handler(DomainError)
    async def domain_error_handler(_req: Request, exc: DomainError):
        status = ERROR_STATUS.get(exc.code, 400)
        return JSONResponse(
            status_code=status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "error": {"code": "invalid-request", "message": str(exc.errors()[:3])}
            },
        )

    def require_user(request: Request) -> str:
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer "):
            raise DomainError("authentication-required", "missing bearer token")
        user_id = sessions.resolve(header[len("Bearer ") :])
        if user_id is None:
            raise DomainError("authentication-required", "invalid or expired token")
        return user_id

    def open_counts() -> dict[str, int]:
        counts: dict[str, int] = {}
        for c in engine.state.corrections.values():
            if c.state == "open":
                counts[c.entry_id] = counts.get(c.entry_id, 0) + 1
        return counts

    # -- sessions -------------------------------------------------------------

    @app.post("/v1/login")
    def login(body: LoginBody):
        user = engine.state.users.get(body.user)
        # always run the verifier so unknown users cost the same as bad secrets
        probe = user if user is not None else User(id="", name="", role="student", email="")
        if not check_secret(probe, body.secret):
            raise DomainError("bad-credentials", "bad credentials")
        token, expires = sessions.issue(user.id)
        return {"token": token, "user_id": user.id, "role": user.role, "expires_at": _ts(expires)}

    # -- entries ---------------------------------------------------------------

    @app.get("/v1/entries")
    def list_entries():
        counts = open_counts()
        return {
            "entries": [
                entry_summary(e, counts.get(e.id, 0)) for e in engine.list_entries()
            ]
        }

    @app.post("/v1/entries")
    def create_entry(body: EntryCreateBody, user: str = Depends(require_user)):
        entry = engine.create_entry(user, body.title, body.synonyms, body.kind, body.content)
        return get_entry(entry.id)

    @app.get("/v1/entries/{entry_id}")
    def get_entry(entry_id: str):
        entry = engine.get_entry(entry_id)
        index = build_index(engine.list_entries())
        tk = tokenize(entry.content)
        linked = link(entry, index, tk)
        payload = entry_summary(entry, len(engine.open_corrections(entry_id)))
        payload.update(
            {
                "content": entry.content,
                "links": [
                    {"start": s.start, "end": s.end, "target": s.target}
                    for s in linked.links
                ],
                "corrections": [
                    correction_payload(c) for c in engine.open_corrections(entry_id)
                ],
                "thread": [tree_payload(n) for n in engine.get_thread("entry", entry_id)],
                "diagnostics": linked.diagnostics,
            }
        )
        return payload

    @app.put("/v1/entries/{entry_id}")
    def revise_entry(entry_id: str, body: EntryReviseBody, user: str = Depends(require_user)):
        entry = engine.revise_entry(user, entry_id, body.content, body.expected_revision)
        return entry_summary(entry, len(engine.open_corrections(entry_id)))

    @app.post("/v1/entries/{entry_id}/orphan")
    def orphan_entry(entry_id: str, user: str = Depends(require_user)):
        return entry_summary(engine.orphan_entry(user, entry_id), 0)

    @app.post("/v1/entries/{entry_id}/adopt")
    def adopt_entry(entry_id: str, user: str = Depends(require_user)):
        entry = engine.adopt_entry(user, entry_id)
        return entry_summary(entry, len(engine.open_corrections(entry_id)))

    @app.post("/v1/entries/{entry_id}/transfer")
    def transfer_entry(entry_id: str, body: TransferBody, user: str = Depends(require_user)):
        entry = engine.transfer_entry(user, entry_id, body.recipient)
        return entry_summary(entry, len(engine.open_corrections(entry_id)))

    @app.post("/v1/entries/{entry_id}/review")
    def review_entry(entry_id: str, body: ReviewBody, user: str = Depends(require_user)):
        entry = engine.review_entry(user, entry_id, body.review_state)
        return entry_summary(entry, len(engine.open_corrections(entry_id)))

    @app.get("/v1/orphans")
    def list_orphans():
        counts = open_counts()
        return {
            "entries": [
                entry_summary(e, counts.get(e.id, 0)) for e in engine.list_orphans()
            ]
        }

    # -- corrections --------------------------------------------------------------

    @app.post("/v1/entries/{entry_id}/corrections")
    def file_correction(entry_id: str, body: CorrectionBody, user: str = Depends(require_user)):
        return correction_payload(
            engine.file_correction(user, entry_id, body.text, body.severity)
        )

    @app.post("/v1/corrections/{correction_id}/resolve")
    def resolve_correction(correction_id: str, body: ResolveBody, user: str = Depends(require_user)):
        return correction_payload(
            engine.resolve_correction(user, correction_id, body.action, body.note)
        )

    # -- requests -------------------------------------------------------------------

    @app.get("/v1/requests")
    def list_requests(filter: str = "all"):
        return {"requests": [request_payload(r) for r in engine.list_requests(filter)]}

    @app.post("/v1/requests")
    def create_request(body: RequestBody, user: str = Depends(require_user)):
        return request_payload(engine.create_request(user, body.title, body.description))

    @app.post("/v1/requests/{request_id}/fulfill")
    def fulfill_request(request_id: str, body: FulfillBody, user: str = Depends(require_user)):
        return request_payload(engine.fulfill_request(user, request_id, body.entry))

    # -- discussion --------------------------------------------------------------------

    @app.post("/v1/messages")
    def post_message(body: MessageBody, user: str = Depends(require_user)):
        message = engine.post_message(user, body.target_kind, body.target_id, body.subject, body.body)
        return message_payload(message)

    @app.get("/v1/threads")
    def get_thread(anchor: str):
        kind, _, object_id = anchor.partition(":")
        if not object_id:
            raise DomainError("unknown-anchor", "anchor must look like kind:id")
        return {"thread": [tree_payload(n) for n in engine.get_thread(kind, object_id)]}

    # -- watches and inbox ------------------------------------------------------------------

    @app.put("/v1/watches")
    def add_watch(body: WatchBody, user: str = Depends(require_user)):
        return watch_payload(
            engine.add_watch(user, body.object_kind, body.object_id, body.channels)
        )

    @app.delete("/v1/watches")
    def remove_watch(object_kind: str, object_id: str, user: str = Depends(require_user)):
        engine.remove_watch(user, object_kind, object_id)
        return Response(status_code=204)

    @app.get("/v1/inbox")
    def inbox(filter: str = "all", user: str = Depends(require_user)):
        if filter not in ("all", "unread"):
            raise DomainError("invalid-filter", f"bad inbox filter: {filter}")
        notices = engine.inbox(user, unread_only=filter == "unread")
        return {"notices": [notice_payload(n) for n in notices]}

    @app.post("/v1/notices/{notice_id}/read")
    def mark_read(notice_id: str, user: str = Depends(require_user)):
        return notice_payload(engine.mark_read(user, notice_id))

    # -- reports and export ----------------------------------------------------------------

    @app.get("/v1/reports/participation")
    def report_participation():
        report = participation_report(engine.state, rubric)
        return {
            "rows": [
                {
                    "user": row.user_id,
                    "c0": row.counts[0],
                    "c1": row.counts[1],
                    "c2": row.counts[2],
                    "c3": row.counts[3],
                    "total": row.total,
                }
                for row in report.rows
            ],
            "grand": {
                "c0": report.grand_counts[0],
                "c1": report.grand_counts[1],
                "c2": report.grand_counts[2],
                "c3": report.grand_counts[3],
                "total": report.grand_total,
                "owned_entries": report.owned_entries,
            },
        }

    @app.get("/v1/reports/closures")
    def report_closures(
        from_raw: str | None = Query(None, alias="from"),
        to_raw: str | None = Query(None, alias="to"),
    ):
        records = engine.records
        days = [r.ts.date() for r in records if r.kind == "correction_resolved"]
        try:
            from_day = (
                parse_ts(from_raw + "T00:00:00Z").date()
                if from_raw
                else (min(days) if days else datetime.now(timezone.utc).date())
            )
            to_day = (
                parse_ts(to_raw + "T00:00:00Z").date()
                if to_raw
                else (max(days) if days else from_day)
            )
        except ValueError as exc:
            raise DomainError("invalid-range", f"bad day: {exc}")
        histogram = closure_histogram(records, from_day, to_day, config.tz_offset_minutes)
        return {
            "from": histogram.from_day.isoformat(),
            "to": histogram.to_day.isoformat(),
            "tz_offset_minutes": histogram.tz_offset_minutes,
            "days": [
                {"day": day.isoformat(), "count": count}
                for day, count in histogram.days.items()
            ],
            "total": histogram.total,
            "bunching_index": histogram.bunching_index,
        }

    def _document_bytes(fmt: str) -> bytes:
        collections = (
            load_collections(config.collections_file) if config.collections_file else []
        )
        doc = compile_document(engine.state, collections, front, rubric)
        return serialize(doc, fmt)

    @app.get("/v1/export/notes.tex")
    def export_notes():
        return Response(content=_document_bytes("latex"), media_type="application/x-tex")

    @app.get("/v1/export/toc")
    def export_toc():
        return Response(
            content=_document_bytes("toc-text"), media_type="text/plain; charset=utf-8"
        )

    return app
