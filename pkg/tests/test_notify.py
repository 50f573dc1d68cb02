"""Watches, fan-out dedup rules, the inbox, and the mail sinks."""

import json

import pytest

from noosphere import Engine
from noosphere.errors import DomainError
from noosphere.model import MailMessage
from noosphere.notify import FileMailSink, MailSink, Outbox


@pytest.fixture
def entry(eng):
    return eng.create_entry("alice", "Integrating factor", [], "concept", "multiply through")


def test_watch_produces_notices_on_events(eng, entry, clock):
    eng.add_watch("carol", "entry", entry.id, ["inbox"])
    clock.advance(60)
    eng.revise_entry("alice", entry.id, "multiply through by mu")
    notices = eng.inbox("carol")
    assert len(notices) == 1
    assert notices[0].cause == "watch"
    assert "revised" in notices[0].summary


def test_duplicate_add_updates_channels(eng, entry):
    eng.add_watch("carol", "entry", entry.id, ["inbox"])
    eng.add_watch("carol", "entry", entry.id, ["email"])
    watches = [w for w in eng.state.watches.values() if w.user_id == "carol"]
    assert len(watches) == 1
    assert watches[0].channels == ["email"]


def test_remove_missing_watch(eng, entry):
    with pytest.raises(DomainError) as err:
        eng.remove_watch("carol", "entry", entry.id)
    assert err.value.code == "no-such-watch"


def test_empty_channels_rejected(eng, entry):
    with pytest.raises(DomainError) as err:
        eng.add_watch("carol", "entry", entry.id, [])
    assert err.value.code == "empty-channels"


def test_watch_on_missing_object(eng):
    with pytest.raises(DomainError) as err:
        eng.add_watch("carol", "entry", "e31337", ["inbox"])
    assert err.value.code == "unknown-object"


def test_no_self_notices(eng, entry, clock):
    eng.add_watch("alice", "entry", entry.id, ["inbox"])
    clock.advance(10)
    eng.revise_entry("alice", entry.id, "self edit")
    assert eng.inbox("alice") == []


def test_removing_watch_keeps_past_notices(eng, entry, clock):
    eng.add_watch("carol", "entry", entry.id, ["inbox"])
    clock.advance(10)
    eng.revise_entry("alice", entry.id, "v2")
    assert len(eng.inbox("carol")) == 1
    eng.remove_watch("carol", "entry", entry.id)
    assert len(eng.inbox("carol")) == 1
    clock.advance(10)
    eng.revise_entry("alice", entry.id, "v3")
    assert len(eng.inbox("carol")) == 1  # no new notice after removal


def test_inbox_newest_first_and_unread_filter(eng, entry, clock):
    eng.add_watch("carol", "entry", entry.id, ["inbox"])
    for i in range(3):
        clock.advance(60)
        eng.revise_entry("alice", entry.id, f"v{i + 2}")
    inbox = eng.inbox("carol")
    assert [n.event_seq for n in inbox] == sorted([n.event_seq for n in inbox], reverse=True)
    eng.mark_read("carol", inbox[0].id)
    unread = eng.inbox("carol", unread_only=True)
    assert len(unread) == 2


def test_mark_read_idempotent_and_ownership(eng, entry, clock):
    eng.add_watch("carol", "entry", entry.id, ["inbox"])
    clock.advance(5)
    eng.revise_entry("alice", entry.id, "v2")
    notice = eng.inbox("carol")[0]
    eng.mark_read("carol", notice.id)
    again = eng.mark_read("carol", notice.id)  # no error, still read
    assert again.read
    with pytest.raises(DomainError) as err:
        eng.mark_read("bob", notice.id)
    assert err.value.code == "not-your-notice"


def test_fresh_user_has_empty_inbox(eng):
    assert eng.inbox("bob") == []


def test_file_mail_sink_format(tmp_path, clock):
    sink_path = tmp_path / "outbound.mail"
    eng = Engine(clock=clock, sink=FileMailSink(sink_path))
    eng.register_user("admin", "admin", "Admin", "admin", "admin@example.edu")
    eng.register_user("admin", "teach", "Teacher", "instructor", "teach@example.edu")
    eng.register_user("admin", "alice", "Alice", "student", "alice@example.edu")
    entry = eng.create_entry("alice", "Slope field", [], "concept", "arrows everywhere")
    clock.advance(30)
    eng.file_correction("teach", entry.id, "Needs a picture.", "improvement")
    lines = [json.loads(line) for line in sink_path.read_text().splitlines()]
    assert len(lines) == 1
    message = lines[0]
    assert set(message) == {"to", "subject", "body", "event_seq"}
    assert message["to"] == "alice@example.edu"
    assert message["event_seq"] == eng.state.last_seq


def test_watch_email_channel_reaches_sink(tmp_path, clock):
    sink_path = tmp_path / "outbound.mail"
    eng = Engine(clock=clock, sink=FileMailSink(sink_path))
    eng.register_user("admin", "admin", "Admin", "admin", "admin@example.edu")
    eng.register_user("admin", "alice", "Alice", "student", "alice@example.edu")
    eng.register_user("admin", "carol", "Carol", "auditor", "carol@example.edu")
    entry = eng.create_entry("alice", "Phase portrait", [], "concept", "saddle")
    eng.add_watch("carol", "entry", entry.id, ["inbox", "email"])
    clock.advance(30)
    eng.revise_entry("alice", entry.id, "saddle and node")
    recipients = [json.loads(l)["to"] for l in sink_path.read_text().splitlines()]
    assert recipients == ["carol@example.edu"]


class FlakySink(MailSink):
    def __init__(self, fail_times: int):
        self.fail_times = fail_times
        self.delivered: list[MailMessage] = []

    def deliver(self, message: MailMessage) -> None:
        if self.fail_times > 0:
            self.fail_times -= 1
            raise OSError("sink down")
        self.delivered.append(message)


def test_outbox_retries_until_delivered():
    sink = FlakySink(fail_times=2)
    outbox = Outbox(sink)
    outbox.enqueue(MailMessage(to="x@example.edu", subject="s", body="b", event_seq=1))
    assert outbox.flush() == 0
    assert outbox.flush() == 0
    assert outbox.flush() == 1
    assert outbox.pending == []
    assert len(sink.delivered) == 1
