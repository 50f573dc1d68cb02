"""The ownership state machine: create, orphan, adopt, transfer."""

import random
import threading

import pytest

from noosphere.errors import DomainError

from .driver import seeded_engine


def test_create_sets_owner_and_revision(eng):
    entry = eng.create_entry("alice", "Metric space", ["metric"], "concept", "d(x,y)")
    assert entry.owner == "alice"
    assert entry.revision == 1
    assert entry.review_state == "unreviewed"


def test_create_empty_title(eng):
    with pytest.raises(DomainError) as err:
        eng.create_entry("alice", "")
    assert err.value.code == "empty-title"


def test_create_unknown_user(eng):
    with pytest.raises(DomainError) as err:
        eng.create_entry("mallory", "Curve")
    assert err.value.code == "unknown-user"


def test_orphan_then_adopt(eng):
    entry = eng.create_entry("teach", "Flows problem 1", [], "exercise", "solve it")
    eng.orphan_entry("teach", entry.id)
    assert eng.get_entry(entry.id).owner is None
    assert [e.id for e in eng.list_orphans()] == [entry.id]
    eng.adopt_entry("alice", entry.id)
    assert eng.get_entry(entry.id).owner == "alice"
    assert eng.list_orphans() == []


def test_orphan_requires_ownership(eng):
    entry = eng.create_entry("teach", "Linear ODE")
    with pytest.raises(DomainError) as err:
        eng.orphan_entry("alice", entry.id)
    assert err.value.code == "not-owner"
    assert eng.get_entry(entry.id).owner == "teach"


def test_double_orphan_rejected(eng):
    entry = eng.create_entry("alice", "Curve")
    eng.orphan_entry("alice", entry.id)
    with pytest.raises(DomainError) as err:
        eng.orphan_entry("alice", entry.id)
    assert err.value.code == "already-orphaned"


def test_moderator_force_orphan_uses_distinct_event(eng):
    entry = eng.create_entry("alice", "Jacobian")
    eng.orphan_entry("teach", entry.id)  # instructor override
    assert eng.records[-1].kind == "entry_force_orphaned"
    assert eng.records[-1].payload["previous_owner"] == "alice"
    assert eng.get_entry(entry.id).owner is None


def test_adopt_owned_entry_rejected(eng):
    entry = eng.create_entry("alice", "Supremum")
    with pytest.raises(DomainError) as err:
        eng.adopt_entry("bob", entry.id)
    assert err.value.code == "not-orphaned"
    assert eng.get_entry(entry.id).owner == "alice"


def test_adopt_back_after_own_orphan_is_allowed(eng):
    entry = eng.create_entry("alice", "Push forward")
    eng.orphan_entry("alice", entry.id)
    eng.adopt_entry("alice", entry.id)
    assert eng.get_entry(entry.id).owner == "alice"


def test_transfer(eng):
    entry = eng.create_entry("alice", "Vector field")
    eng.transfer_entry("alice", entry.id, "bob")
    assert eng.get_entry(entry.id).owner == "bob"


def test_transfer_to_self_rejected(eng):
    entry = eng.create_entry("alice", "Homogeneous equation")
    with pytest.raises(DomainError) as err:
        eng.transfer_entry("alice", entry.id, "alice")
    assert err.value.code == "self-transfer"


def test_transfer_unknown_recipient(eng):
    entry = eng.create_entry("alice", "Integral curve")
    with pytest.raises(DomainError) as err:
        eng.transfer_entry("alice", entry.id, "mallory")
    assert err.value.code == "unknown-recipient"


def test_transfer_of_orphan_rejected(eng):
    entry = eng.create_entry("alice", "Lipschitz")
    eng.orphan_entry("alice", entry.id)
    with pytest.raises(DomainError) as err:
        eng.transfer_entry("alice", entry.id, "bob")
    assert err.value.code == "not-owner"


def test_revise_by_owner_and_moderator(eng):
    entry = eng.create_entry("alice", "Symmetry", [], "concept", "v1")
    eng.revise_entry("alice", entry.id, "v2")
    assert eng.get_entry(entry.id).revision == 2
    eng.revise_entry("teach", entry.id, "v3")  # instructor may revise
    assert eng.get_entry(entry.id).revision == 3


def test_revise_by_stranger_rejected(eng):
    entry = eng.create_entry("alice", "Compact")
    with pytest.raises(DomainError) as err:
        eng.revise_entry("bob", entry.id, "hijack")
    assert err.value.code == "not-owner"


def test_revise_orphaned_requires_adoption_first(eng):
    entry = eng.create_entry("alice", "Curve")
    eng.orphan_entry("alice", entry.id)
    with pytest.raises(DomainError) as err:
        eng.revise_entry("teach", entry.id, "even moderators cannot")
    assert err.value.code == "orphaned-entry"


def test_revise_compare_and_set(eng):
    entry = eng.create_entry("alice", "Determining equation", [], "concept", "v1")
    eng.revise_entry("alice", entry.id, "v2", expected_revision=1)
    with pytest.raises(DomainError) as err:
        eng.revise_entry("alice", entry.id, "stale", expected_revision=1)
    assert err.value.code == "revision-conflict"
    assert eng.get_entry(entry.id).content == "v2"


def test_concurrent_adoption_exactly_one_winner(eng):
    # oracle: in both serialized orders, exactly one adopt succeeds
    entry = eng.create_entry("teach", "Flows problem 2", [], "exercise", "x")
    eng.orphan_entry("teach", entry.id)
    results = {}
    barrier = threading.Barrier(2)

    def adopt(user):
        barrier.wait()
        try:
            eng.adopt_entry(user, entry.id)
            results[user] = "ok"
        except DomainError as exc:
            results[user] = exc.code

    threads = [threading.Thread(target=adopt, args=(u,)) for u in ("alice", "bob")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(results.values()) == ["not-orphaned", "ok"]
    assert eng.get_entry(entry.id).owner in ("alice", "bob")


def _ownership_snapshot(engine):
    return {
        eid: (e.owner, e.revision) for eid, e in engine.state.entries.items()
    } | {"_seq": engine.state.last_seq}


@pytest.mark.parametrize("seed", range(8))
def test_random_sequences_preserve_ownership_invariants(seed):
    """Smaller cousin of the acceptance property suite (which runs 10k)."""
    engine, users, clock = seeded_engine()
    rng = random.Random(seed)
    user_ids = set(users)
    for _ in range(120):
        clock.advance(60)
        before = _ownership_snapshot(engine)
        eid = rng.choice(list(engine.state.entries)) if engine.state.entries else None
        op = rng.randrange(5)
        try:
            if op == 0 or eid is None:
                engine.create_entry(rng.choice(users), "Entry " + str(rng.random()))
            elif op == 1:
                engine.orphan_entry(rng.choice(users), eid)
            elif op == 2:
                engine.adopt_entry(rng.choice(users), eid)
            elif op == 3:
                engine.transfer_entry(rng.choice(users), eid, rng.choice(users))
            else:
                engine.revise_entry(rng.choice(users), eid, "r" + str(rng.random()))
        except DomainError:
            # rejected transition must leave everything untouched
            assert _ownership_snapshot(engine) == before
        for entry in engine.state.entries.values():
            assert entry.owner is None or entry.owner in user_ids
