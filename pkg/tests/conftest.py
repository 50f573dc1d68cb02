from datetime import datetime, timezone
from pathlib import Path

import pytest

from noosphere import Engine, ManualClock
from noosphere.fixtures import build_math5190

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"


@pytest.fixture
def clock():
    return ManualClock(datetime(2003, 1, 6, 9, 0, 0, tzinfo=timezone.utc))


@pytest.fixture
def eng(clock):
    """Engine with a small seeded roster."""
    e = Engine(clock=clock)
    e.register_user("admin", "admin", "Site Admin", "admin", "admin@example.edu", secret="pw")
    e.register_user("admin", "teach", "Teacher", "instructor", "teach@example.edu", secret="pw")
    e.register_user("admin", "alice", "Alice", "student", "alice@example.edu", secret="pw")
    e.register_user("admin", "bob", "Bob", "student", "bob@example.edu", secret="pw")
    e.register_user("admin", "carol", "Carol", "auditor", "carol@example.edu", secret="pw")
    return e


@pytest.fixture(scope="session")
def math5190():
    """The full course-run fixture, built once per test session."""
    return build_math5190()


@pytest.fixture(scope="session")
def math5190_log_path():
    path = FIXTURES / "math5190.log"
    assert path.exists(), "run scripts/make_fixtures.py first"
    return path


@pytest.fixture(scope="session")
def golden_toc_path():
    path = FIXTURES / "course_notes_toc.golden.txt"
    assert path.exists(), "run scripts/make_fixtures.py first"
    return path
