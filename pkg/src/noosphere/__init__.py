"""Noösphere-style collaborative knowledge-base engine.

Event-sourced core (entries, ownership, corrections, requests, discussion,
notices), a LaTeX-aware concept autolinker, participation scoring, course
notes export, and an HTTP/JSON service with an operator CLI.
"""

from .engine import Engine
from .errors import CorruptRecord, DomainError
from .eventlog import ManualClock, UtcClock, read_log
from .state import MaterializedState, canonical_bytes, rebuild_state

__all__ = [
    "Engine",
    "DomainError",
    "CorruptRecord",
    "ManualClock",
    "UtcClock",
    "read_log",
    "MaterializedState",
    "rebuild_state",
    "canonical_bytes",
]

__version__ = "0.1.0"
