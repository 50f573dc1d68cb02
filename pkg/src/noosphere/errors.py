"""Domain errors carrying machine-readable codes.

Every precondition failure in the engine raises DomainError with a stable
``code`` string; the HTTP layer maps codes to status classes, the CLI maps
them to exit codes.
"""

from __future__ import annotations


class DomainError(Exception):
    """Engine precondition violation."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message

    def __repr__(self) -> str:  # pragma: no cover
        return f"DomainError({self.code!r}, {self.message!r})"


class CorruptRecord(Exception):
    """Event log record is malformed or out of sequence; carries the offending seq."""

    def __init__(self, seq: int, message: str):
        super().__init__(f"corrupt record at seq {seq}: {message}")
        self.seq = seq
        self.message = message


def unknown_actor(user_id: str) -> DomainError:
    return DomainError("unknown-actor", f"no such user: {user_id}")


def unknown_user(user_id: str) -> DomainError:
    return DomainError("unknown-user", f"no such user: {user_id}")


def entry_missing(entry_id: str) -> DomainError:
    return DomainError("entry-missing", f"no such entry: {entry_id}")


def not_owner(entry_id: str) -> DomainError:
    return DomainError("not-owner", f"actor does not own entry {entry_id}")
