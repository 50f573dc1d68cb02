"""Participation scoring, the per-user score report, and the closure timeline.

Scores are a deterministic function of (content size class, open-correction
count, review state). Size thresholds are configurable because the class
boundaries are a judgment call; the class-to-score mapping is not:

    0  negligible content
    1  any real content below the developed threshold
    2  developed, but unresolved corrections or not yet approved
    3  developed, approved, and no outstanding corrections

A user's report row counts the entries they currently own (adoption moves
credit). The row total counts scored entries only, i.e. scores 1-3; the
score-0 column reports negligible stubs separately and is excluded from the
total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta, timezone

from .autolink import COMMENT, tokenize
from .errors import DomainError
from .model import Entry, EventRecord
from .state import MaterializedState


@dataclass
class RubricConfig:
    negligible_max_chars: int = 200
    developed_min_chars: int = 800

    def __post_init__(self):
        if not (0 < self.negligible_max_chars < self.developed_min_chars):
            raise DomainError(
                "invalid-rubric",
                "need 0 < negligible_max_chars < developed_min_chars",
            )


def content_size(content: str) -> int:
    """Non-whitespace content bytes outside comments."""
    total = 0
    for segment in tokenize(content).segments:
        if segment.kind == COMMENT:
            continue
        total += sum(len(ch.encode("utf-8")) for ch in segment.content if not ch.isspace())
    return total


def score_entry(entry: Entry, open_correction_count: int, config: RubricConfig) -> int:
    size = content_size(entry.content)
    if size <= config.negligible_max_chars:
        return 0
    if size >= config.developed_min_chars:
        if open_correction_count == 0 and entry.review_state == "approved":
            return 3
        return 2
    return 1


@dataclass
class ReportRow:
    user_id: str
    counts: list[int]  # histogram over scores 0..3

    @property
    def total(self) -> int:
        # Scored entries only; negligible stubs are reported but not totalled.
        return sum(self.counts[1:])


@dataclass
class ParticipationReport:
    rows: list[ReportRow]
    grand_counts: list[int] = field(default_factory=lambda: [0, 0, 0, 0])

    @property
    def grand_total(self) -> int:
        return sum(self.grand_counts[1:])

    @property
    def owned_entries(self) -> int:
        return sum(self.grand_counts)


def open_correction_counts(state: MaterializedState) -> dict[str, int]:
    counts: dict[str, int] = {}
    for correction in state.corrections.values():
        if correction.state == "open":
            counts[correction.entry_id] = counts.get(correction.entry_id, 0) + 1
    return counts


def participation_report(state: MaterializedState, config: RubricConfig | None = None) -> ParticipationReport:
    """One row per registered user over the entries they currently own.

    Users owning nothing get a zero row; orphaned entries count toward nobody.
    """
    config = config or RubricConfig()
    open_counts = open_correction_counts(state)
    rows = {user_id: ReportRow(user_id, [0, 0, 0, 0]) for user_id in state.users}
    grand = [0, 0, 0, 0]
    for entry in state.entries.values():
        if entry.owner is None:
            continue
        score = score_entry(entry, open_counts.get(entry.id, 0), config)
        rows[entry.owner].counts[score] += 1
        grand[score] += 1
    ordered = [rows[user_id] for user_id in sorted(rows)]
    return ParticipationReport(rows=ordered, grand_counts=grand)


def report_to_text(report: ParticipationReport, delimiter: str = "\t") -> str:
    """One row per user: id, c0, c1, c2, c3, total."""
    lines = []
    for row in report.rows:
        fields = [row.user_id, *map(str, row.counts), str(row.total)]
        lines.append(delimiter.join(fields))
    return "\n".join(lines) + "\n"


@dataclass
class ClosureHistogram:
    from_day: date
    to_day: date
    tz_offset_minutes: int
    days: dict[date, int]  # zero-count days omitted

    @property
    def total(self) -> int:
        return sum(self.days.values())

    @property
    def bunching_index(self) -> float | None:
        """Fraction of closures on the busiest 10% of closure days (ceil)."""
        if not self.days:
            return None
        busiest = sorted(self.days.items(), key=lambda kv: (-kv[1], kv[0]))
        k = math.ceil(0.10 * len(busiest))
        return sum(count for _, count in busiest[:k]) / self.total


def closure_histogram(
    records: list[EventRecord],
    from_day: date,
    to_day: date,
    tz_offset_minutes: int = 0,
) -> ClosureHistogram:
    """Bucket correction-resolution events by local calendar day."""
    if from_day > to_day:
        raise DomainError("invalid-range", f"{from_day} is after {to_day}")
    offset = timedelta(minutes=tz_offset_minutes)
    days: dict[date, int] = {}
    for record in records:
        if record.kind != "correction_resolved":
            continue
        day = (record.ts.astimezone(timezone.utc) + offset).date()
        if from_day <= day <= to_day:
            days[day] = days.get(day, 0) + 1
    return ClosureHistogram(
        from_day=from_day,
        to_day=to_day,
        tz_offset_minutes=tz_offset_minutes,
        days=dict(sorted(days.items())),
    )


def histogram_to_text(histogram: ClosureHistogram) -> str:
    """(day, count) pairs, then the bunching index."""
    lines = [f"{day.isoformat()}\t{count}" for day, count in histogram.days.items()]
    bunching = histogram.bunching_index
    lines.append(f"bunching_index\t{'' if bunching is None else f'{bunching:.4f}'}")
    return "\n".join(lines) + "\n"
