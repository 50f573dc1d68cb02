#!/usr/bin/env python3
"""End-to-end demo: replay the bundled course log and print the reports a
course instructor would look at (scoreboard, closure timeline, TOC head)."""

import sys
from datetime import date
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from noosphere.assess import (  # noqa: E402
    closure_histogram,
    histogram_to_text,
    participation_report,
    report_to_text,
)
from noosphere.eventlog import read_log  # noqa: E402
from noosphere.export import compile_document, serialize  # noqa: E402
from noosphere.fixtures import build_course_notes_state  # noqa: E402
from noosphere.state import rebuild_state  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    records = read_log(ROOT / "fixtures" / "math5190.log")
    state = rebuild_state(records)
    print(f"replayed {len(records)} events: {len(state.entries)} entries, "
          f"{len(state.corrections)} corrections, {len(state.requests)} requests\n")

    print("participation (user, c0..c3, total):")
    print(report_to_text(participation_report(state)))

    histogram = closure_histogram(records, date(2003, 1, 1), date(2003, 4, 30))
    print("correction closures by day:")
    print(histogram_to_text(histogram))

    notes_state, collections, front = build_course_notes_state()
    doc = compile_document(notes_state, collections, front)
    toc = serialize(doc, "toc-text").decode()
    print("course notes TOC (first 10 lines):")
    print("\n".join(toc.splitlines()[:10]))


if __name__ == "__main__":
    main()
