#!/usr/bin/env python3
"""Regenerate the bundled fixtures.

- fixtures/math5190.log: full course-run event log (deterministic bytes).
- fixtures/course_notes_toc.golden.txt: expected toc-text for the compiled
  course notes, enumerated straight from the title tables (not produced by
  the document compiler, so it can catch compiler regressions).
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from noosphere.fixtures import build_math5190, golden_toc_lines  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    fixtures = ROOT / "fixtures"
    fixtures.mkdir(exist_ok=True)

    log_path = fixtures / "math5190.log"
    if log_path.exists():
        log_path.unlink()
    build_math5190(log_path=log_path)
    print(f"wrote {log_path}")

    golden = fixtures / "course_notes_toc.golden.txt"
    golden.write_text("\n".join(golden_toc_lines()) + "\n", encoding="utf-8")
    print(f"wrote {golden}")


if __name__ == "__main__":
    main()
