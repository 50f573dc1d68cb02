"""Operator CLI: serve, replay, report, export, user-add.

Exit codes: 0 success, 1 usage error, 2 data error (corrupt log, bad store,
failed precondition).
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

from .assess import (
    RubricConfig,
    closure_histogram,
    histogram_to_text,
    participation_report,
    report_to_text,
)
from .config import Config, load_config
from .engine import Engine
from .errors import CorruptRecord, DomainError
from .eventlog import read_log, write_snapshot_lines
from .export import FrontMatter, compile_document, load_collections, serialize
from .fixtures import build_math5190
from .notify import FileMailSink, NullMailSink
from .state import canonical_lines, rebuild_state

REPORT_KINDS = ("participation", "closures", "export")


class Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def build_parser() -> Parser:
    parser = Parser(prog="noosphere", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", help="path to JSON config file")
    serve.add_argument("--data-dir", help="override the configured data directory")

    replay = sub.add_parser("replay", help="rebuild state from an event log file")
    replay.add_argument("log_file")
    replay.add_argument("--out", default="replay-out", help="output directory")
    replay.add_argument(
        "--report",
        action="append",
        choices=REPORT_KINDS,
        help="report to emit (repeatable; default: all)",
    )
    replay.add_argument("--config", help="path to JSON config file")
    replay.add_argument("--from", dest="from_day", help="closures window start (YYYY-MM-DD)")
    replay.add_argument("--to", dest="to_day", help="closures window end (YYYY-MM-DD)")
    replay.add_argument("--collections", help="collections JSON for the export report")

    report = sub.add_parser("report", help="print a report for a data directory")
    report.add_argument("kind", choices=("participation", "closures"))
    report.add_argument("--data-dir", required=True)
    report.add_argument("--config", help="path to JSON config file")
    report.add_argument("--from", dest="from_day")
    report.add_argument("--to", dest="to_day")

    export = sub.add_parser("export", help="write notes.tex and notes.toc.txt")
    export.add_argument("--data-dir", required=True)
    export.add_argument("--out", default=".", help="output directory")
    export.add_argument("--config", help="path to JSON config file")
    export.add_argument("--collections", help="collections JSON file")

    user_add = sub.add_parser("user-add", help="register a user in a data directory")
    user_add.add_argument("--data-dir", required=True)
    user_add.add_argument("--id", required=True)
    user_add.add_argument("--name", required=True)
    user_add.add_argument("--role", required=True, choices=("student", "instructor", "auditor", "admin"))
    user_add.add_argument("--email", default="")
    user_add.add_argument("--secret")
    user_add.add_argument("--actor", default="admin", help="registering moderator (default admin)")

    fixture = sub.add_parser("fixture", help="regenerate the bundled demo event log")
    fixture.add_argument("--out", default="fixtures/math5190.log")

    return parser


def _config(args) -> Config:
    config = load_config(args.config) if getattr(args, "config", None) else Config()
    if getattr(args, "data_dir", None):
        config.data_dir = args.data_dir
    return config


def _day(raw: str | None, fallback):
    if raw is None:
        return fallback
    try:
        return datetime.strptime(raw, "%Y-%m-%d").date()
    except ValueError:
        raise DomainError("invalid-range", f"bad day (want YYYY-MM-DD): {raw}")


def _emit_reports(records, state, config: Config, out_dir: Path, kinds, args) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rubric = RubricConfig(config.negligible_max_chars, config.developed_min_chars)
    if "participation" in kinds:
        text = report_to_text(participation_report(state, rubric))
        (out_dir / "participation.tsv").write_text(text, encoding="utf-8")
    if "closures" in kinds:
        closure_days = [r.ts.date() for r in records if r.kind == "correction_resolved"]
        today = datetime.now(timezone.utc).date()
        from_day = _day(args.from_day, min(closure_days) if closure_days else today)
        to_day = _day(args.to_day, max(closure_days) if closure_days else from_day)
        histogram = closure_histogram(records, from_day, to_day, config.tz_offset_minutes)
        (out_dir / "closures.tsv").write_text(histogram_to_text(histogram), encoding="utf-8")
    if "export" in kinds:
        collections_path = getattr(args, "collections", None) or config.collections_file
        collections = load_collections(collections_path) if collections_path else []
        front = FrontMatter(
            title=config.front_matter_title,
            subtitle=config.front_matter_subtitle,
            institution=config.front_matter_institution,
            date=config.front_matter_date,
        )
        doc = compile_document(state, collections, front, rubric)
        (out_dir / "notes.tex").write_bytes(serialize(doc, "latex"))
        (out_dir / "notes.toc.txt").write_bytes(serialize(doc, "toc-text"))


def cmd_serve(args) -> int:
    import socket

    import uvicorn

    from .service import create_app

    config = _config(args)
    with socket.socket() as probe:
        try:
            probe.bind((config.listen_host, config.listen_port))
        except OSError as exc:
            print(
                f"port-in-use: cannot bind {config.listen_host}:{config.listen_port}: {exc}",
                file=sys.stderr,
            )
            return 2
    sink = FileMailSink(config.mail_sink_path) if config.mail_sink == "file" else NullMailSink()
    try:
        engine = Engine.open(config.data_dir, sink=sink)
    except CorruptRecord as exc:
        print(f"corrupt store: seq {exc.seq}: {exc.message}", file=sys.stderr)
        return 2
    if not engine.state.users:
        secret = config.admin_secret or None
        engine.register_user("admin", "admin", "Administrator", "admin", "", secret=secret)
        print("seeded tabula-rasa store with admin account", file=sys.stderr)
    app = create_app(engine, config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="info")
    return 0


def cmd_replay(args) -> int:
    config = _config(args)
    try:
        records = read_log(args.log_file)
    except FileNotFoundError:
        print(f"no such log file: {args.log_file}", file=sys.stderr)
        return 2
    except CorruptRecord as exc:
        print(f"corrupt record: seq {exc.seq}: {exc.message}", file=sys.stderr)
        return 2
    try:
        state = rebuild_state(records)
    except CorruptRecord as exc:
        print(f"corrupt record: seq {exc.seq}: {exc.message}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    kinds = args.report or list(REPORT_KINDS)
    _emit_reports(records, state, config, out_dir, kinds, args)
    write_snapshot_lines(canonical_lines(state), out_dir / "snapshot.jsonl")
    print(f"replayed {len(records)} events; reports in {out_dir}")
    return 0


def cmd_report(args) -> int:
    config = _config(args)
    try:
        records = read_log(Path(config.data_dir) / "events.log")
    except (FileNotFoundError, CorruptRecord) as exc:
        print(f"cannot read store: {exc}", file=sys.stderr)
        return 2
    state = rebuild_state(records)
    rubric = RubricConfig(config.negligible_max_chars, config.developed_min_chars)
    if args.kind == "participation":
        sys.stdout.write(report_to_text(participation_report(state, rubric)))
    else:
        closure_days = [r.ts.date() for r in records if r.kind == "correction_resolved"]
        today = datetime.now(timezone.utc).date()
        from_day = _day(args.from_day, min(closure_days) if closure_days else today)
        to_day = _day(args.to_day, max(closure_days) if closure_days else from_day)
        histogram = closure_histogram(records, from_day, to_day, config.tz_offset_minutes)
        sys.stdout.write(histogram_to_text(histogram))
    return 0


def cmd_export(args) -> int:
    config = _config(args)
    try:
        records = read_log(Path(config.data_dir) / "events.log")
    except (FileNotFoundError, CorruptRecord) as exc:
        print(f"cannot read store: {exc}", file=sys.stderr)
        return 2
    state = rebuild_state(records)
    _emit_reports(records, state, config, Path(args.out), ("export",), args)
    print(f"wrote notes.tex and notes.toc.txt to {args.out}")
    return 0


def cmd_user_add(args) -> int:
    config = _config(args)
    try:
        engine = Engine.open(config.data_dir)
    except CorruptRecord as exc:
        print(f"corrupt store: seq {exc.seq}: {exc.message}", file=sys.stderr)
        return 2
    actor = args.actor if engine.state.users else args.id
    engine.register_user(actor, args.id, args.name, args.role, args.email, secret=args.secret)
    engine.close()
    print(f"registered {args.id} ({args.role})")
    return 0


def cmd_fixture(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.exists():
        out.unlink()
    build_math5190(log_path=out)
    print(f"wrote {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "serve": cmd_serve,
        "replay": cmd_replay,
        "report": cmd_report,
        "export": cmd_export,
        "user-add": cmd_user_add,
        "fixture": cmd_fixture,
    }[args.command]
    try:
        return handler(args)
    except DomainError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
