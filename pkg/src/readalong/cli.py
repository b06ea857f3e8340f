"""Command-line entry points.

Thin layer: each subcommand loads what it needs, calls the library, and
prints JSON lines so output can be piped into jq or a file without fuss.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from readalong.books import AssetStore, export_bundle, import_bundle
from readalong.errors import ReadalongError
from readalong.eventlog import DashboardConfig, EventLog, compute_dashboard
from readalong.fixtures import fixture_kb_path, load_library
from readalong.knowledge import GradeLevel, load_knowledge_graph
from readalong.providers import HashEmbedder
from readalong.retrieval import RetrievalConfig, match_knowledge

DEFAULT_DATA_DIR = "./readalong-data"


def _cmd_kb_validate(args: argparse.Namespace) -> int:
    graph = load_knowledge_graph(args.path)
    histogram = graph.grade_histogram()
    print(f"ok: {len(graph.entries)} entries")
    for grade, count in histogram.items():
        print(f"  {grade.label}: {count}")
    return 0


def _cmd_match(args: argparse.Namespace) -> int:
    if args.section == "-":
        text = sys.stdin.read()
    else:
        text = Path(args.section).read_text(encoding="utf-8")
    graph = load_knowledge_graph(args.kb)
    cap = GradeLevel.from_label(args.grade)
    config = RetrievalConfig(
        threshold=args.threshold, max_matches_per_section=args.top
    )
    matches = match_knowledge(text, cap, graph, HashEmbedder(), config)
    for match in matches:
        print(
            json.dumps(
                {
                    "entry_id": match.entry.id,
                    "statement": match.entry.statement,
                    "grade": match.entry.grade.label,
                    "keyword": match.keyword.surface,
                    "similarity": round(match.similarity, 6),
                }
            )
        )
    return 0


def _cmd_book_import(args: argparse.Namespace) -> int:
    data_dir = Path(args.data_dir)
    assets = AssetStore(data_dir)
    book = import_bundle(args.directory, assets)
    target = data_dir / "books" / book.id
    if Path(args.directory).resolve() != target.resolve():
        export_bundle(book, target, assets)
    print(book.id)
    return 0


def _cmd_book_export(args: argparse.Namespace) -> int:
    data_dir = Path(args.data_dir)
    assets = AssetStore(data_dir)
    library = load_library(data_dir, assets)
    book = library.get(args.book_id)
    path = export_bundle(book, args.directory, assets)
    print(str(path))
    return 0


def _cmd_dashboard(args: argparse.Namespace) -> int:
    log = EventLog(args.data_dir)
    summary = compute_dashboard(
        args.child_id,
        log,
        DashboardConfig(
            include_setup=args.include_setup,
            learned_requires_correct=args.learned_requires_correct,
        ),
    )
    from readalong.api import _dashboard_payload

    print(json.dumps(_dashboard_payload(summary), indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from readalong.api import build_state, create_app

    state = build_state(
        data_dir=args.data_dir,
        kb_path=args.kb,
        offline=args.offline,
        threshold=args.threshold,
        config_path=args.config,
    )
    app = create_app(state)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="readalong")
    sub = parser.add_subparsers(dest="command", required=True)

    kb = sub.add_parser("kb", help="knowledge base tools")
    kb_sub = kb.add_subparsers(dest="kb_command", required=True)
    kb_validate = kb_sub.add_parser("validate", help="parse and validate a knowledge file")
    kb_validate.add_argument("path")
    kb_validate.set_defaults(func=_cmd_kb_validate)

    match = sub.add_parser("match", help="match knowledge against a text section")
    match.add_argument("--kb", default=str(fixture_kb_path()))
    match.add_argument("--section", required=True, help="text file, or - for stdin")
    match.add_argument("--grade", required=True, help="grade cap, e.g. Grade2")
    match.add_argument("--threshold", type=float, default=0.6)
    match.add_argument("--top", type=int, default=1)
    match.set_defaults(func=_cmd_match)

    book = sub.add_parser("book", help="book bundle tools")
    book_sub = book.add_subparsers(dest="book_command", required=True)
    book_import = book_sub.add_parser("import", help="import a book bundle directory")
    book_import.add_argument("directory")
    book_import.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    book_import.set_defaults(func=_cmd_book_import)
    book_export = book_sub.add_parser("export", help="export a book to a bundle directory")
    book_export.add_argument("book_id")
    book_export.add_argument("directory")
    book_export.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    book_export.set_defaults(func=_cmd_book_export)

    dashboard = sub.add_parser("dashboard", help="print a child's progress summary")
    dashboard.add_argument("child_id")
    dashboard.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    dashboard.add_argument("--include-setup", action="store_true")
    dashboard.add_argument("--learned-requires-correct", action="store_true")
    dashboard.set_defaults(func=_cmd_dashboard)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--kb", default=None)
    serve.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    serve.add_argument("--offline", action="store_true")
    serve.add_argument("--threshold", type=float, default=None)
    serve.add_argument("--config", default=None, help="provider endpoints JSON")
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ReadalongError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
