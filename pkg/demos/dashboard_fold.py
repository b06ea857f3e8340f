"""
Folding event streams into the parent dashboard
===============================================

Runs one bundled session, then shows the dashboard numbers coming
straight out of the event log. No state is stored anywhere else.
"""

import tempfile

from readalong.eventlog import compute_dashboard, DashboardConfig
from readalong.fixtures import run_fixture_session

with tempfile.TemporaryDirectory() as data_dir:
    # session-c: a child with a saved profile reads straight through with
    # interaction at the end of the book only.
    replay = run_fixture_session("session-c", data_dir)
    child_id = replay.plan["child_id"]

    summary = compute_dashboard(child_id, replay.log)
    print(f"child: {summary.child_id}")
    print(f"reading time: {summary.total_reading_seconds:.0f} simulated seconds")
    print(f"books completed: {summary.books_completed}")
    for item in summary.knowledge_learned:
        print(f"learned: {item.entry_id} ({item.grade_label})")
    for row in summary.history:
        done = "finished" if row.completed else "in progress"
        print(f"history: {row.book_id} {row.completion_fraction:.0%} {done}")

    # Counting from the session's very first event instead of the first
    # page is one config flag; greeting and mode setup then count as time.
    with_setup = compute_dashboard(
        child_id, replay.log, DashboardConfig(include_setup=True)
    )
    print(f"with setup included: {with_setup.total_reading_seconds:.0f} seconds")
