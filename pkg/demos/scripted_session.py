"""
Replaying a full reading session from a script
==============================================

Runs one bundled session end to end with a scripted companion, then
prints the transcript exactly as the event log renders it.
"""

import tempfile

from readalong.eventlog import EventKind, render_transcript
from readalong.fixtures import run_fixture_session

with tempfile.TemporaryDirectory() as data_dir:
    # session-a: an eight-year-old meets the companion for the first time,
    # picks every-other-page interaction, and reads the seaside book.
    replay = run_fixture_session("session-a", data_dir)
    events = replay.log.events(replay.session_id)

    print(render_transcript(events))

    # The log also carries everything that is not dialogue.
    for event in events:
        if event.kind is EventKind.KNOWLEDGE_SURFACED:
            p = event.payload
            print(
                f"[surfaced on page {p['page_index']}]"
                f" {p['entry_id']}: {p['statement']}"
            )
        if event.kind is EventKind.ANSWER_ASSESSED:
            print(f"[assessed] {event.payload['judgment']} on {event.payload['topic']!r}")
