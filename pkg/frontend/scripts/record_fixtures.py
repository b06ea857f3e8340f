"""Record reader-UI test fixtures from the real service, offline.

Each scenario file is an ordered list of HTTP exchanges. Steps tagged with an
action mark where a user did something; the untagged steps that follow are
the requests the UI issues on its own to resolve that action (snapshot
refresh, dashboard fetch). The replay transport in the test suite serves
these exchanges back verbatim and fails on any drift in method, path, or
body, so the recorded traffic is the UI's API contract.

Run from the repository root after installing the python package:

    python3 frontend/scripts/record_fixtures.py
"""

import base64
import json
from pathlib import Path

from fastapi.testclient import TestClient

from readalong.api import build_state, create_app

OUT_DIR = Path(__file__).resolve().parent.parent / "test" / "fixtures"

GREETING_REPLIES = ["My name is Nia.", "I am six years old.", "I like stars."]
ANSWER = "I think the sun keeps everything warm."

EVERY_PAGE_NARRATED = {
    "interaction_enabled": True,
    "frequency": {"kind": "EveryPage"},
    "knowledge_extension_enabled": True,
    "narration_enabled": True,
}
EVERY_PAGE_QUIET = {
    "interaction_enabled": True,
    "frequency": {"kind": "EveryPage"},
    "knowledge_extension_enabled": True,
    "narration_enabled": False,
}
END_ONLY_QUIET = {
    "interaction_enabled": True,
    "frequency": {"kind": "EndOnly"},
    "knowledge_extension_enabled": True,
    "narration_enabled": False,
}


class Recorder:
    def __init__(self, client: TestClient):
        self.client = client
        self.steps: list[dict] = []

    def exchange(self, method: str, path: str, body=None, action=None, action_arg=None):
        response = self.client.request(
            method, path, json=body if body is not None else None
        )
        self.steps.append(
            {
                "action": action,
                "action_arg": action_arg,
                "request": {"method": method, "path": path, "body": body},
                "response": {"status": response.status_code, "json": response.json()},
            }
        )
        return response.json()

    # Each helper below issues exactly the requests the controller issues.

    def open_library(self):
        return self.exchange("GET", "/library", action="open-library")

    def refresh(self, session_id: str):
        snapshot = self.exchange("GET", f"/sessions/{session_id}")
        if snapshot["state"]["phase"] == "Completed":
            self.exchange("GET", f"/dashboard/{snapshot['state']['child_id']}")
        return snapshot

    def open_book(self, child_id: str, book_id: str):
        advance = self.exchange(
            "POST",
            "/sessions",
            {"child_id": child_id, "book_id": book_id},
            action="open-book",
            action_arg=json.dumps({"child_id": child_id, "book_id": book_id}),
        )
        self.refresh(advance["session_id"])
        return advance["session_id"]

    def say(self, session_id: str, text: str):
        self.exchange(
            "POST",
            f"/sessions/{session_id}/turns",
            {"text": text},
            action="say",
            action_arg=text,
        )
        return self.refresh(session_id)

    def page_done(self, session_id: str):
        self.exchange(
            "POST",
            f"/sessions/{session_id}/turns",
            {"page_complete": True},
            action="page-done",
        )
        return self.refresh(session_id)

    def set_mode(self, session_id: str, mode: dict):
        self.exchange(
            "PUT",
            f"/sessions/{session_id}/mode",
            mode,
            action="set-mode",
            action_arg=json.dumps(mode),
        )
        return self.refresh(session_id)

    def save(self, name: str, note: str):
        OUT_DIR.mkdir(parents=True, exist_ok=True)
        path = OUT_DIR / f"{name}.json"
        path.write_text(
            json.dumps({"name": name, "note": note, "steps": self.steps}, indent=2)
            + "\n",
            encoding="utf-8",
        )
        print(f"wrote {path.relative_to(Path.cwd())} ({len(self.steps)} steps)")


def fresh_client(tag: str) -> TestClient:
    import tempfile

    data_dir = Path(tempfile.mkdtemp(prefix=f"reader-fixtures-{tag}-"))
    state = build_state(data_dir=data_dir, offline=True)
    return TestClient(create_app(state))


def drive_to_completion(rec: Recorder, session_id: str, snapshot: dict):
    for _ in range(60):
        phase = snapshot["state"]["phase"]
        if phase == "Completed":
            return snapshot
        if phase == "Reading":
            snapshot = rec.page_done(session_id)
        else:
            snapshot = rec.say(session_id, ANSWER)
    raise RuntimeError("session never completed")


def record_full_session():
    rec = Recorder(fresh_client("full"))
    rec.open_library()
    session_id = rec.open_book("nia", "dinosaur-seaside")
    snapshot = None
    for reply in GREETING_REPLIES:
        snapshot = rec.say(session_id, reply)
    assert snapshot["state"]["phase"] == "ModeSetup", snapshot["state"]
    snapshot = rec.set_mode(session_id, EVERY_PAGE_NARRATED)
    snapshot = drive_to_completion(rec, session_id, snapshot)
    rec.save(
        "full-session",
        "Six-year-old 'nia' reads dinosaur-seaside with talk-every-page and "
        "narration on; the sunset page interaction surfaces the sunlight "
        "statement; ends at the dashboard.",
    )


def record_endonly_toggle():
    rec = Recorder(fresh_client("endonly"))
    rec.open_library()
    session_id = rec.open_book("pip", "dinosaur-seaside")
    snapshot = None
    for reply in GREETING_REPLIES:
        snapshot = rec.say(session_id, reply)
    snapshot = rec.set_mode(session_id, EVERY_PAGE_QUIET)
    snapshot = rec.page_done(session_id)  # page 0 -> interaction
    while snapshot["state"]["phase"] == "Interaction":
        snapshot = rec.say(session_id, ANSWER)
    assert snapshot["state"]["phase"] == "Reading"
    snapshot = rec.set_mode(session_id, END_ONLY_QUIET)  # mid-book toggle
    snapshot = drive_to_completion(rec, session_id, snapshot)
    rec.save(
        "endonly-toggle",
        "'pip' starts with talk-every-page, answers one page-0 question, "
        "switches to talk-at-the-end mid-book; the remaining mid-book pages "
        "run straight through with no interaction prompts.",
    )


def record_upload_flow():
    rec = Recorder(fresh_client("upload"))
    rec.open_library()
    photos = [
        base64.b64encode(payload).decode("ascii")
        for payload in (
            b"OCRTEXT:A little boat bobs in the harbor at sunrise.",
            b"OCRTEXT:The sun warms the deck while gulls circle.",
            b"",
        )
    ]
    draft = rec.exchange(
        "POST",
        "/books/photos",
        {"title": "Harbor Day", "photos_base64": photos, "tags": []},
        action="submit-photos",
        action_arg="Harbor Day",
    )
    draft_id = draft["draft_id"]
    rec.exchange(
        "PATCH",
        f"/books/{draft_id}/pages/2",
        {"text": "Home again at dusk."},
        action="edit-page",
        action_arg=json.dumps({"page": 2, "text": "Home again at dusk."}),
    )
    rec.exchange("POST", f"/books/{draft_id}/confirm", action="confirm-draft")
    rec.exchange("GET", "/library")
    rec.save(
        "upload-flow",
        "Three photos (one blank) become a reviewable draft; the blank page "
        "is fixed by hand and the book joins the library.",
    )


def record_errors():
    rec = Recorder(fresh_client("errors"))
    session_id = rec.open_book("rex", "night-garden")
    # A page signal while the companion is still greeting: rejected cleanly.
    # The controller stops at the rejection, so no snapshot refresh follows.
    rec.exchange(
        "POST",
        f"/sessions/{session_id}/turns",
        {"page_complete": True},
        action="page-done",
    )
    rec.exchange("GET", "/sessions/not-a-session", action="lookup-missing")
    rec.save(
        "errors",
        "A premature page-done during greeting (409) and a missing session "
        "(404), both with the standard error envelope.",
    )


def record_misc():
    rec = Recorder(fresh_client("misc"))
    rec.exchange("GET", "/healthz", action="health")
    rec.save("misc", "Service health payload for schema coverage.")


if __name__ == "__main__":
    record_full_session()
    record_endonly_toggle()
    record_upload_flow()
    record_errors()
    record_misc()
