"""Append-only session event streams and the dashboard fold.

Every observable thing a session does is an event in a per-session stream;
sequence numbers are dense and assigned at append time. The parent dashboard
is a pure fold over a child's streams, so replaying the log always reproduces
it and no state lives anywhere else.

On disk a stream is newline-delimited JSON under data_dir/sessions. Recovery
after a crash tolerates exactly one torn final line, which is what an
interrupted append can leave behind.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from readalong.errors import ContractError

logger = logging.getLogger(__name__)

EVENT_SCHEMA_VERSION = 1


class EventKind(str, Enum):
    SESSION_STARTED = "SessionStarted"
    GREETING_TURN = "GreetingTurn"
    PROFILE_CAPTURED = "ProfileCaptured"
    MODE_SET = "ModeSet"
    PAGE_SHOWN = "PageShown"
    INTERACTION_TURN = "InteractionTurn"
    KNOWLEDGE_SURFACED = "KnowledgeSurfaced"
    ANSWER_ASSESSED = "AnswerAssessed"
    SUMMARY_TURN = "SummaryTurn"
    SESSION_COMPLETED = "SessionCompleted"
    WARNING = "Warning"


@dataclass(frozen=True)
class SessionEvent:
    kind: EventKind
    session_id: str
    payload: dict
    wall: float
    monotonic: float
    seq: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "v": EVENT_SCHEMA_VERSION,
            "seq": self.seq,
            "kind": self.kind.value,
            "session_id": self.session_id,
            "wall": self.wall,
            "monotonic": self.monotonic,
            "payload": self.payload,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SessionEvent":
        return cls(
            kind=EventKind(data["kind"]),
            session_id=data["session_id"],
            payload=data.get("payload", {}),
            wall=float(data["wall"]),
            monotonic=float(data["monotonic"]),
            seq=data.get("seq"),
        )


class EventLog:
    """Per-session append-only streams with dense sequence numbers."""

    def __init__(self, data_dir: str | Path):
        self._dir = Path(data_dir) / "sessions"
        self._dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._streams: dict[str, list[SessionEvent]] = {}
        self._recover_all()

    # -- recovery ----------------------------------------------------------

    def _recover_all(self) -> None:
        for path in sorted(self._dir.glob("*.ndjson")):
            session_id = path.stem
            self._streams[session_id] = self._recover_stream(path)

    def _recover_stream(self, path: Path) -> list[SessionEvent]:
        raw = path.read_bytes()
        events: list[SessionEvent] = []
        good_bytes = 0
        lines = raw.split(b"\n")
        for line_index, line in enumerate(lines):
            if not line.strip():
                good_bytes += len(line) + 1
                continue
            try:
                data = json.loads(line.decode("utf-8"))
                event = SessionEvent.from_json_dict(data)
            except (ValueError, KeyError) as exc:
                is_last_content = all(not later.strip() for later in lines[line_index + 1 :])
                if is_last_content:
                    # A torn final append: drop it so the next append is clean.
                    logger.warning(
                        "truncating torn final record in %s: %s", path.name, exc
                    )
                    path.write_bytes(raw[:good_bytes])
                    break
                raise ContractError(
                    f"corrupt event stream {path.name} at line {line_index}: {exc}"
                ) from exc
            expected = len(events)
            if event.seq != expected:
                raise ContractError(
                    f"stream {path.name}: sequence {event.seq} where {expected} expected"
                )
            events.append(event)
            good_bytes += len(line) + 1
        return events

    # -- append ------------------------------------------------------------

    def _path(self, session_id: str) -> Path:
        return self._dir / f"{session_id}.ndjson"

    def record(self, event: SessionEvent) -> int:
        """Append one event; returns its assigned sequence number.

        The stream must already exist unless this is the SessionStarted
        event; an event arriving with an explicit stale seq is rejected.
        """
        with self._lock:
            stream = self._streams.get(event.session_id)
            if stream is None:
                if event.kind is not EventKind.SESSION_STARTED:
                    raise ContractError(
                        f"stream {event.session_id!r} does not exist; "
                        f"first event must be SessionStarted, got {event.kind.value}"
                    )
                stream = self._streams[event.session_id] = []
            expected = len(stream)
            if event.seq is not None and event.seq != expected:
                raise ContractError(
                    f"out-of-order append to {event.session_id!r}: "
                    f"seq {event.seq} where {expected} expected"
                )
            sequenced = SessionEvent(
                kind=event.kind,
                session_id=event.session_id,
                payload=event.payload,
                wall=event.wall,
                monotonic=event.monotonic,
                seq=expected,
            )
            line = json.dumps(sequenced.to_json_dict(), ensure_ascii=False)
            with self._path(event.session_id).open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")
                handle.flush()
            stream.append(sequenced)
            return expected

    # -- reads -------------------------------------------------------------

    def events(self, session_id: str) -> list[SessionEvent]:
        return list(self._streams.get(session_id, []))

    def session_ids(self) -> list[str]:
        return sorted(self._streams)

    def sessions_for_child(self, child_id: str) -> list[str]:
        found: list[tuple[float, str]] = []
        for session_id, stream in self._streams.items():
            if not stream:
                continue
            first = stream[0]
            if (
                first.kind is EventKind.SESSION_STARTED
                and first.payload.get("child_id") == child_id
            ):
                found.append((first.wall, session_id))
        return [session_id for _wall, session_id in sorted(found)]


# --------------------------------------------------------------------------
# dashboard


@dataclass(frozen=True)
class DashboardConfig:
    # Greeting and mode setup are excluded from reading time by default;
    # include_setup restores measuring from SessionStarted.
    include_setup: bool = False
    # Strict variant: knowledge counts as learned only once a later answer in
    # the same session was judged correct.
    learned_requires_correct: bool = False


@dataclass(frozen=True)
class LearnedKnowledge:
    entry_id: str
    statement: str
    grade_label: str
    first_surfaced_wall: float


@dataclass(frozen=True)
class BookProgress:
    book_id: str
    completion_fraction: float
    last_read_wall: float
    completed: bool


@dataclass(frozen=True)
class CurrentBook:
    book_id: str
    page_index: int
    page_count: int
    completion_fraction: float


@dataclass(frozen=True)
class DashboardSummary:
    child_id: str
    total_reading_seconds: float
    books_completed: int
    knowledge_learned: tuple[LearnedKnowledge, ...]
    current_book: CurrentBook | None
    history: tuple[BookProgress, ...]


def _session_reading_seconds(
    events: list[SessionEvent], config: DashboardConfig, now: float | None
) -> float:
    if not events:
        return 0.0
    if config.include_setup:
        anchor = events[0].wall
    else:
        anchor = next(
            (e.wall for e in events if e.kind is EventKind.PAGE_SHOWN), None
        )
        if anchor is None:
            return 0.0
    completed = any(e.kind is EventKind.SESSION_COMPLETED for e in events)
    end = events[-1].wall
    if not completed and now is not None:
        end = max(end, now)
    return max(0.0, end - anchor)


def compute_dashboard(
    child_id: str,
    log: EventLog,
    config: DashboardConfig | None = None,
    *,
    now: float | None = None,
) -> DashboardSummary:
    """Pure fold of one child's event streams into the parent dashboard.

    Warning events never influence any number here. For open sessions, `now`
    extends reading time to the present; omitted, time runs to the last event.
    """
    config = config or DashboardConfig()
    total_seconds = 0.0
    books_completed = 0
    learned: dict[str, LearnedKnowledge] = {}
    progress: dict[str, BookProgress] = {}
    current: CurrentBook | None = None

    for session_id in log.sessions_for_child(child_id):
        events = log.events(session_id)
        if not events:
            continue
        started = events[0]
        book_id = started.payload.get("book_id", "")
        page_count = int(started.payload.get("page_count", 0) or 0)
        completed = any(e.kind is EventKind.SESSION_COMPLETED for e in events)
        pages_shown = {
            int(e.payload["page_index"])
            for e in events
            if e.kind is EventKind.PAGE_SHOWN
        }
        total_seconds += _session_reading_seconds(events, config, now)
        if completed:
            books_completed += 1

        for event in events:
            if event.kind is not EventKind.KNOWLEDGE_SURFACED:
                continue
            entry_id = event.payload["entry_id"]
            if config.learned_requires_correct:
                confirmed = any(
                    later.kind is EventKind.ANSWER_ASSESSED
                    and later.payload.get("judgment") == "correct"
                    and (later.seq or 0) > (event.seq or 0)
                    for later in events
                )
                if not confirmed:
                    continue
            if entry_id not in learned:
                learned[entry_id] = LearnedKnowledge(
                    entry_id=entry_id,
                    statement=event.payload.get("statement", ""),
                    grade_label=event.payload.get("grade", ""),
                    first_surfaced_wall=event.wall,
                )

        fraction = (
            1.0 if completed else (len(pages_shown) / page_count if page_count else 0.0)
        )
        fraction = min(1.0, fraction)
        previous = progress.get(book_id)
        progress[book_id] = BookProgress(
            book_id=book_id,
            completion_fraction=max(fraction, previous.completion_fraction if previous else 0.0),
            last_read_wall=max(events[-1].wall, previous.last_read_wall if previous else 0.0),
            completed=completed or (previous.completed if previous else False),
        )
        if not completed:
            last_page = max(pages_shown) if pages_shown else 0
            current = CurrentBook(
                book_id=book_id,
                page_index=last_page,
                page_count=page_count,
                completion_fraction=fraction,
            )

    ordered_learned = tuple(
        sorted(learned.values(), key=lambda k: (k.first_surfaced_wall, k.entry_id))
    )
    ordered_history = tuple(
        sorted(progress.values(), key=lambda p: (-p.last_read_wall, p.book_id))
    )
    return DashboardSummary(
        child_id=child_id,
        total_reading_seconds=total_seconds,
        books_completed=books_completed,
        knowledge_learned=ordered_learned,
        current_book=current,
        history=ordered_history,
    )


_TURN_KINDS = frozenset(
    {EventKind.GREETING_TURN, EventKind.INTERACTION_TURN, EventKind.SUMMARY_TURN}
)


def render_transcript(events: Iterable[SessionEvent]) -> str:
    """Conversation view of one session's log, one "Speaker: text" line per turn.

    Companion lines keep their move tags; status trailers were already stripped
    before logging, so this is exactly what the reader saw.
    """
    lines = []
    for event in events:
        if event.kind not in _TURN_KINDS:
            continue
        speaker = "Child" if event.payload.get("speaker") == "child" else "Companion"
        lines.append(f"{speaker}: {event.payload['text']}")
    return "\n".join(lines) + "\n" if lines else ""
