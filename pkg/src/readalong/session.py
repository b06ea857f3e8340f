"""Reading session state machine and orchestration.

A session walks LibraryBrowse -> Greeting -> ModeSetup -> Reading, detours
into Interaction episodes as the chosen mode dictates, and closes with a
Summary conversation. Every observable step appends exactly one event, which
is why `reduce_session` can rebuild the final state from the log alone: the
log is the session, the in-memory object is just a cursor over it.
"""

from __future__ import annotations

import time
import threading
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Protocol, Sequence

from readalong.books import Book, Library
from readalong.dialogue import (
    AssistantTurn,
    StorySummarizer,
    generate_assistant_turn,
    generate_greeting_turn,
    plan_question_type,
)
from readalong.errors import (
    ConflictError,
    ContractError,
    IllegalInputError,
    NotFoundError,
    ProviderError,
)
from readalong.eventlog import EventKind, EventLog, SessionEvent
from readalong.knowledge import GradeLevel, KnowledgeGraph
from readalong.learner import (
    AnswerJudgment,
    ChildProfile,
    ConversationStatus,
    ProfileStore,
    Turn,
    parse_self_introduction,
    rule_based_profile,
    update_status,
)
from readalong.prompts import (
    MoveKind,
    QuestionType,
    build_dialogue_prompt,
    build_greeting_prompt,
)
from readalong.providers import ChatProvider, SpeechProvider
from readalong.retrieval import (
    Embedder,
    KnowledgeMatch,
    RetrievalConfig,
    StatementEmbeddingCache,
    match_knowledge,
)


class Phase(str, Enum):
    LIBRARY_BROWSE = "LibraryBrowse"
    GREETING = "Greeting"
    MODE_SETUP = "ModeSetup"
    READING = "Reading"
    INTERACTION = "Interaction"
    SUMMARY = "Summary"
    COMPLETED = "Completed"


class FrequencyKind(str, Enum):
    EVERY_PAGE = "EveryPage"
    EVERY_N_PAGES = "EveryNPages"
    END_ONLY = "EndOnly"


@dataclass(frozen=True)
class InteractionFrequency:
    kind: FrequencyKind
    n: int | None = None

    def __post_init__(self) -> None:
        if self.kind is FrequencyKind.EVERY_N_PAGES:
            if self.n is None or self.n < 2:
                raise ContractError("EveryNPages requires n >= 2")
        elif self.n is not None:
            raise ContractError(f"{self.kind.value} takes no n")

    @classmethod
    def every_page(cls) -> "InteractionFrequency":
        return cls(FrequencyKind.EVERY_PAGE)

    @classmethod
    def every_n_pages(cls, n: int) -> "InteractionFrequency":
        return cls(FrequencyKind.EVERY_N_PAGES, n)

    @classmethod
    def end_only(cls) -> "InteractionFrequency":
        return cls(FrequencyKind.END_ONLY)


@dataclass(frozen=True)
class ReadingMode:
    interaction_enabled: bool = True
    frequency: InteractionFrequency = field(
        default_factory=InteractionFrequency.every_page
    )
    knowledge_extension_enabled: bool = True
    narration_enabled: bool = False

    def to_dict(self) -> dict:
        return {
            "interaction_enabled": self.interaction_enabled,
            "frequency": {"kind": self.frequency.kind.value, "n": self.frequency.n},
            "knowledge_extension_enabled": self.knowledge_extension_enabled,
            "narration_enabled": self.narration_enabled,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReadingMode":
        frequency = data.get("frequency", {})
        kind_label = frequency.get("kind", "EveryPage")
        try:
            kind = FrequencyKind(kind_label)
        except ValueError:
            raise ContractError(f"unknown interaction frequency kind {kind_label!r}")
        return cls(
            interaction_enabled=bool(data.get("interaction_enabled", True)),
            frequency=InteractionFrequency(kind, frequency.get("n")),
            knowledge_extension_enabled=bool(data.get("knowledge_extension_enabled", True)),
            narration_enabled=bool(data.get("narration_enabled", False)),
        )


def should_interact(page_index: int, mode: ReadingMode, is_last_page: bool) -> bool:
    """Does an interaction episode follow this page under this mode?"""
    if not mode.interaction_enabled:
        return False
    frequency = mode.frequency
    if frequency.kind is FrequencyKind.EVERY_PAGE:
        return True
    if frequency.kind is FrequencyKind.EVERY_N_PAGES:
        assert frequency.n is not None
        return (page_index + 1) % frequency.n == 0 or is_last_page
    return is_last_page


@dataclass(frozen=True)
class SessionState:
    phase: Phase
    page_index: int
    book_id: str
    child_id: str


# --------------------------------------------------------------------------
# inputs and outputs


@dataclass(frozen=True)
class ChildTurnInput:
    text: str


@dataclass(frozen=True)
class PageCompleteInput:
    pass


@dataclass(frozen=True)
class SetModeInput:
    mode: ReadingMode


SessionInput = ChildTurnInput | PageCompleteInput | SetModeInput


@dataclass(frozen=True)
class EmittedTurn:
    speaker: str
    clean_text: str
    display_text: str
    moves: tuple[str, ...] = ()
    follow_up_expected: bool = True
    audio_asset: str | None = None


@dataclass(frozen=True)
class AdvanceResult:
    session_id: str
    state: SessionState
    turns: tuple[EmittedTurn, ...] = ()


# --------------------------------------------------------------------------
# clock


class Clock(Protocol):
    def wall(self) -> float: ...

    def monotonic(self) -> float: ...


class SystemClock:
    def wall(self) -> float:
        return time.time()

    def monotonic(self) -> float:
        return time.monotonic()


class SteppingClock:
    """Deterministic clock for tests: every reading advances a fixed step."""

    def __init__(self, start: float = 1_000_000.0, step: float = 1.0):
        self._wall = start
        self._monotonic = 0.0
        self._step = step

    def wall(self) -> float:
        self._wall += self._step
        return self._wall

    def monotonic(self) -> float:
        self._monotonic += self._step
        return self._monotonic


# --------------------------------------------------------------------------
# runtime session


@dataclass
class _Episode:
    page_index: int | None  # None for the end-of-story conversation
    question_type: QuestionType
    match: KnowledgeMatch | None
    child_initiated: bool = False


@dataclass
class _Session:
    id: str
    state: SessionState
    book: Book
    mode: ReadingMode | None = None
    profile: ChildProfile = field(default_factory=ChildProfile)
    status: ConversationStatus = field(default_factory=ConversationStatus)
    history: list[Turn] = field(default_factory=list)
    greeting_turns: list[Turn] = field(default_factory=list)
    episode: _Episode | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class Orchestrator:
    """Drives sessions end to end against injected providers and stores."""

    def __init__(
        self,
        *,
        library: Library,
        graph: KnowledgeGraph,
        embedder: Embedder,
        chat: ChatProvider,
        log: EventLog,
        profiles: ProfileStore,
        speech: SpeechProvider | None = None,
        retrieval_config: RetrievalConfig | None = None,
        clock: Clock | None = None,
        session_id_factory: Callable[[], str] | None = None,
    ):
        self.library = library
        self.graph = graph
        self.embedder = embedder
        self.chat = chat
        self.log = log
        self.profiles = profiles
        self.speech = speech
        self.retrieval_config = retrieval_config or RetrievalConfig()
        self.clock = clock or SystemClock()
        self._id_factory = session_id_factory or (lambda: f"s-{uuid.uuid4().hex[:12]}")
        self.summarizer = StorySummarizer(chat)
        self.statement_cache = StatementEmbeddingCache(graph, embedder)
        self._sessions: dict[str, _Session] = {}
        self._open_by_child: dict[str, str] = {}
        self._registry_lock = threading.Lock()

    # -- event plumbing ----------------------------------------------------

    def _emit(self, session: _Session, kind: EventKind, payload: dict) -> None:
        self.log.record(
            SessionEvent(
                kind=kind,
                session_id=session.id,
                payload=payload,
                wall=self.clock.wall(),
                monotonic=self.clock.monotonic(),
            )
        )

    def _grade_cap(self, session: _Session) -> GradeLevel:
        from readalong.learner import grade_for_age

        age = session.profile.age_years
        # Unknown age reads at the safest cap.
        return grade_for_age(age) if age is not None else GradeLevel.KINDERGARTEN

    # -- session registry --------------------------------------------------

    def get_session(self, session_id: str) -> _Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise NotFoundError(f"no session with id {session_id!r}") from None

    def start_session(
        self, child_id: str, book_id: str, *, re_greet: bool = False
    ) -> AdvanceResult:
        """Open a session; greets first-time children, returning ones skip ahead."""
        book = self.library.get(book_id)
        with self._registry_lock:
            open_id = self._open_by_child.get(child_id)
            if open_id is not None:
                raise ConflictError(
                    f"child {child_id!r} already has open session {open_id!r}"
                )
            session_id = self._id_factory()
            stored = self.profiles.load(child_id)
            skip_greeting = stored is not None and not re_greet
            phase = Phase.MODE_SETUP if skip_greeting else Phase.GREETING
            session = _Session(
                id=session_id,
                state=SessionState(
                    phase=phase, page_index=0, book_id=book_id, child_id=child_id
                ),
                book=book,
                profile=stored or ChildProfile(),
            )
            self._sessions[session_id] = session
            self._open_by_child[child_id] = session_id

        self._emit(
            session,
            EventKind.SESSION_STARTED,
            {
                "child_id": child_id,
                "book_id": book_id,
                "page_count": book.page_count,
                "skip_greeting": skip_greeting,
            },
        )
        turns: list[EmittedTurn] = []
        if not skip_greeting:
            turns.append(self._greet(session))
        return AdvanceResult(session_id=session.id, state=session.state, turns=tuple(turns))

    def _close(self, session: _Session) -> None:
        with self._registry_lock:
            if self._open_by_child.get(session.state.child_id) == session.id:
                del self._open_by_child[session.state.child_id]

    # -- public advance ----------------------------------------------------

    def advance(self, session_id: str, input: SessionInput) -> AdvanceResult:
        """Feed one input into the session state machine.

        Inputs that arrive in a phase that cannot accept them raise
        IllegalInputError and append nothing. Concurrent submissions to one
        session conflict instead of interleaving.
        """
        session = self.get_session(session_id)
        if not session.lock.acquire(blocking=False):
            raise ConflictError(f"session {session_id!r} is processing another input")
        try:
            if isinstance(input, ChildTurnInput):
                return self._on_child_turn(session, input.text)
            if isinstance(input, PageCompleteInput):
                return self._on_page_complete(session)
            if isinstance(input, SetModeInput):
                return self._on_set_mode(session, input.mode)
            raise ContractError(f"unknown input {input!r}")
        finally:
            session.lock.release()

    # -- greeting ----------------------------------------------------------

    def _greet(self, session: _Session) -> EmittedTurn:
        prompt = build_greeting_prompt(
            rule_based_profile([t.text for t in session.greeting_turns if t.speaker == "child"]),
            session.history,
        )
        turn = generate_greeting_turn(prompt, self.chat)
        return self._record_companion_turn(session, EventKind.GREETING_TURN, turn)

    def _on_greeting_child_turn(self, session: _Session, text: str) -> AdvanceResult:
        child_turn = Turn(speaker="child", text=text)
        session.history.append(child_turn)
        session.greeting_turns.append(child_turn)
        self._emit(
            session, EventKind.GREETING_TURN, {"speaker": "child", "text": text}
        )
        emitted = self._greet(session)
        if MoveKind.INTRODUCTION_OF_READING_ACTIVITY.value in emitted.moves:
            profile = parse_self_introduction(session.greeting_turns, self.chat)
            for warning in profile.warnings:
                self._emit(
                    session,
                    EventKind.WARNING,
                    {"code": "profile_extraction", "detail": warning},
                )
            session.profile = replace(profile, warnings=())
            self.profiles.save(session.state.child_id, session.profile)
            self._emit(
                session,
                EventKind.PROFILE_CAPTURED,
                {
                    "nickname": profile.nickname,
                    "age_years": profile.age_years,
                    "interests": list(profile.interests),
                    "favorite_story_or_character": profile.favorite_story_or_character,
                    "language_style": profile.language_style,
                },
            )
            session.state = replace(session.state, phase=Phase.MODE_SETUP)
        return AdvanceResult(session_id=session.id, state=session.state, turns=(emitted,))

    # -- mode --------------------------------------------------------------

    def _on_set_mode(self, session: _Session, mode: ReadingMode) -> AdvanceResult:
        phase = session.state.phase
        if phase not in (Phase.MODE_SETUP, Phase.READING):
            raise IllegalInputError(f"cannot set mode during {phase.value}")
        session.mode = mode
        self._emit(session, EventKind.MODE_SET, {"mode": mode.to_dict()})
        if phase is Phase.MODE_SETUP:
            session.state = replace(session.state, phase=Phase.READING, page_index=0)
            self._show_page(session, 0)
        return AdvanceResult(session_id=session.id, state=session.state, turns=())

    def _show_page(self, session: _Session, page_index: int) -> None:
        book = session.book
        session.state = replace(session.state, phase=Phase.READING, page_index=page_index)
        self._emit(
            session,
            EventKind.PAGE_SHOWN,
            {
                "page_index": page_index,
                "is_last": page_index == book.page_count - 1,
                "text": book.pages[page_index].text,
            },
        )

    # -- reading / interaction --------------------------------------------

    def _on_page_complete(self, session: _Session) -> AdvanceResult:
        if session.state.phase is not Phase.READING:
            raise IllegalInputError(
                f"page-complete signal arrived during {session.state.phase.value}"
            )
        assert session.mode is not None
        page_index = session.state.page_index
        is_last = page_index == session.book.page_count - 1
        if should_interact(page_index, session.mode, is_last):
            turns = self._open_episode(session, page_index)
            if session.episode is None:
                # The opening turn expected no reply; the episode already closed.
                turns += self._after_episode(session, page_index)
            return AdvanceResult(session_id=session.id, state=session.state, turns=turns)
        if is_last:
            # Read state only after _finish_reading has moved the phase along.
            turns = self._finish_reading(session)
            return AdvanceResult(session_id=session.id, state=session.state, turns=turns)
        self._show_page(session, page_index + 1)
        return AdvanceResult(session_id=session.id, state=session.state, turns=())

    def _open_episode(self, session: _Session, page_index: int) -> tuple[EmittedTurn, ...]:
        assert session.mode is not None
        section = session.book.pages[page_index].text
        matches = match_knowledge(
            section,
            self._grade_cap(session),
            self.graph,
            self.embedder,
            self.retrieval_config,
            statement_cache=self.statement_cache,
        )
        question_type = plan_question_type(matches, session.mode.knowledge_extension_enabled)
        match = matches[0] if question_type is QuestionType.KNOWLEDGE_EXTENDING else None
        episode = _Episode(page_index=page_index, question_type=question_type, match=match)
        if match is not None:
            self._emit(
                session,
                EventKind.KNOWLEDGE_SURFACED,
                {
                    "entry_id": match.entry.id,
                    "statement": match.entry.statement,
                    "grade": match.entry.grade.label,
                    "grade_display": match.entry.grade.display_name,
                    "keyword": match.keyword.surface,
                    "similarity": match.similarity,
                    "page_index": page_index,
                },
            )
        summary = self.summarizer.summarize(session.book)
        prompt = build_dialogue_prompt(
            section,
            session.profile,
            summary.text,
            session.status,
            match,
            question_type,
            session.history,
        )
        turn = generate_assistant_turn(prompt, self.chat, opening_turn=True)
        session.state = replace(session.state, phase=Phase.INTERACTION)
        session.episode = episode
        emitted = self._record_companion_turn(
            session, EventKind.INTERACTION_TURN, turn, page_index=page_index
        )
        if not turn.follow_up_expected:
            session.episode = None
        return (emitted,)

    def _on_child_turn(self, session: _Session, text: str) -> AdvanceResult:
        phase = session.state.phase
        if phase is Phase.GREETING:
            return self._on_greeting_child_turn(session, text)
        if phase is Phase.INTERACTION:
            return self._continue_episode(session, text)
        if phase is Phase.SUMMARY:
            return self._continue_summary(session, text)
        if phase is Phase.READING:
            return self._child_initiated_episode(session, text)
        raise IllegalInputError(f"child turn arrived during {phase.value}")

    def _child_initiated_episode(self, session: _Session, text: str) -> AdvanceResult:
        assert session.mode is not None
        if not session.mode.interaction_enabled:
            raise IllegalInputError(
                "interaction is disabled for this session; enable it to ask questions"
            )
        page_index = session.state.page_index
        # A question from the child always gets a story-grounded answer;
        # knowledge extension stays reserved for engine-planned episodes.
        session.episode = _Episode(
            page_index=page_index,
            question_type=QuestionType.STORY_BASED,
            match=None,
            child_initiated=True,
        )
        session.state = replace(session.state, phase=Phase.INTERACTION)
        return self._continue_episode(session, text)

    def _continue_episode(self, session: _Session, text: str) -> AdvanceResult:
        assert session.mode is not None
        episode = session.episode
        if episode is None:
            raise IllegalInputError("no interaction episode is active")
        session.history.append(Turn(speaker="child", text=text))
        self._emit(
            session,
            EventKind.INTERACTION_TURN,
            {
                "speaker": "child",
                "text": text,
                "page_index": episode.page_index,
                "child_initiated": episode.child_initiated,
                "follow_up_expected": True,
            },
        )
        section = (
            session.book.pages[episode.page_index].text
            if episode.page_index is not None
            else None
        )
        summary = self.summarizer.summarize(session.book)
        prompt = build_dialogue_prompt(
            section,
            session.profile,
            summary.text,
            session.status,
            episode.match,
            episode.question_type,
            session.history,
        )
        turn = generate_assistant_turn(prompt, self.chat)
        session.status = update_status(
            session.status,
            text,
            turn.assessment if turn.assessment.judgment is not AnswerJudgment.NOT_ASSESSED else None,
        )
        emitted = self._record_companion_turn(
            session, EventKind.INTERACTION_TURN, turn, page_index=episode.page_index
        )
        turns: tuple[EmittedTurn, ...] = (emitted,)
        if not turn.follow_up_expected:
            page_index = episode.page_index
            child_initiated = episode.child_initiated
            session.episode = None
            if child_initiated:
                # The page was interrupted, not finished; resume it in place.
                session.state = replace(session.state, phase=Phase.READING)
            else:
                turns += self._after_episode(session, page_index)
        return AdvanceResult(session_id=session.id, state=session.state, turns=turns)

    def _after_episode(
        self, session: _Session, page_index: int | None
    ) -> tuple[EmittedTurn, ...]:
        if page_index is None:
            return ()
        is_last = page_index == session.book.page_count - 1
        if is_last:
            return self._finish_reading(session)
        self._show_page(session, page_index + 1)
        return ()

    # -- summary phase -----------------------------------------------------

    def _finish_reading(self, session: _Session) -> tuple[EmittedTurn, ...]:
        assert session.mode is not None
        if not session.mode.interaction_enabled:
            # No conversation was asked for; close out quietly.
            self._complete(session)
            return ()
        summary = self.summarizer.summarize(session.book)
        matches = match_knowledge(
            summary.text,
            self._grade_cap(session),
            self.graph,
            self.embedder,
            self.retrieval_config,
            statement_cache=self.statement_cache,
        )
        question_type = plan_question_type(
            matches, session.mode.knowledge_extension_enabled
        )
        match = matches[0] if question_type is QuestionType.KNOWLEDGE_EXTENDING else None
        if match is not None:
            self._emit(
                session,
                EventKind.KNOWLEDGE_SURFACED,
                {
                    "entry_id": match.entry.id,
                    "statement": match.entry.statement,
                    "grade": match.entry.grade.label,
                    "grade_display": match.entry.grade.display_name,
                    "keyword": match.keyword.surface,
                    "similarity": match.similarity,
                    "page_index": None,
                },
            )
        session.episode = _Episode(page_index=None, question_type=question_type, match=match)
        prompt = build_dialogue_prompt(
            None,
            session.profile,
            summary.text,
            session.status,
            match,
            question_type,
            session.history,
        )
        turn = generate_assistant_turn(prompt, self.chat, opening_turn=True)
        session.state = replace(session.state, phase=Phase.SUMMARY)
        emitted = self._record_companion_turn(session, EventKind.SUMMARY_TURN, turn)
        if not turn.follow_up_expected:
            session.episode = None
            self._complete(session)
        return (emitted,)

    def _continue_summary(self, session: _Session, text: str) -> AdvanceResult:
        episode = session.episode
        if episode is None:
            raise IllegalInputError("the summary conversation has already closed")
        session.history.append(Turn(speaker="child", text=text))
        self._emit(
            session,
            EventKind.SUMMARY_TURN,
            {"speaker": "child", "text": text, "follow_up_expected": True},
        )
        summary = self.summarizer.summarize(session.book)
        prompt = build_dialogue_prompt(
            None,
            session.profile,
            summary.text,
            session.status,
            episode.match,
            episode.question_type,
            session.history,
        )
        turn = generate_assistant_turn(prompt, self.chat)
        session.status = update_status(
            session.status,
            text,
            turn.assessment if turn.assessment.judgment is not AnswerJudgment.NOT_ASSESSED else None,
        )
        emitted = self._record_companion_turn(session, EventKind.SUMMARY_TURN, turn)
        turns: tuple[EmittedTurn, ...] = (emitted,)
        if not turn.follow_up_expected:
            session.episode = None
            self._complete(session)
        return AdvanceResult(session_id=session.id, state=session.state, turns=turns)

    def _complete(self, session: _Session) -> None:
        self._emit(session, EventKind.SESSION_COMPLETED, {})
        session.state = replace(session.state, phase=Phase.COMPLETED)
        self._close(session)

    # -- shared turn recording --------------------------------------------

    def _record_companion_turn(
        self,
        session: _Session,
        kind: EventKind,
        turn: AssistantTurn,
        *,
        page_index: int | None = None,
    ) -> EmittedTurn:
        audio_key: str | None = None
        narrate = (
            session.mode is not None
            and session.mode.narration_enabled
            and self.speech is not None
        )
        if narrate:
            try:
                audio_key = self.speech.synthesize(turn.clean_text)  # type: ignore[union-attr]
            except ProviderError as exc:
                self._emit(
                    session,
                    EventKind.WARNING,
                    {"code": "narration_failed", "detail": str(exc)},
                )
        payload: dict = {
            "speaker": "companion",
            "text": turn.display_text,
            "clean_text": turn.clean_text,
            "moves": [move.kind.value for move in turn.moves],
            "follow_up_expected": turn.follow_up_expected,
            "judgment": turn.assessment.judgment.value,
            "topic": turn.assessment.topic,
        }
        if kind is EventKind.INTERACTION_TURN:
            payload["page_index"] = page_index
            payload["child_initiated"] = bool(
                session.episode is not None and session.episode.child_initiated
            )
        if audio_key is not None:
            payload["audio"] = audio_key
        self._emit(session, kind, payload)
        if turn.contract_violated:
            self._emit(
                session,
                EventKind.WARNING,
                {
                    "code": "move_contract_violation",
                    "detail": "; ".join(turn.warnings) or "move contract violated",
                },
            )
        if (
            kind in (EventKind.INTERACTION_TURN, EventKind.SUMMARY_TURN)
            and turn.assessment.judgment is not AnswerJudgment.NOT_ASSESSED
        ):
            self._emit(
                session,
                EventKind.ANSWER_ASSESSED,
                {
                    "judgment": turn.assessment.judgment.value,
                    "topic": turn.assessment.topic,
                    "page_index": page_index,
                },
            )
        session.history.append(Turn(speaker="companion", text=turn.clean_text))
        if session.state.phase is Phase.GREETING:
            session.greeting_turns.append(Turn(speaker="companion", text=turn.display_text))
        return EmittedTurn(
            speaker="companion",
            clean_text=turn.clean_text,
            display_text=turn.display_text,
            moves=tuple(move.kind.value for move in turn.moves),
            follow_up_expected=turn.follow_up_expected,
            audio_asset=audio_key,
        )


# --------------------------------------------------------------------------
# replay


@dataclass(frozen=True)
class ReplayResult:
    state: SessionState
    pages_shown: frozenset[int]
    page_count: int
    greeting_turns: int
    interaction_turns: int
    summary_turns: int
    knowledge_entry_ids: tuple[str, ...]
    completed: bool
    warning_count: int
    last_mode: dict | None


def reduce_session(events: Sequence[SessionEvent]) -> ReplayResult:
    """Pure fold of one event stream back into the final session state.

    Mirrors exactly the transitions the orchestrator emits; used by tests to
    prove the log is a complete record and by the dashboard cross-check.
    """
    phase = Phase.LIBRARY_BROWSE
    page_index = 0
    book_id = ""
    child_id = ""
    page_count = 0
    pages: set[int] = set()
    greeting_turns = 0
    interaction_turns = 0
    summary_turns = 0
    knowledge: dict[str, None] = {}
    completed = False
    warnings = 0
    last_mode: dict | None = None

    for event in events:
        kind = event.kind
        if kind is EventKind.SESSION_STARTED:
            child_id = event.payload.get("child_id", "")
            book_id = event.payload.get("book_id", "")
            page_count = int(event.payload.get("page_count", 0) or 0)
            phase = (
                Phase.MODE_SETUP
                if event.payload.get("skip_greeting")
                else Phase.GREETING
            )
        elif kind is EventKind.GREETING_TURN:
            greeting_turns += 1
            phase = Phase.GREETING
        elif kind is EventKind.PROFILE_CAPTURED:
            phase = Phase.MODE_SETUP
        elif kind is EventKind.MODE_SET:
            last_mode = event.payload.get("mode")
            if phase is Phase.MODE_SETUP:
                phase = Phase.READING
        elif kind is EventKind.PAGE_SHOWN:
            phase = Phase.READING
            page_index = int(event.payload["page_index"])
            pages.add(page_index)
        elif kind is EventKind.INTERACTION_TURN:
            interaction_turns += 1
            if event.payload.get("speaker") == "companion" and not event.payload.get(
                "follow_up_expected", True
            ):
                phase = Phase.READING
            else:
                phase = Phase.INTERACTION
        elif kind is EventKind.KNOWLEDGE_SURFACED:
            knowledge.setdefault(event.payload["entry_id"])
        elif kind is EventKind.SUMMARY_TURN:
            summary_turns += 1
            phase = Phase.SUMMARY
        elif kind is EventKind.SESSION_COMPLETED:
            completed = True
            phase = Phase.COMPLETED
        elif kind is EventKind.WARNING:
            warnings += 1

    return ReplayResult(
        state=SessionState(
            phase=phase, page_index=page_index, book_id=book_id, child_id=child_id
        ),
        pages_shown=frozenset(pages),
        page_count=page_count,
        greeting_turns=greeting_turns,
        interaction_turns=interaction_turns,
        summary_turns=summary_turns,
        knowledge_entry_ids=tuple(knowledge),
        completed=completed,
        warning_count=warnings,
        last_mode=last_mode,
    )
