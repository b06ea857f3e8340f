"""Dialogue engine: turn generation, the move contract, and story summaries.

A provider reply is expected to end with a machine-readable status line and,
where the contract demands it, to carry bracket move tags. One repair re-ask
is allowed; after that the engine accepts what it got, degrades gracefully,
and leaves an audit trail instead of blocking the child mid-story.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from readalong.books import Book
from readalong.errors import ProviderError
from readalong.learner import AnswerAssessment, AnswerJudgment
from readalong.prompts import (
    AssembledPrompt,
    DialogueMove,
    MoveKind,
    PromptPurpose,
    QuestionType,
    parse_move_tags,
)
from readalong.providers import ChatMessage, ChatProvider
from readalong.retrieval import KnowledgeMatch

logger = logging.getLogger(__name__)

TRAILER_PREFIX = "@status"
SUMMARY_MAX_CHARS = 1200

_REPAIR_INSTRUCTION = (
    "Your previous reply did not follow the required format: {problems}. "
    "Send the reply again, corrected, with the same content."
)


@dataclass(frozen=True)
class AssistantTurn:
    """One generated companion turn, fully parsed.

    display_text keeps the bracket tags (for transcripts and the parent
    overlay); clean_text is what the child sees. contract_violated means the
    reply was accepted on the fallback path after a failed repair.
    """

    clean_text: str
    display_text: str
    moves: tuple[DialogueMove, ...]
    assessment: AnswerAssessment
    follow_up_expected: bool
    warnings: tuple[str, ...] = ()
    contract_violated: bool = False

    @property
    def move_kinds(self) -> tuple[MoveKind, ...]:
        return tuple(move.kind for move in self.moves)


def plan_question_type(
    matches: list[KnowledgeMatch], knowledge_extension_enabled: bool
) -> QuestionType:
    """Knowledge-extending iff retrieval found something and the mode allows it."""
    if matches and knowledge_extension_enabled:
        return QuestionType.KNOWLEDGE_EXTENDING
    return QuestionType.STORY_BASED


# --------------------------------------------------------------------------
# trailer protocol


@dataclass(frozen=True)
class _Trailer:
    assessment: AnswerAssessment
    follow_up: bool | None


def split_status_trailer(raw: str) -> tuple[str, _Trailer | None, tuple[str, ...]]:
    """Strip the final @status line if present.

    Returns (text without trailer, parsed trailer or None, warnings). A
    malformed trailer yields None plus a warning; it never raises.
    """
    stripped = raw.rstrip()
    lines = stripped.split("\n")
    last = lines[-1].strip()
    if not last.startswith(TRAILER_PREFIX):
        return raw, None, ()
    body = last[len(TRAILER_PREFIX) :].strip()
    rest = "\n".join(lines[:-1]).rstrip()
    try:
        data = json.loads(body)
        if not isinstance(data, dict):
            raise ValueError("trailer is not an object")
    except ValueError as exc:
        return rest, None, (f"malformed status trailer: {exc}",)

    warnings: list[str] = []
    judgment_raw = str(data.get("judgment", "not_assessed"))
    try:
        judgment = AnswerJudgment(judgment_raw)
    except ValueError:
        warnings.append(f"unknown judgment {judgment_raw!r}; treated as not_assessed")
        judgment = AnswerJudgment.NOT_ASSESSED
    topic = str(data.get("topic", "") or "")
    follow_up = data.get("follow_up")
    if follow_up is not None and not isinstance(follow_up, bool):
        warnings.append(f"non-boolean follow_up {follow_up!r} ignored")
        follow_up = None
    return rest, _Trailer(AnswerAssessment(judgment, topic), follow_up), tuple(warnings)


# --------------------------------------------------------------------------
# generation


def _contract_problems(
    moves: tuple[DialogueMove, ...], trailer: _Trailer | None, *, opening_turn: bool
) -> list[str]:
    problems: list[str] = []
    if trailer is None:
        problems.append("the final @status line is missing or malformed")
    if opening_turn and not moves:
        problems.append("a conversation-opening reply must carry at least one move tag")
    if trailer is not None and trailer.assessment.judgment in (
        AnswerJudgment.INCORRECT,
        AnswerJudgment.UNSURE,
    ):
        if MoveKind.SCAFFOLDING not in tuple(move.kind for move in moves):
            problems.append(
                "the child's answer was judged "
                f"{trailer.assessment.judgment.value} but the reply has no "
                "[Scaffolding] move"
            )
    return problems


def _interpret(raw: str) -> tuple[str, tuple[DialogueMove, ...], _Trailer | None, tuple[str, ...]]:
    text, trailer, trailer_warnings = split_status_trailer(raw)
    parsed = parse_move_tags(text)
    return text, parsed.moves, trailer, trailer_warnings + parsed.warnings


def generate_assistant_turn(
    prompt: AssembledPrompt,
    chat: ChatProvider,
    *,
    opening_turn: bool = False,
) -> AssistantTurn:
    """Generate one in-dialogue companion turn, enforcing the move contract.

    On a contract violation the provider is re-asked exactly once with a
    repair instruction; a second violation is accepted with moves erased and
    contract_violated set, so the session continues and the violation is
    auditable downstream.
    """
    messages = list(prompt.messages)
    raw = chat.complete(messages, purpose=prompt.purpose.value)
    text, moves, trailer, warnings = _interpret(raw)
    problems = _contract_problems(moves, trailer, opening_turn=opening_turn)
    contract_violated = False

    if problems:
        logger.warning("move contract violated (%s); re-asking once", "; ".join(problems))
        repair = messages + [
            ChatMessage(
                role="system",
                content=_REPAIR_INSTRUCTION.format(problems="; ".join(problems)),
            )
        ]
        raw = chat.complete(repair, purpose=prompt.purpose.value)
        text, moves, trailer, retry_warnings = _interpret(raw)
        warnings = warnings + retry_warnings + tuple(f"repair requested: {p}" for p in problems)
        problems = _contract_problems(moves, trailer, opening_turn=opening_turn)
        if problems:
            contract_violated = True
            moves = ()
            warnings = warnings + tuple(f"accepted despite: {p}" for p in problems)

    parsed = parse_move_tags(text)
    assessment = (
        trailer.assessment if trailer is not None else AnswerAssessment(AnswerJudgment.NOT_ASSESSED)
    )
    if trailer is not None and trailer.follow_up is not None:
        follow_up = trailer.follow_up
    else:
        follow_up = "?" in parsed.clean_text
    return AssistantTurn(
        clean_text=parsed.clean_text,
        display_text=text.strip(),
        moves=moves,
        assessment=assessment,
        follow_up_expected=follow_up,
        warnings=warnings,
        contract_violated=contract_violated,
    )


def generate_greeting_turn(prompt: AssembledPrompt, chat: ChatProvider) -> AssistantTurn:
    """Greeting turns carry no status trailer and face no move contract."""
    raw = chat.complete(list(prompt.messages), purpose=PromptPurpose.GREETING.value)
    text, trailer, trailer_warnings = split_status_trailer(raw)
    parsed = parse_move_tags(text)
    closes_greeting = MoveKind.INTRODUCTION_OF_READING_ACTIVITY in tuple(
        move.kind for move in parsed.moves
    )
    return AssistantTurn(
        clean_text=parsed.clean_text,
        display_text=text.strip(),
        moves=parsed.moves,
        assessment=(
            trailer.assessment
            if trailer is not None
            else AnswerAssessment(AnswerJudgment.NOT_ASSESSED)
        ),
        follow_up_expected=not closes_greeting,
        warnings=trailer_warnings + parsed.warnings,
    )


# --------------------------------------------------------------------------
# story summaries


@dataclass(frozen=True)
class StorySummary:
    text: str
    source_book_id: str
    degraded: bool = False


def _first_sentence(text: str) -> str:
    match = re.search(r".+?[.!?](?=\s|$)", text.strip(), re.DOTALL)
    return match.group().strip() if match else text.strip()


def degraded_summary(book: Book) -> StorySummary:
    """Fallback when the provider is down: first sentence of every page."""
    text = " ".join(_first_sentence(page.text) for page in book.pages if page.text.strip())
    return StorySummary(text=text[:SUMMARY_MAX_CHARS], source_book_id=book.id, degraded=True)


_SUMMARY_INSTRUCTIONS = (
    "Summarize the following children's story in at most 150 words, keeping "
    "character names and the order of events. Reply with the summary only."
)


class StorySummarizer:
    """Provider-backed story summarization, memoized per book content.

    The memo key includes the content hash, so editing a book's text
    invalidates its cached summary without any explicit eviction call.
    """

    def __init__(self, chat: ChatProvider):
        self._chat = chat
        self._cache: dict[tuple[str, str], StorySummary] = {}

    def summarize(self, book: Book) -> StorySummary:
        key = (book.id, book.content_hash)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        full_text = "\n\n".join(page.text for page in book.pages)
        messages = [
            ChatMessage(role="system", content=_SUMMARY_INSTRUCTIONS),
            ChatMessage(role="user", content=full_text),
        ]
        try:
            raw = self._chat.complete(messages, purpose="summary").strip()
            summary = StorySummary(
                text=raw[:SUMMARY_MAX_CHARS], source_book_id=book.id, degraded=False
            )
        except ProviderError as exc:
            logger.warning("summary provider failed (%s); using degraded summary", exc)
            summary = degraded_summary(book)
        self._cache[key] = summary
        return summary


def summarize_story(book: Book, chat: ChatProvider) -> StorySummary:
    return StorySummarizer(chat).summarize(book)
