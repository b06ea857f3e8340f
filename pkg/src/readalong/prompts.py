"""Prompt assembly and bracket move-tag parsing.

Prompts are assembled from ordered labeled components and rendered to a
single deterministic text block; the rendering is what golden tests freeze.
Assistant replies come back annotated with bracket move tags, which the
tolerant parser lifts into structured dialogue moves without ever failing the
turn.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from readalong.errors import ContractError
from readalong.knowledge import GradeLevel
from readalong.learner import (
    AnswerJudgment,
    ChildProfile,
    ConversationStatus,
    KnowledgeAccuracy,
    Turn,
)
from readalong.providers import ChatMessage
from readalong.retrieval import KnowledgeMatch

COMPANION_NAME = "Sparky"
HISTORY_LIMIT = 20


class PromptPurpose(str, Enum):
    GREETING = "greeting"
    DIALOGUE = "dialogue"


class ComponentKind(str, Enum):
    TASK_SUMMARY = "TaskSummary"
    GENERATION_REQUIREMENTS = "GenerationRequirements"
    FORMAT_SETTING = "FormatSetting"
    ACTIVITY_INFO = "ActivityInfo"
    CONVERSATION_HISTORY = "ConversationHistory"


_HEADERS: dict[ComponentKind, str] = {
    ComponentKind.TASK_SUMMARY: "TASK SUMMARY",
    ComponentKind.GENERATION_REQUIREMENTS: "GENERATION REQUIREMENTS",
    ComponentKind.FORMAT_SETTING: "FORMAT SETTING",
    ComponentKind.ACTIVITY_INFO: "ACTIVITY INFORMATION",
    ComponentKind.CONVERSATION_HISTORY: "CONVERSATION HISTORY",
}

# Components that must never be blank; an empty history is rendered with an
# explicit placeholder instead.
_REQUIRE_BODY = {
    ComponentKind.TASK_SUMMARY,
    ComponentKind.GENERATION_REQUIREMENTS,
    ComponentKind.FORMAT_SETTING,
}

_GREETING_ORDER = (
    ComponentKind.TASK_SUMMARY,
    ComponentKind.GENERATION_REQUIREMENTS,
    ComponentKind.FORMAT_SETTING,
    ComponentKind.CONVERSATION_HISTORY,
)

_DIALOGUE_ORDER = (
    ComponentKind.TASK_SUMMARY,
    ComponentKind.GENERATION_REQUIREMENTS,
    ComponentKind.FORMAT_SETTING,
    ComponentKind.ACTIVITY_INFO,
    ComponentKind.CONVERSATION_HISTORY,
)


@dataclass(frozen=True)
class PromptComponent:
    kind: ComponentKind
    body: str

    def __post_init__(self) -> None:
        if self.kind in _REQUIRE_BODY and not self.body.strip():
            raise ContractError(f"{self.kind.value} component must have a non-empty body")


@dataclass(frozen=True)
class AssembledPrompt:
    purpose: PromptPurpose
    components: tuple[PromptComponent, ...]
    text: str

    def __post_init__(self) -> None:
        expected = _GREETING_ORDER if self.purpose is PromptPurpose.GREETING else _DIALOGUE_ORDER
        kinds = tuple(component.kind for component in self.components)
        if kinds != expected:
            raise ContractError(
                f"{self.purpose.value} prompt must have components {[k.value for k in expected]}, "
                f"got {[k.value for k in kinds]}"
            )

    @property
    def messages(self) -> tuple[ChatMessage, ...]:
        return (ChatMessage(role="system", content=self.text),)


def _render(components: Sequence[PromptComponent]) -> str:
    blocks = [f"== {_HEADERS[c.kind]} ==\n{c.body}" for c in components]
    return "\n\n".join(blocks) + "\n"


def _assemble(purpose: PromptPurpose, components: Sequence[PromptComponent]) -> AssembledPrompt:
    return AssembledPrompt(
        purpose=purpose, components=tuple(components), text=_render(components)
    )


_SPEAKER_LABELS = {"child": "Child", "companion": "Companion"}


def render_history(history: Sequence[Turn], limit: int = HISTORY_LIMIT) -> str:
    """Turns rendered verbatim, oldest first; older overflow folds to one line."""
    if not history:
        return "(no turns yet)"
    lines: list[str] = []
    if len(history) > limit:
        lines.append(f"({len(history) - limit} earlier turns omitted)")
        history = history[-limit:]
    for turn in history:
        label = _SPEAKER_LABELS.get(turn.speaker, turn.speaker)
        lines.append(f"{label}: {turn.text}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# greeting


def build_greeting_prompt(
    partial_profile: ChildProfile | None, history: Sequence[Turn]
) -> AssembledPrompt:
    profile = partial_profile or ChildProfile()

    task = (
        f"You are {COMPANION_NAME}, a friendly story-reading companion for a young child. "
        "This is the get-to-know-you chat at the start of a reading session: greet the "
        "child warmly, learn a little about them, and get them excited to read a story "
        "with you."
    )

    known: list[str] = []
    if profile.nickname:
        known.append(f"nickname: {profile.nickname}")
    if profile.age_years is not None:
        known.append(f"age: {profile.age_years}")
    if profile.interests:
        known.append("interests: " + ", ".join(profile.interests))
    known_line = (
        "Already known about the child: " + "; ".join(known) + ". Do not ask for these again."
        if known
        else "Nothing is known about the child yet."
    )
    requirements = "\n".join(
        [
            "- Learn the child's nickname, age, and at least one interest or favorite "
            "story, with one short question at a time.",
            "- Speak in warm, simple, child-directed language; keep every reply to a few "
            "short sentences.",
            "- Ask at most one question per reply.",
            f"- {known_line}",
            "- Once nickname, age, and an interest are all known, close the greeting by "
            "introducing the reading activity, and start that closing part with the tag "
            "[Introduction of reading activity].",
        ]
    )

    format_setting = "\n".join(
        [
            "- Write plain conversational text for a child; no lists, no markdown.",
            "- Use the bracket tag [Introduction of reading activity] exactly once, and "
            "only when you close the greeting.",
            "- Use no other bracket tags during the greeting.",
        ]
    )

    components = [
        PromptComponent(ComponentKind.TASK_SUMMARY, task),
        PromptComponent(ComponentKind.GENERATION_REQUIREMENTS, requirements),
        PromptComponent(ComponentKind.FORMAT_SETTING, format_setting),
        PromptComponent(ComponentKind.CONVERSATION_HISTORY, render_history(history)),
    ]
    return _assemble(PromptPurpose.GREETING, components)


# --------------------------------------------------------------------------
# dialogue


class QuestionType(str, Enum):
    STORY_BASED = "StoryBased"
    KNOWLEDGE_EXTENDING = "KnowledgeExtending"


_ACCURACY_PHRASES = {
    KnowledgeAccuracy.CORRECT: "correct",
    KnowledgeAccuracy.PARTIALLY_CORRECT: "partly correct",
    KnowledgeAccuracy.INCORRECT: "incorrect",
    KnowledgeAccuracy.NOT_ASSESSED: "not assessed yet",
}


def build_dialogue_prompt(
    story_section: str | None,
    profile: ChildProfile,
    summary: str,
    status: ConversationStatus,
    matched_knowledge: KnowledgeMatch | None,
    question_type: QuestionType,
    history: Sequence[Turn],
) -> AssembledPrompt:
    """Assemble the five-component prompt for one in-reading assistant turn.

    A knowledge-extending prompt requires matched_knowledge and embeds the
    statement exactly once (inside the activity information); a story-based
    prompt requires its absence and never mentions a statement. story_section
    None means the end-of-story conversation, where the activity information
    carries the full story summary in place of a single section.
    """
    if question_type is QuestionType.KNOWLEDGE_EXTENDING and matched_knowledge is None:
        raise ContractError("matched_knowledge is required for a knowledge-extending prompt")
    if question_type is QuestionType.STORY_BASED and matched_knowledge is not None:
        raise ContractError("matched_knowledge must be absent for a story-based prompt")

    nickname = profile.nickname or "the child"
    age_phrase = f"age {profile.age_years}" if profile.age_years is not None else "age unknown"
    task = (
        f"You are {COMPANION_NAME}, a story-reading companion in the middle of reading a "
        f"story with {nickname} ({age_phrase}). Hold a short guided conversation about "
        "what you are reading together."
    )

    requirement_lines = [f"- Address the child as {nickname}."]
    if profile.interests:
        requirement_lines.append(
            "- The child's interests: "
            + ", ".join(profile.interests)
            + ". Weave one in naturally when it helps the conversation."
        )
    if profile.language_style:
        requirement_lines.append(f"- Match the child's language style: {profile.language_style}.")
    requirement_lines.append(
        "- Keep replies to two or three short sentences and ask at most one question per reply."
    )
    requirement_lines.append(
        f"- Conversation status: engagement {status.engagement_level.value}; "
        f"last answer {_ACCURACY_PHRASES[status.knowledge_accuracy]}; "
        + (
            "recent topics: " + ", ".join(status.recent_topics)
            if status.recent_topics
            else "no topics discussed yet"
        )
        + "."
    )
    requirement_lines.append(
        "- When replying to an answer, begin with encouragement before anything else."
    )
    requirement_lines.append(
        "- If the child's latest answer is wrong or unsure, add a [Scaffolding] step: "
        "simplify the question, give a hint, and invite another try."
    )
    if question_type is QuestionType.KNOWLEDGE_EXTENDING:
        requirement_lines.append(
            "- Connect the story to the science idea in the activity information and ask "
            "one question that extends it into the child's everyday world."
        )
    else:
        requirement_lines.append(
            "- Ask one question grounded in the story content itself."
        )
    requirements = "\n".join(requirement_lines)

    format_setting = "\n".join(
        [
            "- Structure your reply with bracket move tags chosen from: [Opening], "
            "[Story Context], [Integrating Child's Interest], "
            "[Extending to Real-World Knowledge], [Scaffolding], [Encouraging Feedback].",
            "- A reply that opens a conversation must carry at least one tag; later "
            "replies use tags where they fit.",
            "- Ask at most one question per reply.",
            '- End every reply with a final line of exactly this form: @status '
            '{"judgment": "...", "topic": "...", "follow_up": ...} where judgment is '
            "one of correct, partially_correct, incorrect, unsure, not_assessed (your "
            "judgment of the child's latest answer), topic is a word or two for what "
            "the exchange is about, and follow_up is true when you expect the child to "
            "answer again.",
            "- The @status line is machine-read and stripped before the child sees the reply.",
        ]
    )

    activity_blocks: list[str] = []
    if story_section is None:
        activity_blocks.append(
            "The story has been read to the end. Full story summary:\n" + summary
        )
    else:
        activity_blocks.append("Story section open on screen:\n" + story_section)
        activity_blocks.append("Story so far:\n" + summary)
    if matched_knowledge is not None:
        entry = matched_knowledge.entry
        activity_blocks.append(
            f"Science idea to extend toward ({entry.grade.display_name}):\n{entry.statement}"
        )
    activity = "\n\n".join(activity_blocks)

    components = [
        PromptComponent(ComponentKind.TASK_SUMMARY, task),
        PromptComponent(ComponentKind.GENERATION_REQUIREMENTS, requirements),
        PromptComponent(ComponentKind.FORMAT_SETTING, format_setting),
        PromptComponent(ComponentKind.ACTIVITY_INFO, activity),
        PromptComponent(ComponentKind.CONVERSATION_HISTORY, render_history(history)),
    ]
    return _assemble(PromptPurpose.DIALOGUE, components)


# --------------------------------------------------------------------------
# move tags


class MoveKind(str, Enum):
    OPENING = "Opening"
    STORY_CONTEXT = "StoryContext"
    INTEGRATING_INTEREST = "IntegratingInterest"
    EXTENDING_KNOWLEDGE = "ExtendingKnowledge"
    SCAFFOLDING = "Scaffolding"
    ENCOURAGING_FEEDBACK = "EncouragingFeedback"
    INTRODUCTION_OF_READING_ACTIVITY = "IntroductionOfReadingActivity"

    @property
    def tag_text(self) -> str:
        return _TAG_TEXT[self]


_TAG_TEXT: dict[MoveKind, str] = {
    MoveKind.OPENING: "Opening",
    MoveKind.STORY_CONTEXT: "Story Context",
    MoveKind.INTEGRATING_INTEREST: "Integrating Child's Interest",
    MoveKind.EXTENDING_KNOWLEDGE: "Extending to Real-World Knowledge",
    MoveKind.SCAFFOLDING: "Scaffolding",
    MoveKind.ENCOURAGING_FEEDBACK: "Encouraging Feedback",
    MoveKind.INTRODUCTION_OF_READING_ACTIVITY: "Introduction of reading activity",
}


def _tag_key(text: str) -> str:
    return re.sub(r"\s+", " ", text.replace("’", "'")).strip().lower()


_TAG_LOOKUP: dict[str, MoveKind] = {}
for _kind in MoveKind:
    _TAG_LOOKUP[_tag_key(_kind.tag_text)] = _kind
    _TAG_LOOKUP[_tag_key(_kind.value)] = _kind


@dataclass(frozen=True)
class DialogueMove:
    kind: MoveKind
    span: str  # text the move covers, up to the next recognized tag


@dataclass(frozen=True)
class ParsedTurn:
    clean_text: str
    moves: tuple[DialogueMove, ...]
    warnings: tuple[str, ...]


_BRACKET_RE = re.compile(r"\[([^\[\]]*)\]")


def parse_move_tags(raw_turn: str) -> ParsedTurn:
    """Lift bracket tags out of an assistant reply.

    Every recognized tag becomes a DialogueMove whose span runs to the next
    recognized tag or the end of the turn. Unrecognized bracket tokens are
    preserved in the clean text and reported as warnings, never errors; a
    recognized tag with nothing after it keeps its move with an empty span and
    a warning.
    """
    recognized: list[tuple[int, int, MoveKind]] = []
    warnings: list[str] = []
    for match in _BRACKET_RE.finditer(raw_turn):
        kind = _TAG_LOOKUP.get(_tag_key(match.group(1)))
        if kind is None:
            warnings.append(f"unrecognized bracket tag [{match.group(1)}] left in place")
        else:
            recognized.append((match.start(), match.end(), kind))

    moves: list[DialogueMove] = []
    for index, (start, end, kind) in enumerate(recognized):
        span_end = recognized[index + 1][0] if index + 1 < len(recognized) else len(raw_turn)
        span = raw_turn[end:span_end].strip()
        if not span:
            warnings.append(f"tag [{kind.tag_text}] has no text after it")
        moves.append(DialogueMove(kind=kind, span=span))

    clean_parts: list[str] = []
    cursor = 0
    for start, end, _kind in recognized:
        clean_parts.append(raw_turn[cursor:start])
        cursor = end
    clean_parts.append(raw_turn[cursor:])
    clean = "".join(clean_parts)
    clean = re.sub(r"[ \t]{2,}", " ", clean)
    clean = re.sub(r"^[ \t]+", "", clean, flags=re.MULTILINE)
    return ParsedTurn(
        clean_text=clean.strip(), moves=tuple(moves), warnings=tuple(warnings)
    )


def render_tagged_turn(leading: str, moves: Sequence[DialogueMove]) -> str:
    """Inverse of parse_move_tags for fixture authoring and round-trip checks."""
    parts: list[str] = []
    if leading:
        parts.append(leading)
    for move in moves:
        tagged = f"[{move.kind.tag_text}]"
        parts.append(f"{tagged} {move.span}".strip())
    return " ".join(parts)
