"""Child profile capture and rolling conversation status.

The profile comes out of the greeting chat. A provider does the heavy lifting
of structured extraction; a rule-based scanner backstops it, and nothing the
provider claims is kept unless it is grounded in what the child actually said
(an age that never appeared in the transcript is dropped, not trusted).
"""

from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

from readalong.errors import ContractError, ProviderError
from readalong.knowledge import GradeLevel
from readalong.providers import ChatMessage, ChatProvider

logger = logging.getLogger(__name__)

MIN_AGE_YEARS = 3
MAX_AGE_YEARS = 12

_NUMBER_WORDS = {
    "three": 3, "four": 4, "five": 5, "six": 6, "seven": 7, "eight": 8,
    "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
}

DEFAULT_BAILOUT_PHRASES: frozenset[str] = frozenset(
    {
        "i don't know",
        "i dont know",
        "i do not know",
        "i am not sure",
        "i'm not sure",
        "not sure",
        "no idea",
        "idk",
        "dunno",
    }
)


@dataclass(frozen=True)
class Turn:
    speaker: str  # "child" | "companion"
    text: str


@dataclass(frozen=True)
class ChildProfile:
    nickname: str | None = None
    age_years: int | None = None
    interests: tuple[str, ...] = ()
    favorite_story_or_character: str | None = None
    language_style: str | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.age_years is not None and not (MIN_AGE_YEARS <= self.age_years <= MAX_AGE_YEARS):
            raise ContractError(
                f"age_years must be within [{MIN_AGE_YEARS}, {MAX_AGE_YEARS}], got {self.age_years}"
            )
        seen: dict[str, str] = {}
        for interest in self.interests:
            seen.setdefault(interest.casefold(), interest)
        deduped = tuple(seen.values())
        if deduped != self.interests:
            object.__setattr__(self, "interests", deduped)

    def with_interest(self, interest: str) -> "ChildProfile":
        if interest.casefold() in {i.casefold() for i in self.interests}:
            return self
        return replace(self, interests=self.interests + (interest,))


def grade_for_age(age_years: int) -> GradeLevel:
    """Curriculum grade cap for a reader of the given age.

    Ages three through six all map to Kindergarten; each year past six steps
    one grade, topping out at fifth grade for elevens and twelves.
    """
    if not (MIN_AGE_YEARS <= age_years <= MAX_AGE_YEARS):
        raise ContractError(
            f"age_years must be within [{MIN_AGE_YEARS}, {MAX_AGE_YEARS}], got {age_years}"
        )
    if age_years <= 6:
        return GradeLevel.KINDERGARTEN
    return GradeLevel(min(age_years - 6, 5))


def _normalize(text: str) -> str:
    return text.replace("’", "'").strip()


def _age_is_grounded(age: int, child_texts: Sequence[str]) -> bool:
    """True when the age literally appears in a child turn (digits or word)."""
    word = next((w for w, n in _NUMBER_WORDS.items() if n == age), None)
    for text in child_texts:
        lowered = _normalize(text).lower()
        if re.search(rf"\b{age}\b", lowered):
            return True
        if word and re.search(rf"\b{word}\b", lowered):
            return True
    return False


_AGE_PATTERNS = (
    re.compile(r"\b(\d{1,2})[\s-]*years?[\s-]*old\b"),
    re.compile(r"\b(" + "|".join(_NUMBER_WORDS) + r")[\s-]*years?[\s-]*old\b"),
    re.compile(r"\bi[' ]?a?m\s+(\d{1,2})\b"),
    re.compile(r"\bi[' ]?a?m\s+(" + "|".join(_NUMBER_WORDS) + r")\b"),
)

_NAME_PATTERN = re.compile(r"\bmy name is\s+([A-Za-z][\w' -]*)", re.IGNORECASE)
_LIKE_PATTERN = re.compile(r"\bi (?:like|love)\s+([^.!?\n]+)", re.IGNORECASE)
_FAVORITE_PATTERN = re.compile(r"\bfavorite[^.!?\n]*?\bis\s+([^.!?\n]+)", re.IGNORECASE)


def rule_based_profile(child_texts: Sequence[str]) -> ChildProfile:
    """Pattern-matched profile scan over child turns; the extraction fallback."""
    nickname: str | None = None
    age: int | None = None
    interests: list[str] = []
    favorite: str | None = None
    for text in child_texts:
        clean = _normalize(text)
        lowered = clean.lower()
        if nickname is None:
            name_match = _NAME_PATTERN.search(clean)
            if name_match:
                nickname = name_match.group(1).strip().rstrip(".")
        if age is None:
            for pattern in _AGE_PATTERNS:
                found = pattern.search(lowered)
                if found:
                    token = found.group(1)
                    value = _NUMBER_WORDS.get(token, None)
                    if value is None:
                        try:
                            value = int(token)
                        except ValueError:
                            continue
                    if MIN_AGE_YEARS <= value <= MAX_AGE_YEARS:
                        age = value
                        break
        for like in _LIKE_PATTERN.finditer(clean):
            phrase = like.group(1).strip().rstrip(".")
            for part in re.split(r",| and ", phrase):
                part = part.strip()
                if part and part.lower() not in {p.lower() for p in interests}:
                    interests.append(part)
        if favorite is None:
            fav = _FAVORITE_PATTERN.search(clean)
            if fav:
                favorite = fav.group(1).strip().rstrip(".")
    return ChildProfile(
        nickname=nickname,
        age_years=age,
        interests=tuple(interests),
        favorite_story_or_character=favorite,
    )


_EXTRACTION_INSTRUCTIONS = (
    "Read the conversation and extract the child's profile as a single JSON "
    "object with keys nickname, age_years, interests, "
    "favorite_story_or_character, language_style. Use null for anything the "
    "child did not say; interests is a list of short phrases. Reply with JSON "
    "only."
)


def _provider_profile(
    greeting_turns: Sequence[Turn], extractor: ChatProvider
) -> tuple[ChildProfile | None, list[str]]:
    transcript = "\n".join(f"{turn.speaker}: {turn.text}" for turn in greeting_turns)
    messages = [
        ChatMessage(role="system", content=_EXTRACTION_INSTRUCTIONS),
        ChatMessage(role="user", content=transcript),
    ]
    try:
        raw = extractor.complete(messages, purpose="extraction")
    except ProviderError as exc:
        return None, [f"profile extraction provider failed: {exc}"]
    match = re.search(r"\{.*\}", raw, re.DOTALL)
    if not match:
        return None, ["profile extraction returned no JSON object"]
    try:
        data = json.loads(match.group())
    except json.JSONDecodeError:
        return None, ["profile extraction returned unparseable JSON"]

    warnings: list[str] = []
    age = data.get("age_years")
    if age is not None:
        if not isinstance(age, int) or not (MIN_AGE_YEARS <= age <= MAX_AGE_YEARS):
            warnings.append(f"extracted age {age!r} out of range; dropped")
            age = None
    interests_raw = data.get("interests") or []
    interests = tuple(
        str(i).strip() for i in interests_raw if isinstance(i, (str, int)) and str(i).strip()
    )
    profile = ChildProfile(
        nickname=(str(data["nickname"]).strip() or None) if data.get("nickname") else None,
        age_years=age,
        interests=interests,
        favorite_story_or_character=(
            str(data["favorite_story_or_character"]).strip() or None
            if data.get("favorite_story_or_character")
            else None
        ),
        language_style=(
            str(data["language_style"]).strip() or None if data.get("language_style") else None
        ),
    )
    return profile, warnings


def parse_self_introduction(
    greeting_turns: Sequence[Turn], extractor: ChatProvider
) -> ChildProfile:
    """Build a ChildProfile from the greeting conversation.

    Requires at least one child turn. Provider-extracted fields are merged
    over the rule-based scan, except that an age not grounded in the child's
    own words is discarded with a warning rather than believed.
    """
    child_texts = [turn.text for turn in greeting_turns if turn.speaker == "child"]
    if not child_texts:
        raise ContractError("greeting transcript has no child turns")

    fallback = rule_based_profile(child_texts)
    extracted, warnings = _provider_profile(greeting_turns, extractor)
    if extracted is None:
        return replace(fallback, warnings=tuple(warnings))

    age = extracted.age_years
    if age is not None and not _age_is_grounded(age, child_texts):
        warnings.append(f"extracted age {age} not grounded in child turns; dropped")
        age = None
    if age is None and fallback.age_years is not None:
        age = fallback.age_years

    interests = tuple(dict.fromkeys(extracted.interests + fallback.interests))
    return ChildProfile(
        nickname=extracted.nickname or fallback.nickname,
        age_years=age,
        interests=interests,
        favorite_story_or_character=(
            extracted.favorite_story_or_character or fallback.favorite_story_or_character
        ),
        language_style=extracted.language_style or fallback.language_style,
        warnings=tuple(warnings),
    )


# --------------------------------------------------------------------------
# conversation status


class EngagementLevel(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class KnowledgeAccuracy(str, Enum):
    CORRECT = "correct"
    PARTIALLY_CORRECT = "partially_correct"
    INCORRECT = "incorrect"
    NOT_ASSESSED = "not_assessed"


class AnswerJudgment(str, Enum):
    CORRECT = "correct"
    PARTIALLY_CORRECT = "partially_correct"
    INCORRECT = "incorrect"
    UNSURE = "unsure"
    NOT_ASSESSED = "not_assessed"


# How a trailer judgment lands in the status ledger. An unsure answer shows
# no knowledge either way, so it degrades to not_assessed rather than wrong.
_JUDGMENT_TO_ACCURACY = {
    AnswerJudgment.CORRECT: KnowledgeAccuracy.CORRECT,
    AnswerJudgment.PARTIALLY_CORRECT: KnowledgeAccuracy.PARTIALLY_CORRECT,
    AnswerJudgment.INCORRECT: KnowledgeAccuracy.INCORRECT,
    AnswerJudgment.UNSURE: KnowledgeAccuracy.NOT_ASSESSED,
    AnswerJudgment.NOT_ASSESSED: KnowledgeAccuracy.NOT_ASSESSED,
}

MAX_RECENT_TOPICS = 5
_ENGAGEMENT_WINDOW = 3
_HIGH_ENGAGEMENT_MIN_TOKENS = 5.0


@dataclass(frozen=True)
class AnswerAssessment:
    judgment: AnswerJudgment
    topic: str = ""


@dataclass(frozen=True)
class ConversationStatus:
    engagement_level: EngagementLevel = EngagementLevel.MEDIUM
    recent_topics: tuple[str, ...] = ()
    knowledge_accuracy: KnowledgeAccuracy = KnowledgeAccuracy.NOT_ASSESSED
    turns_taken: int = 0
    # Rolling window backing the engagement heuristic; not part of prompts.
    recent_child_turns: tuple[str, ...] = ()


def _is_bailout(text: str, phrases: frozenset[str]) -> bool:
    lowered = _normalize(text).lower().rstrip(".!?")
    return lowered in phrases or not lowered


def _engagement(
    window: Sequence[str], phrases: frozenset[str]
) -> EngagementLevel:
    if not window:
        return EngagementLevel.MEDIUM
    bailouts = sum(1 for text in window if _is_bailout(text, phrases))
    if len(window) >= 2 and bailouts >= 2:
        return EngagementLevel.LOW
    token_counts = [len(text.split()) for text in window]
    average = sum(token_counts) / len(token_counts)
    if average >= _HIGH_ENGAGEMENT_MIN_TOKENS and bailouts == 0:
        return EngagementLevel.HIGH
    return EngagementLevel.MEDIUM


def update_status(
    status: ConversationStatus,
    child_turn: str,
    assessment: AnswerAssessment | None = None,
    *,
    bailout_phrases: frozenset[str] = DEFAULT_BAILOUT_PHRASES,
) -> ConversationStatus:
    """Fold one child turn (and its optional assessment) into the status.

    Pure: returns a new status. turns_taken always increments; engagement is
    recomputed over the last three child turns; the assessed topic is pushed
    onto recent_topics (most recent first, capped).
    """
    window = (status.recent_child_turns + (child_turn,))[-_ENGAGEMENT_WINDOW:]
    if assessment is not None:
        accuracy = _JUDGMENT_TO_ACCURACY[assessment.judgment]
    else:
        accuracy = KnowledgeAccuracy.NOT_ASSESSED
    topics = status.recent_topics
    if assessment is not None and assessment.topic.strip():
        topic = assessment.topic.strip()
        topics = (topic,) + tuple(t for t in topics if t != topic)
        topics = topics[:MAX_RECENT_TOPICS]
    return ConversationStatus(
        engagement_level=_engagement(window, bailout_phrases),
        recent_topics=topics,
        knowledge_accuracy=accuracy,
        turns_taken=status.turns_taken + 1,
        recent_child_turns=window,
    )


# --------------------------------------------------------------------------
# profile persistence


class ProfileStore:
    """One JSON profile record per child id under data_dir/profiles."""

    def __init__(self, data_dir: str | Path):
        self._dir = Path(data_dir) / "profiles"
        self._dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock_for(self, child_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(child_id, threading.Lock())

    def _path(self, child_id: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9_-]", "_", child_id)
        return self._dir / f"{safe}.json"

    def load(self, child_id: str) -> ChildProfile | None:
        path = self._path(child_id)
        if not path.exists():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        return ChildProfile(
            nickname=data.get("nickname"),
            age_years=data.get("age_years"),
            interests=tuple(data.get("interests", [])),
            favorite_story_or_character=data.get("favorite_story_or_character"),
            language_style=data.get("language_style"),
        )

    def save(self, child_id: str, profile: ChildProfile) -> None:
        with self._lock_for(child_id):
            payload = {
                "nickname": profile.nickname,
                "age_years": profile.age_years,
                "interests": list(profile.interests),
                "favorite_story_or_character": profile.favorite_story_or_character,
                "language_style": profile.language_style,
            }
            self._path(child_id).write_text(
                json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
            )
