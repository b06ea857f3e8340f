"""Deterministic chat stand-in so the whole service can run with no network.

The canned companion reads everything it needs back out of the assembled
prompt: what is already known about the child, whether the last history line
is a child turn, and whether a science idea is in play. That keeps it
stateless across sessions and safe to share between concurrent requests.
"""

from __future__ import annotations

import re

from readalong.providers import ChatMessage

_NICKNAME_RE = re.compile(r"- Address the child as (.+?)\.\n")
_SCIENCE_RE = re.compile(r"Science idea to extend toward \([^)]*\):\n(.+)")

_ASK_NAME = (
    "Hi there, little friend! My name is Sparky, and I'm your reading "
    "companion. Can you tell me your name?"
)
_ASK_AGE = "So nice to meet you! How old are you?"
_ASK_INTERESTS = (
    "Do you have any favorite topics? Like space, princesses, dinosaurs, or "
    "cars? You can tell me about anything you like!"
)
_CLOSE_GREETING = (
    "Wonderful! [Introduction of reading activity] Next, we'll read a story "
    "together, and I may pause now and then so we can talk about it. Are you "
    "ready? Let's start reading!"
)


def _prompt_text(messages: list[ChatMessage]) -> str:
    return "\n".join(m.content for m in messages)


def _last_history_line(text: str) -> str:
    lines = text.rstrip("\n").split("\n")
    return lines[-1] if lines else ""


class CannedChatCompanion:
    """Offline ChatProvider: fixed templates steered entirely by the prompt."""

    def complete(self, messages: list[ChatMessage], *, purpose: str) -> str:
        text = _prompt_text(messages)
        if purpose == "greeting":
            return self._greeting(text)
        if purpose == "dialogue":
            return self._dialogue(text)
        if purpose == "summary":
            return self._summary(messages)
        if purpose == "extraction":
            # The rule-based fallback already mines the greeting turns.
            return "{}"
        return "Let's keep reading together!"

    def _greeting(self, text: str) -> str:
        if "Nothing is known about the child yet." in text:
            return _ASK_NAME
        if "nickname: " not in text:
            return _ASK_NAME
        if "age: " not in text:
            return _ASK_AGE
        if "interests: " not in text:
            return _ASK_INTERESTS
        return _CLOSE_GREETING

    def _dialogue(self, text: str) -> str:
        match = _NICKNAME_RE.search(text)
        name = match.group(1) if match else "little friend"
        if _last_history_line(text).startswith("Child:"):
            reply = (
                f"[Encouraging Feedback] Thank you for telling me, {name}! "
                "That was lovely thinking. Let's keep going with our story!"
            )
            trailer = '@status {"judgment": "correct", "topic": "our story", "follow_up": false}'
            return f"{reply}\n{trailer}"
        science = _SCIENCE_RE.search(text)
        if science:
            idea = science.group(1).strip()
            opening = (
                f"[Opening] Let's pause for a moment, {name}. "
                f"[Extending to Real-World Knowledge] Here is something neat: {idea} "
                "Where have you noticed that in your own world?"
            )
            trailer = '@status {"judgment": "not_assessed", "topic": "science idea", "follow_up": true}'
            return f"{opening}\n{trailer}"
        opening = (
            f"[Opening] Let's think about this part together, {name}. "
            "[Story Context] Something just happened on this page. "
            "What do you think will happen next?"
        )
        trailer = '@status {"judgment": "not_assessed", "topic": "the story", "follow_up": true}'
        return f"{opening}\n{trailer}"

    def _summary(self, messages: list[ChatMessage]) -> str:
        story = messages[-1].content if messages else ""
        sentences: list[str] = []
        for paragraph in story.split("\n\n"):
            paragraph = paragraph.strip()
            if not paragraph:
                continue
            first = re.split(r"(?<=[.!?])\s+", paragraph, maxsplit=1)[0]
            sentences.append(first)
        return " ".join(sentences) if sentences else "A story we read together."
