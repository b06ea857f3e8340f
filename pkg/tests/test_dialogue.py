import pytest

from readalong.books import Book, Page
from readalong.dialogue import (
    StorySummarizer,
    degraded_summary,
    generate_assistant_turn,
    generate_greeting_turn,
    plan_question_type,
    split_status_trailer,
    summarize_story,
)
from readalong.errors import ProviderError
from readalong.learner import AnswerJudgment, ChildProfile, ConversationStatus
from readalong.prompts import MoveKind, QuestionType, build_dialogue_prompt, build_greeting_prompt
from readalong.providers import ScriptedChatProvider, ScriptRecord


def dialogue_prompt():
    return build_dialogue_prompt(
        "The tide rose.", ChildProfile(nickname="Kit"), "So far.",
        ConversationStatus(), None, QuestionType.STORY_BASED, [],
    )


def scripted(*responses, purpose="dialogue"):
    return ScriptedChatProvider(
        [ScriptRecord(purpose=purpose, response=r) for r in responses]
    )


TRAILER_OK = '@status {"judgment": "correct", "topic": "tide", "follow_up": false}'


class TestTrailer:
    def test_parse_and_strip(self):
        text, trailer, warnings = split_status_trailer(f"Nice answer!\n{TRAILER_OK}")
        assert text == "Nice answer!"
        assert trailer.assessment.judgment is AnswerJudgment.CORRECT
        assert trailer.assessment.topic == "tide"
        assert trailer.follow_up is False
        assert warnings == ()

    def test_missing_trailer(self):
        text, trailer, warnings = split_status_trailer("Just words.")
        assert text == "Just words."
        assert trailer is None
        assert warnings == ()

    def test_malformed_json_warns(self):
        text, trailer, warnings = split_status_trailer("Hi.\n@status {judgment:")
        assert trailer is None
        assert any("malformed" in w for w in warnings)
        assert text == "Hi."

    def test_unknown_judgment_degrades(self):
        _, trailer, warnings = split_status_trailer(
            'X\n@status {"judgment": "brilliant", "topic": "", "follow_up": true}'
        )
        assert trailer.assessment.judgment is AnswerJudgment.NOT_ASSESSED
        assert any("brilliant" in w for w in warnings)

    def test_non_boolean_follow_up_ignored(self):
        _, trailer, warnings = split_status_trailer(
            'X\n@status {"judgment": "correct", "topic": "t", "follow_up": "yes"}'
        )
        assert trailer.follow_up is None
        assert any("follow_up" in w for w in warnings)


class TestQuestionPlanning:
    def test_story_based_when_nothing_matched(self):
        assert plan_question_type([], True) is QuestionType.STORY_BASED

    def test_story_based_when_extension_disabled(self):
        assert plan_question_type([object()], False) is QuestionType.STORY_BASED

    def test_knowledge_extending(self):
        assert plan_question_type([object()], True) is QuestionType.KNOWLEDGE_EXTENDING


class TestAssistantTurn:
    def test_clean_turn(self):
        chat = scripted(f"[Encouraging Feedback] Great thinking, Kit!\n{TRAILER_OK}")
        turn = generate_assistant_turn(dialogue_prompt(), chat)
        assert turn.clean_text == "Great thinking, Kit!"
        assert "[Encouraging Feedback]" in turn.display_text
        assert turn.move_kinds == (MoveKind.ENCOURAGING_FEEDBACK,)
        assert turn.follow_up_expected is False
        assert not turn.contract_violated
        assert chat.exhausted

    def test_opening_without_tags_repaired(self):
        chat = scripted(
            f"What do you think happens?\n{TRAILER_OK}",
            f"[Opening] What do you think happens?\n{TRAILER_OK}",
        )
        turn = generate_assistant_turn(dialogue_prompt(), chat, opening_turn=True)
        # The repaired (second) response is the one kept.
        assert turn.move_kinds == (MoveKind.OPENING,)
        assert not turn.contract_violated
        assert any("repair requested" in w for w in turn.warnings)
        assert chat.calls_made == 2

    def test_incorrect_without_scaffolding_repaired(self):
        bad = '[Encouraging Feedback] Good try!\n@status {"judgment": "incorrect", "topic": "tide", "follow_up": true}'
        good = '[Encouraging Feedback] Good try! [Scaffolding] What pushes the water up?\n@status {"judgment": "incorrect", "topic": "tide", "follow_up": true}'
        chat = scripted(bad, good)
        turn = generate_assistant_turn(dialogue_prompt(), chat)
        assert MoveKind.SCAFFOLDING in turn.move_kinds
        assert not turn.contract_violated

    def test_double_violation_accepted_with_audit_trail(self):
        bad = '[Encouraging Feedback] Good try!\n@status {"judgment": "incorrect", "topic": "tide", "follow_up": true}'
        chat = scripted(bad, bad)
        turn = generate_assistant_turn(dialogue_prompt(), chat)
        assert turn.contract_violated
        assert turn.moves == ()
        assert any("accepted despite" in w for w in turn.warnings)
        # The reply text itself is still delivered to the child.
        assert turn.clean_text == "Good try!"
        assert turn.assessment.judgment is AnswerJudgment.INCORRECT

    def test_missing_trailer_repaired(self):
        chat = scripted(
            "[Opening] A question?",
            f"[Opening] A question?\n{TRAILER_OK}",
        )
        turn = generate_assistant_turn(dialogue_prompt(), chat, opening_turn=True)
        assert not turn.contract_violated
        assert turn.assessment.judgment is AnswerJudgment.CORRECT

    def test_unsure_judgment_also_needs_scaffolding(self):
        bad = 'Okay.\n@status {"judgment": "unsure", "topic": "t", "follow_up": true}'
        chat = scripted(bad, bad)
        turn = generate_assistant_turn(dialogue_prompt(), chat)
        assert turn.contract_violated

    def test_follow_up_inferred_from_question_mark_without_trailer(self):
        chat = scripted("Windy day? \n", "Windy day?\n")
        turn = generate_assistant_turn(dialogue_prompt(), chat)
        assert turn.contract_violated  # trailer missing twice
        assert turn.follow_up_expected is True


class TestGreetingTurn:
    def test_plain_greeting_expects_reply(self):
        chat = scripted("Hi! What's your name?", purpose="greeting")
        turn = generate_greeting_turn(build_greeting_prompt(None, []), chat)
        assert turn.follow_up_expected is True
        assert turn.moves == ()

    def test_closing_tag_ends_greeting(self):
        chat = scripted(
            "[Introduction of reading activity] Let's read a story together!",
            purpose="greeting",
        )
        turn = generate_greeting_turn(build_greeting_prompt(None, []), chat)
        assert turn.follow_up_expected is False
        assert turn.move_kinds == (MoveKind.INTRODUCTION_OF_READING_ACTIVITY,)
        assert turn.clean_text == "Let's read a story together!"


def make_book(book_id="b", pages=("One. More.", "Two here.")):
    return Book(
        id=book_id,
        title="T",
        pages=tuple(Page(index=i, text=t) for i, t in enumerate(pages)),
    )


class FailingChat:
    def complete(self, messages, *, purpose):
        raise ProviderError("down", retryable=True)


class TestSummaries:
    def test_provider_summary(self):
        chat = scripted("A tidy summary.", purpose="summary")
        summary = summarize_story(make_book(), chat)
        assert summary.text == "A tidy summary."
        assert not summary.degraded

    def test_memoized_by_content(self):
        chat = scripted("Only once.", purpose="summary")
        summarizer = StorySummarizer(chat)
        book = make_book()
        assert summarizer.summarize(book).text == "Only once."
        assert summarizer.summarize(book).text == "Only once."
        assert chat.calls_made == 1

    def test_content_change_invalidates(self):
        chat = ScriptedChatProvider(
            [
                ScriptRecord(purpose="summary", response="First."),
                ScriptRecord(purpose="summary", response="Second."),
            ]
        )
        summarizer = StorySummarizer(chat)
        summarizer.summarize(make_book())
        changed = make_book(pages=("One. More.", "Different now."))
        assert summarizer.summarize(changed).text == "Second."
        assert chat.exhausted

    def test_degraded_on_provider_failure(self):
        summary = StorySummarizer(FailingChat()).summarize(make_book())
        assert summary.degraded
        assert summary.text == "One. Two here."

    def test_degraded_summary_first_sentences(self):
        book = make_book(pages=("The cat sat. It purred loudly.", "It slept!"))
        assert degraded_summary(book).text == "The cat sat. It slept!"
