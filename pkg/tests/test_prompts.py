"""Prompt assembly and move-tag grammar.

The four golden files pin the full rendered prompt text for the main
shapes; the builders must keep reproducing them byte for byte.
"""

import json

from hypothesis import given, settings, strategies as st

from readalong.fixtures import (
    fixture_knowledge_graph,
    fixture_library,
    fixture_prompt_golden,
    fixture_script_path,
)
from readalong.knowledge import GradeLevel
from readalong.learner import ChildProfile, ConversationStatus, Turn
from readalong.prompts import (
    ComponentKind,
    DialogueMove,
    MoveKind,
    PromptPurpose,
    QuestionType,
    build_dialogue_prompt,
    build_greeting_prompt,
    parse_move_tags,
    render_history,
    render_tagged_turn,
)
from readalong.providers import HashEmbedder
from readalong.retrieval import match_knowledge


def story_summary() -> str:
    records = json.loads(fixture_script_path("session-a").read_text(encoding="utf-8"))
    return next(r["response"] for r in records if r["purpose"] == "summary")


GREETING_KINDS = [
    ComponentKind.TASK_SUMMARY,
    ComponentKind.GENERATION_REQUIREMENTS,
    ComponentKind.FORMAT_SETTING,
    ComponentKind.CONVERSATION_HISTORY,
]

DIALOGUE_KINDS = [
    ComponentKind.TASK_SUMMARY,
    ComponentKind.GENERATION_REQUIREMENTS,
    ComponentKind.FORMAT_SETTING,
    ComponentKind.ACTIVITY_INFO,
    ComponentKind.CONVERSATION_HISTORY,
]


class TestGreetingPrompt:
    def test_blank_profile_golden(self):
        prompt = build_greeting_prompt(None, [])
        assert prompt.text == fixture_prompt_golden("greeting-blank")

    def test_partial_profile_golden(self):
        profile = ChildProfile(nickname="Mia", age_years=6)
        history = [
            Turn(speaker="companion", text="Hi there, little friend! Can you tell me your name?"),
            Turn(speaker="child", text="My name is Mia."),
            Turn(speaker="companion", text="Hi, Mia! So nice to meet you! Can you tell me what's your age now?"),
            Turn(speaker="child", text="I’m six years old."),
        ]
        prompt = build_greeting_prompt(profile, history)
        assert prompt.text == fixture_prompt_golden("greeting-partial")

    def test_component_structure(self):
        prompt = build_greeting_prompt(None, [])
        assert prompt.purpose is PromptPurpose.GREETING
        assert [c.kind for c in prompt.components] == GREETING_KINDS

    def test_text_is_joined_components(self):
        prompt = build_greeting_prompt(ChildProfile(nickname="X"), [])
        blocks = prompt.text.rstrip("\n").split("\n\n== ")
        assert len(blocks) == len(GREETING_KINDS)

    def test_messages_shape(self):
        prompt = build_greeting_prompt(None, [])
        roles = [m.role for m in prompt.messages]
        assert roles[0] == "system"
        assert prompt.text.startswith(prompt.messages[0].content.split("\n")[0])


class TestDialoguePrompt:
    def setup_method(self):
        self.book = fixture_library().get("dinosaur-seaside")
        self.summary = story_summary()
        self.status = ConversationStatus()

    def test_story_based_golden(self):
        profile = ChildProfile(nickname="Fei", age_years=6, interests=("Fairies",))
        prompt = build_dialogue_prompt(
            self.book.pages[3].text,
            profile,
            self.summary,
            self.status,
            None,
            QuestionType.STORY_BASED,
            [],
        )
        assert prompt.text == fixture_prompt_golden("dialogue-story-based")

    def test_knowledge_extending_golden(self):
        profile = ChildProfile(
            nickname="Mia",
            age_years=6,
            interests=("Peppa Pig",),
            language_style="short simple sentences",
        )
        matches = match_knowledge(
            self.book.pages[2].text,
            GradeLevel.KINDERGARTEN,
            fixture_knowledge_graph(),
            HashEmbedder(),
        )
        assert len(matches) == 1
        prompt = build_dialogue_prompt(
            self.book.pages[2].text,
            profile,
            self.summary,
            self.status,
            matches[0],
            QuestionType.KNOWLEDGE_EXTENDING,
            [],
        )
        assert prompt.text == fixture_prompt_golden("dialogue-knowledge-extending")

    def test_component_structure(self):
        prompt = build_dialogue_prompt(
            "A page.", ChildProfile(nickname="K"), "So far.", self.status,
            None, QuestionType.STORY_BASED, [],
        )
        assert prompt.purpose is PromptPurpose.DIALOGUE
        assert [c.kind for c in prompt.components] == DIALOGUE_KINDS

    def test_story_based_carries_no_statement(self):
        graph = fixture_knowledge_graph()
        prompt = build_dialogue_prompt(
            self.book.pages[3].text, ChildProfile(nickname="K"), "So far.",
            self.status, None, QuestionType.STORY_BASED, [],
        )
        for entry in graph.entries:
            assert entry.statement not in prompt.text

    def test_knowledge_extending_statement_exactly_once(self):
        graph = fixture_knowledge_graph()
        matches = match_knowledge(
            self.book.pages[2].text, GradeLevel.KINDERGARTEN, graph, HashEmbedder()
        )
        prompt = build_dialogue_prompt(
            self.book.pages[2].text, ChildProfile(nickname="K"), "So far.",
            self.status, matches[0], QuestionType.KNOWLEDGE_EXTENDING, [],
        )
        assert prompt.text.count(matches[0].entry.statement) == 1

    def test_history_rendered_with_speakers(self):
        history = [
            Turn(speaker="companion", text="What do you see?"),
            Turn(speaker="child", text="A crab!"),
        ]
        prompt = build_dialogue_prompt(
            "A page.", ChildProfile(nickname="K"), "So far.", self.status,
            None, QuestionType.STORY_BASED, history,
        )
        assert "Companion: What do you see?" in prompt.text
        assert "Child: A crab!" in prompt.text


class TestHistoryRendering:
    def test_empty_history_placeholder(self):
        assert render_history([]) == "(no turns yet)"

    def test_limit_keeps_most_recent(self):
        turns = [Turn(speaker="child", text=f"line {i}") for i in range(30)]
        rendered = render_history(turns, limit=5)
        assert "line 29" in rendered and "line 24" not in rendered


class TestMoveTagGrammar:
    def test_round_trip(self):
        moves = [
            DialogueMove(kind=MoveKind.OPENING, span="Hello there!"),
            DialogueMove(kind=MoveKind.SCAFFOLDING, span="Try again?"),
        ]
        raw = render_tagged_turn("", moves)
        parsed = parse_move_tags(raw)
        assert [(m.kind, m.span) for m in parsed.moves] == [(m.kind, m.span) for m in moves]
        assert parsed.clean_text == "Hello there! Try again?"
        assert parsed.warnings == ()

    def test_leading_untagged_text_kept(self):
        parsed = parse_move_tags("Well now. [Story Context] The tide rose.")
        assert parsed.clean_text == "Well now. The tide rose."
        assert [m.kind for m in parsed.moves] == [MoveKind.STORY_CONTEXT]

    def test_unknown_tag_left_in_place_with_warning(self):
        parsed = parse_move_tags("[Opening] hey [Mystery Tag] what")
        assert parsed.moves[0].span == "hey [Mystery Tag] what"
        assert any("Mystery Tag" in w for w in parsed.warnings)
        assert "[Mystery Tag]" in parsed.clean_text

    def test_empty_span_tag_allowed(self):
        parsed = parse_move_tags("[Introduction of reading activity]")
        assert [m.kind for m in parsed.moves] == [MoveKind.INTRODUCTION_OF_READING_ACTIVITY]
        assert parsed.moves[0].span == ""

    def test_curly_apostrophe_in_tag_normalized(self):
        parsed = parse_move_tags("[Integrating Child’s Interest] ponies!")
        assert [m.kind for m in parsed.moves] == [MoveKind.INTEGRATING_INTEREST]

    def test_case_insensitive_tags(self):
        parsed = parse_move_tags("[opening] hi [SCAFFOLDING] hint")
        assert [m.kind for m in parsed.moves] == [MoveKind.OPENING, MoveKind.SCAFFOLDING]

    def test_untagged_text_has_no_moves(self):
        parsed = parse_move_tags("Just plain words.")
        assert parsed.moves == ()
        assert parsed.clean_text == "Just plain words."

    @given(
        leading=st.sampled_from(["", "Right.", "Good try."]),
        kinds=st.lists(st.sampled_from(list(MoveKind)), min_size=1, max_size=4),
        spans=st.lists(
            st.text(
                alphabet=st.characters(codec="ascii", exclude_characters="[]@\n"),
                min_size=1,
                max_size=30,
            ).map(lambda s: " ".join(s.split())).filter(bool),
            min_size=4,
            max_size=4,
        ),
    )
    @settings(max_examples=60)
    def test_render_parse_round_trip(self, leading, kinds, spans):
        moves = [
            DialogueMove(kind=kind, span=span)
            for kind, span in zip(kinds, spans)
        ]
        parsed = parse_move_tags(render_tagged_turn(leading, moves))
        assert [m.kind for m in parsed.moves] == [m.kind for m in moves]
        assert [m.span for m in parsed.moves] == [m.span for m in moves]
        assert parsed.warnings == ()
