"""Loaders for the sample data bundled with the package.

The fixtures directory ships a small knowledge base, two story-book bundles,
scripted chat sessions with their frozen transcripts, and golden prompt
renderings. Tests and demos replay the scripted sessions through the real
orchestrator; nothing in here fakes engine behaviour.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from readalong.books import AssetStore, Library, import_bundle
from readalong.eventlog import EventLog
from readalong.knowledge import KnowledgeGraph, load_knowledge_graph
from readalong.learner import ChildProfile, ProfileStore
from readalong.providers import (
    HashEmbedder,
    MemorySpeechSynthesizer,
    ScriptedChatProvider,
    SpeechProvider,
)
from readalong.session import (
    AdvanceResult,
    ChildTurnInput,
    Orchestrator,
    PageCompleteInput,
    ReadingMode,
    SessionInput,
    SetModeInput,
    SteppingClock,
)

FIXTURES_ROOT = Path(__file__).resolve().parent / "fixtures"


def fixture_path(*parts: str) -> Path:
    path = FIXTURES_ROOT.joinpath(*parts)
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture at {path}")
    return path


def fixture_kb_path() -> Path:
    return fixture_path("kb.json")


def fixture_knowledge_graph() -> KnowledgeGraph:
    return load_knowledge_graph(fixture_kb_path())


def fixture_book_ids() -> list[str]:
    books_dir = fixture_path("books")
    return sorted(p.name for p in books_dir.iterdir() if (p / "manifest.json").exists())


def fixture_library(assets: AssetStore | None = None) -> Library:
    library = Library()
    for book_id in fixture_book_ids():
        bundle = fixture_path("books", book_id)
        library.add(import_bundle(bundle, assets, source="bundled"))
    return library


def load_library(data_dir: str | Path | None, assets: AssetStore | None = None) -> Library:
    """Bundled books plus any bundles imported under data_dir/books/."""
    library = fixture_library(assets)
    if data_dir is not None:
        imported_root = Path(data_dir) / "books"
        if imported_root.is_dir():
            for bundle in sorted(imported_root.iterdir()):
                if (bundle / "manifest.json").exists():
                    library.add(import_bundle(bundle, assets, source="imported"))
    return library


def fixture_script_path(name: str) -> Path:
    return fixture_path("scripts", f"{name}.json")


def fixture_transcript(name: str) -> str:
    return fixture_path("transcripts", f"{name}.txt").read_text(encoding="utf-8")


def fixture_prompt_golden(name: str) -> str:
    return fixture_path("prompts", f"{name}.txt").read_text(encoding="utf-8")


def fixture_session_plan(name: str) -> dict[str, Any]:
    with fixture_path("sessions", f"{name}.json").open(encoding="utf-8") as handle:
        return json.load(handle)


def fixture_session_names() -> list[str]:
    sessions_dir = fixture_path("sessions")
    return sorted(p.stem for p in sessions_dir.glob("*.json"))


def _input_from_step(step: dict[str, Any]) -> SessionInput:
    kind = step["kind"]
    if kind == "child":
        return ChildTurnInput(text=step["text"])
    if kind == "page_complete":
        return PageCompleteInput()
    if kind == "set_mode":
        return SetModeInput(mode=ReadingMode.from_dict(step["mode"]))
    raise ValueError(f"unknown plan step kind {kind!r}")


@dataclass
class FixtureReplay:
    """Everything a test needs to inspect one replayed scripted session."""

    plan: dict[str, Any]
    orchestrator: Orchestrator
    log: EventLog
    session_id: str
    results: list[AdvanceResult]
    chat: ScriptedChatProvider


def run_fixture_session(
    name: str,
    data_dir: str | Path,
    *,
    speech: SpeechProvider | None = None,
) -> FixtureReplay:
    """Replay one bundled scripted session end to end against a fresh data_dir."""
    plan = fixture_session_plan(name)
    assets = AssetStore(data_dir)
    profiles = ProfileStore(data_dir)
    seeded = plan.get("profile")
    if seeded is not None:
        profiles.save(plan["child_id"], ChildProfile(**seeded))
    chat = ScriptedChatProvider.from_file(fixture_script_path(plan["script"]))
    if speech is None:
        # Narration only engages when the chosen mode asks for it.
        speech = MemorySpeechSynthesizer(assets)
    orchestrator = Orchestrator(
        library=fixture_library(assets),
        graph=fixture_knowledge_graph(),
        embedder=HashEmbedder(),
        chat=chat,
        log=EventLog(data_dir),
        profiles=profiles,
        speech=speech,
        clock=SteppingClock(),
        session_id_factory=lambda: plan["name"],
    )
    results = [orchestrator.start_session(plan["child_id"], plan["book_id"])]
    session_id = results[0].session_id
    for step in plan["inputs"]:
        results.append(orchestrator.advance(session_id, _input_from_step(step)))
    return FixtureReplay(
        plan=plan,
        orchestrator=orchestrator,
        log=orchestrator.log,
        session_id=session_id,
        results=results,
        chat=chat,
    )
