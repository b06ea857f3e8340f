"""HTTP face of the reading service.

One orchestrator instance serves every route; sessions serialize their own
inputs, so a second request racing into the same session gets a 409 instead
of interleaved turns. Errors leave as a stable JSON shape:
``{"code": ..., "message": ..., "retryable": ...}`` with machine-readable
code tokens, so clients can branch without parsing prose.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from starlette.exceptions import HTTPException as StarletteHTTPException

from readalong.books import (
    AssetStore,
    Book,
    BookDraft,
    Library,
    Page,
    confirm_draft,
    edit_draft_page,
    export_bundle,
    ingest_photos,
    preview_matched_knowledge,
    slug_for_title,
)
from readalong.errors import (
    ConflictError,
    ContractError,
    IllegalInputError,
    KnowledgeBaseError,
    NotFoundError,
    OcrError,
    ProviderError,
    ReadalongError,
)
from readalong.eventlog import DashboardConfig, EventKind, EventLog, compute_dashboard
from readalong.fixtures import fixture_kb_path, load_library
from readalong.knowledge import GradeLevel, KnowledgeGraph, load_knowledge_graph
from readalong.learner import ChildProfile, ProfileStore
from readalong.offline import CannedChatCompanion
from readalong.providers import (
    CHAT_CREDENTIAL_ENV,
    EMBED_CREDENTIAL_ENV,
    OCR_CREDENTIAL_ENV,
    HashEmbedder,
    HttpChatClient,
    HttpEmbeddingClient,
    HttpOcrClient,
    MarkerOcrClient,
    MemorySpeechSynthesizer,
    ProviderConfig,
)
from readalong.retrieval import RetrievalConfig
from readalong.session import (
    AdvanceResult,
    ChildTurnInput,
    Orchestrator,
    PageCompleteInput,
    ReadingMode,
    SetModeInput,
)

API_VERSION = "1"


# --------------------------------------------------------------------------
# service state


@dataclass
class ServiceState:
    orchestrator: Orchestrator
    library: Library
    graph: KnowledgeGraph
    assets: AssetStore
    log: EventLog
    profiles: ProfileStore
    ocr: Any
    retrieval_config: RetrievalConfig
    data_dir: Path
    offline: bool
    drafts: dict[str, BookDraft] = field(default_factory=dict)


def _read_provider_settings(config_path: str | Path) -> dict[str, Any]:
    import json

    path = Path(config_path)
    if not path.exists():
        raise NotFoundError(f"no provider config file at {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def build_state(
    *,
    data_dir: str | Path,
    kb_path: str | Path | None = None,
    offline: bool = False,
    threshold: float | None = None,
    config_path: str | Path | None = None,
) -> ServiceState:
    """Assemble providers and stores for one service process.

    Offline mode swaps every remote provider for its deterministic local
    stand-in; nothing in the process touches the network after boot.
    """
    data_dir = Path(data_dir)
    graph = load_knowledge_graph(kb_path or fixture_kb_path())
    assets = AssetStore(data_dir)
    library = load_library(data_dir, assets)
    log = EventLog(data_dir)
    profiles = ProfileStore(data_dir)
    retrieval = RetrievalConfig() if threshold is None else RetrievalConfig(threshold=threshold)

    if offline:
        chat = CannedChatCompanion()
        embedder = HashEmbedder()
        speech = MemorySpeechSynthesizer(assets)
        ocr = MarkerOcrClient()
    else:
        if config_path is None:
            raise ContractError(
                "online mode needs a provider config file; pass one or run offline"
            )
        settings = _read_provider_settings(config_path)
        timeout = float(settings.get("timeout_seconds", 30.0))
        rpm = settings.get("requests_per_minute")
        chat = HttpChatClient(
            ProviderConfig(
                endpoint=settings["chat_endpoint"],
                credential_env=CHAT_CREDENTIAL_ENV,
                timeout_seconds=timeout,
                requests_per_minute=rpm,
            )
        )
        embedder = HttpEmbeddingClient(
            ProviderConfig(
                endpoint=settings["embedding_endpoint"],
                credential_env=EMBED_CREDENTIAL_ENV,
                timeout_seconds=timeout,
            )
        )
        # Narration audio needs a speech backend; none is configured for
        # hosted deployments yet, so narration stays silent online.
        speech = None
        ocr_endpoint = settings.get("ocr_endpoint")
        ocr = (
            HttpOcrClient(
                ProviderConfig(
                    endpoint=ocr_endpoint,
                    credential_env=OCR_CREDENTIAL_ENV,
                    timeout_seconds=timeout,
                )
            )
            if ocr_endpoint
            else MarkerOcrClient()
        )

    orchestrator = Orchestrator(
        library=library,
        graph=graph,
        embedder=embedder,
        chat=chat,
        log=log,
        profiles=profiles,
        speech=speech,
        retrieval_config=retrieval,
    )
    return ServiceState(
        orchestrator=orchestrator,
        library=library,
        graph=graph,
        assets=assets,
        log=log,
        profiles=profiles,
        ocr=ocr,
        retrieval_config=retrieval,
        data_dir=data_dir,
        offline=offline,
    )


# --------------------------------------------------------------------------
# request bodies


class ImportBookBody(BaseModel):
    title: str = Field(min_length=1)
    pages: list[str] = Field(min_length=1)
    id: str | None = None
    tags: list[str] = []


class PhotosBody(BaseModel):
    title: str = Field(min_length=1)
    photos_base64: list[str] = Field(min_length=1)
    tags: list[str] = []


class EditPageBody(BaseModel):
    text: str


class StartSessionBody(BaseModel):
    child_id: str = Field(min_length=1)
    book_id: str = Field(min_length=1)
    re_greet: bool = False


class TurnBody(BaseModel):
    text: str | None = None
    page_complete: bool = False


# --------------------------------------------------------------------------
# serializers


def _book_summary(book: Book) -> dict[str, Any]:
    return {
        "id": book.id,
        "title": book.title,
        "page_count": book.page_count,
        "tags": list(book.topic_tags),
        "source": book.source,
    }


def _draft_payload(draft: BookDraft) -> dict[str, Any]:
    return {
        "draft_id": draft.id,
        "title": draft.title,
        "tags": list(draft.topic_tags),
        "pending_review": draft.pending_review,
        "confirmed_book_id": draft.confirmed_book_id,
        "pages": [
            {
                "index": page.index,
                "text": page.text,
                "ocr_confidence": page.ocr_confidence,
                "needs_review": page.needs_review,
            }
            for page in draft.pages
        ],
    }


def _emitted_turns(result: AdvanceResult) -> list[dict[str, Any]]:
    return [
        {
            "speaker": turn.speaker,
            "text": turn.display_text,
            "clean_text": turn.clean_text,
            "moves": list(turn.moves),
            "follow_up_expected": turn.follow_up_expected,
            "audio": turn.audio_asset,
        }
        for turn in result.turns
    ]


def _advance_payload(result: AdvanceResult) -> dict[str, Any]:
    return {
        "session_id": result.session_id,
        "state": {
            "phase": result.state.phase.value,
            "page_index": result.state.page_index,
            "book_id": result.state.book_id,
            "child_id": result.state.child_id,
        },
        "turns": _emitted_turns(result),
    }


_TURN_EVENT_KINDS = {
    EventKind.GREETING_TURN: "greeting",
    EventKind.INTERACTION_TURN: "interaction",
    EventKind.SUMMARY_TURN: "summary",
}


def _session_snapshot(state: ServiceState, session_id: str) -> dict[str, Any]:
    session = state.orchestrator.get_session(session_id)
    turns: list[dict[str, Any]] = []
    knowledge: dict[str, Any] | None = None
    for event in state.log.events(session_id):
        label = _TURN_EVENT_KINDS.get(event.kind)
        if label is not None:
            record = {
                "kind": label,
                "speaker": event.payload.get("speaker", "companion"),
                "text": event.payload["text"],
                "moves": list(event.payload.get("moves", [])),
                "page_index": event.payload.get("page_index"),
                "audio": event.payload.get("audio"),
            }
            turns.append(record)
        elif event.kind is EventKind.KNOWLEDGE_SURFACED:
            knowledge = dict(event.payload)
    book = session.book
    page = book.pages[session.state.page_index]
    profile = session.profile
    return {
        "session_id": session_id,
        "state": {
            "phase": session.state.phase.value,
            "page_index": session.state.page_index,
            "book_id": session.state.book_id,
            "child_id": session.state.child_id,
        },
        "mode": session.mode.to_dict() if session.mode else None,
        "profile": {
            "nickname": profile.nickname,
            "age_years": profile.age_years,
            "interests": list(profile.interests),
        },
        "book": _book_summary(book),
        "current_page": {
            "index": page.index,
            "text": page.text,
            "is_last": page.index == book.page_count - 1,
        },
        "turns": turns,
        "knowledge": knowledge,
    }


def _dashboard_payload(summary) -> dict[str, Any]:
    return {
        "child_id": summary.child_id,
        "total_reading_seconds": summary.total_reading_seconds,
        "books_completed": summary.books_completed,
        "knowledge_learned": [
            {
                "entry_id": item.entry_id,
                "statement": item.statement,
                "grade_label": item.grade_label,
                "first_surfaced_wall": item.first_surfaced_wall,
            }
            for item in summary.knowledge_learned
        ],
        "current_book": (
            {
                "book_id": summary.current_book.book_id,
                "page_index": summary.current_book.page_index,
                "page_count": summary.current_book.page_count,
                "completion_fraction": summary.current_book.completion_fraction,
            }
            if summary.current_book
            else None
        ),
        "history": [
            {
                "book_id": item.book_id,
                "completion_fraction": item.completion_fraction,
                "last_read_wall": item.last_read_wall,
                "completed": item.completed,
            }
            for item in summary.history
        ],
    }


# --------------------------------------------------------------------------
# error translation


def _error_response(status: int, code: str, message: str, *, retryable: bool = False):
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "retryable": retryable},
    )


def _install_error_handlers(app: FastAPI) -> None:
    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return _error_response(404, "not_found", str(exc))

    @app.exception_handler(ConflictError)
    async def _conflict(request: Request, exc: ConflictError):
        return _error_response(409, "conflict", str(exc))

    @app.exception_handler(IllegalInputError)
    async def _illegal(request: Request, exc: IllegalInputError):
        return _error_response(409, "illegal_input", str(exc))

    @app.exception_handler(ProviderError)
    async def _provider(request: Request, exc: ProviderError):
        return _error_response(
            502, "provider_failure", str(exc), retryable=exc.retryable
        )

    @app.exception_handler(OcrError)
    async def _ocr(request: Request, exc: OcrError):
        return _error_response(422, "ocr_failed", str(exc))

    @app.exception_handler(KnowledgeBaseError)
    async def _knowledge(request: Request, exc: KnowledgeBaseError):
        return _error_response(422, "contract_violation", str(exc))

    @app.exception_handler(ContractError)
    async def _contract(request: Request, exc: ContractError):
        return _error_response(422, "contract_violation", str(exc))

    @app.exception_handler(ReadalongError)
    async def _fallback(request: Request, exc: ReadalongError):
        return _error_response(500, "internal_error", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError):
        fields = [
            ".".join(str(part) for part in error.get("loc", ())) or "body"
            for error in exc.errors()
        ]
        return JSONResponse(
            status_code=422,
            content={
                "code": "validation_failed",
                "message": "request body failed validation",
                "retryable": False,
                "fields": fields,
            },
        )

    @app.exception_handler(StarletteHTTPException)
    async def _http(request: Request, exc: StarletteHTTPException):
        if exc.status_code == 404:
            return _error_response(404, "route_not_found", "no such route")
        if exc.status_code == 405:
            return _error_response(405, "method_not_allowed", "method not allowed")
        return _error_response(exc.status_code, "http_error", str(exc.detail))


# --------------------------------------------------------------------------
# app factory


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="readalong", version=API_VERSION, docs_url=None, redoc_url=None)
    _install_error_handlers(app)

    @app.get("/healthz")
    def healthz() -> dict[str, Any]:
        return {
            "status": "ok",
            "api_version": API_VERSION,
            "offline": state.offline,
            "books": len(state.library.list_books()),
            "knowledge_entries": len(state.graph.entries),
        }

    @app.get("/library")
    def library() -> dict[str, Any]:
        return {"books": [_book_summary(book) for book in state.library.list_books()]}

    @app.post("/books/import", status_code=201)
    def import_book(body: ImportBookBody) -> dict[str, Any]:
        book_id = body.id or slug_for_title(body.title)
        book = Book(
            id=book_id,
            title=body.title,
            pages=tuple(Page(index=i, text=text) for i, text in enumerate(body.pages)),
            topic_tags=tuple(body.tags),
            source="imported",
        )
        added = state.library.add(book)
        export_bundle(added, state.data_dir / "books" / added.id, state.assets)
        return _book_summary(added)

    @app.post("/books/photos", status_code=201)
    def ingest(body: PhotosBody) -> dict[str, Any]:
        try:
            photos = [base64.b64decode(item, validate=True) for item in body.photos_base64]
        except (binascii.Error, ValueError):
            raise ContractError("photos_base64 entries must be valid base64")
        draft = ingest_photos(
            photos,
            state.ocr,
            state.assets,
            title=body.title,
            topic_tags=body.tags,
        )
        state.drafts[draft.id] = draft
        return _draft_payload(draft)

    @app.patch("/books/{draft_id}/pages/{page_index}")
    def edit_page(draft_id: str, page_index: int, body: EditPageBody) -> dict[str, Any]:
        draft = state.drafts.get(draft_id)
        if draft is None:
            raise NotFoundError(f"no draft with id {draft_id!r}")
        edit_draft_page(draft, page_index, body.text)
        return _draft_payload(draft)

    @app.post("/books/{draft_id}/confirm")
    def confirm(draft_id: str) -> dict[str, Any]:
        draft = state.drafts.get(draft_id)
        if draft is None:
            raise NotFoundError(f"no draft with id {draft_id!r}")
        book = confirm_draft(draft, state.library)
        export_bundle(book, state.data_dir / "books" / book.id, state.assets)
        return _book_summary(book)

    @app.get("/books/{book_id}/knowledge-preview")
    def knowledge_preview(book_id: str, grade: str = "Grade5") -> dict[str, Any]:
        book = state.library.get(book_id)
        cap = GradeLevel.from_label(grade)
        preview = preview_matched_knowledge(
            book, cap, state.graph, state.orchestrator.embedder, state.retrieval_config
        )
        return {
            "book_id": book.id,
            "grade": cap.label,
            "pages": [
                {
                    "page_index": index,
                    "matches": [
                        {
                            "entry_id": match.entry.id,
                            "statement": match.entry.statement,
                            "grade": match.entry.grade.label,
                            "grade_display": match.entry.grade.display_name,
                            "keyword": match.keyword.surface,
                            "similarity": match.similarity,
                        }
                        for match in matches
                    ],
                }
                for index, matches in sorted(preview.items())
            ],
        }

    @app.post("/sessions", status_code=201)
    def start_session(body: StartSessionBody) -> dict[str, Any]:
        result = state.orchestrator.start_session(
            body.child_id, body.book_id, re_greet=body.re_greet
        )
        return _advance_payload(result)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict[str, Any]:
        return _session_snapshot(state, session_id)

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnBody) -> dict[str, Any]:
        if body.page_complete == (body.text is not None):
            raise ContractError("provide exactly one of text or page_complete")
        if body.page_complete:
            result = state.orchestrator.advance(session_id, PageCompleteInput())
        else:
            assert body.text is not None
            result = state.orchestrator.advance(session_id, ChildTurnInput(text=body.text))
        return _advance_payload(result)

    @app.put("/sessions/{session_id}/mode")
    def put_mode(session_id: str, body: dict[str, Any]) -> dict[str, Any]:
        mode = ReadingMode.from_dict(body)
        result = state.orchestrator.advance(session_id, SetModeInput(mode=mode))
        return _advance_payload(result)

    @app.get("/dashboard/{child_id}")
    def dashboard(
        child_id: str,
        include_setup: bool = False,
        learned_requires_correct: bool = False,
    ) -> dict[str, Any]:
        summary = compute_dashboard(
            child_id,
            state.log,
            DashboardConfig(
                include_setup=include_setup,
                learned_requires_correct=learned_requires_correct,
            ),
        )
        return _dashboard_payload(summary)

    @app.get("/audio/{asset_key}")
    def audio(asset_key: str) -> Response:
        payload = state.assets.get(asset_key)
        return Response(content=payload, media_type="application/octet-stream")

    return app
