"""Book content: ingestion from page photos, the library, and bundles.

One photo becomes one page. OCR output lands in a draft that a grown-up can
review and correct before the book is confirmed into the library; nothing a
child reads skips that gate. Bundles are plain directories (manifest plus
page text files plus image assets) so books survive export and re-import
byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import re
import shutil
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from readalong.errors import ConflictError, ContractError, NotFoundError, OcrError
from readalong.knowledge import GradeLevel, KnowledgeGraph
from readalong.retrieval import (
    Embedder,
    KnowledgeMatch,
    RetrievalConfig,
    StatementEmbeddingCache,
    match_knowledge,
)

# OCR confidence below this flags the page for review.
REVIEW_CONFIDENCE_THRESHOLD = 0.80


class AssetStore:
    """Content-addressed blob store under data_dir/assets.

    Keys are derived from content, so storing the same bytes twice is a no-op
    and references stay valid across exports and re-imports.
    """

    def __init__(self, data_dir: str | Path):
        self._dir = Path(data_dir) / "assets"
        self._dir.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes, *, suffix: str = "") -> str:
        key = hashlib.sha256(data).hexdigest()[:24] + suffix
        path = self._dir / key
        if not path.exists():
            path.write_bytes(data)
        return key

    def get(self, key: str) -> bytes:
        path = self._dir / key
        if not path.exists() or not self._valid_key(key):
            raise NotFoundError(f"no asset with key {key!r}")
        return path.read_bytes()

    def exists(self, key: str) -> bool:
        return self._valid_key(key) and (self._dir / key).exists()

    @staticmethod
    def _valid_key(key: str) -> bool:
        return bool(re.fullmatch(r"[0-9a-f]{24}[\w.-]*", key))


@dataclass(frozen=True)
class Page:
    index: int
    text: str
    image_asset: str | None = None
    ocr_confidence: float | None = None


@dataclass(frozen=True)
class Book:
    id: str
    title: str
    pages: tuple[Page, ...]
    topic_tags: tuple[str, ...] = ()
    source: str = "imported"  # "bundled" | "imported" | "photos"

    def __post_init__(self) -> None:
        if not self.pages:
            raise ContractError(f"book {self.id!r} must have at least one page")
        for expected, page in enumerate(self.pages):
            if page.index != expected:
                raise ContractError(
                    f"book {self.id!r}: page indexes must be 0..n-1 in order"
                )

    @property
    def page_count(self) -> int:
        return len(self.pages)

    @property
    def content_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.title.encode("utf-8"))
        for page in self.pages:
            digest.update(b"\x00")
            digest.update(page.text.encode("utf-8"))
        return digest.hexdigest()[:16]


@dataclass
class DraftPage:
    index: int
    text: str
    image_asset: str | None
    ocr_confidence: float
    needs_review: bool


@dataclass
class BookDraft:
    """A photographed book awaiting grown-up review."""

    id: str
    title: str
    pages: list[DraftPage]
    topic_tags: tuple[str, ...] = ()
    confirmed_book_id: str | None = None

    @property
    def pending_review(self) -> list[int]:
        return [page.index for page in self.pages if page.needs_review]


def slug_for_title(text: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")
    return slug or "book"


def ingest_photos(
    photos: Sequence[bytes],
    ocr,
    assets: AssetStore,
    *,
    title: str,
    book_id: str | None = None,
    topic_tags: Iterable[str] = (),
) -> BookDraft:
    """Run OCR over page photos, in shooting order, into a reviewable draft.

    Every photo becomes exactly one page. Empty or low-confidence recognition
    flags the page instead of failing the import; an unreadable photo is an
    error naming the page index, since silently dropping a page would corrupt
    the page numbering.
    """
    if not photos:
        raise ContractError("at least one page photo is required")
    pages: list[DraftPage] = []
    for index, photo in enumerate(photos):
        asset_key = assets.put(photo, suffix=".img")
        try:
            result = ocr.recognize(photo)
        except OcrError as exc:
            raise OcrError(f"page {index}: {exc}", retryable=exc.retryable) from exc
        needs_review = (
            not result.text.strip() or result.confidence < REVIEW_CONFIDENCE_THRESHOLD
        )
        pages.append(
            DraftPage(
                index=index,
                text=result.text,
                image_asset=asset_key,
                ocr_confidence=result.confidence,
                needs_review=needs_review,
            )
        )
    draft_id = book_id or f"{slug_for_title(title)}-{hashlib.sha256(b''.join(photos)).hexdigest()[:6]}"
    return BookDraft(id=draft_id, title=title, pages=pages, topic_tags=tuple(topic_tags))


def edit_draft_page(draft: BookDraft, page_index: int, text: str) -> None:
    """Apply a reviewer's correction; the page is no longer flagged."""
    for page in draft.pages:
        if page.index == page_index:
            page.text = text
            page.needs_review = False
            return
    raise NotFoundError(f"draft {draft.id!r} has no page {page_index}")


# Tiny theme map for collection browsing; confirmed books with no explicit
# tags get whatever themes their text mentions.
_THEME_KEYWORDS: dict[str, tuple[str, ...]] = {
    "ocean": ("ocean", "sea", "seaside", "tide", "tides", "wave", "waves", "beach"),
    "dinosaurs": ("dinosaur", "dinosaurs", "t-rex", "rex"),
    "sky-and-weather": ("sun", "sunset", "sunlight", "rain", "cloud", "snow", "weather"),
    "outdoors": ("camp", "camping", "tent", "tents", "mountain", "mountains", "forest"),
    "animals": ("animal", "animals", "bird", "birds", "fish", "crab", "crabs"),
}


def categorize_book(book: Book) -> tuple[str, ...]:
    """Theme tags derived from the text, for shelf browsing."""
    text = " ".join(page.text for page in book.pages).lower()
    words = set(re.findall(r"[a-z'-]+", text))
    themes = [
        theme
        for theme, keywords in _THEME_KEYWORDS.items()
        if any(keyword in words for keyword in keywords)
    ]
    return tuple(themes)


class Library:
    """Books available to read, keyed by id, browsable by theme tag."""

    def __init__(self) -> None:
        self._books: dict[str, Book] = {}

    def add(self, book: Book) -> Book:
        existing = self._books.get(book.id)
        if existing is not None:
            if existing.content_hash == book.content_hash:
                return existing
            raise ConflictError(f"book id {book.id!r} already exists with different content")
        self._books[book.id] = book
        return book

    def replace(self, book: Book) -> Book:
        if book.id not in self._books:
            raise NotFoundError(f"no book with id {book.id!r}")
        self._books[book.id] = book
        return book

    def get(self, book_id: str) -> Book:
        try:
            return self._books[book_id]
        except KeyError:
            raise NotFoundError(f"no book with id {book_id!r}") from None

    def __contains__(self, book_id: str) -> bool:
        return book_id in self._books

    def list_books(self) -> list[Book]:
        return [self._books[key] for key in sorted(self._books)]

    def by_tag(self, tag: str) -> list[Book]:
        return [book for book in self.list_books() if tag in book.topic_tags]


def confirm_draft(draft: BookDraft, library: Library) -> Book:
    """Promote a reviewed draft into the library. Idempotent.

    Confirming the same draft again returns the already-confirmed book
    unchanged; pages still flagged for review block confirmation.
    """
    if draft.confirmed_book_id is not None and draft.confirmed_book_id in library:
        return library.get(draft.confirmed_book_id)
    if draft.pending_review:
        raise ContractError(
            f"draft {draft.id!r} has pages pending review: {draft.pending_review}"
        )
    book = Book(
        id=draft.id,
        title=draft.title,
        pages=tuple(
            Page(
                index=page.index,
                text=page.text,
                image_asset=page.image_asset,
                ocr_confidence=page.ocr_confidence,
            )
            for page in draft.pages
        ),
        topic_tags=draft.topic_tags or (),
        source="photos",
    )
    if not book.topic_tags:
        book = replace(book, topic_tags=categorize_book(book))
    added = library.add(book)
    draft.confirmed_book_id = added.id
    return added


def preview_matched_knowledge(
    book: Book,
    grade_cap: GradeLevel,
    graph: KnowledgeGraph,
    embedder: Embedder,
    config: RetrievalConfig | None = None,
    *,
    statement_cache: StatementEmbeddingCache | None = None,
) -> dict[int, list[KnowledgeMatch]]:
    """What each page would surface at a grade cap; no session required."""
    return {
        page.index: match_knowledge(
            page.text,
            grade_cap,
            graph,
            embedder,
            config,
            statement_cache=statement_cache,
        )
        for page in book.pages
    }


# --------------------------------------------------------------------------
# bundles


def export_bundle(book: Book, directory: str | Path, assets: AssetStore | None = None) -> Path:
    """Write a book as a bundle directory; returns the bundle path."""
    root = Path(directory)
    pages_dir = root / "pages"
    pages_dir.mkdir(parents=True, exist_ok=True)
    page_records = []
    for page in book.pages:
        text_name = f"pages/page_{page.index:03d}.txt"
        (root / text_name).write_text(page.text + "\n", encoding="utf-8")
        record: dict[str, object] = {"index": page.index, "text_file": text_name}
        if page.image_asset:
            record["image_file"] = f"assets/{page.image_asset}"
            if assets is not None and assets.exists(page.image_asset):
                assets_dir = root / "assets"
                assets_dir.mkdir(exist_ok=True)
                (assets_dir / page.image_asset).write_bytes(assets.get(page.image_asset))
        if page.ocr_confidence is not None:
            record["ocr_confidence"] = page.ocr_confidence
        page_records.append(record)
    manifest = {
        "id": book.id,
        "title": book.title,
        "tags": list(book.topic_tags),
        "pages": page_records,
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return root


def import_bundle(
    directory: str | Path, assets: AssetStore | None = None, *, source: str = "imported"
) -> Book:
    """Read a bundle directory back into a Book."""
    root = Path(directory)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise NotFoundError(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    pages: list[Page] = []
    for record in manifest["pages"]:
        text = (root / record["text_file"]).read_text(encoding="utf-8")
        if text.endswith("\n"):
            text = text[:-1]
        image_key: str | None = None
        image_file = record.get("image_file")
        if image_file:
            image_path = root / image_file
            if assets is not None and image_path.exists():
                image_key = assets.put(image_path.read_bytes(), suffix=".img")
            else:
                image_key = Path(image_file).name
        pages.append(
            Page(
                index=int(record["index"]),
                text=text,
                image_asset=image_key,
                ocr_confidence=record.get("ocr_confidence"),
            )
        )
    return Book(
        id=manifest["id"],
        title=manifest["title"],
        pages=tuple(pages),
        topic_tags=tuple(manifest.get("tags", [])),
        source=source,
    )
