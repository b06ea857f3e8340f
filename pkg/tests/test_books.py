import pytest

from readalong.books import (
    AssetStore,
    Book,
    Library,
    Page,
    categorize_book,
    confirm_draft,
    edit_draft_page,
    export_bundle,
    import_bundle,
    ingest_photos,
    preview_matched_knowledge,
    slug_for_title,
)
from readalong.errors import ConflictError, ContractError, NotFoundError, OcrError
from readalong.fixtures import fixture_knowledge_graph, fixture_library
from readalong.knowledge import GradeLevel
from readalong.providers import HashEmbedder, MarkerOcrClient, OcrResult


def make_book(book_id="b", pages=("First page.", "Second page."), **kw):
    return Book(
        id=book_id,
        title=kw.pop("title", "A Book"),
        pages=tuple(Page(index=i, text=t) for i, t in enumerate(pages)),
        **kw,
    )


class TestSlug:
    def test_basic(self):
        assert slug_for_title("Dinosaur Valley at the Seaside") == "dinosaur-valley-at-the-seaside"

    def test_punctuation_collapses(self):
        assert slug_for_title("Tiny Boat!  (2nd ed.)") == "tiny-boat-2nd-ed"

    def test_empty_falls_back(self):
        assert slug_for_title("!!!") == "book"


class TestBookInvariants:
    def test_pages_required(self):
        with pytest.raises(ContractError):
            Book(id="x", title="T", pages=())

    def test_page_indexes_must_be_dense(self):
        with pytest.raises(ContractError):
            Book(id="x", title="T", pages=(Page(index=1, text="a"),))

    def test_content_hash_tracks_text(self):
        a = make_book()
        b = make_book(pages=("First page.", "Changed."))
        assert a.content_hash != b.content_hash
        assert a.content_hash == make_book().content_hash


class TestAssetStore:
    def test_put_get_round_trip(self, tmp_path):
        store = AssetStore(tmp_path)
        key = store.put(b"hello", suffix=".img")
        assert store.get(key) == b"hello"
        assert store.exists(key)

    def test_put_is_idempotent(self, tmp_path):
        store = AssetStore(tmp_path)
        assert store.put(b"x") == store.put(b"x")

    def test_unknown_key(self, tmp_path):
        with pytest.raises(NotFoundError):
            AssetStore(tmp_path).get("0" * 24)

    def test_traversal_key_rejected(self, tmp_path):
        store = AssetStore(tmp_path)
        with pytest.raises(NotFoundError):
            store.get("../" + "0" * 24)


class TestLibrary:
    def test_add_get_list_sorted(self):
        library = Library()
        library.add(make_book("zeta"))
        library.add(make_book("alpha"))
        assert [b.id for b in library.list_books()] == ["alpha", "zeta"]

    def test_add_same_content_idempotent(self):
        library = Library()
        first = library.add(make_book())
        assert library.add(make_book()) is first

    def test_add_conflicting_content_rejected(self):
        library = Library()
        library.add(make_book())
        with pytest.raises(ConflictError):
            library.add(make_book(pages=("Other text.",)))

    def test_replace_requires_existing(self):
        with pytest.raises(NotFoundError):
            Library().replace(make_book())

    def test_by_tag(self):
        library = Library()
        library.add(make_book("a", topic_tags=("ocean",)))
        library.add(make_book("b", topic_tags=("space",), pages=("Stars.",)))
        assert [b.id for b in library.by_tag("ocean")] == ["a"]


class TestIngestion:
    def ocr_photo(self, text):
        return b"OCRTEXT:" + text.encode("utf-8")

    def test_photos_become_pages_in_order(self, tmp_path):
        assets = AssetStore(tmp_path)
        draft = ingest_photos(
            [self.ocr_photo("Page one."), self.ocr_photo("Page two.")],
            MarkerOcrClient(),
            assets,
            title="Tiny Boat",
        )
        assert [p.index for p in draft.pages] == [0, 1]
        assert [p.text for p in draft.pages] == ["Page one.", "Page two."]
        assert draft.pending_review == []
        assert all(assets.exists(p.image_asset) for p in draft.pages)

    def test_blank_page_flagged_not_dropped(self, tmp_path):
        draft = ingest_photos(
            [self.ocr_photo("Words."), b"", self.ocr_photo("More.")],
            MarkerOcrClient(),
            AssetStore(tmp_path),
            title="T",
        )
        assert len(draft.pages) == 3
        assert draft.pending_review == [1]

    def test_low_confidence_flagged(self, tmp_path):
        class ShakyOcr:
            def recognize(self, photo):
                return OcrResult(text="blurry words", confidence=0.5)

        draft = ingest_photos([b"p"], ShakyOcr(), AssetStore(tmp_path), title="T")
        assert draft.pending_review == [0]

    def test_unreadable_photo_error_names_page(self, tmp_path):
        with pytest.raises(OcrError, match="page 1"):
            ingest_photos(
                [self.ocr_photo("Fine."), b"\xff\xfegarbage"],
                MarkerOcrClient(),
                AssetStore(tmp_path),
                title="T",
            )

    def test_no_photos_rejected(self, tmp_path):
        with pytest.raises(ContractError):
            ingest_photos([], MarkerOcrClient(), AssetStore(tmp_path), title="T")

    def test_draft_id_stable_for_same_photos(self, tmp_path):
        photos = [self.ocr_photo("Same.")]
        a = ingest_photos(photos, MarkerOcrClient(), AssetStore(tmp_path), title="Tiny Boat")
        b = ingest_photos(photos, MarkerOcrClient(), AssetStore(tmp_path), title="Tiny Boat")
        assert a.id == b.id
        assert a.id.startswith("tiny-boat-")


class TestReviewAndConfirm:
    def draft(self, tmp_path):
        return ingest_photos(
            [b"OCRTEXT:Words here.", b""],
            MarkerOcrClient(),
            AssetStore(tmp_path),
            title="T",
        )

    def test_confirm_blocked_while_pending(self, tmp_path):
        draft = self.draft(tmp_path)
        with pytest.raises(ContractError, match="pending review"):
            confirm_draft(draft, Library())

    def test_edit_clears_flag_and_confirm_promotes(self, tmp_path):
        draft = self.draft(tmp_path)
        edit_draft_page(draft, 1, "Fixed text.")
        library = Library()
        book = confirm_draft(draft, library)
        assert book.source == "photos"
        assert book.pages[1].text == "Fixed text."
        assert book.id in library

    def test_edit_unknown_page(self, tmp_path):
        with pytest.raises(NotFoundError):
            edit_draft_page(self.draft(tmp_path), 9, "x")

    def test_confirm_idempotent(self, tmp_path):
        draft = self.draft(tmp_path)
        edit_draft_page(draft, 1, "Fixed.")
        library = Library()
        first = confirm_draft(draft, library)
        assert confirm_draft(draft, library) is first

    def test_untagged_confirm_gets_theme_tags(self, tmp_path):
        draft = ingest_photos(
            [b"OCRTEXT:The dinosaurs walked along the beach."],
            MarkerOcrClient(),
            AssetStore(tmp_path),
            title="T",
        )
        book = confirm_draft(draft, Library())
        assert "dinosaurs" in book.topic_tags
        assert "ocean" in book.topic_tags


class TestCategorize:
    def test_themes_from_text(self):
        book = make_book(pages=("The crab watched the sunset over the waves.",))
        themes = categorize_book(book)
        assert "animals" in themes
        assert "ocean" in themes
        assert "sky-and-weather" in themes

    def test_no_theme_matches(self):
        assert categorize_book(make_book(pages=("Quiet words only.",))) == ()


class TestBundles:
    def test_round_trip_preserves_text_exactly(self, tmp_path):
        book = make_book(pages=("Line one.\nLine two.", "Page “two” here."))
        export_bundle(book, tmp_path / "out")
        loaded = import_bundle(tmp_path / "out")
        assert loaded.id == book.id
        assert [p.text for p in loaded.pages] == [p.text for p in book.pages]
        assert loaded.content_hash == book.content_hash

    def test_round_trip_with_assets(self, tmp_path):
        assets = AssetStore(tmp_path / "data")
        draft = ingest_photos(
            [b"OCRTEXT:Photo page."], MarkerOcrClient(), assets, title="Snap"
        )
        book = confirm_draft(draft, Library())
        export_bundle(book, tmp_path / "out", assets)
        other_assets = AssetStore(tmp_path / "data2")
        loaded = import_bundle(tmp_path / "out", other_assets)
        assert loaded.pages[0].image_asset == book.pages[0].image_asset
        assert other_assets.exists(loaded.pages[0].image_asset)

    def test_import_missing_manifest(self, tmp_path):
        with pytest.raises(NotFoundError):
            import_bundle(tmp_path / "nothing-here")

    def test_fixture_books_load_as_bundled(self):
        library = fixture_library()
        book = library.get("dinosaur-seaside")
        assert book.source == "bundled"
        assert book.page_count == 4


class TestPreview:
    def test_preview_covers_every_page(self):
        book = fixture_library().get("dinosaur-seaside")
        preview = preview_matched_knowledge(
            book, GradeLevel.GRADE2, fixture_knowledge_graph(), HashEmbedder()
        )
        assert sorted(preview) == [0, 1, 2, 3]
        assert [m.entry.id for m in preview[1]] == ["K-water"]
        assert [m.entry.id for m in preview[2]] == ["K-sun"]
        assert preview[0] == [] and preview[3] == []

    def test_preview_respects_cap(self):
        book = fixture_library().get("dinosaur-seaside")
        preview = preview_matched_knowledge(
            book, GradeLevel.KINDERGARTEN, fixture_knowledge_graph(), HashEmbedder()
        )
        assert preview[1] == []
