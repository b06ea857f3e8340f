"""Retrieval pipeline checks against an independently written reference.

The reference implementation below re-derives tokenization, scoring, and
ordering from the documented contract rather than calling into the module,
so a regression in either place shows up as a disagreement.
"""

import math
import re

import pytest
from hypothesis import given, settings, strategies as st

from readalong.errors import ContractError
from readalong.fixtures import fixture_knowledge_graph, fixture_library
from readalong.knowledge import GradeLevel, entries_at_or_below
from readalong.providers import HashEmbedder
from readalong.retrieval import (
    DEFAULT_STOPWORDS,
    EmbeddingVector,
    Keyword,
    RetrievalConfig,
    StatementEmbeddingCache,
    cosine_similarity,
    extract_keywords,
    match_knowledge,
)

# ---------------------------------------------------------------------------
# reference implementation (kept deliberately naive)

_REF_TOKEN = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)


def ref_tokens(text):
    out = []
    for m in _REF_TOKEN.finditer(text.replace("’", "'").lower()):
        tok = m.group()
        if tok.endswith("'s"):
            tok = tok[:-2]
        if tok and tok not in DEFAULT_STOPWORDS:
            out.append((tok, m.start()))
    return out


def ref_keywords(text):
    seen = {}
    for tok, start in ref_tokens(text):
        if tok not in seen:
            seen[tok] = [start, 0]
        seen[tok][1] += 1
    return [(tok, start, count) for tok, (start, count) in seen.items()]


def ref_cosine(a, b):
    num = sum(x * y for x, y in zip(a, b))
    da = math.sqrt(sum(x * x for x in a))
    db = math.sqrt(sum(y * y for y in b))
    return num / (da * db)


def ref_match(text, cap, graph, embedder, threshold=0.60, top=1):
    keywords = ref_keywords(text)
    candidates = entries_at_or_below(graph, cap)
    if not keywords or not candidates or top == 0:
        return []
    kw_vecs = embedder.embed([k[0] for k in keywords])
    st_vecs = embedder.embed([e.statement for e in candidates])
    rows = []
    for ki, ((surface, _, _), kv) in enumerate(zip(keywords, kw_vecs)):
        for entry, sv in zip(candidates, st_vecs):
            sim = ref_cosine(kv.components, sv.components)
            if sim >= threshold:
                rows.append((-sim, entry.grade.rank, entry.id, ki, entry.id, surface, sim))
    rows.sort(key=lambda r: r[:4])
    return [(r[4], r[5], r[6]) for r in rows[:top]]


# ---------------------------------------------------------------------------


class TestCosine:
    def test_hand_computed_value(self):
        a = EmbeddingVector((1.0, 2.0, 2.0))
        b = EmbeddingVector((2.0, 1.0, 2.0))
        # dot = 8, |a| = |b| = 3
        assert cosine_similarity(a, b) == pytest.approx(8.0 / 9.0)

    def test_identical_vectors(self):
        v = EmbeddingVector((0.3, -0.4, 0.5))
        assert cosine_similarity(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity(
            EmbeddingVector((1.0, 0.0)), EmbeddingVector((0.0, 1.0))
        ) == pytest.approx(0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError, match="dimension"):
            cosine_similarity(EmbeddingVector((1.0,)), EmbeddingVector((1.0, 2.0)))

    def test_zero_vector_rejected(self):
        with pytest.raises(ContractError, match="zero"):
            cosine_similarity(EmbeddingVector((0.0, 0.0)), EmbeddingVector((1.0, 0.0)))

    @given(
        st.lists(st.floats(-5, 5, allow_nan=False, allow_subnormal=False), min_size=2, max_size=6),
        st.lists(st.floats(-5, 5, allow_nan=False, allow_subnormal=False), min_size=2, max_size=6),
    )
    def test_bounded_and_symmetric(self, xs, ys):
        n = min(len(xs), len(ys))
        # Tiny components square to underflow; keep the norms representable.
        xs = [0.0 if abs(x) < 1e-3 else x for x in xs[:n]]
        ys = [0.0 if abs(y) < 1e-3 else y for y in ys[:n]]
        if not any(xs) or not any(ys):
            return
        a, b = EmbeddingVector(tuple(xs)), EmbeddingVector(tuple(ys))
        sim = cosine_similarity(a, b)
        assert -1.0 - 1e-9 <= sim <= 1.0 + 1e-9
        assert sim == pytest.approx(cosine_similarity(b, a))


class TestKeywords:
    def test_first_occurrence_order(self):
        kws = extract_keywords("The ocean waves rolled. The ocean sang.")
        assert [k.surface for k in kws] == ["ocean", "waves", "rolled", "sang"]

    def test_weight_is_term_frequency(self):
        kws = {k.surface: k.weight for k in extract_keywords("sun sun moon")}
        assert kws == {"sun": 2.0, "moon": 1.0}

    def test_stopwords_dropped(self):
        kws = extract_keywords("the and a it was")
        assert kws == []

    def test_possessive_collapses(self):
        kws = extract_keywords("The dinosaur’s tail")
        assert [k.surface for k in kws] == ["dinosaur", "tail"]

    def test_offsets_point_at_first_occurrence(self):
        text = "moon rises, moon sets"
        kws = {k.surface: k.section_offset for k in extract_keywords(text)}
        assert kws["moon"] == 0
        assert kws["rises"] == text.index("rises")

    def test_keyword_contracts(self):
        with pytest.raises(ContractError):
            Keyword(surface="", section_offset=0, weight=1.0)
        with pytest.raises(ContractError):
            Keyword(surface="x", section_offset=-1, weight=1.0)
        with pytest.raises(ContractError):
            Keyword(surface="x", section_offset=0, weight=0.0)

    @given(st.text(alphabet=st.characters(codec="ascii"), max_size=200))
    @settings(max_examples=60)
    def test_agrees_with_reference(self, text):
        got = [(k.surface, k.section_offset, int(k.weight)) for k in extract_keywords(text)]
        assert got == ref_keywords(text)


class _ConstantEmbedder:
    """Scores every pair at exactly 1.0 so only tie-breaks order results."""

    def embed(self, texts):
        return [EmbeddingVector((1.0, 0.0)) for _ in texts]


class TestMatching:
    def setup_method(self):
        self.graph = fixture_knowledge_graph()
        self.embedder = HashEmbedder()

    def test_agrees_with_reference_on_fixture_books(self):
        library = fixture_library()
        for book_id in ("dinosaur-seaside", "night-garden"):
            book = library.get(book_id)
            for page in book.pages:
                for cap in GradeLevel:
                    got = match_knowledge(page.text, cap, self.graph, self.embedder)
                    want = ref_match(page.text, cap, self.graph, self.embedder)
                    assert [(m.entry.id, m.keyword.surface) for m in got] == [
                        (i, s) for i, s, _ in want
                    ]
                    for m, (_, _, sim) in zip(got, want):
                        assert m.similarity == pytest.approx(sim, rel=1e-12)

    def test_known_seaside_match(self):
        book = fixture_library().get("dinosaur-seaside")
        matches = match_knowledge(
            book.pages[1].text, GradeLevel.GRADE2, self.graph, self.embedder
        )
        assert len(matches) == 1
        assert matches[0].entry.id == "K-water"
        assert matches[0].keyword.surface == "seaside"
        assert matches[0].similarity > 0.95

    def test_grade_cap_hides_higher_entries(self):
        book = fixture_library().get("dinosaur-seaside")
        # The water entry sits at Grade2; a kindergarten cap must not see it.
        assert match_knowledge(
            book.pages[1].text, GradeLevel.KINDERGARTEN, self.graph, self.embedder
        ) == []

    def test_threshold_gates(self):
        book = fixture_library().get("dinosaur-seaside")
        config = RetrievalConfig(threshold=0.999)
        assert match_knowledge(
            book.pages[1].text, GradeLevel.GRADE2, self.graph, self.embedder, config
        ) == []

    def test_max_matches_zero(self):
        config = RetrievalConfig(max_matches_per_section=0)
        assert match_knowledge(
            "ocean sunlight", GradeLevel.GRADE5, self.graph, self.embedder, config
        ) == []

    def test_max_matches_two_sorted_descending(self):
        config = RetrievalConfig(max_matches_per_section=2)
        matches = match_knowledge(
            "The sunset glowed over the seaside.",
            GradeLevel.GRADE5,
            self.graph,
            self.embedder,
            config,
        )
        assert len(matches) == 2
        assert matches[0].similarity >= matches[1].similarity

    def test_tie_break_prefers_lower_grade_then_id_then_keyword(self):
        # All similarities equal: ordering falls entirely to the tie-break.
        # Results are (keyword, entry) pairs, so one entry may pair with both
        # keywords before the next entry appears.
        matches = match_knowledge(
            "zebra yak", GradeLevel.GRADE5, self.graph, _ConstantEmbedder(),
            RetrievalConfig(max_matches_per_section=3),
        )
        entries = sorted(self.graph.entries, key=lambda e: (e.grade.rank, e.id))
        expected = [
            (entries[0].id, "zebra"),
            (entries[0].id, "yak"),
            (entries[1].id, "zebra"),
        ]
        assert [(m.entry.id, m.keyword.surface) for m in matches] == expected

    def test_single_best_pair_is_unique_entry(self):
        # With the default single-slot config a tie still yields one winner,
        # fully determined by the ordering contract.
        matches = match_knowledge(
            "zebra yak", GradeLevel.GRADE5, self.graph, _ConstantEmbedder()
        )
        entries = sorted(self.graph.entries, key=lambda e: (e.grade.rank, e.id))
        assert [(m.entry.id, m.keyword.surface) for m in matches] == [
            (entries[0].id, "zebra")
        ]

    def test_empty_section_matches_nothing(self):
        assert match_knowledge("", GradeLevel.GRADE5, self.graph, self.embedder) == []

    def test_statement_cache_reused(self):
        class CountingEmbedder:
            def __init__(self, inner):
                self.inner = inner
                self.batches = []

            def embed(self, texts):
                self.batches.append(list(texts))
                return self.inner.embed(texts)

        counting = CountingEmbedder(self.embedder)
        cache = StatementEmbeddingCache(self.graph, counting)
        match_knowledge("ocean", GradeLevel.GRADE5, self.graph, counting, statement_cache=cache)
        match_knowledge("sunset", GradeLevel.GRADE5, self.graph, counting, statement_cache=cache)
        statement_batches = [
            b for b in counting.batches if any(len(t.split()) > 3 for t in b)
        ]
        assert len(statement_batches) == 1

    @given(
        words=st.lists(
            st.sampled_from(
                "ocean sun water sunset seaside animals plants light rain zebra "
                "moon ship cave sand grass cloud".split()
            ),
            min_size=1,
            max_size=12,
        ),
        cap=st.sampled_from(list(GradeLevel)),
    )
    @settings(max_examples=40, deadline=None)
    def test_never_exceeds_cap_and_matches_reference(self, words, cap):
        text = " ".join(words)
        got = match_knowledge(text, cap, self.graph, self.embedder)
        assert all(m.entry.grade <= cap for m in got)
        want = ref_match(text, cap, self.graph, self.embedder)
        assert [(m.entry.id, m.keyword.surface) for m in got] == [
            (i, s) for i, s, _ in want
        ]
