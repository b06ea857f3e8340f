import json

import pytest
from hypothesis import given, strategies as st

from readalong.errors import KnowledgeParseError, KnowledgeValidationError
from readalong.knowledge import (
    GradeLevel,
    KnowledgeEntry,
    KnowledgeGraph,
    entries_at_or_below,
    load_knowledge_graph,
    save_knowledge_graph,
)
from readalong.fixtures import fixture_kb_path, fixture_knowledge_graph


def entry(id, grade, statement="Water flows downhill.", **kw):
    return KnowledgeEntry(id=id, dci_code="X.Y", grade=grade, statement=statement, **kw)


class TestGradeLevel:
    def test_labels_round_trip(self):
        for grade in GradeLevel:
            assert GradeLevel.from_label(grade.label) is grade
            assert GradeLevel.from_label(grade.display_name) is grade

    def test_display_names(self):
        assert GradeLevel.KINDERGARTEN.display_name == "Kindergarten"
        assert GradeLevel.GRADE2.display_name == "Second Grade"
        assert GradeLevel.GRADE5.display_name == "Fifth Grade"

    def test_unknown_label_rejected(self):
        with pytest.raises(KnowledgeValidationError):
            GradeLevel.from_label("Grade7")

    def test_total_order(self):
        ranks = [g.rank for g in GradeLevel]
        assert ranks == sorted(ranks) == [0, 1, 2, 3, 4, 5]


class TestGraph:
    def test_duplicate_id_rejected(self):
        with pytest.raises(KnowledgeValidationError, match="duplicate"):
            KnowledgeGraph([entry("a", GradeLevel.KINDERGARTEN), entry("a", GradeLevel.GRADE1)])

    def test_empty_statement_rejected(self):
        with pytest.raises(KnowledgeValidationError):
            entry("a", GradeLevel.KINDERGARTEN, statement="   ")

    def test_get_unknown(self):
        graph = KnowledgeGraph([entry("a", GradeLevel.KINDERGARTEN)])
        with pytest.raises(KnowledgeValidationError):
            graph.get("b")
        assert "a" in graph and "b" not in graph

    def test_histogram_covers_every_grade(self):
        graph = fixture_knowledge_graph()
        histogram = graph.grade_histogram()
        assert set(histogram) == set(GradeLevel)
        assert sum(histogram.values()) == len(graph)

    def test_at_grade_sorted_by_id(self):
        graph = KnowledgeGraph(
            [entry("b", GradeLevel.GRADE1), entry("a", GradeLevel.GRADE1)]
        )
        assert [e.id for e in graph.at_grade(GradeLevel.GRADE1)] == ["a", "b"]


class TestGating:
    @given(cap=st.sampled_from(list(GradeLevel)))
    def test_no_entry_above_cap(self, cap):
        graph = fixture_knowledge_graph()
        visible = entries_at_or_below(graph, cap)
        assert all(e.grade <= cap for e in visible)
        hidden = {e.id for e in graph.entries} - {e.id for e in visible}
        assert all(graph.get(i).grade > cap for i in hidden)

    def test_ordering_is_grade_then_id(self):
        graph = fixture_knowledge_graph()
        visible = entries_at_or_below(graph, GradeLevel.GRADE5)
        keys = [(e.grade.rank, e.id) for e in visible]
        assert keys == sorted(keys)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        graph = fixture_knowledge_graph()
        target = tmp_path / "kb.json"
        save_knowledge_graph(graph, target)
        reloaded = load_knowledge_graph(target)
        assert reloaded.entries == graph.entries

    def test_fixture_file_statements_preserved_verbatim(self):
        raw = json.loads(fixture_kb_path().read_text(encoding="utf-8"))
        graph = fixture_knowledge_graph()
        by_id = {r["id"]: r for r in raw}
        for e in graph.entries:
            assert e.statement == by_id[e.id]["statement"]

    def test_missing_field_named_in_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps([{"id": "a", "grade": "Grade1"}]))
        with pytest.raises(KnowledgeParseError, match="statement"):
            load_knowledge_graph(bad)

    def test_unknown_field_rejected(self, tmp_path):
        record = {
            "id": "a", "dci_code": "X", "grade": "Grade1", "statement": "S.",
            "performance_expectations": [], "topic_tags": [], "extra": 1,
        }
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps([record]))
        with pytest.raises(KnowledgeParseError, match="extra"):
            load_knowledge_graph(bad)

    def test_non_list_document_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"entries": []}))
        with pytest.raises(KnowledgeParseError, match="top-level"):
            load_knowledge_graph(bad)

    def test_invalid_json_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("[{]")
        with pytest.raises(KnowledgeParseError, match="invalid JSON"):
            load_knowledge_graph(bad)

    def test_bad_grade_label_rejected(self, tmp_path):
        record = {
            "id": "a", "dci_code": "X", "grade": "Sixth Grade", "statement": "S.",
            "performance_expectations": [], "topic_tags": [],
        }
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps([record]))
        with pytest.raises(KnowledgeValidationError, match="Sixth Grade"):
            load_knowledge_graph(bad)
