"""Grade-organized science knowledge base.

Entries carry disciplinary core idea statements tagged with the school grade
at which the curriculum introduces them. The graph is immutable after load;
retrieval layers above only ever read it.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable

from readalong.errors import KnowledgeParseError, KnowledgeValidationError

_ENTRY_FIELDS = ("id", "dci_code", "grade", "statement", "performance_expectations", "topic_tags")


class GradeLevel(IntEnum):
    """K-5 grade band, totally ordered by rank."""

    KINDERGARTEN = 0
    GRADE1 = 1
    GRADE2 = 2
    GRADE3 = 3
    GRADE4 = 4
    GRADE5 = 5

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @property
    def rank(self) -> int:
        return int(self)

    @classmethod
    def from_label(cls, text: str) -> "GradeLevel":
        key = text.strip()
        for grade, label in _LABELS.items():
            if key == label or key == _DISPLAY_NAMES[grade]:
                return grade
        raise KnowledgeValidationError(f"unknown grade label: {text!r}")


_LABELS: dict[GradeLevel, str] = {
    GradeLevel.KINDERGARTEN: "Kindergarten",
    GradeLevel.GRADE1: "Grade1",
    GradeLevel.GRADE2: "Grade2",
    GradeLevel.GRADE3: "Grade3",
    GradeLevel.GRADE4: "Grade4",
    GradeLevel.GRADE5: "Grade5",
}

_DISPLAY_NAMES: dict[GradeLevel, str] = {
    GradeLevel.KINDERGARTEN: "Kindergarten",
    GradeLevel.GRADE1: "First Grade",
    GradeLevel.GRADE2: "Second Grade",
    GradeLevel.GRADE3: "Third Grade",
    GradeLevel.GRADE4: "Fourth Grade",
    GradeLevel.GRADE5: "Fifth Grade",
}


@dataclass(frozen=True)
class KnowledgeEntry:
    """One curriculum statement at one grade."""

    id: str
    dci_code: str
    grade: GradeLevel
    statement: str
    performance_expectations: tuple[str, ...] = ()
    topic_tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise KnowledgeValidationError("entry id must be non-empty")
        if not self.statement.strip():
            raise KnowledgeValidationError(f"entry {self.id!r} has an empty statement")


class KnowledgeGraph:
    """Immutable collection of entries with id and grade indexes."""

    def __init__(self, entries: Iterable[KnowledgeEntry]):
        self._entries: tuple[KnowledgeEntry, ...] = tuple(entries)
        by_id: dict[str, KnowledgeEntry] = {}
        for entry in self._entries:
            if entry.id in by_id:
                raise KnowledgeValidationError(f"duplicate entry id: {entry.id!r}")
            by_id[entry.id] = entry
        self._by_id = by_id
        by_grade: dict[GradeLevel, list[KnowledgeEntry]] = {}
        for entry in self._entries:
            by_grade.setdefault(entry.grade, []).append(entry)
        self._by_grade = {
            grade: tuple(sorted(members, key=lambda e: e.id))
            for grade, members in by_grade.items()
        }

    @property
    def entries(self) -> tuple[KnowledgeEntry, ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._by_id

    def get(self, entry_id: str) -> KnowledgeEntry:
        try:
            return self._by_id[entry_id]
        except KeyError:
            raise KnowledgeValidationError(f"no entry with id {entry_id!r}") from None

    def at_grade(self, grade: GradeLevel) -> tuple[KnowledgeEntry, ...]:
        return self._by_grade.get(grade, ())

    def grade_histogram(self) -> dict[GradeLevel, int]:
        counts = Counter(entry.grade for entry in self._entries)
        return {grade: counts.get(grade, 0) for grade in GradeLevel}


def entries_at_or_below(graph: KnowledgeGraph, grade_cap: GradeLevel) -> list[KnowledgeEntry]:
    """Entries visible to a reader capped at grade_cap.

    Ordered by (grade rank, id) so downstream tie-breaks are stable.
    """
    out: list[KnowledgeEntry] = []
    for grade in GradeLevel:
        if grade > grade_cap:
            break
        out.extend(graph.at_grade(grade))
    return out


def _parse_entry(record: object, index: int) -> KnowledgeEntry:
    if not isinstance(record, dict):
        raise KnowledgeParseError(f"record {index} is not an object", record_index=index)
    missing = [name for name in _ENTRY_FIELDS if name not in record]
    if missing:
        raise KnowledgeParseError(
            f"record {index} is missing field(s): {', '.join(missing)}", record_index=index
        )
    unknown = [name for name in record if name not in _ENTRY_FIELDS]
    if unknown:
        raise KnowledgeParseError(
            f"record {index} has unknown field(s): {', '.join(sorted(unknown))}",
            record_index=index,
        )
    for name in ("id", "dci_code", "grade", "statement"):
        if not isinstance(record[name], str):
            raise KnowledgeParseError(
                f"record {index}: field {name!r} must be a string", record_index=index
            )
    for name in ("performance_expectations", "topic_tags"):
        value = record[name]
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise KnowledgeParseError(
                f"record {index}: field {name!r} must be a list of strings", record_index=index
            )
    return KnowledgeEntry(
        id=record["id"],
        dci_code=record["dci_code"],
        grade=GradeLevel.from_label(record["grade"]),
        statement=record["statement"],
        performance_expectations=tuple(record["performance_expectations"]),
        topic_tags=tuple(record["topic_tags"]),
    )


def load_knowledge_graph(source: str | Path) -> KnowledgeGraph:
    """Load a graph from a JSON document (top-level list of entry records).

    Raises KnowledgeParseError for malformed documents (naming the record),
    KnowledgeValidationError for duplicate ids or unknown grade labels.
    """
    path = Path(source)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise KnowledgeParseError(f"cannot read knowledge base: {exc}") from exc
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise KnowledgeParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, list):
        raise KnowledgeParseError("top-level document must be a list of entry records")
    entries = [_parse_entry(record, index) for index, record in enumerate(document)]
    return KnowledgeGraph(entries)


def save_knowledge_graph(graph: KnowledgeGraph, target: str | Path) -> None:
    """Serialize back to the same JSON shape load_knowledge_graph reads."""
    records = [
        {
            "id": entry.id,
            "dci_code": entry.dci_code,
            "grade": entry.grade.label,
            "statement": entry.statement,
            "performance_expectations": list(entry.performance_expectations),
            "topic_tags": list(entry.topic_tags),
        }
        for entry in graph.entries
    ]
    Path(target).write_text(
        json.dumps(records, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
