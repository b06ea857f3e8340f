"""Interactive story-reading companion engine.

Grade-gated knowledge retrieval, scaffolded dialogue generation, a reading
session state machine, and an event-sourced parent dashboard, wired behind a
small HTTP service and CLI.
"""

from readalong.knowledge import (
    GradeLevel,
    KnowledgeEntry,
    KnowledgeGraph,
    entries_at_or_below,
    load_knowledge_graph,
    save_knowledge_graph,
)
from readalong.retrieval import (
    EmbeddingVector,
    Keyword,
    KnowledgeMatch,
    RetrievalConfig,
    cosine_similarity,
    extract_keywords,
    match_knowledge,
)
from readalong.session import (
    ChildTurnInput,
    Orchestrator,
    PageCompleteInput,
    ReadingMode,
    SetModeInput,
)

__all__ = [
    "GradeLevel",
    "KnowledgeEntry",
    "KnowledgeGraph",
    "entries_at_or_below",
    "load_knowledge_graph",
    "save_knowledge_graph",
    "EmbeddingVector",
    "Keyword",
    "KnowledgeMatch",
    "RetrievalConfig",
    "cosine_similarity",
    "extract_keywords",
    "match_knowledge",
    "ChildTurnInput",
    "Orchestrator",
    "PageCompleteInput",
    "ReadingMode",
    "SetModeInput",
]

__version__ = "0.1.0"
