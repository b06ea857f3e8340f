"""Keyword-driven retrieval of grade-appropriate knowledge for a story section.

The pipeline is deliberately small: extract content keywords from the section,
embed keywords and candidate statements, score every (keyword, statement) pair
by cosine similarity, gate by grade cap and threshold, keep the best few.
A linear scan is plenty at desk scale; there is no approximate index here.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from readalong.errors import ContractError
from readalong.knowledge import GradeLevel, KnowledgeEntry, KnowledgeGraph, entries_at_or_below

# Small English stopword list; enough to strip function words from picture-book
# prose without dragging in a corpus dependency.
DEFAULT_STOPWORDS: frozenset[str] = frozenset(
    """
    a about above after again against all am an and any are aren't as at be
    because been before being below between both but by can can't cannot could
    couldn't did didn't do does doesn't doing don't down during each few for
    from further had hadn't has hasn't have haven't having he he'd he'll he's
    her here here's hers herself him himself his how how's i i'd i'll i'm i've
    if in into is isn't it it's its itself let let's me more most mustn't my
    myself no nor not of off on once only or other ought our ours ourselves out
    over own same shan't she she'd she'll she's should shouldn't so some such
    than that that's the their theirs them themselves then there there's these
    they they'd they'll they're they've this those through to too under until
    up very was wasn't we we'd we'll we're we've were weren't what what's when
    when's where where's which while who who's whom why why's with won't would
    wouldn't you you'd you'll you're you've your yours yourself yourselves
    """.split()
)

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)


@dataclass(frozen=True)
class Keyword:
    """A content word pulled from a story section.

    surface is normalized (lowercased, straight apostrophes); section_offset is
    the character index of its first occurrence; weight is its term frequency.
    """

    surface: str
    section_offset: int
    weight: float

    def __post_init__(self) -> None:
        if not self.surface:
            raise ContractError("keyword surface must be non-empty")
        if self.section_offset < 0:
            raise ContractError("keyword offset must be non-negative")
        if self.weight <= 0:
            raise ContractError("keyword weight must be positive")


@dataclass(frozen=True)
class EmbeddingVector:
    components: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ContractError("embedding vector must have at least one component")
        if not all(math.isfinite(c) for c in self.components):
            raise ContractError("embedding vector components must be finite")

    @property
    def dimension(self) -> int:
        return len(self.components)


class Embedder(Protocol):
    """Anything that can turn short texts into fixed-dimension vectors."""

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]: ...


@dataclass(frozen=True)
class RetrievalConfig:
    threshold: float = 0.60
    max_matches_per_section: int = 1
    stopwords: frozenset[str] = DEFAULT_STOPWORDS

    def __post_init__(self) -> None:
        if self.max_matches_per_section < 0:
            raise ContractError("max_matches_per_section must be >= 0")


@dataclass(frozen=True)
class KnowledgeMatch:
    entry: KnowledgeEntry
    keyword: Keyword
    similarity: float


def _normalize(text: str) -> str:
    # Curly apostrophes appear throughout scanned storybook text.
    return text.replace("’", "'").lower()


def extract_keywords(section_text: str, config: RetrievalConfig | None = None) -> list[Keyword]:
    """Tokenize, drop stopwords, dedup preserving first-occurrence order.

    Weight is the term frequency of the normalized token in the section, so
    repeated content words rank ahead of one-off mentions downstream.
    """
    config = config or RetrievalConfig()
    normalized = _normalize(section_text)
    counts: dict[str, int] = {}
    first_offset: dict[str, int] = {}
    for match in _TOKEN_RE.finditer(normalized):
        token = match.group()
        if token.endswith("'s"):
            token = token[:-2]
        if not token or token in config.stopwords:
            continue
        counts[token] = counts.get(token, 0) + 1
        first_offset.setdefault(token, match.start())
    return [
        Keyword(surface=token, section_offset=first_offset[token], weight=float(count))
        for token, count in counts.items()
    ]


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Standard cosine: dot(a, b) / (|a| * |b|).

    Raises ContractError on dimension mismatch or a zero vector; similarity of
    nothing is undefined, not zero.
    """
    if a.dimension != b.dimension:
        raise ContractError(
            f"dimension mismatch: {a.dimension} vs {b.dimension}"
        )
    dot = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for x, y in zip(a.components, b.components):
        dot += x * y
        norm_a += x * x
        norm_b += y * y
    if norm_a == 0.0 or norm_b == 0.0:
        raise ContractError("cosine similarity is undefined for a zero vector")
    return dot / math.sqrt(norm_a * norm_b)


class StatementEmbeddingCache:
    """Per-graph memo of statement vectors, populated once, thread-safe.

    Statement embeddings are pure functions of graph content, so concurrent
    sessions share one population pass instead of racing duplicate work.
    """

    def __init__(self, graph: KnowledgeGraph, embedder: Embedder):
        self._graph = graph
        self._embedder = embedder
        self._lock = threading.Lock()
        self._vectors: dict[str, EmbeddingVector] | None = None

    def vectors(self) -> dict[str, EmbeddingVector]:
        with self._lock:
            if self._vectors is None:
                entries = self._graph.entries
                embedded = self._embedder.embed([entry.statement for entry in entries])
                self._vectors = {
                    entry.id: vector for entry, vector in zip(entries, embedded)
                }
            return self._vectors


def match_knowledge(
    section_text: str,
    grade_cap: GradeLevel,
    graph: KnowledgeGraph,
    embedder: Embedder,
    config: RetrievalConfig | None = None,
    *,
    statement_cache: StatementEmbeddingCache | None = None,
) -> list[KnowledgeMatch]:
    """Best knowledge pairings for a section under a grade cap.

    Every (keyword, candidate entry) pair at or below the cap is scored;
    pairs under config.threshold are discarded; survivors are ordered by
    similarity descending with ties broken by lower grade rank, then entry id,
    then keyword order of appearance; the list is cut to
    config.max_matches_per_section.
    """
    config = config or RetrievalConfig()
    keywords = extract_keywords(section_text, config)
    candidates = entries_at_or_below(graph, grade_cap)
    if not keywords or not candidates or config.max_matches_per_section == 0:
        return []

    keyword_vectors = embedder.embed([keyword.surface for keyword in keywords])
    if statement_cache is not None:
        statement_vectors = statement_cache.vectors()
    else:
        embedded = embedder.embed([entry.statement for entry in candidates])
        statement_vectors = {
            entry.id: vector for entry, vector in zip(candidates, embedded)
        }

    scored: list[tuple[float, int, str, int, KnowledgeMatch]] = []
    for keyword_index, (keyword, keyword_vector) in enumerate(zip(keywords, keyword_vectors)):
        for entry in candidates:
            similarity = cosine_similarity(keyword_vector, statement_vectors[entry.id])
            if similarity < config.threshold:
                continue
            scored.append(
                (
                    -similarity,
                    entry.grade.rank,
                    entry.id,
                    keyword_index,
                    KnowledgeMatch(entry=entry, keyword=keyword, similarity=similarity),
                )
            )
    scored.sort(key=lambda item: item[:4])
    return [item[4] for item in scored[: config.max_matches_per_section]]
