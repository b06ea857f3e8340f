"""
What a page of story text pulls out of the knowledge base
=========================================================

Runs the matcher by hand on two page excerpts at two different age caps,
printing every keyword that clears the similarity threshold.
"""

from readalong.fixtures import fixture_knowledge_graph
from readalong.knowledge import GradeLevel
from readalong.learner import grade_for_age
from readalong.providers import HashEmbedder
from readalong.retrieval import RetrievalConfig, match_knowledge

graph = fixture_knowledge_graph()
embedder = HashEmbedder()

# A generous cap and a wide result window, to see everything in range.
config = RetrievalConfig(threshold=0.60, max_matches_per_section=5)

pages = [
    "Dino and Grandpa packed a basket and set off for the seaside.",
    "The sky turned orange and pink as the sunset painted the waves.",
]

for age in (6, 8):
    cap = grade_for_age(age)
    print(f"--- age {age} reads at {cap.display_name} ---")
    for page in pages:
        matches = match_knowledge(page, cap, graph, embedder, config)
        print(f'  "{page[:44]}..."')
        if not matches:
            print("    nothing clears the threshold at this grade")
        for m in matches:
            print(
                f"    {m.keyword.surface!r} -> {m.entry.id}"
                f" ({m.entry.grade.label}, cosine {m.similarity:.4f})"
            )

# The seaside page only surfaces its water entry for the older child:
# the entry sits at Grade2, above a six-year-old's Kindergarten cap.
