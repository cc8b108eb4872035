"""Shared result types for the ranking stages."""

from __future__ import annotations

from dataclasses import dataclass, field

STATUS_OK = "ok"
STATUS_ENTITY_UNMODELED = "entity_unmodeled"
STATUS_NO_SEEDS_MATCHED = "no_seeds_matched"

MODEL_TAGS = ("tfidf", "relatedness", "w2v", "subword")


@dataclass
class RankedProperties:
    """Ordered (adjective, score) list for one entity under one scorer.

    ``status`` distinguishes an entity the scorer could not resolve at all
    (entity_unmodeled, items empty) from an entity that simply yielded an
    empty ranking.
    """

    entity: str
    items: list[tuple[str, float]]
    model_tag: str
    status: str = STATUS_OK
    metric: str | None = None

    def __post_init__(self):
        adjectives = [a for a, _ in self.items]
        if len(set(adjectives)) != len(adjectives):
            raise ValueError("ranked adjectives must be unique")
        scores = [s for _, s in self.items]
        if any(a > b for a, b in zip(scores[1:], scores)):
            raise ValueError("ranked scores must be non-increasing")

    def top(self, k: int) -> list[str]:
        return [adjective for adjective, _ in self.items[:k]]


def sort_scored(scored: list[tuple[str, float]], top_k: int) -> list[tuple[str, float]]:
    """Descending by score, ties broken lexicographically, truncated to top_k."""
    return sorted(scored, key=lambda item: (-item[1], item[0]))[:top_k]
