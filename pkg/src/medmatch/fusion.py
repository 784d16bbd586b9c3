"""Reciprocal Rank Fusion of multiple rankings.

Each candidate scores sum over the input rankings of 1/(k + rank); a candidate
absent from a ranking simply contributes nothing there.
"""

from __future__ import annotations

from dataclasses import dataclass

from .results import DocRef, RankedList, ranked_list_from_scored


@dataclass(frozen=True)
class RrfConfig:
    k: float = 60.0

    def __post_init__(self):
        if self.k < 0 or self.k + 1.0 <= 0:
            raise ValueError("k must be non-negative")


def rrf_fuse(rankings: list[RankedList], config: RrfConfig, limit: int) -> RankedList:
    """Fuse rankings by reciprocal rank; output uses the global tie-break rule."""
    if not rankings:
        raise ValueError("need at least one input ranking")
    if limit < 1:
        raise ValueError("limit must be >= 1")
    fused: dict[DocRef, float] = {}
    for ranking in rankings:
        for item in ranking:
            fused[item.ref] = fused.get(item.ref, 0.0) + 1.0 / (config.k + item.rank)
    return ranked_list_from_scored(list(fused.items()), limit)
