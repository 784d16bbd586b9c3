"""Candidate references and ranked result lists shared by all retrieval paths."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class DocKind(str, Enum):
    MASTERLIST_ENTRY = "masterlist_entry"
    MAPPING_PAIR = "mapping_pair"


@dataclass(frozen=True, order=True)
class DocRef:
    """Reference to an indexed document: a masterlist entry or a mapping pair."""

    kind: DocKind
    masterlist_id: str
    pair_index: int | None = None

    def __post_init__(self):
        if self.kind is DocKind.MAPPING_PAIR and self.pair_index is None:
            raise ValueError("mapping_pair DocRef requires pair_index")

    def sort_key(self):
        # masterlist entries win ties, then codepoint order of the id,
        # then pair index for stability among pairs of one entry
        return (
            0 if self.kind is DocKind.MASTERLIST_ENTRY else 1,
            self.masterlist_id,
            self.pair_index if self.pair_index is not None else -1,
        )


@dataclass(frozen=True)
class RankedItem:
    ref: DocRef
    score: float
    rank: int  # 1-based


@dataclass(frozen=True)
class RankedList:
    """Ordered candidates; ranks run 1..n and scores never increase."""

    items: tuple[RankedItem, ...]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]


def ranked_list_from_scored(scored: list[tuple[DocRef, float]], limit: int) -> RankedList:
    """Sort (ref, score) candidates by score desc with the global tie-break and truncate."""
    ordered = sorted(scored, key=lambda rs: (-rs[1], rs[0].sort_key()))
    items = tuple(
        RankedItem(ref=ref, score=score, rank=i + 1)
        for i, (ref, score) in enumerate(ordered[:limit])
    )
    return RankedList(items=items)
