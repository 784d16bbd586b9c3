"""Data model, CSV ingestion, and the stratified gallery/probe fold splitter."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import CorpusFormatError, DanglingReferenceError


class PairSource(str, Enum):
    DATASET = "dataset"
    REVIEWER = "reviewer"


@dataclass(frozen=True)
class MasterlistEntry:
    id: str
    text: str


@dataclass(frozen=True)
class MappingPair:
    clinic_text: str
    masterlist_id: str
    source: PairSource = PairSource.DATASET
    clinic_id: str | None = None


@dataclass(frozen=True)
class IngestReport:
    masterlist_count: int
    pair_count: int
    duplicate_pairs_merged: int


@dataclass(frozen=True)
class Corpus:
    masterlist: tuple[MasterlistEntry, ...]
    pairs: tuple[MappingPair, ...]
    ingest_report: IngestReport | None = None

    def __post_init__(self):
        ids = [e.id for e in self.masterlist]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate masterlist ids")
        known = set(ids)
        missing = [p.masterlist_id for p in self.pairs if p.masterlist_id not in known]
        if missing:
            raise DanglingReferenceError(missing)
        keys = [(p.clinic_text, p.masterlist_id) for p in self.pairs]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate (clinic_text, masterlist_id) pairs")

    def entry_by_id(self, masterlist_id: str) -> MasterlistEntry:
        return self._index()[masterlist_id]

    def _index(self) -> dict[str, MasterlistEntry]:
        # rebuilt on demand; corpora are immutable so caching on self is unsafe
        # only through object.__setattr__, which is not worth it at this scale
        return {e.id: e for e in self.masterlist}


@dataclass(frozen=True)
class FoldAssignment:
    n_folds: int
    assignment: tuple[int, ...]  # pair index -> fold index

    def __post_init__(self):
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")
        if any(not (0 <= f < self.n_folds) for f in self.assignment):
            raise ValueError("fold index out of range")

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"pair_index": i, "fold": f}, separators=(", ", ": "))
            for i, f in enumerate(self.assignment)
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str, n_folds: int) -> "FoldAssignment":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        records.sort(key=lambda r: r["pair_index"])
        if [r["pair_index"] for r in records] != list(range(len(records))):
            raise ValueError("pair_index values must cover 0..n-1")
        return cls(n_folds=n_folds, assignment=tuple(r["fold"] for r in records))


def _read_csv(path: str | Path, required: list[str], optional: list[str] | None = None):
    """Yield (line_number, row_dict) for a header-checked CSV file."""
    optional = optional or []
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusFormatError(str(path), 1, "empty file, expected header")
        header = [h.strip() for h in header]
        if header[: len(required)] != required or not all(
            h in required + optional for h in header
        ):
            raise CorpusFormatError(
                str(path), 1, f"bad header {header!r}, expected {required + optional!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(required) or len(row) > len(header):
                raise CorpusFormatError(
                    str(path), lineno, f"expected {len(header)} fields, got {len(row)}"
                )
            yield lineno, dict(zip(header, row))


def load_corpus(masterlist_path: str | Path, pairs_path: str | Path) -> Corpus:
    """Load masterlist + pairs CSV files into a validated Corpus.

    Exact duplicate (clinic_text, masterlist_id) pairs are merged (keeping the
    first occurrence); pairs referencing unknown masterlist ids raise.
    """
    entries: list[MasterlistEntry] = []
    seen_ids: set[str] = set()
    for lineno, row in _read_csv(masterlist_path, ["id", "text"]):
        entry_id = row["id"].strip()
        text = row["text"].strip()
        if not entry_id:
            raise CorpusFormatError(str(masterlist_path), lineno, "empty id")
        if not text:
            raise CorpusFormatError(str(masterlist_path), lineno, "empty text")
        if entry_id in seen_ids:
            raise CorpusFormatError(str(masterlist_path), lineno, f"duplicate id {entry_id!r}")
        seen_ids.add(entry_id)
        entries.append(MasterlistEntry(id=entry_id, text=text))

    pairs: list[MappingPair] = []
    seen_pairs: set[tuple[str, str]] = set()
    dangling: list[str] = []
    merged = 0
    for lineno, row in _read_csv(
        pairs_path, ["clinic_text", "masterlist_id"], optional=["clinic_id"]
    ):
        clinic_text = row["clinic_text"].strip()
        masterlist_id = row["masterlist_id"].strip()
        if not clinic_text:
            raise CorpusFormatError(str(pairs_path), lineno, "empty clinic_text")
        if masterlist_id not in seen_ids:
            dangling.append(masterlist_id)
            continue
        key = (clinic_text, masterlist_id)
        if key in seen_pairs:
            merged += 1
            continue
        seen_pairs.add(key)
        clinic_id = row.get("clinic_id", "").strip() or None
        pairs.append(
            MappingPair(clinic_text=clinic_text, masterlist_id=masterlist_id, clinic_id=clinic_id)
        )
    if dangling:
        raise DanglingReferenceError(dangling)

    report = IngestReport(
        masterlist_count=len(entries), pair_count=len(pairs), duplicate_pairs_merged=merged
    )
    return Corpus(masterlist=tuple(entries), pairs=tuple(pairs), ingest_report=report)


def _start_fold(masterlist_id: str, seed: int, n_folds: int) -> int:
    digest = hashlib.sha256(f"{seed}:{masterlist_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % n_folds


def split_folds(corpus: Corpus, n_folds: int = 5, seed: int = 0) -> FoldAssignment:
    """Assign every pair to a fold, round-robin per masterlist entry.

    Each entry's pairs are sorted by clinic_text and dealt across folds
    starting at a seeded offset, so per-entry fold counts differ by at most 1
    and the result is deterministic for fixed (corpus, n_folds, seed).
    """
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    if not corpus.pairs:
        raise ValueError("corpus has no pairs to split")

    by_entry: dict[str, list[int]] = {}
    for idx, pair in enumerate(corpus.pairs):
        by_entry.setdefault(pair.masterlist_id, []).append(idx)

    assignment = [0] * len(corpus.pairs)
    for masterlist_id, pair_indices in by_entry.items():
        pair_indices.sort(key=lambda i: corpus.pairs[i].clinic_text)
        start = _start_fold(masterlist_id, seed, n_folds)
        for offset, pair_index in enumerate(pair_indices):
            assignment[pair_index] = (start + offset) % n_folds
    return FoldAssignment(n_folds=n_folds, assignment=tuple(assignment))


def fold_view(
    corpus: Corpus, assignment: FoldAssignment, probe_fold: int
) -> tuple[list[tuple[int, MappingPair]], list[tuple[int, MappingPair]]]:
    """Split pairs into (gallery, probe) for one fold; items are (pair_index, pair)."""
    if not (0 <= probe_fold < assignment.n_folds):
        raise ValueError(f"probe_fold {probe_fold} out of range [0, {assignment.n_folds})")
    if len(assignment.assignment) != len(corpus.pairs):
        raise ValueError("assignment does not cover this corpus")
    gallery, probe = [], []
    for idx, pair in enumerate(corpus.pairs):
        (probe if assignment.assignment[idx] == probe_fold else gallery).append((idx, pair))
    return gallery, probe
