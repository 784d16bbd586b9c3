"""Suggest-path throughput measurement over a synthetic masterlist."""

from __future__ import annotations

import random
import tempfile
import time

from .corpus import Corpus, MasterlistEntry
from .evaluator import Mode
from .service import MappingService

_WORDS = [
    "radiografie", "ecografie", "consultatie", "analiza", "hemoleucograma",
    "tomografie", "rezonanta", "punctie", "biopsie", "electrocardiograma",
    "toracica", "abdominala", "cardiaca", "pulmonara", "renala", "hepatica",
    "cerebrala", "lombara", "cervicala", "pelvina", "tiroidiana", "oculara",
]


def synthetic_corpus(n_entries: int, seed: int = 0) -> Corpus:
    """Masterlist of n_entries distinct procedure-like texts, no pairs."""
    rng = random.Random(seed)
    entries = []
    for i in range(n_entries):
        words = rng.sample(_WORDS, 2)
        entries.append(
            MasterlistEntry(id=f"M{i:06d}", text=f"{words[0]} {words[1]} {i:06d}")
        )
    return Corpus(masterlist=tuple(entries), pairs=())


def run_bench(
    n_queries: int, n_entries: int, mode: Mode = Mode.HYBRID, seed: int = 0
) -> dict:
    """Build a synthetic index and time n_queries suggest calls against it."""
    corpus = synthetic_corpus(n_entries, seed)
    rng = random.Random(seed + 1)
    queries = [corpus.masterlist[rng.randrange(n_entries)].text for _ in range(n_queries)]

    with tempfile.TemporaryDirectory() as data_dir:
        build_start = time.perf_counter()
        service = MappingService(corpus, data_dir)
        build_seconds = time.perf_counter() - build_start

        start = time.perf_counter()
        for q in queries:
            service.suggest(q, k=5, mode=mode)
        total = time.perf_counter() - start

    return {
        "entries": n_entries,
        "queries": n_queries,
        "mode": mode.value,
        "build_seconds": build_seconds,
        "total_seconds": total,
        "per_query_ms": 1000.0 * total / n_queries,
        "queries_per_second": n_queries / total if total > 0 else float("inf"),
    }
