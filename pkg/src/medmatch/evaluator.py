"""Cross-validated retrieval evaluation: per-fold gallery/probe runs over the
two index scenarios, reporting Accuracy@k with mean and std across folds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .corpus import Corpus, FoldAssignment, MappingPair, fold_view
from .dense import DenseIndexStore, HashEmbedderSpec, embed_hash, search_dense
from .errors import UnembeddableError
from .fusion import RrfConfig, rrf_fuse
from .results import DocKind, DocRef, RankedList
from .sparse import build_bm25, embed_query_sparse, search_sparse
from .textnorm import NormalizerConfig, normalize
from .trainer import apply_adapter

ACC_KS = (1, 3, 5, 100)

Embedder = Callable[[str], np.ndarray]


class Mode(str, Enum):
    SPARSE = "sparse"
    DENSE = "dense"
    HYBRID = "hybrid"


class Scenario(str, Enum):
    MASTERLIST_ONLY = "masterlist_only"
    MASTERLIST_PLUS_PAIRS = "masterlist_plus_pairs"


@dataclass(frozen=True)
class EvalConfig:
    mode: Mode = Mode.SPARSE
    scenario: Scenario = Scenario.MASTERLIST_ONLY
    depth: int = 100  # per-ranking truncation before fusion / scoring
    k1: float = 1.2
    b: float = 0.75
    rrf: RrfConfig = RrfConfig()
    dedup_masterlist: bool = True


@dataclass
class EvalReport:
    mode: str
    scenario: str
    per_fold: list[dict[str, float]]
    mean: dict[str, float]
    std: dict[str, float]
    skipped: list[str] = field(default_factory=list)  # unembeddable probe texts

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    def to_table(self) -> str:
        """Aligned text table: one row per fold plus mean +/- std."""
        keys = [f"acc@{k}" for k in ACC_KS]
        header = f"{'fold':>6}  " + "  ".join(f"{k:>8}" for k in keys)
        rows = [header]
        for i, fold in enumerate(self.per_fold):
            rows.append(f"{i:>6}  " + "  ".join(f"{fold[k]:>8.4f}" for k in keys))
        rows.append(
            f"{'mean':>6}  "
            + "  ".join(f"{self.mean[k]:>8.4f}" for k in keys)
        )
        rows.append(
            f"{'std':>6}  "
            + "  ".join(f"{self.std[k]:>8.4f}" for k in keys)
        )
        return "\n".join(rows)


def hash_embedder(spec: HashEmbedderSpec, adapter: np.ndarray | None = None) -> Embedder:
    """Text embedder from the hash n-gram spec, optionally through an adapter."""

    def embed(text: str) -> np.ndarray:
        vec = embed_hash(text, spec)
        if adapter is not None:
            vec = apply_adapter(adapter, vec)
        return vec

    return embed


def resolve_to_masterlist(ranked: RankedList) -> list[tuple[str, float]]:
    """Collapse a raw ranking to distinct masterlist ids, keeping first hits."""
    seen: set[str] = set()
    resolved: list[tuple[str, float]] = []
    for item in ranked:
        if item.ref.masterlist_id in seen:
            continue
        seen.add(item.ref.masterlist_id)
        resolved.append((item.ref.masterlist_id, item.score))
    return resolved


def accuracy_at_k(resolved_ids: list[str], truth: str, k: int) -> int:
    """1 iff the ground-truth id appears among the first k results."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1 if truth in resolved_ids[:k] else 0


def _index_docs(
    corpus: Corpus, gallery: list[tuple[int, MappingPair]], scenario: Scenario
) -> list[tuple[DocRef, str]]:
    docs = [
        (DocRef(kind=DocKind.MASTERLIST_ENTRY, masterlist_id=e.id), e.text)
        for e in corpus.masterlist
    ]
    if scenario is Scenario.MASTERLIST_PLUS_PAIRS:
        docs.extend(
            (
                DocRef(
                    kind=DocKind.MAPPING_PAIR,
                    masterlist_id=pair.masterlist_id,
                    pair_index=idx,
                ),
                pair.clinic_text,
            )
            for idx, pair in gallery
        )
    return docs


def retrieve(
    query: str,
    mode: Mode,
    config: EvalConfig,
    sparse_index,
    norm_config: NormalizerConfig,
    dense_store: DenseIndexStore | None,
    embedder: Embedder | None,
) -> RankedList:
    """One query through the configured retrieval path.

    Raises UnembeddableError for dense/hybrid queries with no features.
    """
    sparse_ranked = None
    if mode in (Mode.SPARSE, Mode.HYBRID):
        q_vec = embed_query_sparse(normalize(query, norm_config), sparse_index)
        sparse_ranked = search_sparse(sparse_index, q_vec, config.depth)
    if mode is Mode.SPARSE:
        return sparse_ranked

    if embedder is None or dense_store is None:
        raise ValueError("dense retrieval requested without an embedder/store")
    dense_ranked = search_dense(dense_store, embedder(query), config.depth)
    if mode is Mode.DENSE:
        return dense_ranked
    return rrf_fuse([sparse_ranked, dense_ranked], config.rrf, config.depth)


def run_eval(
    corpus: Corpus,
    folds: FoldAssignment,
    config: EvalConfig,
    norm_config: NormalizerConfig,
    embedder: Embedder | None = None,
) -> EvalReport:
    """Run the full fold protocol and aggregate Acc@k across folds."""
    if config.mode in (Mode.DENSE, Mode.HYBRID) and embedder is None:
        raise ValueError(f"mode {config.mode.value} requires an embedder")

    per_fold: list[dict[str, float]] = []
    skipped: list[str] = []
    for probe_fold in range(folds.n_folds):
        gallery, probe = fold_view(corpus, folds, probe_fold)
        docs = _index_docs(corpus, gallery, config.scenario)

        sparse_index = None
        if config.mode in (Mode.SPARSE, Mode.HYBRID):
            tokenized = [(ref, normalize(text, norm_config)) for ref, text in docs]
            sparse_index = build_bm25(tokenized, k1=config.k1, b=config.b)

        dense_store = None
        if config.mode in (Mode.DENSE, Mode.HYBRID):
            dim = embedder(corpus.masterlist[0].text).shape[0]
            dense_store = DenseIndexStore.build(
                [(ref, embedder(text)) for ref, text in docs], dim
            )

        hits = {k: 0 for k in ACC_KS}
        for _, pair in probe:
            try:
                ranked = retrieve(
                    pair.clinic_text,
                    config.mode,
                    config,
                    sparse_index,
                    norm_config,
                    dense_store,
                    embedder,
                )
            except UnembeddableError:
                skipped.append(pair.clinic_text)
                continue  # counted as a miss at every k
            if config.dedup_masterlist:
                ids = [mid for mid, _ in resolve_to_masterlist(ranked)]
            else:
                ids = [item.ref.masterlist_id for item in ranked]
            for k in ACC_KS:
                hits[k] += accuracy_at_k(ids, pair.masterlist_id, k)
        n_probe = len(probe)
        per_fold.append(
            {f"acc@{k}": (hits[k] / n_probe if n_probe else 0.0) for k in ACC_KS}
        )

    keys = [f"acc@{k}" for k in ACC_KS]
    mean = {k: float(np.mean([f[k] for f in per_fold])) for k in keys}
    std = {k: float(np.std([f[k] for f in per_fold])) for k in keys}  # population std
    return EvalReport(
        mode=config.mode.value,
        scenario=config.scenario.value,
        per_fold=per_fold,
        mean=mean,
        std=std,
        skipped=skipped,
    )
