"""BM25 sparse index scored by inner product.

The document-side vector stores the tf saturation / length-normalization part
of BM25; IDF lives on the query side, so dot(query_vector, doc_vector)
reproduces the textbook BM25 score:

    score(q, d) = sum_t idf(t) * tf_q(t) * tf_d(t)*(k1+1) / (tf_d(t) + k1*(1 - b + b*|d|/avgdl))

with idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1), which is non-negative for
all 0 <= df <= N.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .results import DocKind, DocRef, RankedList, ranked_list_from_scored
from .textnorm import TokenStream

MAGIC = "MMSPARSE1"

SparseVector = dict[int, float]


@dataclass
class Bm25Index:
    vocabulary: dict[str, int]
    df: list[int]
    n_docs: int
    avgdl: float
    k1: float
    b: float
    docs: list[tuple[DocRef, SparseVector]]
    # postings: term-id -> (doc positions, matching doc-vector weights)
    postings: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def idf(self, term_id: int) -> float:
        df = self.df[term_id]
        return math.log((self.n_docs - df + 0.5) / (df + 0.5) + 1.0)

    def rebuild_postings(self) -> None:
        positions: dict[int, list[int]] = {}
        weights: dict[int, list[float]] = {}
        for pos, (_, vec) in enumerate(self.docs):
            for term_id, w in vec.items():
                positions.setdefault(term_id, []).append(pos)
                weights.setdefault(term_id, []).append(w)
        self.postings = {
            t: (np.asarray(positions[t], dtype=np.intp), np.asarray(weights[t]))
            for t in positions
        }

    def append_doc(self, ref: DocRef, tokens: TokenStream) -> None:
        """Add one document using the frozen global statistics.

        df/avgdl/N are NOT updated; callers that care about fresh statistics
        rebuild the index. Unknown terms are dropped (the vocabulary is fixed).
        """
        vec = _doc_vector(Counter(tokens), self.vocabulary, self.k1, self.b, self.avgdl)
        pos = len(self.docs)
        self.docs.append((ref, vec))
        for term_id, w in vec.items():
            old = self.postings.get(term_id)
            if old is None:
                self.postings[term_id] = (
                    np.asarray([pos], dtype=np.intp),
                    np.asarray([w]),
                )
            else:
                self.postings[term_id] = (
                    np.append(old[0], pos),
                    np.append(old[1], w),
                )


def _doc_vector(
    tf: Counter[str], vocabulary: dict[str, int], k1: float, b: float, avgdl: float
) -> SparseVector:
    dl = sum(tf.values())
    vec: SparseVector = {}
    if avgdl <= 0:
        return vec
    norm = k1 * (1.0 - b + b * dl / avgdl)
    for term, count in tf.items():
        term_id = vocabulary.get(term)
        if term_id is None:
            continue
        weight = count * (k1 + 1.0) / (count + norm)
        if weight > 0:
            vec[term_id] = weight
    return vec


def build_bm25(
    docs: list[tuple[DocRef, TokenStream]], k1: float = 1.2, b: float = 0.75
) -> Bm25Index:
    """Build a BM25 index over tokenized documents."""
    if k1 < 0:
        raise ValueError("k1 must be >= 0")
    if not (0.0 <= b <= 1.0):
        raise ValueError("b must be in [0, 1]")

    vocabulary: dict[str, int] = {}
    tfs: list[Counter[str]] = []
    for _, tokens in docs:
        tf = Counter(tokens)
        tfs.append(tf)
        for term in tf:
            if term not in vocabulary:
                vocabulary[term] = len(vocabulary)

    df = [0] * len(vocabulary)
    total_len = 0
    for tf in tfs:
        total_len += sum(tf.values())
        for term in tf:
            df[vocabulary[term]] += 1

    n_docs = len(docs)
    avgdl = total_len / n_docs if n_docs else 0.0

    index = Bm25Index(
        vocabulary=vocabulary,
        df=df,
        n_docs=n_docs,
        avgdl=avgdl,
        k1=k1,
        b=b,
        docs=[],
    )
    for (ref, _), tf in zip(docs, tfs):
        index.docs.append((ref, _doc_vector(tf, vocabulary, k1, b, avgdl)))
    index.rebuild_postings()
    return index


def embed_query_sparse(tokens: TokenStream, index: Bm25Index) -> SparseVector:
    """Query-side sparse vector: raw tf times IDF; unseen terms are dropped."""
    vec: SparseVector = {}
    for term, count in Counter(tokens).items():
        term_id = index.vocabulary.get(term)
        if term_id is None:
            continue
        weight = count * index.idf(term_id)
        if weight > 0:
            vec[term_id] = weight
    return vec


def search_sparse(index: Bm25Index, query: SparseVector, limit: int) -> RankedList:
    """Top-`limit` documents by inner product; zero-score candidates excluded."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    scores = np.zeros(len(index.docs))
    for term_id, q_weight in query.items():
        posting = index.postings.get(term_id)
        if posting is None:
            continue
        positions, weights = posting
        np.add.at(scores, positions, q_weight * weights)
    (nonzero,) = np.nonzero(scores > 0.0)
    if nonzero.size > limit:
        # exact top-k: keep all candidates at or above the k-th best score so
        # boundary ties still run through the full tie-break rule
        hit_scores = scores[nonzero]
        threshold = np.partition(hit_scores, nonzero.size - limit)[nonzero.size - limit]
        nonzero = nonzero[hit_scores >= threshold]
    scored = [(index.docs[pos][0], float(scores[pos])) for pos in nonzero]
    return ranked_list_from_scored(scored, limit)


def _ref_to_json(ref: DocRef) -> dict:
    return {"kind": ref.kind.value, "masterlist_id": ref.masterlist_id, "pair_index": ref.pair_index}


def _ref_from_json(obj: dict) -> DocRef:
    return DocRef(
        kind=DocKind(obj["kind"]),
        masterlist_id=obj["masterlist_id"],
        pair_index=obj["pair_index"],
    )


def save_index(index: Bm25Index, path: str) -> None:
    payload = {
        "magic": MAGIC,
        "vocabulary": index.vocabulary,
        "df": index.df,
        "n_docs": index.n_docs,
        "avgdl": index.avgdl,
        "k1": index.k1,
        "b": index.b,
        "docs": [
            [_ref_to_json(ref), {str(t): w for t, w in vec.items()}]
            for ref, vec in index.docs
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_index(path: str) -> Bm25Index:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("magic") != MAGIC:
        raise ValueError(f"{path}: not a {MAGIC} index snapshot")
    index = Bm25Index(
        vocabulary=payload["vocabulary"],
        df=payload["df"],
        n_docs=payload["n_docs"],
        avgdl=payload["avgdl"],
        k1=payload["k1"],
        b=payload["b"],
        docs=[
            (_ref_from_json(ref), {int(t): w for t, w in vec.items()})
            for ref, vec in payload["docs"]
        ],
    )
    index.rebuild_postings()
    return index
