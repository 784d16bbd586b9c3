import math
from collections import Counter

import pytest

from medmatch.corpus import Corpus, MappingPair, MasterlistEntry
from medmatch.results import DocKind, DocRef
from medmatch.textnorm import TokenStream


def bm25_reference(query_tokens, doc_token_lists, k1=1.2, b=0.75):
    """Independent textbook BM25 oracle: returns one score per document."""
    n = len(doc_token_lists)
    tfs = [Counter(d) for d in doc_token_lists]
    df = Counter()
    for tf in tfs:
        for t in tf:
            df[t] += 1
    avgdl = sum(len(d) for d in doc_token_lists) / n if n else 0.0
    q_tf = Counter(query_tokens)
    scores = []
    for tf, tokens in zip(tfs, doc_token_lists):
        dl = len(tokens)
        s = 0.0
        for t, qc in q_tf.items():
            f = tf.get(t, 0)
            if f == 0:
                continue
            idf = math.log((n - df[t] + 0.5) / (df[t] + 0.5) + 1.0)
            s += qc * idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * dl / avgdl))
        scores.append(s)
    return scores


def entry_ref(masterlist_id):
    return DocRef(kind=DocKind.MASTERLIST_ENTRY, masterlist_id=masterlist_id)


def pair_ref(masterlist_id, pair_index):
    return DocRef(kind=DocKind.MAPPING_PAIR, masterlist_id=masterlist_id, pair_index=pair_index)


def toks(*tokens):
    return TokenStream(tokens=tuple(tokens))


@pytest.fixture
def three_doc_index():
    """The d1=[ecg], d2=[blood,test], d3=[test] fixture used across tests."""
    from medmatch.sparse import build_bm25

    docs = [
        (entry_ref("d1"), toks("ecg")),
        (entry_ref("d2"), toks("blood", "test")),
        (entry_ref("d3"), toks("test")),
    ]
    return build_bm25(docs, k1=1.2, b=0.75)


@pytest.fixture
def small_corpus():
    entries = tuple(
        MasterlistEntry(id=f"M{i}", text=f"procedure number {i}") for i in range(1, 4)
    )
    pairs = tuple(
        MappingPair(clinic_text=f"clinic text {j} for M{1 + j % 3}", masterlist_id=f"M{1 + j % 3}")
        for j in range(10)
    )
    return Corpus(masterlist=entries, pairs=pairs)
