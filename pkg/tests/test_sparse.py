import math
import random

import pytest

from conftest import bm25_reference, entry_ref, toks
from medmatch.sparse import (
    Bm25Index,
    build_bm25,
    embed_query_sparse,
    load_index,
    save_index,
    search_sparse,
)


def test_hand_derived_score(three_doc_index):
    # idf = ln(2.5/1.5 + 1) = 0.98083; tf part = 2.2/1.975 = 1.11392
    q = embed_query_sparse(toks("ecg"), three_doc_index)
    ranked = search_sparse(three_doc_index, q, 3)
    assert ranked[0].ref.masterlist_id == "d1"
    assert ranked[0].score == pytest.approx(1.0925, abs=1e-3)


def test_unseen_query_term_contributes_nothing(three_doc_index):
    q = embed_query_sparse(toks("xray"), three_doc_index)
    assert q == {}
    assert len(search_sparse(three_doc_index, q, 3)) == 0


def test_single_doc_corpus_matches_itself():
    index = build_bm25([(entry_ref("only"), toks("blood", "test"))])
    q = embed_query_sparse(toks("blood", "test"), index)
    ranked = search_sparse(index, q, 5)
    assert [i.ref.masterlist_id for i in ranked] == ["only"]


def test_query_tf_linearity(three_doc_index):
    single = embed_query_sparse(toks("ecg"), three_doc_index)
    double = embed_query_sparse(toks("ecg", "ecg"), three_doc_index)
    (term_id,) = single
    assert double[term_id] == pytest.approx(2 * single[term_id], abs=1e-12)


def test_inner_product_equals_reference(three_doc_index):
    doc_tokens = [["ecg"], ["blood", "test"], ["test"]]
    query = ["ecg", "test"]
    expected = bm25_reference(query, doc_tokens)
    q = embed_query_sparse(toks(*query), three_doc_index)
    for pos, (_, vec) in enumerate(three_doc_index.docs):
        dot = sum(q.get(t, 0.0) * w for t, w in vec.items())
        assert dot == pytest.approx(expected[pos], abs=1e-9)


def test_ranked_list_truncation_prefix(three_doc_index):
    q = embed_query_sparse(toks("ecg", "test"), three_doc_index)
    top3 = search_sparse(three_doc_index, q, 3)
    top1 = search_sparse(three_doc_index, q, 1)
    assert top1.items == top3.items[:1]


def test_zero_score_candidates_excluded(three_doc_index):
    q = embed_query_sparse(toks("ecg"), three_doc_index)
    ranked = search_sparse(three_doc_index, q, 10)
    assert all(item.score > 0 for item in ranked)
    assert len(ranked) == 1


def test_identical_docs_tie_break_deterministic():
    index = build_bm25(
        [(entry_ref("b"), toks("ecg")), (entry_ref("a"), toks("ecg"))]
    )
    q = embed_query_sparse(toks("ecg"), index)
    ranked = search_sparse(index, q, 2)
    assert [i.ref.masterlist_id for i in ranked] == ["a", "b"]


def test_empty_corpus_returns_empty():
    index = build_bm25([])
    assert len(search_sparse(index, {}, 5)) == 0


def test_build_parameter_validation():
    with pytest.raises(ValueError):
        build_bm25([], k1=-0.1)
    with pytest.raises(ValueError):
        build_bm25([], b=1.5)


def test_idf_non_negative():
    for n in range(1, 12):
        for df in range(0, n + 1):
            idf = math.log((n - df + 0.5) / (df + 0.5) + 1.0)
            assert idf >= 0


def test_tf_monotonicity():
    # adding an occurrence of a query term never decreases the doc's score
    k1, b = 1.2, 0.75
    for tf in range(1, 8):
        for dl in range(tf, 12):
            avgdl = 5.0

            def part(tf_, dl_):
                return tf_ * (k1 + 1) / (tf_ + k1 * (1 - b + b * dl_ / avgdl))

            assert part(tf + 1, dl + 1) >= part(tf, dl) - 1e-12


def test_random_corpora_match_brute_force():
    rng = random.Random(7)
    vocab = [f"t{i}" for i in range(10)]
    for _ in range(25):
        n_docs = rng.randint(1, 20)
        doc_tokens = [
            [rng.choice(vocab) for _ in range(rng.randint(1, 8))] for _ in range(n_docs)
        ]
        index = build_bm25(
            [(entry_ref(f"d{i:03d}"), toks(*d)) for i, d in enumerate(doc_tokens)]
        )
        query = [rng.choice(vocab) for _ in range(rng.randint(1, 4))]
        expected = bm25_reference(query, doc_tokens)
        q = embed_query_sparse(toks(*query), index)
        ranked = search_sparse(index, q, n_docs)
        got = {item.ref.masterlist_id: item.score for item in ranked}
        for i, exp in enumerate(expected):
            if exp > 0:
                assert got[f"d{i:03d}"] == pytest.approx(exp, abs=1e-9)
            else:
                assert f"d{i:03d}" not in got


def test_snapshot_roundtrip(tmp_path, three_doc_index):
    path = tmp_path / "index.mmsparse"
    save_index(three_doc_index, str(path))
    restored = load_index(str(path))
    q = embed_query_sparse(toks("ecg", "test"), restored)
    orig_q = embed_query_sparse(toks("ecg", "test"), three_doc_index)
    assert q == orig_q
    assert [
        (i.ref, i.score) for i in search_sparse(restored, q, 3)
    ] == [(i.ref, i.score) for i in search_sparse(three_doc_index, orig_q, 3)]
    assert path.read_text()[:20].find("MMSPARSE1") >= 0


def test_snapshot_rejects_wrong_magic(tmp_path):
    path = tmp_path / "bogus.json"
    path.write_text('{"magic": "NOPE"}')
    with pytest.raises(ValueError):
        load_index(str(path))
