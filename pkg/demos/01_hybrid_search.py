"""Walkthrough: build sparse + dense indices over a tiny masterlist and run
the same query through sparse, dense, and fused retrieval."""


from medmatch.dense import DenseIndexStore, HashEmbedderSpec, embed_hash, search_dense
from medmatch.fusion import RrfConfig, rrf_fuse
from medmatch.results import DocKind, DocRef
from medmatch.sparse import build_bm25, embed_query_sparse, search_sparse
from medmatch.textnorm import load_language_pack, normalize

MASTERLIST = {
    "M1": "Radiografie toracică",
    "M2": "Hemoleucogramă completă",
    "M3": "Consultație cardiologie",
    "M4": "Ecografie abdominală",
    "M5": "Radiografie pulmonară cu substanță de contrast",
}

norm = load_language_pack("ro")
refs = {mid: DocRef(kind=DocKind.MASTERLIST_ENTRY, masterlist_id=mid) for mid in MASTERLIST}

# sparse: BM25 over the normalized token streams
sparse_index = build_bm25([(refs[mid], normalize(text, norm)) for mid, text in MASTERLIST.items()])

# dense: deterministic character n-gram hash embeddings, unit-normalized
spec = HashEmbedderSpec(dim=256)
dense_store = DenseIndexStore.build(
    [(refs[mid], embed_hash(text, spec)) for mid, text in MASTERLIST.items()], spec.dim
)

query = "rx torace"  # clinic shorthand for a chest x-ray
print(f"query: {query!r}\n")

q_sparse = embed_query_sparse(normalize(query, norm), sparse_index)
sparse_hits = search_sparse(sparse_index, q_sparse, 5)
print("sparse (BM25 inner product):")
for item in sparse_hits:
    print(f"  {item.rank}. {item.ref.masterlist_id}  {item.score:.4f}")

dense_hits = search_dense(dense_store, embed_hash(query, spec), 5)
print("dense (cosine over hash n-grams):")
for item in dense_hits:
    print(f"  {item.rank}. {item.ref.masterlist_id}  {item.score:.4f}")

fused = rrf_fuse([sparse_hits, dense_hits], RrfConfig(k=60), limit=5)
print("hybrid (reciprocal rank fusion, k=60):")
for item in fused:
    print(f"  {item.rank}. {item.ref.masterlist_id}  {item.score:.5f}")
