"""Dense-embedding store with exact cosine top-k search, plus a deterministic
hash n-gram embedder used when no precomputed transformer embeddings exist."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, UnembeddableError
from .results import DocRef, RankedList, ranked_list_from_scored
from .textnorm import char_ngrams

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class HashEmbedderSpec:
    dim: int = 256
    n_min: int = 3
    n_max: int = 5
    salt: str = ""

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be > 0")


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def embed_hash(text: str, spec: HashEmbedderSpec) -> np.ndarray:
    """Deterministic dense embedding: salted FNV-1a feature hashing of
    character n-grams with a +/-1 sign bit, L2-normalized.

    Raises UnembeddableError when the text yields no n-grams (nothing left
    after normalization) instead of returning a silent zero vector.
    """
    grams = char_ngrams(text, spec.n_min, spec.n_max)
    if not grams:
        raise UnembeddableError(f"no features in text {text!r}")
    vec = np.zeros(spec.dim, dtype=np.float64)
    salt = spec.salt.encode("utf-8")
    for gram, count in grams.items():
        h = _fnv1a64(salt + gram.encode("utf-8"))
        bucket = (h >> 1) % spec.dim
        sign = 1.0 if (h & 1) else -1.0
        vec[bucket] += sign * count
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise UnembeddableError(f"hash collisions cancelled all features of {text!r}")
    return vec / norm


def normalize_vector(values, dim: int | None = None) -> np.ndarray:
    """Validate finiteness (and optionally dimension), then L2-normalize."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionMismatchError(f"expected 1-d vector, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise DimensionMismatchError(f"expected dim {dim}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("vector has non-finite components")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise UnembeddableError("zero vector cannot be normalized")
    return vec / norm


def load_embeddings(path: str, dim: int) -> dict[str, np.ndarray]:
    """Load a JSON Lines embedding file: {"id": ..., "vector": [...]} per line."""
    out: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            vec_id = record["id"]
            raw = record["vector"]
            if len(raw) != dim:
                raise DimensionMismatchError(
                    f"{path}:{lineno}: id {vec_id!r} has dim {len(raw)}, expected {dim}"
                )
            try:
                out[vec_id] = normalize_vector(raw, dim)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: id {vec_id!r}: {exc}") from exc
    return out


@dataclass
class DenseIndexStore:
    """Immutable-after-build store of unit vectors searched exactly by dot product."""

    dim: int
    refs: list[DocRef] = field(default_factory=list)
    matrix: np.ndarray | None = None  # (n, dim), unit rows

    def __len__(self) -> int:
        return len(self.refs)

    @classmethod
    def build(cls, entries: list[tuple[DocRef, np.ndarray]], dim: int) -> "DenseIndexStore":
        refs = []
        rows = []
        for ref, vec in entries:
            rows.append(normalize_vector(vec, dim))
            refs.append(ref)
        matrix = np.vstack(rows) if rows else np.empty((0, dim))
        return cls(dim=dim, refs=refs, matrix=matrix)

    def append(self, ref: DocRef, vec: np.ndarray) -> None:
        row = normalize_vector(vec, self.dim)
        self.refs.append(ref)
        if self.matrix is None or self.matrix.shape[0] == 0:
            self.matrix = row[np.newaxis, :]
        else:
            self.matrix = np.vstack([self.matrix, row])


def search_dense(store: DenseIndexStore, query: np.ndarray, limit: int) -> RankedList:
    """Exact top-`limit` by cosine similarity (dot product of unit vectors)."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    query = normalize_vector(query, store.dim)
    if len(store) == 0:
        return RankedList(items=())
    scores = store.matrix @ query
    n = len(store)
    if n > limit:
        # exact top-k: keep everything scoring at least the k-th best value so
        # boundary ties still go through the full tie-break rule
        threshold = np.partition(scores, n - limit)[n - limit]
        candidates = np.nonzero(scores >= threshold)[0]
    else:
        candidates = range(n)
    scored = [(store.refs[i], float(scores[i])) for i in candidates]
    return ranked_list_from_scored(scored, limit)
