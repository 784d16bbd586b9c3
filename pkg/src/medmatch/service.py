"""HTTP facade for live mapping: suggestion queries, reviewer decisions that
feed accepted pairs back into the indices, queue management, and persistence.

State is the base corpus files plus an append-only JSON Lines event log;
replaying the log over the base corpus reconstructs the live indices exactly.
Readers see immutable index snapshots; all mutations run under one writer
lock and publish a new snapshot atomically.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .corpus import Corpus, MappingPair, PairSource
from .dense import DenseIndexStore, HashEmbedderSpec, embed_hash, search_dense
from .errors import UnembeddableError
from .evaluator import Mode, resolve_to_masterlist
from .fusion import RrfConfig, rrf_fuse
from .results import DocKind, DocRef
from .sparse import Bm25Index, build_bm25, embed_query_sparse, search_sparse
from .textnorm import NormalizerConfig, load_language_pack, normalize
from .trainer import apply_adapter

REBUILD_EVERY = 1000  # accepts between automatic full rebuilds


@dataclass
class IndexSnapshot:
    version: int
    sparse: Bm25Index
    dense: DenseIndexStore


@dataclass
class ReviewItem:
    item_id: str
    clinic_text: str
    status: str = "pending"  # pending | mapped | skipped
    decision: dict | None = None

    def to_json(self) -> dict:
        return {
            "item_id": self.item_id,
            "clinic_text": self.clinic_text,
            "status": self.status,
            "decision": self.decision,
        }


def _append_sparse(index: Bm25Index, ref: DocRef, tokens) -> Bm25Index:
    """Copy-on-write append keeping global statistics frozen until rebuild."""
    new = Bm25Index(
        vocabulary=index.vocabulary,
        df=index.df,
        n_docs=index.n_docs,
        avgdl=index.avgdl,
        k1=index.k1,
        b=index.b,
        docs=list(index.docs),
        postings={t: list(p) for t, p in index.postings.items()},
    )
    new.append_doc(ref, tokens)
    return new


def _append_dense(store: DenseIndexStore, ref: DocRef, vec: np.ndarray) -> DenseIndexStore:
    new = DenseIndexStore(dim=store.dim, refs=list(store.refs), matrix=store.matrix)
    new.append(ref, vec)
    return new


class MappingService:
    """Owns the corpus, live index snapshots, review queue, and event log."""

    def __init__(
        self,
        corpus: Corpus,
        data_dir: str | Path,
        norm_config: NormalizerConfig | None = None,
        embedder_spec: HashEmbedderSpec = HashEmbedderSpec(),
        adapter: np.ndarray | None = None,
        rrf: RrfConfig = RrfConfig(),
    ):
        self.base_corpus = corpus
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "mapping_log.jsonl"
        self.norm_config = norm_config or load_language_pack("ro")
        self.embedder_spec = embedder_spec
        self.adapter = adapter
        self.rrf = rrf

        self._masterlist_texts = {e.id: e.text for e in corpus.masterlist}
        self._write_lock = threading.Lock()
        self._items: dict[str, ReviewItem] = {}
        self._item_order: list[str] = []
        self._next_item = 0
        self._accepted: list[MappingPair] = []
        self._decision_times: list[float] = []
        self._accepts_since_rebuild = 0
        self.snapshot: IndexSnapshot | None = None

        self._build_snapshot()
        self._replay_log()

    # ------------------------------------------------------------------ index

    def _embed(self, text: str) -> np.ndarray:
        vec = embed_hash(text, self.embedder_spec)
        if self.adapter is not None:
            vec = apply_adapter(self.adapter, vec)
        return vec

    def _all_docs(self) -> list[tuple[DocRef, str]]:
        docs = [
            (DocRef(kind=DocKind.MASTERLIST_ENTRY, masterlist_id=e.id), e.text)
            for e in self.base_corpus.masterlist
        ]
        for idx, pair in enumerate(self.base_corpus.pairs):
            docs.append(
                (
                    DocRef(
                        kind=DocKind.MAPPING_PAIR,
                        masterlist_id=pair.masterlist_id,
                        pair_index=idx,
                    ),
                    pair.clinic_text,
                )
            )
        return docs

    def _build_snapshot(self) -> None:
        """Full rebuild over base corpus + every accepted pair so far."""
        docs = self._all_docs()
        base_n = len(self.base_corpus.pairs)
        for offset, pair in enumerate(self._accepted):
            docs.append(
                (
                    DocRef(
                        kind=DocKind.MAPPING_PAIR,
                        masterlist_id=pair.masterlist_id,
                        pair_index=base_n + offset,
                    ),
                    pair.clinic_text,
                )
            )
        tokenized = [(ref, normalize(text, self.norm_config)) for ref, text in docs]
        sparse = build_bm25(tokenized)
        dense_entries = []
        for ref, text in docs:
            try:
                dense_entries.append((ref, self._embed(text)))
            except UnembeddableError:
                continue
        dense = DenseIndexStore.build(dense_entries, self.embedder_spec.dim)
        version = (self.snapshot.version + 1) if self.snapshot else 1
        self.snapshot = IndexSnapshot(version=version, sparse=sparse, dense=dense)
        self._accepts_since_rebuild = 0

    def _append_pair_to_indices(self, pair: MappingPair) -> None:
        snap = self.snapshot
        pair_index = len(self.base_corpus.pairs) + len(self._accepted) - 1
        ref = DocRef(
            kind=DocKind.MAPPING_PAIR, masterlist_id=pair.masterlist_id, pair_index=pair_index
        )
        sparse = _append_sparse(snap.sparse, ref, normalize(pair.clinic_text, self.norm_config))
        try:
            dense = _append_dense(snap.dense, ref, self._embed(pair.clinic_text))
        except UnembeddableError:
            dense = snap.dense
        self.snapshot = IndexSnapshot(version=snap.version + 1, sparse=sparse, dense=dense)

    def rebuild(self) -> int:
        """On-demand full rebuild; logged so replay reproduces the snapshot."""
        with self._write_lock:
            self._log_event({"type": "rebuild"})
            self._build_snapshot()
            return self.snapshot.version

    # -------------------------------------------------------------------- log

    def _log_event(self, event: dict) -> None:
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay_log(self) -> None:
        if not self.log_path.exists():
            return
        for line in self.log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            kind = event["type"]
            if kind == "enqueue":
                self._restore_item(event)
            elif kind == "accept":
                self._apply_accept(
                    event["item_id"],
                    event["masterlist_id"],
                    event["chosen_rank"],
                    event["reviewer"],
                    event["timestamp"],
                )
            elif kind == "skip":
                item = self._items[event["item_id"]]
                item.status = "skipped"
            elif kind == "rebuild":
                self._build_snapshot()

    def _restore_item(self, event: dict) -> None:
        item = ReviewItem(item_id=event["item_id"], clinic_text=event["clinic_text"])
        self._items[item.item_id] = item
        self._item_order.append(item.item_id)
        seq = int(event["item_id"].split("-")[1])
        self._next_item = max(self._next_item, seq + 1)

    # ------------------------------------------------------------------ queue

    def enqueue(self, clinic_texts: list[str]) -> list[ReviewItem]:
        with self._write_lock:
            created = []
            for text in clinic_texts:
                item = ReviewItem(item_id=f"item-{self._next_item}", clinic_text=text)
                self._next_item += 1
                self._items[item.item_id] = item
                self._item_order.append(item.item_id)
                self._log_event(
                    {"type": "enqueue", "item_id": item.item_id, "clinic_text": text}
                )
                created.append(item)
            return created

    def queue_page(self, status: str, limit: int) -> list[ReviewItem]:
        out = []
        for item_id in self._item_order:
            item = self._items[item_id]
            if status in ("all", item.status):
                out.append(item)
            if len(out) >= limit:
                break
        return out

    def get_item(self, item_id: str) -> ReviewItem | None:
        return self._items.get(item_id)

    def skip(self, item_id: str) -> ReviewItem:
        with self._write_lock:
            item = self._items.get(item_id)
            if item is None:
                raise KeyError(item_id)
            if item.status != "pending":
                raise ValueError("already decided")
            item.status = "skipped"
            self._log_event({"type": "skip", "item_id": item_id})
            return item

    # ---------------------------------------------------------------- mapping

    def _apply_accept(
        self, item_id: str, masterlist_id: str, chosen_rank, reviewer: str, timestamp: float
    ) -> ReviewItem:
        """State transition shared by the live path and log replay."""
        item = self._items[item_id]
        pair = MappingPair(
            clinic_text=item.clinic_text,
            masterlist_id=masterlist_id,
            source=PairSource.REVIEWER,
        )
        self._accepted.append(pair)
        self._append_pair_to_indices(pair)
        self._accepts_since_rebuild += 1
        item.status = "mapped"
        item.decision = {
            "masterlist_id": masterlist_id,
            "chosen_rank": chosen_rank,
            "reviewer": reviewer,
            "timestamp": timestamp,
        }
        self._decision_times.append(timestamp)
        if self._accepts_since_rebuild >= REBUILD_EVERY:
            self._build_snapshot()
        return item

    def accept_mapping(
        self, item_id: str, masterlist_id: str, chosen_rank, reviewer: str
    ) -> ReviewItem:
        with self._write_lock:
            item = self._items.get(item_id)
            if item is None:
                raise KeyError(f"unknown item {item_id}")
            if item.status != "pending":
                raise ValueError("already decided")
            if masterlist_id not in self._masterlist_texts:
                raise KeyError(f"unknown masterlist id {masterlist_id}")
            if chosen_rank != "manual" and (not isinstance(chosen_rank, int) or chosen_rank < 1):
                raise ValueError('chosen_rank must be >= 1 or "manual"')
            timestamp = time.time()
            self._log_event(
                {
                    "type": "accept",
                    "item_id": item_id,
                    "masterlist_id": masterlist_id,
                    "chosen_rank": chosen_rank,
                    "reviewer": reviewer,
                    "timestamp": timestamp,
                }
            )
            return self._apply_accept(item_id, masterlist_id, chosen_rank, reviewer, timestamp)

    # ---------------------------------------------------------------- queries

    def suggest(self, q: str, k: int, mode: Mode) -> dict:
        snap = self.snapshot
        if snap is None:
            raise RuntimeError("indices not built")
        sparse_ranked = None
        if mode in (Mode.SPARSE, Mode.HYBRID):
            q_vec = embed_query_sparse(normalize(q, self.norm_config), snap.sparse)
            sparse_ranked = search_sparse(snap.sparse, q_vec, 100)
        dense_ranked = None
        if mode in (Mode.DENSE, Mode.HYBRID):
            dense_ranked = search_dense(snap.dense, self._embed(q), 100)

        if mode is Mode.SPARSE:
            ranked = sparse_ranked
        elif mode is Mode.DENSE:
            ranked = dense_ranked
        else:
            ranked = rrf_fuse([sparse_ranked, dense_ranked], self.rrf, 100)

        texts = self._masterlist_texts
        suggestions = [
            {
                "masterlist_id": mid,
                "text": texts[mid],
                "score": score,
                "rank": rank,
            }
            for rank, (mid, score) in enumerate(resolve_to_masterlist(ranked)[:k], start=1)
        ]
        return {"mode": mode.value, "snapshot_version": snap.version, "suggestions": suggestions}

    def stats(self) -> dict:
        decided = [i for i in self._items.values() if i.status == "mapped"]
        pending = sum(1 for i in self._items.values() if i.status == "pending")
        n = len(decided)
        if n == 0:
            return {
                "reviewed": 0,
                "acc_at_1": None,
                "acc_at_2": None,
                "manual": None,
                "pending": pending,
                "throughput_per_min": None,
            }
        ranks = [i.decision["chosen_rank"] for i in decided]
        acc1 = sum(1 for r in ranks if r == 1) / n
        acc2 = sum(1 for r in ranks if r in (1, 2)) / n
        manual = sum(1 for r in ranks if r == "manual") / n
        throughput = None
        if len(self._decision_times) >= 2:
            span = max(self._decision_times) - min(self._decision_times)
            if span > 0:
                throughput = (n - 1) / (span / 60.0)
        return {
            "reviewed": n,
            "acc_at_1": acc1,
            "acc_at_2": acc2,
            "manual": manual,
            "pending": pending,
            "throughput_per_min": throughput,
        }


# ------------------------------------------------------------------- HTTP app


class EnqueueRequest(BaseModel):
    clinic_texts: list[str]


class MappingRequest(BaseModel):
    item_id: str
    masterlist_id: str
    chosen_rank: int | str
    reviewer: str


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def create_app(service: MappingService, token: str | None = None) -> FastAPI:
    """Build the /v1 HTTP application; `token` enables bearer auth when set."""
    app = FastAPI(title="medmatch")

    def auth(authorization: str | None = Header(default=None)):
        if token and authorization != f"Bearer {token}":
            raise _error(401, "unauthorized", "missing or invalid bearer token")

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.get("/v1/suggest", dependencies=[Depends(auth)])
    def suggest(q: str, k: int = 5, mode: str = "hybrid"):
        if not (1 <= k <= 100):
            raise _error(422, "bad_k", "k must be in [1, 100]")
        try:
            mode_enum = Mode(mode)
        except ValueError:
            raise _error(422, "bad_mode", f"unknown mode {mode!r}")
        if service.snapshot is None:
            raise _error(503, "no_index", "indices not built")
        try:
            return service.suggest(q, k, mode_enum)
        except UnembeddableError as exc:
            raise _error(422, "unembeddable", str(exc))

    @app.get("/v1/queue", dependencies=[Depends(auth)])
    def queue(status: str = "pending", limit: int = 50):
        if status not in ("pending", "mapped", "skipped", "all"):
            raise _error(422, "bad_status", f"unknown status {status!r}")
        return {"items": [i.to_json() for i in service.queue_page(status, limit)]}

    @app.post("/v1/queue", dependencies=[Depends(auth)])
    def enqueue(body: EnqueueRequest):
        items = service.enqueue(body.clinic_texts)
        return {"items": [i.to_json() for i in items]}

    @app.post("/v1/mappings", dependencies=[Depends(auth)])
    def accept(body: MappingRequest):
        try:
            item = service.accept_mapping(
                body.item_id, body.masterlist_id, body.chosen_rank, body.reviewer
            )
        except KeyError as exc:
            raise _error(404, "not_found", str(exc.args[0]))
        except ValueError as exc:
            code = "conflict" if "already decided" in str(exc) else "bad_request"
            raise _error(409 if code == "conflict" else 422, code, str(exc))
        return item.to_json()

    @app.post("/v1/items/{item_id}/skip", dependencies=[Depends(auth)])
    def skip(item_id: str):
        try:
            return service.skip(item_id).to_json()
        except KeyError:
            raise _error(404, "not_found", f"unknown item {item_id}")
        except ValueError as exc:
            raise _error(409, "conflict", str(exc))

    @app.get("/v1/masterlist/{masterlist_id}", dependencies=[Depends(auth)])
    def masterlist_entry(masterlist_id: str):
        for entry in service.base_corpus.masterlist:
            if entry.id == masterlist_id:
                return {"id": entry.id, "text": entry.text}
        raise _error(404, "not_found", f"unknown masterlist id {masterlist_id}")

    @app.get("/v1/stats", dependencies=[Depends(auth)])
    def stats():
        return service.stats()

    @app.post("/v1/index/rebuild", dependencies=[Depends(auth)])
    def rebuild():
        return {"snapshot_version": service.rebuild()}

    return app


def app_from_env() -> FastAPI:
    """Entry point for `uvicorn medmatch.service:app_from_env --factory`."""
    from .corpus import load_corpus

    data_dir = os.environ.get("MEDMATCH_DATA_DIR", ".")
    corpus = load_corpus(
        Path(data_dir) / "masterlist.csv", Path(data_dir) / "pairs.csv"
    )
    service = MappingService(corpus, data_dir)
    return create_app(service, token=os.environ.get("MEDMATCH_TOKEN"))
