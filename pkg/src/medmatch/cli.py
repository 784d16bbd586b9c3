"""Operator command line: ingest, split, build-index, search, eval,
train-adapter, serve, bench.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import json
import sys
import time

import click

from . import corpus as corpus_mod
from .dense import DenseIndexStore, HashEmbedderSpec, embed_hash
from .errors import MedmatchError
from .evaluator import (
    EvalConfig,
    Mode,
    Scenario,
    hash_embedder,
    run_eval,
)
from .fusion import RrfConfig
from .sparse import build_bm25, save_index
from .textnorm import load_language_pack, normalize
from .trainer import TrainConfig, load_adapter, save_adapter, train_adapter


def _echo_config(name: str, params: dict) -> None:
    click.echo(f"[{name}] config: {json.dumps(params, sort_keys=True, default=str)}", err=True)


def _load(masterlist, pairs):
    return corpus_mod.load_corpus(masterlist, pairs)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file; command-line flags override its values.")
@click.pass_context
def cli(ctx, config_path):
    """Map free-text clinic procedure descriptions to a standardized masterlist."""
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            ctx.default_map = json.load(fh)


@cli.command()
@click.option("--masterlist", required=True, type=click.Path(exists=True))
@click.option("--pairs", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def ingest(masterlist, pairs, as_json):
    """Validate corpus files and print the ingest report."""
    _echo_config("ingest", {"masterlist": masterlist, "pairs": pairs})
    corpus = _load(masterlist, pairs)
    report = corpus.ingest_report
    payload = {
        "masterlist_count": report.masterlist_count,
        "pair_count": report.pair_count,
        "duplicate_pairs_merged": report.duplicate_pairs_merged,
    }
    if as_json:
        click.echo(json.dumps(payload))
    else:
        for key, value in payload.items():
            click.echo(f"{key}: {value}")


@cli.command()
@click.option("--masterlist", required=True, type=click.Path(exists=True))
@click.option("--pairs", required=True, type=click.Path(exists=True))
@click.option("--folds", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def split(masterlist, pairs, folds, seed, out):
    """Write the stratified fold assignment as JSON Lines."""
    _echo_config("split", {"folds": folds, "seed": seed, "out": out})
    corpus = _load(masterlist, pairs)
    assignment = corpus_mod.split_folds(corpus, n_folds=folds, seed=seed)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(assignment.to_jsonl())
    click.echo(f"wrote {len(assignment.assignment)} assignments to {out}")


@cli.command("build-index")
@click.option("--masterlist", required=True, type=click.Path(exists=True))
@click.option("--pairs", required=True, type=click.Path(exists=True))
@click.option("--scenario", type=click.Choice([s.value for s in Scenario]),
              default=Scenario.MASTERLIST_PLUS_PAIRS.value, show_default=True)
@click.option("--sparse-out", type=click.Path(), default=None)
@click.option("--dense-out", type=click.Path(), default=None,
              help="Embedding JSON Lines file (hash embedder, ids M:/P: prefixed).")
@click.option("--dim", default=256, show_default=True)
def build_index(masterlist, pairs, scenario, sparse_out, dense_out, dim):
    """Build and persist index artifacts from corpus files."""
    _echo_config("build-index", {"scenario": scenario, "sparse_out": sparse_out,
                                 "dense_out": dense_out, "dim": dim})
    corpus = _load(masterlist, pairs)
    norm = load_language_pack("ro")
    docs = _scenario_docs(corpus, Scenario(scenario))
    if sparse_out:
        index = build_bm25([(ref, normalize(text, norm)) for ref, text in docs])
        save_index(index, sparse_out)
        click.echo(f"sparse index ({len(index.docs)} docs) -> {sparse_out}")
    if dense_out:
        spec = HashEmbedderSpec(dim=dim)
        with open(dense_out, "w", encoding="utf-8") as fh:
            for ref, text in docs:
                vec_id = (
                    f"M:{ref.masterlist_id}"
                    if ref.pair_index is None
                    else f"P:{ref.pair_index}"
                )
                try:
                    vec = embed_hash(text, spec)
                except MedmatchError:
                    continue
                fh.write(json.dumps({"id": vec_id, "vector": vec.tolist()}) + "\n")
        click.echo(f"dense embeddings -> {dense_out}")


def _scenario_docs(corpus, scenario: Scenario):
    from .results import DocKind, DocRef

    docs = [
        (DocRef(kind=DocKind.MASTERLIST_ENTRY, masterlist_id=e.id), e.text)
        for e in corpus.masterlist
    ]
    if scenario is Scenario.MASTERLIST_PLUS_PAIRS:
        docs.extend(
            (
                DocRef(kind=DocKind.MAPPING_PAIR, masterlist_id=p.masterlist_id, pair_index=i),
                p.clinic_text,
            )
            for i, p in enumerate(corpus.pairs)
        )
    return docs


@cli.command()
@click.option("--masterlist", required=True, type=click.Path(exists=True))
@click.option("--pairs", required=True, type=click.Path(exists=True))
@click.option("--q", "query", required=True)
@click.option("--k", default=5, show_default=True)
@click.option("--mode", type=click.Choice([m.value for m in Mode]),
              default=Mode.SPARSE.value, show_default=True)
@click.option("--scenario", type=click.Choice([s.value for s in Scenario]),
              default=Scenario.MASTERLIST_ONLY.value, show_default=True)
@click.option("--adapter", "adapter_path", type=click.Path(exists=True), default=None)
@click.option("--fusion-k", default=60.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def search(masterlist, pairs, query, k, mode, scenario, adapter_path, fusion_k, as_json):
    """Run one query against in-memory indices and print the suggestions."""
    _echo_config("search", {"q": query, "k": k, "mode": mode, "scenario": scenario})
    from .evaluator import resolve_to_masterlist, retrieve
    from .textnorm import normalize as _norm

    corpus = _load(masterlist, pairs)
    norm = load_language_pack("ro")
    config = EvalConfig(mode=Mode(mode), scenario=Scenario(scenario),
                        rrf=RrfConfig(k=fusion_k))
    docs = _scenario_docs(corpus, config.scenario)

    sparse_index = build_bm25([(ref, _norm(text, norm)) for ref, text in docs])
    dense_store = None
    embedder = None
    if config.mode in (Mode.DENSE, Mode.HYBRID):
        adapter = load_adapter(adapter_path) if adapter_path else None
        spec = HashEmbedderSpec(dim=adapter.shape[1]) if adapter is not None else HashEmbedderSpec()
        embedder = hash_embedder(spec, adapter)
        dense_store = DenseIndexStore.build(
            [(ref, embedder(text)) for ref, text in docs],
            adapter.shape[0] if adapter is not None else spec.dim,
        )
    ranked = retrieve(query, config.mode, config, sparse_index, norm, dense_store, embedder)
    resolved = resolve_to_masterlist(ranked)[:k]
    texts = {e.id: e.text for e in corpus.masterlist}
    if as_json:
        click.echo(json.dumps(
            [{"masterlist_id": mid, "text": texts[mid], "score": score,
              "rank": rank} for rank, (mid, score) in enumerate(resolved, 1)]
        ))
    else:
        for rank, (mid, score) in enumerate(resolved, 1):
            click.echo(f"{rank:>3}  {score:>10.4f}  {mid}  {texts[mid]}")


@cli.command("eval")
@click.option("--masterlist", required=True, type=click.Path(exists=True))
@click.option("--pairs", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice([m.value for m in Mode]),
              default=Mode.SPARSE.value, show_default=True)
@click.option("--scenario", type=click.Choice([s.value for s in Scenario]),
              default=Scenario.MASTERLIST_ONLY.value, show_default=True)
@click.option("--folds", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--adapter", "adapter_path", type=click.Path(exists=True), default=None)
@click.option("--fusion-k", default=60.0, show_default=True)
@click.option("--no-dedup", is_flag=True,
              help="Score over raw candidates instead of distinct masterlist ids.")
@click.option("--json", "as_json", is_flag=True)
def eval_cmd(masterlist, pairs, mode, scenario, folds, seed, adapter_path,
             fusion_k, no_dedup, as_json):
    """Run the cross-validated Acc@k evaluation and print the report."""
    _echo_config("eval", {"mode": mode, "scenario": scenario, "folds": folds,
                          "seed": seed, "fusion_k": fusion_k, "dedup": not no_dedup})
    corpus = _load(masterlist, pairs)
    norm = load_language_pack("ro")
    assignment = corpus_mod.split_folds(corpus, n_folds=folds, seed=seed)
    config = EvalConfig(mode=Mode(mode), scenario=Scenario(scenario),
                        rrf=RrfConfig(k=fusion_k), dedup_masterlist=not no_dedup)
    embedder = None
    if config.mode in (Mode.DENSE, Mode.HYBRID):
        adapter = load_adapter(adapter_path) if adapter_path else None
        spec = HashEmbedderSpec(dim=adapter.shape[1]) if adapter is not None else HashEmbedderSpec()
        embedder = hash_embedder(spec, adapter)
    report = run_eval(corpus, assignment, config, norm, embedder)
    click.echo(report.to_json() if as_json else report.to_table())


@cli.command("train-adapter")
@click.option("--masterlist", required=True, type=click.Path(exists=True))
@click.option("--pairs", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=20, show_default=True)
@click.option("--batch-size", default=4096, show_default=True)
@click.option("--lr", default=2e-5, show_default=True)
@click.option("--warmup-ratio", default=0.1, show_default=True)
@click.option("--scale", default=20.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--dim", default=256, show_default=True)
@click.option("--out", required=True, type=click.Path())
def train_adapter_cmd(masterlist, pairs, epochs, batch_size, lr, warmup_ratio,
                      scale, seed, dim, out):
    """Train the linear embedding adapter on (clinic, masterlist) pairs."""
    _echo_config("train-adapter", {"epochs": epochs, "batch_size": batch_size,
                                   "lr": lr, "warmup_ratio": warmup_ratio,
                                   "scale": scale, "seed": seed, "dim": dim})
    corpus = _load(masterlist, pairs)
    spec = HashEmbedderSpec(dim=dim)
    texts = {e.id: e.text for e in corpus.masterlist}
    triples = []
    for pair in corpus.pairs:
        try:
            anchor = embed_hash(pair.clinic_text, spec)
            positive = embed_hash(texts[pair.masterlist_id], spec)
        except MedmatchError:
            continue
        triples.append((anchor, positive, pair.masterlist_id))
    config = TrainConfig(epochs=epochs, batch_size=batch_size, lr=lr,
                         warmup_ratio=warmup_ratio, scale=scale, seed=seed)
    W = train_adapter(triples, config)
    save_adapter(W, out)
    click.echo(f"adapter {W.shape} -> {out}")


@cli.command()
@click.option("--masterlist", required=True, type=click.Path(exists=True))
@click.option("--pairs", required=True, type=click.Path(exists=True))
@click.option("--data-dir", envvar="MEDMATCH_DATA_DIR", default=".", show_default=True)
@click.option("--bind", envvar="MEDMATCH_BIND_ADDR", default="127.0.0.1:8200", show_default=True)
@click.option("--token", envvar="MEDMATCH_TOKEN", default=None)
@click.option("--adapter", "adapter_path", type=click.Path(exists=True), default=None)
def serve(masterlist, pairs, data_dir, bind, token, adapter_path):
    """Start the HTTP review service."""
    _echo_config("serve", {"data_dir": data_dir, "bind": bind,
                           "auth": bool(token), "adapter": adapter_path})
    import uvicorn

    from .service import MappingService, create_app

    corpus = _load(masterlist, pairs)
    adapter = load_adapter(adapter_path) if adapter_path else None
    service = MappingService(corpus, data_dir, adapter=adapter)
    host, _, port = bind.partition(":")
    uvicorn.run(create_app(service, token=token), host=host, port=int(port or 8200))


@cli.command()
@click.option("--n", default=1000, show_default=True, help="Number of queries to time.")
@click.option("--entries", default=100_000, show_default=True,
              help="Synthetic masterlist size.")
@click.option("--mode", type=click.Choice([m.value for m in Mode]),
              default=Mode.HYBRID.value, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def bench(n, entries, mode, seed, as_json):
    """Time the suggest path over a synthetic index; prints latency + throughput."""
    _echo_config("bench", {"n": n, "entries": entries, "mode": mode, "seed": seed})
    from .bench import run_bench

    result = run_bench(n_queries=n, n_entries=entries, mode=Mode(mode), seed=seed)
    if as_json:
        click.echo(json.dumps(result))
    else:
        click.echo(f"queries: {result['queries']}")
        click.echo(f"total_seconds: {result['total_seconds']:.3f}")
        click.echo(f"per_query_ms: {result['per_query_ms']:.3f}")
        click.echo(f"queries_per_second: {result['queries_per_second']:.1f}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except MedmatchError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
