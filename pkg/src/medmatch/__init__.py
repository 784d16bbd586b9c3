"""medmatch: hybrid sparse/dense retrieval engine mapping free-text clinic
procedure descriptions onto a standardized masterlist."""

from .corpus import (
    Corpus,
    FoldAssignment,
    MappingPair,
    MasterlistEntry,
    fold_view,
    load_corpus,
    split_folds,
)
from .dense import DenseIndexStore, HashEmbedderSpec, embed_hash, load_embeddings, search_dense
from .errors import (
    CorpusFormatError,
    DanglingReferenceError,
    DimensionMismatchError,
    MedmatchError,
    UnembeddableError,
)
from .evaluator import (
    EvalConfig,
    EvalReport,
    Mode,
    Scenario,
    accuracy_at_k,
    resolve_to_masterlist,
    run_eval,
)
from .fusion import RrfConfig, rrf_fuse
from .results import DocKind, DocRef, RankedItem, RankedList
from .sparse import Bm25Index, build_bm25, embed_query_sparse, search_sparse
from .textnorm import NormalizerConfig, TokenStream, char_ngrams, load_language_pack, normalize
from .trainer import TrainConfig, apply_adapter, mnrl_loss, train_adapter

__version__ = "0.1.0"
