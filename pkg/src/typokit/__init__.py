"""Typo generation, typos-aware query augmentation, BM25 retrieval, evaluation."""

__version__ = "0.1.0"

from .augment import (
    AugmentPolicy,
    AugmentStats,
    augment_training_file,
    make_typo_dev_sets,
    typos_aware_transform,
)
from .bm25 import Bm25Index, ScoredDoc, analyze, batch_search, build_index
from .dataio import ParseError, read_tsv_pairs
from .evaluation import (
    Comparison,
    EvalReport,
    MetricResult,
    RankLossSeries,
    bonferroni,
    compare,
    evaluate_run,
    mrr_at_k,
    paired_t_test,
    parse_qrels,
    parse_run,
    rank_loss,
    recall_at_k,
    table_report,
)
from .typo_gen import (
    KIND_NAMES,
    KeyboardLayout,
    NotApplicableError,
    PerturbationRecord,
    QueryToken,
    TypoKind,
    derive_stream_seed,
    inject_typo,
    kind_applicable,
    rand_delete,
    rand_insert,
    rand_sub,
    sample_kind,
    swap_adjacent,
    swap_neighbor,
    tokenize,
)

__all__ = [
    "__version__",
    "AugmentPolicy",
    "AugmentStats",
    "augment_training_file",
    "make_typo_dev_sets",
    "typos_aware_transform",
    "Bm25Index",
    "ScoredDoc",
    "analyze",
    "batch_search",
    "build_index",
    "ParseError",
    "read_tsv_pairs",
    "Comparison",
    "EvalReport",
    "MetricResult",
    "RankLossSeries",
    "bonferroni",
    "compare",
    "evaluate_run",
    "mrr_at_k",
    "paired_t_test",
    "parse_qrels",
    "parse_run",
    "rank_loss",
    "recall_at_k",
    "table_report",
    "KIND_NAMES",
    "KeyboardLayout",
    "NotApplicableError",
    "PerturbationRecord",
    "QueryToken",
    "TypoKind",
    "derive_stream_seed",
    "inject_typo",
    "kind_applicable",
    "rand_delete",
    "rand_insert",
    "rand_sub",
    "sample_kind",
    "swap_adjacent",
    "swap_neighbor",
    "tokenize",
]
