"""Reference-free evaluation of cross-lingual image captioning models.

Scores candidate captions in a target language against source-language
references, machine translations of them, and the image content itself
(transport relevance, cross-lingual relevance, cross-media relevance), next
to the standard reference-based metrics, and checks rank consistency between
the two families with tie-aware Spearman correlation.
"""

from .core import (
    AGGREGATE_COMPONENTS,
    CJK_CHAR,
    DEFAULT_POLICY,
    PROPOSED_METRICS,
    STANDARD_METRICS,
    WHITESPACE,
    CaptionRecord,
    MetricKind,
    ReferenceSet,
    ScoreTable,
    Sentence,
    TokenizerPolicy,
    aggregate,
    tokenize,
)
from .errors import (
    AllOovError,
    CapevalError,
    ConfigError,
    DuplicateTokenError,
    EmptySentenceError,
    FormatError,
    KeyMismatchError,
    MissingMetricError,
    ZeroVectorError,
)
from .io import (
    EmbeddingTable,
    VisualFeatureStore,
    load_captions,
    load_embeddings,
    load_features,
    load_references,
    read_score_table,
    write_report,
)
from .ngram import (
    IdfTable,
    bleu4_corpus,
    build_idf,
    cider,
    cider_corpus,
    meteor_exact,
    meteor_exact_corpus,
    ngram_counts,
    ngram_profile,
    rouge_l,
    rouge_l_corpus,
)
from .pipeline import RunConfig, correlate_scores, evaluate, train_projector_files
from .ranking import (
    CorrelationMatrix,
    RankVector,
    correlate_all,
    cross_correlate,
    rank_models,
    rank_scores,
    spearman,
)
from .visual import (
    RidgeProjector,
    clinrel,
    cmedrel,
    cosine,
    load_projector,
    project,
    save_projector,
    select_lambda_cv,
    sentence_repr,
    train_projector,
)
from .wmd import NBowDistribution, TransportPlan, nbow, rwmd, wcd, wmd, wmdrel

__version__ = "0.1.0"

__all__ = [
    "AGGREGATE_COMPONENTS",
    "AllOovError",
    "CJK_CHAR",
    "CapevalError",
    "CaptionRecord",
    "ConfigError",
    "CorrelationMatrix",
    "DEFAULT_POLICY",
    "DuplicateTokenError",
    "EmbeddingTable",
    "EmptySentenceError",
    "FormatError",
    "IdfTable",
    "KeyMismatchError",
    "MetricKind",
    "MissingMetricError",
    "NBowDistribution",
    "PROPOSED_METRICS",
    "RankVector",
    "ReferenceSet",
    "RidgeProjector",
    "RunConfig",
    "STANDARD_METRICS",
    "ScoreTable",
    "Sentence",
    "TokenizerPolicy",
    "TransportPlan",
    "VisualFeatureStore",
    "WHITESPACE",
    "ZeroVectorError",
    "aggregate",
    "bleu4_corpus",
    "build_idf",
    "cider",
    "cider_corpus",
    "clinrel",
    "cmedrel",
    "correlate_all",
    "correlate_scores",
    "cosine",
    "cross_correlate",
    "evaluate",
    "load_captions",
    "load_embeddings",
    "load_features",
    "load_projector",
    "load_references",
    "meteor_exact",
    "meteor_exact_corpus",
    "nbow",
    "ngram_counts",
    "ngram_profile",
    "project",
    "rank_models",
    "rank_scores",
    "read_score_table",
    "rouge_l",
    "rouge_l_corpus",
    "rwmd",
    "save_projector",
    "select_lambda_cv",
    "sentence_repr",
    "spearman",
    "tokenize",
    "train_projector",
    "train_projector_files",
    "wcd",
    "wmd",
    "wmdrel",
    "write_report",
]
