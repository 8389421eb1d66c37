"""summarank: candidate-summary construction, trainable greedy-matching
reranking, and ROUGE-based evaluation for text summarization."""

from .baselines import (
    EmbeddingSimilaritySelector,
    FeatureRanker,
    LinearRanker,
    fit_ranker,
    rank_with,
    unsupervised_select,
)
from .candidates import (
    Candidate,
    CandidateSet,
    SentenceRanking,
    attach_rouge,
    enumerate_extractive,
    fuse_sentences,
    heuristic_ranking,
    ingest_beam,
    pool_systems,
)
from .embeddings import FileEmbeddings, HashEmbeddings, embed_candidate, embed_document
from .evaluation import (
    BinReport,
    BucketAccuracy,
    CorpusReport,
    SelectionRecord,
    bin_analysis,
    corpus_report,
    exact_significance,
    max_oracle_selector,
    oracle_select,
    selection_accuracy,
    significance,
)
from .features import FeatureVector, extract_features, greedy_fragments
from .matching import ScoreBreakdown, score, score_gradients, select
from .reranker import GreedyMatchReranker
from .rouge import RougeScore, RougeTriple, ngrams, rouge_l, rouge_n, rouge_triple
from .textproc import Document, Sentence, TokenizerConfig, tokenize, tokenize_flat
from .training import (
    DistributionReport,
    LossReport,
    TrainConfig,
    TrainExample,
    TrainState,
    distribution_report,
    lr_at,
    ranking_loss,
    train,
)
from .weighting import ScorerParams, WeightVector, init_scorer_params, token_weights

__version__ = "0.1.0"

__all__ = [
    "BinReport",
    "BucketAccuracy",
    "Candidate",
    "CandidateSet",
    "CorpusReport",
    "DistributionReport",
    "Document",
    "EmbeddingSimilaritySelector",
    "FeatureRanker",
    "FeatureVector",
    "FileEmbeddings",
    "GreedyMatchReranker",
    "HashEmbeddings",
    "LinearRanker",
    "LossReport",
    "RougeScore",
    "RougeTriple",
    "ScoreBreakdown",
    "ScorerParams",
    "SelectionRecord",
    "Sentence",
    "SentenceRanking",
    "TokenizerConfig",
    "TrainConfig",
    "TrainExample",
    "TrainState",
    "WeightVector",
    "attach_rouge",
    "bin_analysis",
    "corpus_report",
    "distribution_report",
    "embed_candidate",
    "embed_document",
    "enumerate_extractive",
    "exact_significance",
    "extract_features",
    "fit_ranker",
    "fuse_sentences",
    "greedy_fragments",
    "heuristic_ranking",
    "ingest_beam",
    "init_scorer_params",
    "lr_at",
    "max_oracle_selector",
    "ngrams",
    "oracle_select",
    "pool_systems",
    "rank_with",
    "ranking_loss",
    "rouge_l",
    "rouge_n",
    "rouge_triple",
    "score",
    "score_gradients",
    "select",
    "selection_accuracy",
    "significance",
    "token_weights",
    "tokenize",
    "tokenize_flat",
    "train",
    "unsupervised_select",
]
