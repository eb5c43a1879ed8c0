"""Sequence classification with LSTM encoders and cosine attention."""

from .corpus import (
    CandidateSet,
    SequenceExample,
    Vocabulary,
    attach_context,
    build_term_target,
    build_vocabulary,
    select_candidates,
    tokenize,
)
from .evaluation import (
    RankedPrediction,
    RelevanceJudgment,
    accuracy,
    average_precision,
    mean_average_precision,
    oracle_ranking,
    precision_at_r,
    predict_ranking,
    tfidf_rank,
)
from .model import (
    AttentionTrace,
    BagOfWordsClassifier,
    ModelConfig,
    SequenceClassifier,
    normalize_sharpening,
    normalize_smoothing,
)
from .numerics import (
    Node,
    Parameter,
    Tape,
    cosine_similarity,
    finite_difference_check,
    softmax_stable,
)
from .training import (
    TrainConfig,
    cross_entropy_loss,
    load_checkpoint,
    rmsprop_update,
    save_checkpoint,
    train,
    train_epoch,
)

__all__ = [
    "AttentionTrace",
    "BagOfWordsClassifier",
    "CandidateSet",
    "ModelConfig",
    "Node",
    "Parameter",
    "RankedPrediction",
    "RelevanceJudgment",
    "SequenceClassifier",
    "SequenceExample",
    "Tape",
    "TrainConfig",
    "Vocabulary",
    "accuracy",
    "attach_context",
    "average_precision",
    "build_term_target",
    "build_vocabulary",
    "cosine_similarity",
    "cross_entropy_loss",
    "finite_difference_check",
    "load_checkpoint",
    "mean_average_precision",
    "normalize_sharpening",
    "normalize_smoothing",
    "oracle_ranking",
    "precision_at_r",
    "predict_ranking",
    "rmsprop_update",
    "save_checkpoint",
    "select_candidates",
    "softmax_stable",
    "tfidf_rank",
    "tokenize",
    "train",
    "train_epoch",
]
