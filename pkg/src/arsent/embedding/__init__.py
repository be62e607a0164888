"""From-scratch word2vec (CBOW and skip-gram with negative sampling)."""
from .io import load, save
from .model import (
    CBOW,
    SG,
    EmbeddingModel,
    SimilarityHit,
    TrainingConfig,
    most_similar,
    negative_sampling_loss,
    sample_negatives,
    train,
)
from .vocab import LineCorpus, Vocabulary, build_vocabulary

__all__ = [
    "CBOW", "SG", "EmbeddingModel", "LineCorpus", "SimilarityHit", "TrainingConfig",
    "Vocabulary", "build_vocabulary", "load", "most_similar", "negative_sampling_loss",
    "sample_negatives", "save", "train",
]
