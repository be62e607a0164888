"""Arabic tweet sentiment analysis: normalization, embeddings, lexicons, classifiers and a CNN."""
from .errors import ArsentError
from .normalizer import NormalizationConfig, corpus_stats, normalize, strip_markup, tokenize

__version__ = "0.1.0"

__all__ = ["ArsentError", "NormalizationConfig", "__version__", "corpus_stats", "normalize",
           "strip_markup", "tokenize"]
